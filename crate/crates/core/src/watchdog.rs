//! Promiscuous neighbor monitoring.
//!
//! Every node runs one [`Watchdog`]. For each neighbor and each observed
//! route discovery (a local message unit, keyed by [`LmuKey`]) it drives a
//! small finite state machine from `Init` to one of the final states
//! `TimeoutRreq`, `LmuComplete` or `TimeoutRrep`. Finalized paths are folded
//! into per-neighbor [`TransitionMatrix`] counts; forwarding failures that
//! the extension header fields make provable are recorded as direct
//! evidence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::aodv::{Packet, Rrep, Rreq};
use crate::sim::NodeId;

pub const STATE_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FsmState {
    Init = 1,
    UnexpRrep = 2,
    RcvdRreq = 3,
    FwdRreq = 4,
    TimeoutRreq = 5,
    RcvdRrep = 6,
    LmuComplete = 7,
    TimeoutRrep = 8,
}

impl FsmState {
    pub const ALL: [FsmState; STATE_COUNT] = [
        FsmState::Init,
        FsmState::UnexpRrep,
        FsmState::RcvdRreq,
        FsmState::FwdRreq,
        FsmState::TimeoutRreq,
        FsmState::RcvdRrep,
        FsmState::LmuComplete,
        FsmState::TimeoutRrep,
    ];

    /// 1-based state number.
    pub fn number(self) -> usize {
        self as usize
    }

    pub fn from_number(n: usize) -> Option<FsmState> {
        n.checked_sub(1).and_then(|i| FsmState::ALL.get(i)).copied()
    }

    pub fn is_final(self) -> bool {
        matches!(
            self,
            FsmState::TimeoutRreq | FsmState::LmuComplete | FsmState::TimeoutRrep
        )
    }

    fn index(self) -> usize {
        self as usize - 1
    }
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// What the monitor saw that may move a neighbor's machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trigger {
    MonitorBroadcastsRreq,
    NeighborBroadcastsRreq,
    NeighborReceivesRrep,
    NeighborTransmitsRrep,
    RreqTimeout,
    RrepTimeout,
}

use FsmState::*;
use Trigger::*;

const TRANSITIONS: [(FsmState, FsmState, Trigger); 16] = [
    (Init, RcvdRreq, MonitorBroadcastsRreq),
    (Init, FwdRreq, NeighborBroadcastsRreq),
    (Init, UnexpRrep, NeighborReceivesRrep),
    (RcvdRreq, FwdRreq, NeighborBroadcastsRreq),
    (RcvdRreq, RcvdRrep, NeighborReceivesRrep),
    (RcvdRreq, LmuComplete, NeighborTransmitsRrep),
    (RcvdRreq, TimeoutRreq, RreqTimeout),
    (FwdRreq, FwdRreq, MonitorBroadcastsRreq),
    (FwdRreq, FwdRreq, NeighborBroadcastsRreq),
    (FwdRreq, RcvdRrep, NeighborReceivesRrep),
    (FwdRreq, LmuComplete, NeighborTransmitsRrep),
    (FwdRreq, TimeoutRreq, RreqTimeout),
    (UnexpRrep, LmuComplete, NeighborTransmitsRrep),
    (UnexpRrep, TimeoutRrep, RrepTimeout),
    (RcvdRrep, LmuComplete, NeighborTransmitsRrep),
    (RcvdRrep, TimeoutRrep, RrepTimeout),
];

/// The full transition table of the per-neighbor machine.
pub fn legal_transitions() -> Vec<(FsmState, FsmState, Trigger)> {
    TRANSITIONS.to_vec()
}

/// Next state for `trigger` in `state`, or `None` when the observation has
/// no legal transition.
pub fn step(state: FsmState, trigger: Trigger) -> Option<FsmState> {
    TRANSITIONS
        .iter()
        .find(|(from, _, t)| *from == state && *t == trigger)
        .map(|&(_, to, _)| to)
}

pub fn is_legal(from: FsmState, to: FsmState) -> bool {
    TRANSITIONS.iter().any(|&(f, t, _)| f == from && t == to)
}

/// One route discovery as seen locally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LmuKey {
    pub src: NodeId,
    pub dst: NodeId,
    pub bcast_id: u32,
}

impl LmuKey {
    pub fn of_rreq(p: &Rreq) -> LmuKey {
        LmuKey {
            src: p.src_id,
            dst: p.dest_id,
            bcast_id: p.bcast_id,
        }
    }

    pub fn of_rrep(p: &Rrep) -> LmuKey {
        LmuKey {
            src: p.src_id,
            dst: p.dest_id,
            bcast_id: p.bcast_id,
        }
    }
}

impl fmt::Display for LmuKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.src, self.dst, self.bcast_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RrepExpectation {
    next_to_destination: NodeId,
    neighbor_is_origin: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmuRecord {
    pub key: LmuKey,
    pub neighbor: NodeId,
    pub state: FsmState,
    pub entered_at: f64,
    pub transitions: Vec<(FsmState, FsmState)>,
    pub monitor_sent_rreq: bool,
    generation: u32,
    neighbor_transmitted: bool,
    expects_rebroadcast: bool,
    rrep: Option<RrepExpectation>,
}

impl LmuRecord {
    fn new(key: LmuKey, neighbor: NodeId, t: f64) -> LmuRecord {
        LmuRecord {
            key,
            neighbor,
            state: FsmState::Init,
            entered_at: t,
            transitions: Vec::new(),
            monitor_sent_rreq: false,
            generation: 0,
            neighbor_transmitted: false,
            expects_rebroadcast: false,
            rrep: None,
        }
    }
}

/// Per-neighbor 8×8 transition counts over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    counts: [[u32; STATE_COUNT]; STATE_COUNT],
    pub window_start: f64,
    pub window_end: f64,
}

impl Default for TransitionMatrix {
    fn default() -> Self {
        TransitionMatrix::empty(0.0, 0.0)
    }
}

impl TransitionMatrix {
    pub fn empty(window_start: f64, window_end: f64) -> TransitionMatrix {
        TransitionMatrix {
            counts: [[0; STATE_COUNT]; STATE_COUNT],
            window_start,
            window_end,
        }
    }

    pub fn from_counts(counts: [[u32; STATE_COUNT]; STATE_COUNT]) -> TransitionMatrix {
        TransitionMatrix {
            counts,
            window_start: 0.0,
            window_end: 0.0,
        }
    }

    pub fn record(&mut self, from: FsmState, to: FsmState) {
        self.counts[from.index()][to.index()] += 1;
    }

    /// Count of `from -> to` transitions.
    pub fn count(&self, from: FsmState, to: FsmState) -> u32 {
        self.counts[from.index()][to.index()]
    }

    /// Row of transitions out of the state with 0-based index `i`.
    pub fn row(&self, i: usize) -> &[u32; STATE_COUNT] {
        &self.counts[i]
    }

    pub fn counts(&self) -> &[[u32; STATE_COUNT]; STATE_COUNT] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().map(|&c| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Number of transitions entering `state`.
    pub fn inflow(&self, state: FsmState) -> u64 {
        self.counts
            .iter()
            .map(|row| row[state.index()] as u64)
            .sum()
    }

    pub fn outflow(&self, state: FsmState) -> u64 {
        self.counts[state.index()].iter().map(|&c| c as u64).sum()
    }
}

/// Fraction of finalized LMUs that ended in `LmuComplete`; 0.5 when no LMU
/// reached a final state.
pub fn cooperation_index(matrix: &TransitionMatrix) -> f64 {
    let complete = matrix.inflow(LmuComplete);
    let ended = matrix.inflow(TimeoutRreq) + complete + matrix.inflow(TimeoutRrep);
    if ended == 0 {
        0.5
    } else {
        complete as f64 / ended as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EvidenceKind {
    RreqDrop,
    RrepDrop,
    Misdirect,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvidenceCounters {
    pub rreq_drop: u32,
    pub rrep_drop: u32,
    pub misdirect: u32,
}

impl EvidenceCounters {
    pub fn total(&self) -> u32 {
        self.rreq_drop + self.rrep_drop + self.misdirect
    }

    pub fn add(&mut self, kind: EvidenceKind) {
        match kind {
            EvidenceKind::RreqDrop => self.rreq_drop += 1,
            EvidenceKind::RrepDrop => self.rrep_drop += 1,
            EvidenceKind::Misdirect => self.misdirect += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceEvent {
    pub time: f64,
    pub neighbor: NodeId,
    pub key: LmuKey,
    pub kind: EvidenceKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalizedLmu {
    pub key: LmuKey,
    pub neighbor: NodeId,
    pub finished_at: f64,
    pub transitions: Vec<(FsmState, FsmState)>,
}

/// A timer the caller must schedule; it fires [`Watchdog::on_timeout`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimerRequest {
    pub key: LmuKey,
    pub neighbor: NodeId,
    pub generation: u32,
    pub at: f64,
}

/// One audited FSM step: `time,monitor,neighbor,lmu_key,from_state,to_state`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTrace {
    pub time: f64,
    pub monitor: NodeId,
    pub neighbor: NodeId,
    pub key: LmuKey,
    pub from: FsmState,
    pub to: FsmState,
}

impl fmt::Display for TransitionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6},{},{},{},{},{}",
            self.time, self.monitor, self.neighbor, self.key, self.from, self.to
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatchdogParams {
    pub rreq_timeout: f64,
    pub rrep_timeout: f64,
}

impl Default for WatchdogParams {
    fn default() -> Self {
        WatchdogParams {
            rreq_timeout: 0.5,
            rrep_timeout: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborSnapshot {
    pub matrix: TransitionMatrix,
    pub evidence: EvidenceCounters,
}

pub type Snapshot = BTreeMap<NodeId, NeighborSnapshot>;

#[derive(Debug, Clone)]
pub struct Watchdog {
    monitor: NodeId,
    neighbors: BTreeSet<NodeId>,
    params: WatchdogParams,
    records: BTreeMap<(LmuKey, NodeId), LmuRecord>,
    finalized: Vec<FinalizedLmu>,
    evidence: Vec<EvidenceEvent>,
    evidence_seen: BTreeSet<(LmuKey, NodeId, EvidenceKind)>,
    trace: Option<Vec<TransitionTrace>>,
}

impl Watchdog {
    pub fn new(
        monitor: NodeId,
        neighbors: impl IntoIterator<Item = NodeId>,
        params: WatchdogParams,
    ) -> Watchdog {
        Watchdog {
            monitor,
            neighbors: neighbors.into_iter().filter(|&n| n != monitor).collect(),
            params,
            records: BTreeMap::new(),
            finalized: Vec::new(),
            evidence: Vec::new(),
            evidence_seen: BTreeSet::new(),
            trace: None,
        }
    }

    pub fn monitor(&self) -> NodeId {
        self.monitor
    }

    pub fn neighbors(&self) -> &BTreeSet<NodeId> {
        &self.neighbors
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TransitionTrace] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn record(&self, key: &LmuKey, neighbor: NodeId) -> Option<&LmuRecord> {
        self.records.get(&(*key, neighbor))
    }

    pub fn finalized(&self) -> &[FinalizedLmu] {
        &self.finalized
    }

    pub fn evidence_events(&self) -> &[EvidenceEvent] {
        &self.evidence
    }

    /// Evidence accumulated over the whole run, per neighbor.
    pub fn evidence_totals(&self) -> BTreeMap<NodeId, EvidenceCounters> {
        let mut out = BTreeMap::new();
        for e in &self.evidence {
            out.entry(e.neighbor)
                .or_insert_with(EvidenceCounters::default)
                .add(e.kind);
        }
        out
    }

    /// Feeds one transmission seen by the monitor: either its own or one
    /// received from an in-range neighbor.
    pub fn observe(&mut self, packet: &Packet, t: f64) -> Vec<TimerRequest> {
        let mut timers = Vec::new();
        match packet {
            Packet::Rreq(rreq) => {
                let key = LmuKey::of_rreq(rreq);
                if rreq.transmitter == self.monitor {
                    let neighbors: Vec<NodeId> = self.neighbors.iter().copied().collect();
                    for x in neighbors {
                        let expects = !rreq.duplicate_flag
                            && rreq.ttl > 0
                            && x != rreq.src_id
                            && x != rreq.dest_id;
                        let rec = self.record_mut(key, x, t);
                        rec.monitor_sent_rreq = true;
                        if rec.state == Init {
                            rec.expects_rebroadcast = expects;
                        }
                        timers.extend(self.apply(key, x, MonitorBroadcastsRreq, t));
                    }
                } else if self.neighbors.contains(&rreq.transmitter) {
                    let x = rreq.transmitter;
                    self.record_mut(key, x, t).neighbor_transmitted = true;
                    timers.extend(self.apply(key, x, NeighborBroadcastsRreq, t));
                }
            }
            Packet::Rrep(rrep) => {
                let key = LmuKey::of_rrep(rrep);
                let tx = rrep.transmitter;
                if tx != self.monitor && self.neighbors.contains(&tx) {
                    let rec = self.record_mut(key, tx, t);
                    rec.neighbor_transmitted = true;
                    let misdirected = matches!(rec.state, RcvdRrep | UnexpRrep)
                        && rec
                            .rrep
                            .is_some_and(|e| e.next_to_destination != rrep.receiver);
                    if misdirected {
                        self.add_evidence(key, tx, EvidenceKind::Misdirect, t);
                    }
                    timers.extend(self.apply(key, tx, NeighborTransmitsRrep, t));
                }
                let rx = rrep.receiver;
                if rx != self.monitor && self.neighbors.contains(&rx) {
                    let rec = self.record_mut(key, rx, t);
                    if matches!(rec.state, Init | RcvdRreq | FwdRreq) {
                        rec.rrep = Some(RrepExpectation {
                            next_to_destination: rrep.next_to_destination,
                            neighbor_is_origin: rx == rrep.src_id,
                        });
                    }
                    timers.extend(self.apply(key, rx, NeighborReceivesRrep, t));
                }
            }
        }
        timers
    }

    /// Handles an expired timer. Stale generations are ignored.
    pub fn on_timeout(&mut self, key: LmuKey, neighbor: NodeId, generation: u32, t: f64) {
        let Some(rec) = self.records.get(&(key, neighbor)) else {
            return;
        };
        if rec.generation != generation || rec.state.is_final() {
            return;
        }
        let state = rec.state;
        match state {
            RcvdRreq | FwdRreq => {
                // a neighbor that took the RREQ from us but stayed silent
                let dropped = state == RcvdRreq
                    && rec.monitor_sent_rreq
                    && rec.expects_rebroadcast
                    && !rec.neighbor_transmitted;
                if dropped {
                    self.add_evidence(key, neighbor, EvidenceKind::RreqDrop, t);
                }
                self.apply(key, neighbor, RreqTimeout, t);
            }
            RcvdRrep | UnexpRrep => {
                if rec.rrep.is_some_and(|e| !e.neighbor_is_origin) {
                    self.add_evidence(key, neighbor, EvidenceKind::RrepDrop, t);
                }
                self.apply(key, neighbor, RrepTimeout, t);
            }
            _ => {}
        }
    }

    /// Per-neighbor transition counts and evidence from LMUs finalized in
    /// `[now - window, now]`. Neighbors without data get zero entries.
    pub fn snapshot(&self, now: f64, window: f64) -> Snapshot {
        assert!(window > 0.0, "detection window must be positive");
        let start = now - window;
        let in_window = |t: f64| t >= start && t <= now;
        let mut out: Snapshot = self
            .neighbors
            .iter()
            .map(|&n| {
                (
                    n,
                    NeighborSnapshot {
                        matrix: TransitionMatrix::empty(start, now),
                        evidence: EvidenceCounters::default(),
                    },
                )
            })
            .collect();
        for lmu in self.finalized.iter().filter(|l| in_window(l.finished_at)) {
            if let Some(s) = out.get_mut(&lmu.neighbor) {
                for &(from, to) in &lmu.transitions {
                    s.matrix.record(from, to);
                }
            }
        }
        for e in self.evidence.iter().filter(|e| in_window(e.time)) {
            if let Some(s) = out.get_mut(&e.neighbor) {
                s.evidence.add(e.kind);
            }
        }
        out
    }

    /// Forgets finalized records and evidence older than `cutoff`.
    pub fn prune_before(&mut self, cutoff: f64) {
        self.finalized.retain(|l| l.finished_at >= cutoff);
        self.records
            .retain(|_, r| !(r.state.is_final() && r.entered_at < cutoff));
    }

    fn record_mut(&mut self, key: LmuKey, neighbor: NodeId, t: f64) -> &mut LmuRecord {
        self.records
            .entry((key, neighbor))
            .or_insert_with(|| LmuRecord::new(key, neighbor, t))
    }

    fn add_evidence(&mut self, key: LmuKey, neighbor: NodeId, kind: EvidenceKind, t: f64) {
        if self.evidence_seen.insert((key, neighbor, kind)) {
            self.evidence.push(EvidenceEvent {
                time: t,
                neighbor,
                key,
                kind,
            });
        }
    }

    fn apply(
        &mut self,
        key: LmuKey,
        neighbor: NodeId,
        trigger: Trigger,
        t: f64,
    ) -> Option<TimerRequest> {
        let params = self.params;
        let monitor = self.monitor;
        let rec = self.records.get_mut(&(key, neighbor))?;
        let from = rec.state;
        let to = step(from, trigger)?;
        rec.state = to;
        rec.entered_at = t;
        rec.transitions.push((from, to));
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TransitionTrace {
                time: t,
                monitor,
                neighbor,
                key,
                from,
                to,
            });
        }
        if to.is_final() {
            let transitions = rec.transitions.clone();
            self.finalized.push(FinalizedLmu {
                key,
                neighbor,
                finished_at: t,
                transitions,
            });
            return None;
        }
        let timeout = match to {
            RcvdRreq | FwdRreq => params.rreq_timeout,
            RcvdRrep | UnexpRrep => params.rrep_timeout,
            _ => return None,
        };
        rec.generation += 1;
        Some(TimerRequest {
            key,
            neighbor,
            generation: rec.generation,
            at: t + timeout,
        })
    }
}
