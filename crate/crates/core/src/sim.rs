//! Discrete-event engine over a static unit-disk radio topology.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::aodv::Packet;
use crate::watchdog::LmuKey;

/// Maximum number of placements tried by [`build_topology`].
pub const MAX_PLACEMENT_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("no connected placement found after {attempts} attempts")]
    ConnectivityFailure { attempts: u64 },
    #[error("event at t={time} is before the current time {now}")]
    PastEvent { time: f64, now: f64 },
    #[error("invalid topology parameters: {0}")]
    InvalidTopology(String),
}

/// Node positions plus the symmetric unit-disk neighbor relation.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    range: f64,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Builds the unit-disk graph for fixed positions. Connectivity is not
    /// enforced here; see [`Topology::is_connected`].
    pub fn from_positions(positions: Vec<(f64, f64)>, range: f64) -> Topology {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                let (dx, dy) = (
                    positions[u].0 - positions[v].0,
                    positions[u].1 - positions[v].1,
                );
                if (dx * dx + dy * dy).sqrt() <= range {
                    adjacency[u].push(NodeId(v));
                    adjacency[v].push(NodeId(u));
                }
            }
        }
        for list in &mut adjacency {
            list.sort();
        }
        Topology {
            positions,
            range,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Sorted neighbor list of `node`.
    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node.0]
    }

    pub fn are_neighbors(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.0].binary_search(&v).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.len()).map(NodeId)
    }

    pub fn is_connected(&self) -> bool {
        if self.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in &self.adjacency[u] {
                if !seen[v.0] {
                    seen[v.0] = true;
                    queue.push_back(v.0);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Places `n` nodes uniformly in `area` and returns the first connected
/// placement. Attempt `i` draws from seed `seed + i`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks too
pub fn build_topology(
    n: usize,
    area: (f64, f64),
    range: f64,
    seed: u64,
) -> Result<Topology, SimError> {
    if n < 2 {
        return Err(SimError::InvalidTopology(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    if !(range > 0.0) {
        return Err(SimError::InvalidTopology(format!(
            "range must be positive, got {range}"
        )));
    }
    if !(area.0 > 0.0 && area.1 > 0.0) {
        return Err(SimError::InvalidTopology(format!(
            "area must be positive, got {area:?}"
        )));
    }
    for attempt in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let positions = (0..n)
            .map(|_| (rng.gen::<f64>() * area.0, rng.gen::<f64>() * area.1))
            .collect();
        let topo = Topology::from_positions(positions, range);
        if topo.is_connected() {
            return Ok(topo);
        }
    }
    Err(SimError::ConnectivityFailure {
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Channel model: independent per-reception loss and uniform per-hop delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioModel {
    pub loss_probability: f64,
    pub jitter_bounds: (f64, f64),
}

impl Default for RadioModel {
    fn default() -> Self {
        RadioModel {
            loss_probability: 0.0,
            jitter_bounds: (0.001, 0.005),
        }
    }
}

impl RadioModel {
    pub fn ideal() -> Self {
        RadioModel::default()
    }

    pub fn draw_jitter<R: Rng>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.jitter_bounds;
        if hi > lo {
            rng.gen_range(lo..hi)
        } else {
            lo
        }
    }
}

/// Timer identities. Stale watchdog timers are filtered by `generation`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimerKey {
    ReverseRouteExpiry {
        src: NodeId,
        bcast_id: u32,
    },
    Watchdog {
        key: LmuKey,
        neighbor: NodeId,
        generation: u32,
    },
    SessionRefresh {
        session: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// A packet arriving at `receiver`, transmitted by `sender`.
    Delivery {
        packet: Packet,
        receiver: NodeId,
        sender: NodeId,
    },
    /// A node putting a packet on the air after its processing delay.
    Transmit {
        sender: NodeId,
        packet: Packet,
    },
    Timer {
        owner: NodeId,
        key: TimerKey,
    },
    SessionStart {
        src: NodeId,
        dst: NodeId,
        session: usize,
    },
    DetectionTick,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // reversed so BinaryHeap pops the earliest (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-threaded event queue with a seeded random stream.
pub struct Engine {
    now: f64,
    next_seq: u64,
    queue: BinaryHeap<Event>,
    rng: ChaCha8Rng,
    processed: u64,
    trace: Option<Vec<String>>,
}

impl Engine {
    pub fn new(seed: u64) -> Engine {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Engine {
            now: 0.0,
            next_seq: 0,
            queue: BinaryHeap::new(),
            rng,
            processed: 0,
            trace: None,
        }
    }

    /// Records one line per processed event; see [`Engine::trace`].
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[String]> {
        self.trace.as_deref()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Enqueues `kind` at `time` and returns the assigned sequence number.
    pub fn schedule(&mut self, time: f64, kind: EventKind) -> Result<u64, SimError> {
        if time < self.now || time.is_nan() {
            return Err(SimError::PastEvent {
                time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event { time, seq, kind });
        Ok(seq)
    }

    /// Schedules one `Delivery` per in-range neighbor of `sender` that
    /// survives its loss draw. Returns the number of deliveries scheduled.
    pub fn transmit(
        &mut self,
        topology: &Topology,
        radio: &RadioModel,
        sender: NodeId,
        packet: &Packet,
        t: f64,
    ) -> Result<usize, SimError> {
        let mut delivered = 0;
        for &receiver in topology.neighbors(sender) {
            // one loss draw per (transmission, receiver), always consumed
            let lost = self.rng.gen::<f64>() < radio.loss_probability;
            if lost {
                continue;
            }
            let at = t + radio.draw_jitter(&mut self.rng);
            self.schedule(
                at,
                EventKind::Delivery {
                    packet: packet.clone(),
                    receiver,
                    sender,
                },
            )?;
            delivered += 1;
        }
        Ok(delivered)
    }

    /// Processes every event with `time <= t_end` in `(time, seq)` order,
    /// then advances the clock to `t_end`.
    pub fn run_until<F>(&mut self, t_end: f64, mut handler: F)
    where
        F: FnMut(&mut Engine, Event),
    {
        while let Some(head) = self.queue.peek() {
            if head.time > t_end {
                break;
            }
            let event = self.queue.pop().expect("peeked");
            debug_assert!(event.time >= self.now);
            self.now = event.time;
            self.processed += 1;
            if let Some(trace) = self.trace.as_mut() {
                trace.push(format!("{:.9} {} {:?}", event.time, event.seq, event.kind));
            }
            handler(self, event);
        }
        if t_end > self.now {
            self.now = t_end;
        }
    }
}
