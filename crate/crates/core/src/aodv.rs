//! Control-plane-only AODV: RREQ flooding with duplicate suppression,
//! reverse-path setup, RREP unicast and a small route cache, extended with
//! the `next_to_source`, `duplicate_flag` and `next_to_destination` header
//! fields that let neighbors audit forwarding.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use thiserror::Error;

use crate::sim::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct Rreq {
    pub src_id: NodeId,
    pub dest_id: NodeId,
    pub src_seq: u32,
    pub dest_seq: u32,
    pub bcast_id: u32,
    pub ttl: u32,
    /// Reverse-path predecessor of the transmitter (the source itself at
    /// the origin).
    pub next_to_source: NodeId,
    /// True iff the transmitter already broadcast this flood before.
    pub duplicate_flag: bool,
    pub transmitter: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rrep {
    /// Originator of the route discovery.
    pub src_id: NodeId,
    pub dest_id: NodeId,
    pub dest_seq: u32,
    /// Broadcast id of the flood this reply answers.
    pub bcast_id: u32,
    pub hop_count: u32,
    /// Where `receiver` must forward this reply next.
    pub next_to_destination: NodeId,
    pub receiver: NodeId,
    pub transmitter: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Rreq(Rreq),
    Rrep(Rrep),
}

impl Packet {
    pub fn transmitter(&self) -> NodeId {
        match self {
            Packet::Rreq(p) => p.transmitter,
            Packet::Rrep(p) => p.transmitter,
        }
    }

    pub fn kind(&self) -> PacketKind {
        match self {
            Packet::Rreq(_) => PacketKind::Rreq,
            Packet::Rrep(_) => PacketKind::Rrep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    Rreq,
    Rrep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BehaviorKind {
    Cooperative,
    DropReq,
    DropRep,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorPolicy {
    pub kind: BehaviorKind,
    pub drop_probability: f64,
}

impl BehaviorPolicy {
    pub fn cooperative() -> Self {
        BehaviorPolicy {
            kind: BehaviorKind::Cooperative,
            drop_probability: 0.0,
        }
    }

    pub fn selfish(kind: BehaviorKind, drop_probability: f64) -> Self {
        BehaviorPolicy {
            kind,
            drop_probability,
        }
    }

    pub fn is_selfish(&self) -> bool {
        self.kind != BehaviorKind::Cooperative
    }

    fn targets(&self, kind: PacketKind) -> bool {
        matches!(
            (self.kind, kind),
            (BehaviorKind::DropReq, PacketKind::Rreq) | (BehaviorKind::DropRep, PacketKind::Rrep)
        )
    }
}

/// True iff `policy` targets `kind` and the draw falls under its drop
/// probability.
pub fn decide_drop(policy: &BehaviorPolicy, kind: PacketKind, rng_draw: f64) -> bool {
    policy.targets(kind) && rng_draw < policy.drop_probability
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteCacheEntry {
    pub dest_id: NodeId,
    pub next_hop: NodeId,
    pub dest_seq: u32,
    pub hop_count: u32,
    pub expiry: f64,
}

impl RouteCacheEntry {
    pub fn is_valid(&self, now: f64) -> bool {
        now < self.expiry
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AodvParams {
    pub ttl: u32,
    pub active_route_timeout: f64,
    /// Lifetime of an unconfirmed reverse-path entry.
    pub rreq_timeout: f64,
    /// Minimum spacing between discoveries for the same destination.
    pub rrep_timeout: f64,
}

impl Default for AodvParams {
    fn default() -> Self {
        AodvParams {
            ttl: 30,
            active_route_timeout: 10.0,
            rreq_timeout: 0.5,
            rrep_timeout: 3.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AodvError {
    #[error("node {node} has no reverse path for flood ({src}, {bcast_id})")]
    OrphanRrep {
        node: NodeId,
        src: NodeId,
        bcast_id: u32,
    },
}

/// Side effects requested by a protocol handler.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send(Packet),
    ArmReverseExpiry { src: NodeId, bcast_id: u32, at: f64 },
    DiscoveryComplete { dest: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ReverseEntry {
    predecessor: NodeId,
    /// The predecessor's own predecessor, learned from `next_to_source`.
    predecessor_next: NodeId,
    confirmed: bool,
}

/// Ground-truth counters kept by each node about its own behavior.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub discoveries_started: u64,
    pub discoveries_completed: u64,
    pub rreq_dropped: u64,
    pub rrep_dropped: u64,
    pub orphan_rreps: u64,
}

impl NodeStats {
    pub fn drops(&self) -> u64 {
        self.rreq_dropped + self.rrep_dropped
    }
}

#[derive(Debug, Clone)]
pub struct AodvNode {
    id: NodeId,
    policy: BehaviorPolicy,
    params: AodvParams,
    seq_no: u32,
    next_bcast_id: u32,
    processed: BTreeSet<(NodeId, u32)>,
    broadcast: BTreeSet<(NodeId, u32)>,
    reverse: BTreeMap<(NodeId, u32), ReverseEntry>,
    cache: BTreeMap<NodeId, RouteCacheEntry>,
    known_dest_seq: BTreeMap<NodeId, u32>,
    last_discovery: BTreeMap<NodeId, f64>,
    stats: NodeStats,
}

impl AodvNode {
    pub fn new(id: NodeId, policy: BehaviorPolicy, params: AodvParams) -> AodvNode {
        AodvNode {
            id,
            policy,
            params,
            seq_no: 0,
            next_bcast_id: 0,
            processed: BTreeSet::new(),
            broadcast: BTreeSet::new(),
            reverse: BTreeMap::new(),
            cache: BTreeMap::new(),
            known_dest_seq: BTreeMap::new(),
            last_discovery: BTreeMap::new(),
            stats: NodeStats::default(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn policy(&self) -> &BehaviorPolicy {
        &self.policy
    }

    pub fn stats(&self) -> &NodeStats {
        &self.stats
    }

    pub fn route(&self, dest: NodeId, now: f64) -> Option<&RouteCacheEntry> {
        self.cache.get(&dest).filter(|e| e.is_valid(now))
    }

    pub fn has_reverse_path(&self, src: NodeId, bcast_id: u32) -> bool {
        self.reverse.contains_key(&(src, bcast_id))
    }

    /// Starts a route discovery towards `dest` unless a valid route is
    /// cached or a discovery for `dest` is still within its reply timeout.
    pub fn originate_discovery(&mut self, dest: NodeId, t: f64) -> Vec<Action> {
        assert_ne!(dest, self.id, "a node cannot discover a route to itself");
        if self.route(dest, t).is_some() {
            return Vec::new();
        }
        if let Some(&last) = self.last_discovery.get(&dest) {
            if t - last < self.params.rrep_timeout {
                return Vec::new();
            }
        }
        self.last_discovery.insert(dest, t);
        self.next_bcast_id += 1;
        self.seq_no += 1;
        let bcast_id = self.next_bcast_id;
        let flood = (self.id, bcast_id);
        self.processed.insert(flood);
        let duplicate_flag = !self.broadcast.insert(flood);
        self.stats.discoveries_started += 1;
        vec![Action::Send(Packet::Rreq(Rreq {
            src_id: self.id,
            dest_id: dest,
            src_seq: self.seq_no,
            dest_seq: self.known_dest_seq.get(&dest).copied().unwrap_or(0),
            bcast_id,
            ttl: self.params.ttl,
            next_to_source: self.id,
            duplicate_flag,
            transmitter: self.id,
        }))]
    }

    pub fn handle_rreq<R: Rng>(&mut self, rreq: &Rreq, t: f64, rng: &mut R) -> Vec<Action> {
        let flood = (rreq.src_id, rreq.bcast_id);
        if rreq.src_id == self.id || !self.processed.insert(flood) {
            return Vec::new();
        }
        let is_dest = rreq.dest_id == self.id;
        // every node draws, whatever its policy, so the random stream does not
        // depend on who is selfish
        if !is_dest {
            let draw: f64 = rng.gen();
            if decide_drop(&self.policy, PacketKind::Rreq, draw) {
                self.stats.rreq_dropped += 1;
                return Vec::new();
            }
        }

        self.reverse.insert(
            flood,
            ReverseEntry {
                predecessor: rreq.transmitter,
                predecessor_next: rreq.next_to_source,
                confirmed: false,
            },
        );
        let mut actions = vec![Action::ArmReverseExpiry {
            src: rreq.src_id,
            bcast_id: rreq.bcast_id,
            at: t + self.params.rreq_timeout,
        }];

        if is_dest {
            self.seq_no = self.seq_no.max(rreq.dest_seq);
            actions.push(Action::Send(Packet::Rrep(Rrep {
                src_id: rreq.src_id,
                dest_id: self.id,
                dest_seq: self.seq_no,
                bcast_id: rreq.bcast_id,
                hop_count: 0,
                next_to_destination: rreq.next_to_source,
                receiver: rreq.transmitter,
                transmitter: self.id,
            })));
            return actions;
        }

        // DropRep nodes always rebroadcast, even with a cached route
        if self.policy.kind != BehaviorKind::DropRep {
            if let Some(entry) = self
                .route(rreq.dest_id, t)
                .filter(|e| e.dest_seq >= rreq.dest_seq)
            {
                actions.push(Action::Send(Packet::Rrep(Rrep {
                    src_id: rreq.src_id,
                    dest_id: rreq.dest_id,
                    dest_seq: entry.dest_seq,
                    bcast_id: rreq.bcast_id,
                    hop_count: entry.hop_count,
                    next_to_destination: rreq.next_to_source,
                    receiver: rreq.transmitter,
                    transmitter: self.id,
                })));
                return actions;
            }
        }

        if rreq.ttl == 0 {
            return actions;
        }
        let duplicate_flag = !self.broadcast.insert(flood);
        actions.push(Action::Send(Packet::Rreq(Rreq {
            ttl: rreq.ttl - 1,
            next_to_source: rreq.transmitter,
            duplicate_flag,
            transmitter: self.id,
            ..rreq.clone()
        })));
        actions
    }

    /// Handles a reply addressed to this node.
    pub fn handle_rrep<R: Rng>(
        &mut self,
        rrep: &Rrep,
        t: f64,
        rng: &mut R,
    ) -> Result<Vec<Action>, AodvError> {
        debug_assert_eq!(rrep.receiver, self.id);
        let hop_count = rrep.hop_count + 1;
        let fresher = self
            .cache
            .get(&rrep.dest_id)
            .is_none_or(|e| !e.is_valid(t) || rrep.dest_seq >= e.dest_seq);
        if fresher {
            self.cache.insert(
                rrep.dest_id,
                RouteCacheEntry {
                    dest_id: rrep.dest_id,
                    next_hop: rrep.transmitter,
                    dest_seq: rrep.dest_seq,
                    hop_count,
                    expiry: t + self.params.active_route_timeout,
                },
            );
        }
        let known = self.known_dest_seq.entry(rrep.dest_id).or_insert(0);
        *known = (*known).max(rrep.dest_seq);

        if rrep.src_id == self.id {
            self.stats.discoveries_completed += 1;
            return Ok(vec![Action::DiscoveryComplete { dest: rrep.dest_id }]);
        }

        let flood = (rrep.src_id, rrep.bcast_id);
        let Some(entry) = self.reverse.get(&flood).copied() else {
            self.stats.orphan_rreps += 1;
            return Err(AodvError::OrphanRrep {
                node: self.id,
                src: rrep.src_id,
                bcast_id: rrep.bcast_id,
            });
        };

        if rrep.dest_id != self.id {
            let draw: f64 = rng.gen();
            if decide_drop(&self.policy, PacketKind::Rrep, draw) {
                self.stats.rrep_dropped += 1;
                return Ok(Vec::new());
            }
        }

        if let Some(e) = self.reverse.get_mut(&flood) {
            e.confirmed = true;
        }
        Ok(vec![Action::Send(Packet::Rrep(Rrep {
            hop_count,
            next_to_destination: entry.predecessor_next,
            receiver: entry.predecessor,
            transmitter: self.id,
            ..rrep.clone()
        }))])
    }

    /// Drops the reverse entry for a flood unless a reply already used it.
    pub fn expire_reverse(&mut self, src: NodeId, bcast_id: u32) {
        if let Some(e) = self.reverse.get(&(src, bcast_id)) {
            if !e.confirmed {
                self.reverse.remove(&(src, bcast_id));
            }
        }
    }
}
