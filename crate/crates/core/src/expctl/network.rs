//! Wires topology, protocol nodes and watchdogs into one event-driven run.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aodv::{Action, AodvNode, AodvParams, BehaviorPolicy, Packet};
use crate::detector::{classify, fuse, DetectorParams, Label, Verdict};
use crate::sim::{
    build_topology, Engine, Event, EventKind, NodeId, RadioModel, TimerKey, Topology,
};
use crate::watchdog::{EvidenceCounters, Watchdog, WatchdogParams};

use super::{ConfigError, ExpError, RunMetrics, ScenarioConfig, TickVerdict};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Session {
    src: NodeId,
    dst: NodeId,
    start: f64,
    end: f64,
}

fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln() / rate
}

/// A fully wired scenario. Build with [`Simulation::new`], then [`run`].
///
/// [`run`]: Simulation::run
pub struct Simulation {
    config: ScenarioConfig,
    engine: Engine,
    topology: Topology,
    radio: RadioModel,
    nodes: Vec<AodvNode>,
    watchdogs: Vec<Watchdog>,
    selfish: Vec<bool>,
    sessions: Vec<Session>,
    detector: DetectorParams,
    ticks: Vec<TickVerdict>,
    monitor_verdicts: BTreeMap<NodeId, BTreeMap<NodeId, Verdict>>,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Simulation, ExpError> {
        config.validate()?;
        let topology = build_topology(config.n_nodes, config.area, config.range, config.seed)?;
        let radio = RadioModel {
            loss_probability: config.loss_probability,
            ..RadioModel::default()
        };
        Simulation::with_topology(config, topology, radio)
    }

    /// Builds a run on a fixed topology (the node count is taken from it).
    pub fn with_topology(
        config: &ScenarioConfig,
        topology: Topology,
        radio: RadioModel,
    ) -> Result<Simulation, ExpError> {
        let mut config = config.clone();
        config.n_nodes = topology.len();
        config.validate()?;
        if !topology.is_connected() {
            return Err(ConfigError::Invalid("topology must be connected".into()).into());
        }
        let n = topology.len();

        let mut assign_rng = ChaCha8Rng::seed_from_u64(config.seed);
        assign_rng.set_stream(3);
        let n_selfish = ((config.selfish_fraction * n as f64).ceil() as usize).min(n);
        let mut selfish = vec![false; n];
        for i in sample(&mut assign_rng, n, n_selfish) {
            selfish[i] = true;
        }

        let aodv_params = AodvParams {
            rreq_timeout: config.rreq_timeout_s,
            rrep_timeout: config.rrep_timeout_s,
            ..AodvParams::default()
        };
        let nodes = (0..n)
            .map(|i| {
                let policy = if selfish[i] {
                    BehaviorPolicy::selfish(config.strategy.behavior(), config.drop_probability)
                } else {
                    BehaviorPolicy::cooperative()
                };
                AodvNode::new(NodeId(i), policy, aodv_params)
            })
            .collect();
        let wd_params = WatchdogParams {
            rreq_timeout: config.rreq_timeout_s,
            rrep_timeout: config.rrep_timeout_s,
        };
        let watchdogs = topology
            .nodes()
            .map(|m| Watchdog::new(m, topology.neighbors(m).iter().copied(), wd_params))
            .collect();

        let mut traffic_rng = ChaCha8Rng::seed_from_u64(config.seed);
        traffic_rng.set_stream(2);
        let mut sessions = Vec::new();
        if config.session_rate_per_s > 0.0 {
            let mut t = 0.0;
            loop {
                t += exponential(&mut traffic_rng, config.session_rate_per_s);
                if t >= config.duration_s {
                    break;
                }
                let src = traffic_rng.gen_range(0..n);
                let mut dst = traffic_rng.gen_range(0..n - 1);
                if dst >= src {
                    dst += 1;
                }
                let dur = exponential(&mut traffic_rng, 1.0 / config.session_duration_mean_s);
                sessions.push(Session {
                    src: NodeId(src),
                    dst: NodeId(dst),
                    start: t,
                    end: t + dur,
                });
            }
        }

        let mut engine = Engine::new(config.seed);
        for (i, s) in sessions.iter().enumerate() {
            engine.schedule(
                s.start,
                EventKind::SessionStart {
                    src: s.src,
                    dst: s.dst,
                    session: i,
                },
            )?;
        }
        let mut tick = config.d_s;
        while tick <= config.duration_s + 1e-9 {
            engine.schedule(tick, EventKind::DetectionTick)?;
            tick += config.w_s;
        }

        Ok(Simulation {
            detector: DetectorParams {
                alpha: config.alpha,
                beta: config.beta,
                k_max: config.k_max,
                coop_threshold: config.coop_threshold,
                e_min: config.e_min,
                e_strong: config.e_strong,
            },
            config,
            engine,
            topology,
            radio,
            nodes,
            watchdogs,
            selfish,
            sessions,
            ticks: Vec::new(),
            monitor_verdicts: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut Engine {
        &mut self.engine
    }

    pub fn nodes(&self) -> &[AodvNode] {
        &self.nodes
    }

    pub fn watchdogs(&self) -> &[Watchdog] {
        &self.watchdogs
    }

    pub fn watchdogs_mut(&mut self) -> &mut [Watchdog] {
        &mut self.watchdogs
    }

    pub fn is_selfish(&self, node: NodeId) -> bool {
        self.selfish[node.0]
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    /// Fused per-monitor verdicts from the most recent detection tick.
    pub fn monitor_verdicts(&self) -> &BTreeMap<NodeId, BTreeMap<NodeId, Verdict>> {
        &self.monitor_verdicts
    }

    /// Injects a route discovery at `t` (used by scripted scenarios).
    pub fn schedule_discovery(&mut self, src: NodeId, dst: NodeId, t: f64) -> Result<(), ExpError> {
        let session = self.sessions.len();
        self.sessions.push(Session {
            src,
            dst,
            start: t,
            end: t,
        });
        self.engine
            .schedule(t, EventKind::SessionStart { src, dst, session })?;
        Ok(())
    }

    /// Runs to the configured duration and computes metrics from the last
    /// detection tick.
    pub fn run(mut self) -> RunMetrics {
        self.advance(self.config.duration_s);
        self.metrics()
    }

    /// Processes events up to `t_end`.
    pub fn advance(&mut self, t_end: f64) {
        let mut engine = std::mem::replace(&mut self.engine, Engine::new(0));
        engine.run_until(t_end, |eng, ev| self.dispatch(eng, ev));
        self.engine = engine;
    }

    pub fn metrics(&self) -> RunMetrics {
        let last_tick = self.ticks.last().map(|t| t.tick_time_s);
        let final_rows: Vec<&TickVerdict> = self
            .ticks
            .iter()
            .filter(|t| Some(t.tick_time_s) == last_tick)
            .collect();
        let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
        for row in final_rows {
            if row.n_monitors == 0 {
                continue;
            }
            if row.true_selfish {
                pos += 1;
                tp += row.global_selfish as usize;
            } else {
                neg += 1;
                fp += row.global_selfish as usize;
            }
        }
        RunMetrics {
            seed: self.config.seed,
            detection_rate: if pos == 0 {
                1.0
            } else {
                tp as f64 / pos as f64
            },
            false_positive_rate: if neg == 0 {
                0.0
            } else {
                fp as f64 / neg as f64
            },
            per_tick_verdicts: self.ticks.clone(),
        }
    }

    fn dispatch(&mut self, engine: &mut Engine, event: Event) {
        let t = event.time;
        match event.kind {
            EventKind::Delivery {
                packet, receiver, ..
            } => {
                let timers = self.watchdogs[receiver.0].observe(&packet, t);
                arm_watchdog_timers(engine, receiver, timers);
                let node = &mut self.nodes[receiver.0];
                let actions = match &packet {
                    Packet::Rreq(rreq) => node.handle_rreq(rreq, t, engine.rng()),
                    Packet::Rrep(rrep) if rrep.receiver == receiver => {
                        // orphaned replies are counted in the node's stats
                        node.handle_rrep(rrep, t, engine.rng()).unwrap_or_default()
                    }
                    Packet::Rrep(_) => Vec::new(),
                };
                self.apply_actions(engine, receiver, actions);
            }
            EventKind::Transmit { sender, packet } => {
                let timers = self.watchdogs[sender.0].observe(&packet, t);
                arm_watchdog_timers(engine, sender, timers);
                engine
                    .transmit(&self.topology, &self.radio, sender, &packet, t)
                    .expect("deliveries are scheduled in the future");
            }
            EventKind::Timer { owner, key } => match key {
                TimerKey::ReverseRouteExpiry { src, bcast_id } => {
                    self.nodes[owner.0].expire_reverse(src, bcast_id);
                }
                TimerKey::Watchdog {
                    key,
                    neighbor,
                    generation,
                } => {
                    self.watchdogs[owner.0].on_timeout(key, neighbor, generation, t);
                }
                TimerKey::SessionRefresh { session } => {
                    let s = self.sessions[session];
                    self.start_discovery(engine, s.src, s.dst);
                    self.arm_refresh(engine, session, t);
                }
            },
            EventKind::SessionStart { src, dst, session } => {
                self.start_discovery(engine, src, dst);
                self.arm_refresh(engine, session, t);
            }
            EventKind::DetectionTick => self.detect(t),
        }
    }

    fn start_discovery(&mut self, engine: &mut Engine, src: NodeId, dst: NodeId) {
        let actions = self.nodes[src.0].originate_discovery(dst, engine.now());
        self.apply_actions(engine, src, actions);
    }

    fn arm_refresh(&self, engine: &mut Engine, session: usize, t: f64) {
        let next = t + AodvParams::default().active_route_timeout;
        if next < self.sessions[session].end {
            engine
                .schedule(
                    next,
                    EventKind::Timer {
                        owner: self.sessions[session].src,
                        key: TimerKey::SessionRefresh { session },
                    },
                )
                .expect("refresh lies in the future");
        }
    }

    fn apply_actions(&mut self, engine: &mut Engine, node: NodeId, actions: Vec<Action>) {
        let now = engine.now();
        for action in actions {
            let scheduled = match action {
                Action::Send(packet) => {
                    let at = now + self.radio.draw_jitter(engine.rng());
                    engine.schedule(
                        at,
                        EventKind::Transmit {
                            sender: node,
                            packet,
                        },
                    )
                }
                Action::ArmReverseExpiry { src, bcast_id, at } => engine.schedule(
                    at,
                    EventKind::Timer {
                        owner: node,
                        key: TimerKey::ReverseRouteExpiry { src, bcast_id },
                    },
                ),
                Action::DiscoveryComplete { .. } => continue,
            };
            scheduled.expect("protocol actions lie in the future");
        }
    }

    fn detect(&mut self, now: f64) {
        let window = self.config.d_s;
        let verdicts: BTreeMap<NodeId, BTreeMap<NodeId, Verdict>> = self
            .watchdogs
            .iter()
            .map(|wd| {
                let snapshot = wd.snapshot(now, window);
                let clustered = classify(&snapshot, &self.detector);
                let evidence: BTreeMap<NodeId, EvidenceCounters> =
                    snapshot.iter().map(|(&id, s)| (id, s.evidence)).collect();
                let fused = fuse(
                    &clustered,
                    &evidence,
                    self.detector.e_min,
                    self.detector.e_strong,
                );
                (wd.monitor(), fused)
            })
            .collect();

        for node in self.topology.nodes() {
            let monitors = self.topology.neighbors(node);
            let mut votes = 0;
            let mut evidence = 0u64;
            for m in monitors {
                if let Some(v) = verdicts.get(m).and_then(|vs| vs.get(&node)) {
                    votes += (v.label == Label::Selfish) as usize;
                    evidence += v.evidence.total() as u64;
                }
            }
            let n_monitors = monitors.len();
            let global_selfish =
                votes > 0 && votes as f64 >= self.config.vote_quorum * n_monitors as f64;
            self.ticks.push(TickVerdict {
                seed: self.config.seed,
                tick_time_s: now,
                node,
                true_selfish: self.selfish[node.0],
                global_selfish,
                n_monitors,
                n_selfish_votes: votes,
                total_evidence: evidence,
            });
        }
        self.monitor_verdicts = verdicts;

        // the next tick only looks back to now + W - D
        let cutoff = now + self.config.w_s - window;
        for wd in &mut self.watchdogs {
            wd.prune_before(cutoff);
        }
    }
}

fn arm_watchdog_timers(
    engine: &mut Engine,
    monitor: NodeId,
    timers: Vec<crate::watchdog::TimerRequest>,
) {
    for tr in timers {
        engine
            .schedule(
                tr.at,
                EventKind::Timer {
                    owner: monitor,
                    key: TimerKey::Watchdog {
                        key: tr.key,
                        neighbor: tr.neighbor,
                        generation: tr.generation,
                    },
                },
            )
            .expect("watchdog timers lie in the future");
    }
}
