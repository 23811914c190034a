//! Independent oracles and fixtures shared by the integration tests.
//!
//! Nothing here calls into the library's numerics or clustering code; the
//! point is to check those against something computed another way.
#![allow(dead_code)]

use meshwatch::aodv::Packet;
use meshwatch::expctl::{ScenarioConfig, Simulation};
use meshwatch::sim::{RadioModel, Topology};
use meshwatch::watchdog::FsmState;
use meshwatch::NodeId;

// ---------------------------------------------------------------------------
// adaptive Gauss–Kronrod (7/15)

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    // the second bound stops refinement once round-off dominates
    if err <= tol * whole.abs() || err <= 50.0 * f64::EPSILON * k.abs() || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, whole, tol, depth - 1) + adapt(f, m, b, whole, tol, depth - 1)
}

/// `∫_a^b f` to roughly `tol` relative accuracy.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    // crude whole-interval estimate from a 64-panel pass to scale the tolerance
    let panels = 64;
    let w = (b - a) / panels as f64;
    let rough: f64 = (0..panels)
        .map(|i| gk15(&f, a + i as f64 * w, a + (i + 1) as f64 * w).0)
        .sum();
    (0..panels)
        .map(|i| {
            adapt(
                &f,
                a + i as f64 * w,
                a + (i + 1) as f64 * w,
                rough,
                tol / panels as f64,
                40,
            )
        })
        .sum()
}

/// Upper tail of χ²(df) at `x`, by quadrature of the unnormalized density
/// after `t = u²` (removes the `t^{-1/2}` singularity for df = 1).
pub fn chi2_sf_oracle(x: f64, df: u32) -> f64 {
    let k = df as f64;
    let g = |u: f64| u.powf(k - 1.0) * (-0.5 * u * u).exp();
    let u0 = x.sqrt();
    let lower = integrate(g, 0.0, u0, 1e-14);
    let upper = integrate(g, u0, u0 + 60.0, 1e-14);
    upper / (lower + upper)
}

/// Inverse of [`chi2_sf_oracle`] by bisection.
pub fn chi2_critical_oracle(df: u32, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while chi2_sf_oracle(hi, df) > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf_oracle(mid, df) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Upper tail of F(d1, d2) at `x`. The variable `w = d1·x / (d1·x + d2)`
/// has density `∝ w^{d1/2-1} (1-w)^{d2/2-1}` on (0, 1); the endpoint
/// singularities are removed with `w = u²` on [0, ½] and `1 - w = v²` on
/// [½, 1], and the result is normalized numerically.
pub fn f_sf_oracle(x: f64, d1: u32, d2: u32) -> f64 {
    let (a, b) = (d1 as f64 / 2.0, d2 as f64 / 2.0);
    let w0 = d1 as f64 * x / (d1 as f64 * x + d2 as f64);
    // ∫ over w in [p, q] ⊂ [0, ½] with w = u²
    let left = |p: f64, q: f64| {
        integrate(
            |u: f64| 2.0 * u.powf(2.0 * a - 1.0) * (1.0 - u * u).powf(b - 1.0),
            p.sqrt(),
            q.sqrt(),
            1e-14,
        )
    };
    // ∫ over w in [p, q] ⊂ [½, 1] with 1 - w = v²
    let right = |p: f64, q: f64| {
        integrate(
            |v: f64| 2.0 * v.powf(2.0 * b - 1.0) * (1.0 - v * v).powf(a - 1.0),
            (1.0 - q).sqrt(),
            (1.0 - p).sqrt(),
            1e-14,
        )
    };
    let (lower, upper) = if w0 <= 0.5 {
        (left(0.0, w0), left(w0, 0.5) + right(0.5, 1.0))
    } else {
        (left(0.0, 0.5) + right(0.5, w0), right(w0, 1.0))
    };
    upper / (lower + upper)
}

// ---------------------------------------------------------------------------
// direct-formula Pearson statistic for a 2×m table

pub fn pearson_2xm(r: &[u32], s: &[u32]) -> f64 {
    let nr: f64 = r.iter().map(|&v| v as f64).sum();
    let ns: f64 = s.iter().map(|&v| v as f64).sum();
    let n = nr + ns;
    let mut stat = 0.0;
    for (&a, &b) in r.iter().zip(s) {
        let col = a as f64 + b as f64;
        for (obs, row) in [(a as f64, nr), (b as f64, ns)] {
            let e = row * col / n;
            if e > 0.0 {
                stat += (obs - e) * (obs - e) / e;
            }
        }
    }
    stat
}

// ---------------------------------------------------------------------------
// brute-force single linkage

/// A merge as `(smallest leaf of the first cluster, smallest leaf of the
/// second, height)`.
pub type LeafMerge = (usize, usize, f64);

/// O(R⁴) single linkage straight from the definition: at each step, join
/// the two clusters with the smallest minimum cross-pair distance, ties to
/// the lexicographically lowest pair of smallest leaves.
pub fn brute_single_linkage(d: &[Vec<f64>]) -> (Vec<LeafMerge>, Vec<Vec<Vec<usize>>>) {
    let n = d.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    // partitions[k] = clustering with k clusters
    let mut partitions = vec![Vec::new(); n + 1];
    partitions[n] = canonical(&clusters);
    while clusters.len() > 1 {
        clusters.sort_by_key(|c| *c.iter().min().unwrap());
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let mut h = f64::INFINITY;
                for &p in &clusters[i] {
                    for &q in &clusters[j] {
                        h = h.min(d[p][q]);
                    }
                }
                let better = match best {
                    None => true,
                    Some((bh, _, _)) => h < bh,
                };
                if better {
                    best = Some((h, i, j));
                }
            }
        }
        let (h, i, j) = best.unwrap();
        let a = *clusters[i].iter().min().unwrap();
        let b = *clusters[j].iter().min().unwrap();
        merges.push((a, b, h));
        let moved = clusters.remove(j);
        clusters[i].extend(moved);
        partitions[clusters.len()] = canonical(&clusters);
    }
    (merges, partitions)
}

pub fn canonical(clusters: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = clusters
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.sort_unstable();
            c
        })
        .collect();
    out.sort();
    out
}

// ---------------------------------------------------------------------------
// fixtures

/// Six nodes laid out so that S's RREQ reaches N through both X and Y, and
/// N is the only bridge to Z and the destination D beyond it.
pub mod ladder {
    use super::NodeId;
    pub const S: NodeId = NodeId(0);
    pub const X: NodeId = NodeId(1);
    pub const Y: NodeId = NodeId(2);
    pub const N: NodeId = NodeId(3);
    pub const Z: NodeId = NodeId(4);
    pub const D: NodeId = NodeId(5);
    pub const POSITIONS: [(f64, f64); 6] = [
        (0.0, 0.0),
        (200.0, 100.0),
        (200.0, -100.0),
        (400.0, 0.0),
        (600.0, 0.0),
        (800.0, 0.0),
    ];
}

/// A quiet, all-cooperative run on the ladder with fixed 2 ms delays and
/// no background sessions.
pub fn ladder_simulation() -> Simulation {
    let config = ScenarioConfig {
        selfish_fraction: 0.0,
        session_rate_per_s: 0.0,
        duration_s: 400.0,
        ..ScenarioConfig::default()
    };
    let topology = Topology::from_positions(ladder::POSITIONS.to_vec(), 250.0);
    let radio = RadioModel {
        loss_probability: 0.0,
        jitter_bounds: (0.002, 0.002),
    };
    Simulation::with_topology(&config, topology, radio).expect("ladder is connected")
}

/// Transition sequence recorded by `monitor` for `neighbor`, in order.
pub fn transitions_of(sim: &Simulation, monitor: NodeId, neighbor: NodeId) -> Vec<(usize, usize)> {
    sim.watchdogs()[monitor.0]
        .trace()
        .iter()
        .filter(|t| t.neighbor == neighbor)
        .map(|t| (t.from.number(), t.to.number()))
        .collect()
}

pub fn state_numbers(path: &[(FsmState, FsmState)]) -> Vec<(usize, usize)> {
    path.iter().map(|(a, b)| (a.number(), b.number())).collect()
}

pub fn is_rreq(p: &Packet) -> bool {
    matches!(p, Packet::Rreq(_))
}

// ---------------------------------------------------------------------------
// engine trace parsing

/// Value of the last `name: NodeId(k)` or `name: k` field in a trace line.
fn field(line: &str, name: &str) -> Option<usize> {
    let at = line.rfind(&format!("{name}: "))? + name.len() + 2;
    let rest = line[at..].strip_prefix("NodeId(").unwrap_or(&line[at..]);
    let end = rest.find(|c: char| !c.is_ascii_digit())?;
    rest[..end].parse().ok()
}

/// A control packet on the air, as recorded by the engine trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Airborne {
    pub rreq: bool,
    pub src: usize,
    pub bcast_id: usize,
    /// For transmissions, the transmitter; for deliveries, the neighbor it
    /// came from.
    pub from: usize,
    /// RREP next hop, or the receiving node of a delivery.
    pub to: Option<usize>,
    pub duplicate_flag: bool,
}

fn packet_of(line: &str) -> Option<(bool, &str)> {
    let start = line.find("packet: ")? + "packet: ".len();
    let body = &line[start..];
    Some((body.starts_with("Rreq("), body))
}

/// Transmissions in trace order.
pub fn transmissions(trace: &[String]) -> Vec<Airborne> {
    trace
        .iter()
        .filter(|l| l.contains(" Transmit {"))
        .filter_map(|l| {
            let (rreq, body) = packet_of(l)?;
            Some(Airborne {
                rreq,
                src: field(body, "src_id")?,
                bcast_id: field(body, "bcast_id")?,
                from: field(l, "sender")?,
                to: if rreq { None } else { field(body, "receiver") },
                duplicate_flag: body.contains("duplicate_flag: true"),
            })
        })
        .collect()
}

/// Deliveries in trace order; `to` is the receiving node.
pub fn deliveries(trace: &[String]) -> Vec<Airborne> {
    trace
        .iter()
        .filter(|l| l.contains(" Delivery {"))
        .filter_map(|l| {
            let (rreq, body) = packet_of(l)?;
            Some(Airborne {
                rreq,
                src: field(body, "src_id")?,
                bcast_id: field(body, "bcast_id")?,
                // the delivery's own fields come after the packet
                from: field(l, "sender")?,
                to: field(l, "receiver"),
                duplicate_flag: body.contains("duplicate_flag: true"),
            })
        })
        .collect()
}
