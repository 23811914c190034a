//! Neighbor classification from transition matrices.
//!
//! Pairs of neighbors are compared row by row with Pearson's χ² test; the
//! rejection counts give a pairwise similarity, which is turned into a
//! third-party-consistency dissimilarity and clustered with single linkage.
//! Splits are accepted only when a one-way ANOVA over the clusters'
//! cooperation indices is significant, and the resulting labels are
//! cross-checked against direct evidence.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::numerics::{chi2_critical, f_sf};
use crate::sim::NodeId;
use crate::watchdog::{
    cooperation_index, EvidenceCounters, Snapshot, TransitionMatrix, STATE_COUNT,
};

/// Degrees of freedom of every row test: one less than the state count.
pub const ROW_DOF: u32 = STATE_COUNT as u32 - 1;

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("dissimilarity needs at least 3 neighbors, got {0}")]
    InsufficientNeighbors(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareRow {
    pub statistic: f64,
    pub rejected: bool,
}

/// Pearson statistic for the homogeneity of two count rows. Cells whose
/// expected count is zero contribute nothing.
pub fn chi_square_statistic(row_r: &[u32], row_s: &[u32]) -> f64 {
    assert_eq!(row_r.len(), row_s.len(), "rows must have equal length");
    let total_r: u64 = row_r.iter().map(|&c| c as u64).sum();
    let total_s: u64 = row_s.iter().map(|&c| c as u64).sum();
    let total = (total_r + total_s) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let mut stat = 0.0;
    for (&fr, &fs) in row_r.iter().zip(row_s) {
        let column = (fr + fs) as f64;
        if column == 0.0 {
            continue;
        }
        for (observed, side_total) in [(fr, total_r), (fs, total_s)] {
            let expected = side_total as f64 * column / total;
            if expected > 0.0 {
                let dev = observed as f64 - expected;
                stat += dev * dev / expected;
            }
        }
    }
    stat
}

/// Row test against the `alpha` critical value with 7 degrees of freedom.
pub fn chi_square_row(row_r: &[u32], row_s: &[u32], alpha: f64) -> ChiSquareRow {
    chi_square_row_with_critical(row_r, row_s, chi2_critical(ROW_DOF, alpha))
}

fn chi_square_row_with_critical(row_r: &[u32], row_s: &[u32], critical: f64) -> ChiSquareRow {
    let statistic = chi_square_statistic(row_r, row_s);
    ChiSquareRow {
        statistic,
        rejected: statistic > critical,
    }
}

fn rejections(t_r: &TransitionMatrix, t_s: &TransitionMatrix, critical: f64) -> u32 {
    (0..STATE_COUNT)
        .filter(|&i| chi_square_row_with_critical(t_r.row(i), t_s.row(i), critical).rejected)
        .count() as u32
}

/// `alpha` raised to the number of rejected row tests.
pub fn similarity(t_r: &TransitionMatrix, t_s: &TransitionMatrix, alpha: f64) -> f64 {
    alpha.powi(rejections(t_r, t_s, chi2_critical(ROW_DOF, alpha)) as i32)
}

/// Pairwise similarities `L`, symmetric with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn from_matrices(matrices: &[TransitionMatrix], alpha: f64) -> SimilarityMatrix {
        let critical = chi2_critical(ROW_DOF, alpha);
        let n = matrices.len();
        let mut values = vec![vec![1.0; n]; n];
        for r in 0..n {
            for s in (r + 1)..n {
                let l = alpha.powi(rejections(&matrices[r], &matrices[s], critical) as i32);
                values[r][s] = l;
                values[s][r] = l;
            }
        }
        SimilarityMatrix { values }
    }

    /// Wraps raw values; the caller guarantees symmetry.
    pub fn from_values(values: Vec<Vec<f64>>) -> SimilarityMatrix {
        SimilarityMatrix { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.values[r][s]
    }
}

/// `1 - n_rs² / (n_r/s · n_s/r)` over all third parties `t`; 1.0 when the
/// denominator vanishes.
pub fn dissimilarity(l: &SimilarityMatrix, r: usize, s: usize) -> Result<f64, DetectorError> {
    let n = l.len();
    if n < 3 {
        return Err(DetectorError::InsufficientNeighbors(n));
    }
    if r == s {
        return Ok(0.0);
    }
    let (mut shared, mut n_r, mut n_s) = (0.0, 0.0, 0.0);
    for t in (0..n).filter(|&t| t != r && t != s) {
        let (a, b) = (l.get(r, t), l.get(s, t));
        shared += a.min(b);
        n_r += a;
        n_s += b;
    }
    let denom = n_r * n_s;
    if denom <= 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - shared * shared / denom).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    values: Vec<Vec<f64>>,
}

impl DissimilarityMatrix {
    pub fn from_similarity(l: &SimilarityMatrix) -> Result<DissimilarityMatrix, DetectorError> {
        let n = l.len();
        let mut values = vec![vec![0.0; n]; n];
        for r in 0..n {
            for s in (r + 1)..n {
                let d = dissimilarity(l, r, s)?;
                values[r][s] = d;
                values[s][r] = d;
            }
        }
        Ok(DissimilarityMatrix { values })
    }

    pub fn from_values(values: Vec<Vec<f64>>) -> DissimilarityMatrix {
        DissimilarityMatrix { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.values[r][s]
    }
}

/// One agglomeration step. Leaves are clusters `0..n`; the cluster created
/// by merge `i` is `n + i`. `a` is the side holding the smaller leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaves: usize,
}

/// Single-linkage agglomeration. Ties on height go to the pair whose
/// smallest leaves are lexicographically lowest.
pub fn single_linkage(d: &DissimilarityMatrix) -> Dendrogram {
    let n = d.len();
    assert!(n >= 1, "need at least one leaf");
    // clusters are addressed by their smallest leaf
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| d.get(i, j)).collect())
        .collect();
    let mut active = vec![true; n];
    let mut label: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            for j in ((i + 1)..n).filter(|&j| active[j]) {
                if best.is_none_or(|(_, _, h)| dist[i][j] < h) {
                    best = Some((i, j, dist[i][j]));
                }
            }
        }
        let (i, j, height) = best.expect("two active clusters remain");
        merges.push(Merge {
            a: label[i],
            b: label[j],
            height,
        });
        for k in 0..n {
            let m = dist[i][k].min(dist[j][k]);
            dist[i][k] = m;
            dist[k][i] = m;
        }
        active[j] = false;
        label[i] = n + step;
    }
    Dendrogram { merges, leaves: n }
}

/// Undoes the last `k - 1` merges. Clusters are ordered by smallest leaf
/// and their members sorted.
pub fn cut(dendrogram: &Dendrogram, k: usize) -> Vec<Vec<usize>> {
    let n = dendrogram.leaves;
    assert!(k >= 1 && k <= n, "k must lie in 1..=leaves");
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    members.resize(n + dendrogram.merges.len(), Vec::new());
    for (step, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let mut joined = std::mem::take(&mut members[m.a]);
        joined.append(&mut std::mem::take(&mut members[m.b]));
        members[n + step] = joined;
    }
    let mut clusters: Vec<Vec<usize>> = members.into_iter().filter(|c| !c.is_empty()).collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort();
    clusters
}

/// One-way ANOVA p-value for the cluster means of `scores`.
pub fn anova_p(clusters: &[Vec<usize>], scores: &[f64]) -> f64 {
    let k = clusters.len();
    assert!(k >= 2, "ANOVA needs at least two groups");
    let n: usize = clusters.iter().map(Vec::len).sum();
    if n <= k {
        return 1.0;
    }
    let grand = clusters.iter().flatten().map(|&i| scores[i]).sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for c in clusters {
        let mean = c.iter().map(|&i| scores[i]).sum::<f64>() / c.len() as f64;
        ssb += c.len() as f64 * (mean - grand).powi(2);
        ssw += c.iter().map(|&i| (scores[i] - mean).powi(2)).sum::<f64>();
    }
    // round-off from the grand mean shows up as ~1e-32 sums
    let scale = clusters
        .iter()
        .flatten()
        .map(|&i| scores[i] * scores[i])
        .sum::<f64>()
        .max(1.0);
    if ssb <= 1e-24 * scale {
        return 1.0;
    }
    if ssw <= 1e-24 * scale {
        return 0.0;
    }
    let (d1, d2) = ((k - 1) as u32, (n - k) as u32);
    let f = (ssb / d1 as f64) / (ssw / d2 as f64);
    f_sf(f, d1, d2).value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Cooperative,
    Selfish,
    Unascertained,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Cooperative => "cooperative",
            Label::Selfish => "selfish",
            Label::Unascertained => "unascertained",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub label: Label,
    /// Cluster index in the accepted cut; `None` when the neighbor did not
    /// take part in clustering.
    pub cluster_id: Option<usize>,
    pub cooperation_score: f64,
    pub evidence: EvidenceCounters,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_max: usize,
    pub coop_threshold: f64,
    pub e_min: u32,
    pub e_strong: u32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            alpha: 0.1,
            beta: 0.4,
            k_max: 5,
            coop_threshold: 0.5,
            e_min: 1,
            e_strong: 3,
        }
    }
}

/// Clusters one monitor's neighbors and labels them. Neighbors without any
/// finalized LMU in the window are left `Unascertained`.
pub fn classify(snapshot: &Snapshot, params: &DetectorParams) -> BTreeMap<NodeId, Verdict> {
    let mut verdicts: BTreeMap<NodeId, Verdict> = snapshot
        .iter()
        .map(|(&id, s)| {
            (
                id,
                Verdict {
                    label: Label::Unascertained,
                    cluster_id: None,
                    cooperation_score: cooperation_index(&s.matrix),
                    evidence: s.evidence,
                },
            )
        })
        .collect();

    let ids: Vec<NodeId> = snapshot
        .iter()
        .filter(|(_, s)| !s.matrix.is_empty())
        .map(|(&id, _)| id)
        .collect();
    if ids.len() < 3 {
        return verdicts;
    }
    let matrices: Vec<TransitionMatrix> = ids.iter().map(|id| snapshot[id].matrix).collect();
    let scores: Vec<f64> = matrices.iter().map(cooperation_index).collect();
    let l = SimilarityMatrix::from_matrices(&matrices, params.alpha);
    let d = DissimilarityMatrix::from_similarity(&l).expect("at least three neighbors");
    let tree = single_linkage(&d);

    let labels = choose_split(&tree, &scores, params);
    for (pos, id) in ids.iter().enumerate() {
        let v = verdicts.get_mut(id).expect("id from snapshot");
        let (label, cluster) = labels[pos];
        v.label = label;
        v.cluster_id = Some(cluster);
    }
    verdicts
}

fn choose_split(tree: &Dendrogram, scores: &[f64], params: &DetectorParams) -> Vec<(Label, usize)> {
    let n = tree.leaves;
    let all_cooperative = vec![(Label::Cooperative, 0); n];
    let mut previous: Option<f64> = None;
    for k in 2..=params.k_max.min(n) {
        let clusters = cut(tree, k);
        let p = anova_p(&clusters, scores);
        if p < params.beta {
            return label_clusters(&clusters, scores, params.coop_threshold, n);
        }
        if previous.is_some_and(|prev| p > prev) {
            return all_cooperative;
        }
        previous = Some(p);
    }
    all_cooperative
}

fn label_clusters(
    clusters: &[Vec<usize>],
    scores: &[f64],
    coop_threshold: f64,
    n: usize,
) -> Vec<(Label, usize)> {
    let means: Vec<f64> = clusters
        .iter()
        .map(|c| c.iter().map(|&i| scores[i]).sum::<f64>() / c.len() as f64)
        .collect();
    let mut lowest = 0;
    let mut highest = 0;
    for (i, &m) in means.iter().enumerate() {
        if m < means[lowest] {
            lowest = i;
        }
        if m > means[highest] {
            highest = i;
        }
    }
    let mut out = vec![(Label::Cooperative, 0); n];
    let found_selfish = means[lowest] < coop_threshold;
    for (cid, c) in clusters.iter().enumerate() {
        let label = if !found_selfish || cid == highest {
            Label::Cooperative
        } else if cid == lowest {
            Label::Selfish
        } else {
            Label::Unascertained
        };
        for &i in c {
            out[i] = (label, cid);
        }
    }
    out
}

/// Cross-checks cluster labels against direct evidence: `Selfish` needs
/// corroborating evidence, and strong evidence alone suffices.
pub fn fuse(
    cluster_verdicts: &BTreeMap<NodeId, Verdict>,
    evidence: &BTreeMap<NodeId, EvidenceCounters>,
    e_min: u32,
    e_strong: u32,
) -> BTreeMap<NodeId, Verdict> {
    assert!(e_min <= e_strong, "e_min must not exceed e_strong");
    cluster_verdicts
        .iter()
        .map(|(&id, v)| {
            let ev = evidence.get(&id).copied().unwrap_or_default();
            let total = ev.total();
            let label = if (v.label == Label::Selfish && total >= e_min) || total >= e_strong {
                Label::Selfish
            } else if v.label == Label::Selfish {
                Label::Unascertained
            } else {
                v.label
            };
            (
                id,
                Verdict {
                    label,
                    evidence: ev,
                    ..*v
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::watchdog::{FsmState, NeighborSnapshot};

    fn row(vals: &[u32]) -> [u32; 8] {
        let mut r = [0; 8];
        r[..vals.len()].copy_from_slice(vals);
        r
    }

    #[test]
    fn identical_rows_do_not_reject() {
        let r = row(&[3, 1, 4, 1, 5]);
        let out = chi_square_row(&r, &r, 0.1);
        assert_eq!(out.statistic, 0.0);
        assert!(!out.rejected);
    }

    #[test]
    fn disjoint_rows_give_eight() {
        let out = chi_square_row(&row(&[4]), &row(&[0, 4]), 0.1);
        assert_eq!(out.statistic, 8.0);
        assert!(!out.rejected);
    }

    #[test]
    fn empty_rows_are_neutral() {
        let out = chi_square_row(&[0; 8], &[0; 8], 0.1);
        assert_eq!(out.statistic, 0.0);
        assert!(!out.rejected);
    }

    #[test]
    fn one_empty_side_is_zero() {
        assert_eq!(chi_square_statistic(&row(&[5, 2]), &[0; 8]), 0.0);
    }

    #[test]
    fn similarity_powers() {
        let mut a = [[0u32; 8]; 8];
        let mut b = [[0u32; 8]; 8];
        for i in 0..3 {
            a[i][0] = 40;
            b[i][1] = 40;
        }
        let (ta, tb) = (
            TransitionMatrix::from_counts(a),
            TransitionMatrix::from_counts(b),
        );
        assert!((similarity(&ta, &tb, 0.1) - 0.001).abs() < 1e-15);
        assert_eq!(similarity(&ta, &ta, 0.1), 1.0);
    }

    #[test]
    fn dissimilarity_worked_example() {
        // r = 0, s = 1, third parties 2..5
        let mut v = vec![vec![1.0; 5]; 5];
        let lr = [0.1, 1.0, 0.01];
        let ls = [1.0, 0.1, 0.01];
        for t in 0..3 {
            v[0][t + 2] = lr[t];
            v[t + 2][0] = lr[t];
            v[1][t + 2] = ls[t];
            v[t + 2][1] = ls[t];
        }
        let l = SimilarityMatrix::from_values(v);
        let d = dissimilarity(&l, 0, 1).unwrap();
        let want = 1.0 - 0.21f64.powi(2) / (1.11 * 1.11);
        assert!((d - want).abs() < 1e-12);
        assert!((d - 0.96420).abs() < 1e-5);
    }

    #[test]
    fn dissimilarity_degenerate_cases() {
        let zeros = SimilarityMatrix::from_values(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert_eq!(dissimilarity(&zeros, 0, 1).unwrap(), 1.0);
        let twins = SimilarityMatrix::from_values(vec![
            vec![1.0, 0.2, 0.5, 0.3],
            vec![0.2, 1.0, 0.5, 0.3],
            vec![0.5, 0.5, 1.0, 1.0],
            vec![0.3, 0.3, 1.0, 1.0],
        ]);
        assert_eq!(dissimilarity(&twins, 0, 1).unwrap(), 0.0);
        let small = SimilarityMatrix::from_values(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(
            dissimilarity(&small, 0, 1),
            Err(DetectorError::InsufficientNeighbors(2))
        );
    }

    fn three_points() -> DissimilarityMatrix {
        DissimilarityMatrix::from_values(vec![
            vec![0.0, 0.1, 0.9],
            vec![0.1, 0.0, 0.8],
            vec![0.9, 0.8, 0.0],
        ])
    }

    #[test]
    fn single_linkage_three_points() {
        let tree = single_linkage(&three_points());
        assert_eq!(
            tree.merges,
            vec![
                Merge {
                    a: 0,
                    b: 1,
                    height: 0.1
                },
                Merge {
                    a: 3,
                    b: 2,
                    height: 0.8
                }
            ]
        );
        assert_eq!(cut(&tree, 2), vec![vec![0, 1], vec![2]]);
        assert_eq!(cut(&tree, 1), vec![vec![0, 1, 2]]);
        assert_eq!(cut(&tree, 3), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn equal_distances_follow_tie_break() {
        let d = DissimilarityMatrix::from_values(vec![vec![0.5; 4]; 4]);
        let tree = single_linkage(&d);
        let pairs: Vec<(usize, usize)> = tree.merges.iter().map(|m| (m.a, m.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (4, 2), (5, 3)]);
        assert!(tree.merges.iter().all(|m| m.height == 0.5));
    }

    #[test]
    fn two_leaves_single_merge() {
        let d = DissimilarityMatrix::from_values(vec![vec![0.0, 0.3], vec![0.3, 0.0]]);
        let tree = single_linkage(&d);
        assert_eq!(
            tree.merges,
            vec![Merge {
                a: 0,
                b: 1,
                height: 0.3
            }]
        );
    }

    #[test]
    fn anova_worked_example() {
        let scores = [1.0, 0.9, 0.1, 0.2];
        let p = anova_p(&[vec![0, 1], vec![2, 3]], &scores);
        // F = 128 on (1, 2) dof: 1 - sqrt(128/130)
        let want = 1.0 - (128.0f64 / 130.0).sqrt();
        assert!((p - want).abs() < 1e-12);
        assert!((p - 0.00772).abs() < 1e-5);
    }

    #[test]
    fn anova_degenerate_rules() {
        assert_eq!(anova_p(&[vec![0, 1], vec![2, 3]], &[0.4; 4]), 1.0);
        assert_eq!(anova_p(&[vec![0], vec![1]], &[0.1, 0.9]), 1.0);
        assert_eq!(
            anova_p(&[vec![0, 1], vec![2, 3]], &[0.2, 0.2, 0.8, 0.8]),
            0.0
        );
    }

    fn snapshot_of(profiles: &[(u32, u32)]) -> Snapshot {
        // (forwarded-and-completed, silent timeouts) per neighbor
        profiles
            .iter()
            .enumerate()
            .map(|(i, &(good, bad))| {
                let mut m = TransitionMatrix::default();
                for _ in 0..good {
                    m.record(FsmState::Init, FsmState::RcvdRreq);
                    m.record(FsmState::RcvdRreq, FsmState::FwdRreq);
                    m.record(FsmState::FwdRreq, FsmState::LmuComplete);
                }
                for _ in 0..bad {
                    m.record(FsmState::Init, FsmState::RcvdRreq);
                    m.record(FsmState::RcvdRreq, FsmState::TimeoutRreq);
                }
                (
                    NodeId(i),
                    NeighborSnapshot {
                        matrix: m,
                        evidence: EvidenceCounters::default(),
                    },
                )
            })
            .collect()
    }

    #[test]
    fn two_neighbors_are_unascertained() {
        let verdicts = classify(
            &snapshot_of(&[(10, 0), (0, 10)]),
            &DetectorParams::default(),
        );
        assert!(verdicts.values().all(|v| v.label == Label::Unascertained));
    }

    #[test]
    fn clear_split_labels_low_cluster_selfish() {
        let snap = snapshot_of(&[(30, 2), (28, 3), (31, 1), (0, 30), (1, 29), (0, 32)]);
        let v = classify(&snap, &DetectorParams::default());
        let labels: Vec<Label> = v.values().map(|v| v.label).collect();
        assert_eq!(
            labels,
            vec![
                Label::Cooperative,
                Label::Cooperative,
                Label::Cooperative,
                Label::Selfish,
                Label::Selfish,
                Label::Selfish
            ]
        );
    }

    #[test]
    fn homogeneous_neighbors_stay_cooperative() {
        let snap = snapshot_of(&[(30, 2), (28, 3), (31, 1), (29, 2), (30, 3)]);
        let v = classify(&snap, &DetectorParams::default());
        assert!(v.values().all(|v| v.label == Label::Cooperative));
    }

    fn verdict(label: Label) -> Verdict {
        Verdict {
            label,
            cluster_id: Some(0),
            cooperation_score: 0.0,
            evidence: EvidenceCounters::default(),
        }
    }

    #[test]
    fn fusion_rules() {
        let ev = |n| EvidenceCounters {
            rreq_drop: n,
            ..Default::default()
        };
        let cv: BTreeMap<NodeId, Verdict> = [
            (NodeId(0), verdict(Label::Selfish)),
            (NodeId(1), verdict(Label::Cooperative)),
            (NodeId(2), verdict(Label::Selfish)),
            (NodeId(3), verdict(Label::Cooperative)),
        ]
        .into_iter()
        .collect();
        let evidence: BTreeMap<NodeId, EvidenceCounters> =
            [(NodeId(1), ev(3)), (NodeId(2), ev(1)), (NodeId(3), ev(2))]
                .into_iter()
                .collect();
        let fused = fuse(&cv, &evidence, 1, 3);
        assert_eq!(fused[&NodeId(0)].label, Label::Unascertained);
        assert_eq!(fused[&NodeId(1)].label, Label::Selfish);
        assert_eq!(fused[&NodeId(2)].label, Label::Selfish);
        assert_eq!(fused[&NodeId(3)].label, Label::Cooperative);
    }
}
