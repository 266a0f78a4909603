//! Clustering agreement (Purity, Rand Index, Adjusted Rand Index, pairwise
//! F-Score) and pose quality (Percentage of Correct Parts) against ground
//! truth.

use crate::model::{Skeleton3D, LIMBS};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("label length mismatch: predicted {pred}, truth {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Contingency counts between predicted and true labelings.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// counts[pred][truth]
    pub counts: Vec<Vec<usize>>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn build(pred: &[usize], truth: &[usize]) -> Result<ContingencyTable, MetricError> {
        if pred.len() != truth.len() {
            return Err(MetricError::LengthMismatch {
                pred: pred.len(),
                truth: truth.len(),
            });
        }
        if pred.len() < 2 {
            return Err(MetricError::TooFewSamples(pred.len()));
        }
        let relabel = |labels: &[usize]| -> Vec<usize> {
            let mut map = std::collections::BTreeMap::new();
            labels
                .iter()
                .map(|&l| {
                    let next = map.len();
                    *map.entry(l).or_insert(next)
                })
                .collect()
        };
        let p = relabel(pred);
        let t = relabel(truth);
        let kp = p.iter().max().unwrap() + 1;
        let kt = t.iter().max().unwrap() + 1;
        let mut counts = vec![vec![0usize; kt]; kp];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a][b] += 1;
        }
        Ok(ContingencyTable {
            counts,
            n: pred.len(),
        })
    }
}

/// The four clustering scores, all computed from pair counts except purity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringScores {
    pub purity: f64,
    pub rand_index: f64,
    pub adjusted_rand_index: f64,
    pub f_score: f64,
}

fn comb2(n: usize) -> f64 {
    (n as f64) * (n as f64 - 1.0) / 2.0
}

/// Purity, RI, ARI, and pairwise F-Score of a predicted labeling against
/// ground truth.
pub fn clustering_scores(pred: &[usize], truth: &[usize]) -> Result<ClusteringScores, MetricError> {
    let table = ContingencyTable::build(pred, truth)?;
    let n = table.n;

    let purity: f64 = table
        .counts
        .iter()
        .map(|row| *row.iter().max().unwrap_or(&0) as f64)
        .sum::<f64>()
        / n as f64;

    // Pair bookkeeping: tp = same pred & same truth, etc.
    let sum_cells: f64 = table.counts.iter().flatten().map(|&c| comb2(c)).sum();
    let row_sums: Vec<usize> = table.counts.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..table.counts[0].len())
        .map(|j| table.counts.iter().map(|r| r[j]).sum())
        .collect();
    let sum_rows: f64 = row_sums.iter().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = col_sums.iter().map(|&c| comb2(c)).sum();
    let total_pairs = comb2(n);

    let tp = sum_cells;
    let fp = sum_rows - sum_cells;
    let fn_ = sum_cols - sum_cells;
    let tn = total_pairs - tp - fp - fn_;

    let rand_index = (tp + tn) / total_pairs;

    let expected = sum_rows * sum_cols / total_pairs;
    let max_index = 0.5 * (sum_rows + sum_cols);
    let adjusted_rand_index = if (max_index - expected).abs() < 1e-12 {
        // Both partitions trivial (all-one-cluster or all-singletons).
        1.0
    } else {
        (sum_cells - expected) / (max_index - expected)
    };

    let f_score = if sum_rows == 0.0 && sum_cols == 0.0 {
        // No positive pairs on either side: identical singleton partitions.
        1.0
    } else if tp == 0.0 {
        0.0
    } else {
        let precision = tp / (tp + fp);
        let recall = tp / (tp + fn_);
        2.0 * precision * recall / (precision + recall)
    };

    Ok(ClusteringScores {
        purity,
        rand_index,
        adjusted_rand_index,
        f_score,
    })
}

/// PCP outcome for one skeleton pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PcpResult {
    /// Per-limb verdict; `None` when a limb endpoint was invalid on either
    /// side and the limb is excluded from the denominator.
    pub limbs: [Option<bool>; LIMBS.len()],
    pub correct: usize,
    pub evaluated: usize,
}

impl PcpResult {
    pub fn percentage(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            100.0 * self.correct as f64 / self.evaluated as f64
        }
    }
}

/// Percentage of Correct Parts: a limb is correct iff both predicted
/// endpoints lie strictly within `alpha` times the true limb length of
/// their true positions.
pub fn pcp(pred: &Skeleton3D, truth: &Skeleton3D, alpha: f64) -> PcpResult {
    let mut limbs = [None; LIMBS.len()];
    let mut correct = 0;
    let mut evaluated = 0;
    for (li, &(a, b)) in LIMBS.iter().enumerate() {
        let usable = pred.joint_valid[a]
            && pred.joint_valid[b]
            && truth.joint_valid[a]
            && truth.joint_valid[b];
        if !usable {
            continue;
        }
        let limb_len = (truth.joints3d[a] - truth.joints3d[b]).norm();
        let err_a = (pred.joints3d[a] - truth.joints3d[a]).norm();
        let err_b = (pred.joints3d[b] - truth.joints3d[b]).norm();
        let threshold = alpha * limb_len;
        let ok = err_a < threshold && err_b < threshold;
        limbs[li] = Some(ok);
        evaluated += 1;
        if ok {
            correct += 1;
        }
    }
    PcpResult {
        limbs,
        correct,
        evaluated,
    }
}

/// Greedy person matching for PCP: ascending hip-midpoint distance, each
/// side used at most once. Returns (pred_index, truth_index) pairs.
pub fn match_skeletons(pred: &[Skeleton3D], truth: &[Skeleton3D]) -> Vec<(usize, usize)> {
    fn hip_mid(s: &Skeleton3D) -> Option<nalgebra::Point3<f64>> {
        if s.joint_valid[6] && s.joint_valid[7] {
            Some(nalgebra::Point3::from(
                (s.joints3d[6].coords + s.joints3d[7].coords) / 2.0,
            ))
        } else {
            s.joint_valid
                .iter()
                .position(|&v| v)
                .map(|j| s.joints3d[j])
        }
    }
    let mut dists = Vec::new();
    for (i, p) in pred.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            if let (Some(a), Some(b)) = (hip_mid(p), hip_mid(t)) {
                dists.push(((a - b).norm(), i, j));
            }
        }
    }
    dists.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used_pred = vec![false; pred.len()];
    let mut used_truth = vec![false; truth.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in dists {
        if !used_pred[i] && !used_truth[j] {
            used_pred[i] = true;
            used_truth[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}
