//! Cross-view person matching as size- and source-constrained clustering.
//!
//! Matching people across views without epipolar constraints is solved in
//! three steps:
//!
//! 1. **Size-constrained pre-clustering** – k-means alternation where the
//!    assignment step is an exact min-cost-flow solve forcing every cluster
//!    to hold between 2 and N samples (a person must be seen by at least
//!    two cameras, and at most once per camera).
//! 2. **False-match detection** – samples sharing a camera inside one
//!    cluster are flagged as source-constraint violations.
//! 3. **Source-constrained post-clustering** – flagged samples are
//!    re-assigned one at a time in decreasing order of their Sample
//!    Distinguishability Score (ratio of second-nearest to nearest
//!    eligible-center distance), so the most clear-cut samples claim their
//!    cluster first. Correct matches from step 1 are never touched.

mod flow;

pub use flow::FlowNetwork;

use crate::model::{ClusterResult, FeatureVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Cost quantization: ½‖x − C‖² is scaled by this and rounded, so the flow
/// solver runs on integers. Unit-norm features keep totals far inside i64.
pub const COST_SCALE: f64 = 1e7;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("infeasible instance: {0}")]
    Infeasible(String),
    #[error("sample {0} has no eligible cluster")]
    NoEligibleCluster(usize),
}

/// One clustering input: a track's aggregated feature plus its source
/// camera. `local_index` identifies the sample within its camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub feature: FeatureVector,
    pub camera_id: usize,
    pub local_index: usize,
}

/// A maximal group of same-cluster samples sharing one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGroup {
    pub cluster: usize,
    pub camera_id: usize,
    pub samples: Vec<usize>,
}

/// Integer arc cost used by the assignment flow network.
pub fn scaled_cost(sample: &FeatureVector, center: &FeatureVector) -> i64 {
    let d = sample.euclidean(center);
    (0.5 * d * d * COST_SCALE).round() as i64
}

/// Clustering objective Σ ½‖xᵢ − C(aᵢ)‖² in real arithmetic.
pub fn objective(samples: &[Sample], centers: &[FeatureVector], assignments: &[usize]) -> f64 {
    samples
        .iter()
        .zip(assignments)
        .map(|(s, &k)| {
            let d = s.feature.euclidean(&centers[k]);
            0.5 * d * d
        })
        .sum()
}

fn check_feasible(n_samples: usize, k: usize, max_cluster_size: usize) -> Result<(), ClusterError> {
    if k == 0 {
        return Err(ClusterError::Infeasible("k must be >= 1".into()));
    }
    if 2 * k > n_samples {
        return Err(ClusterError::Infeasible(format!(
            "{n_samples} samples cannot fill {k} clusters of size >= 2"
        )));
    }
    if k * max_cluster_size < n_samples {
        return Err(ClusterError::Infeasible(format!(
            "{n_samples} samples exceed {k} clusters of size <= {max_cluster_size}"
        )));
    }
    Ok(())
}

/// Optimal assignment of samples to the given centers under the size
/// constraints: every sample to exactly one cluster, every cluster holding
/// between 2 and `max_cluster_size` samples. Solved exactly as min-cost
/// flow on quantized costs.
pub fn solve_assignment(
    samples: &[Sample],
    centers: &[FeatureVector],
    max_cluster_size: usize,
) -> Result<Vec<usize>, ClusterError> {
    let m = samples.len();
    let k = centers.len();
    check_feasible(m, k, max_cluster_size)?;

    // Nodes: samples 0..m, clusters m..m+k, sink m+k.
    let sink = m + k;
    let mut net = FlowNetwork::new(m + k + 1);
    for i in 0..m {
        net.add_supply(i, 1);
    }
    net.add_supply(sink, -(m as i64));
    let mut handles = Vec::with_capacity(m * k);
    for (i, sample) in samples.iter().enumerate() {
        for (c, center) in centers.iter().enumerate() {
            let cost = scaled_cost(&sample.feature, center);
            handles.push((i, c, net.add_arc(i, m + c, 0, 1, cost)));
        }
    }
    for c in 0..k {
        net.add_arc(m + c, sink, 2, max_cluster_size as i64, 0);
    }
    net.solve()
        .ok_or_else(|| ClusterError::Infeasible("flow network has no feasible routing".into()))?;

    let mut assignments = vec![usize::MAX; m];
    for (i, c, handle) in &handles {
        if net.flow(handle) == 1 {
            assignments[*i] = *c;
        }
    }
    debug_assert!(assignments.iter().all(|&a| a != usize::MAX));
    Ok(assignments)
}

/// k-means++-style center seeding with an explicit seed.
fn seed_centers(samples: &[Sample], k: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<FeatureVector> = Vec::with_capacity(k);
    centers.push(samples[rng.gen_range(0..samples.len())].feature.clone());
    while centers.len() < k {
        let d2: Vec<f64> = samples
            .iter()
            .map(|s| {
                centers
                    .iter()
                    .map(|c| {
                        let d = s.feature.euclidean(c);
                        d * d
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = samples.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All samples coincide with some center; any pick is equivalent.
            rng.gen_range(0..samples.len())
        };
        centers.push(samples[idx].feature.clone());
    }
    centers
}

fn mean_center(samples: &[Sample], members: &[usize]) -> FeatureVector {
    let dim = samples[members[0]].feature.dim();
    let mut sum = vec![0.0; dim];
    for &i in members {
        for (d, v) in samples[i].feature.as_slice().iter().enumerate() {
            sum[d] += v;
        }
    }
    let n = members.len() as f64;
    FeatureVector(sum.into_iter().map(|v| v / n).collect())
}

/// Size-constrained pre-clustering (step 1): alternates the exact flow
/// assignment with mean center updates until assignments are stable or the
/// iteration cap. Deterministic given the seed.
pub fn constrained_kmeans(
    samples: &[Sample],
    k: usize,
    max_cluster_size: usize,
    seed: u64,
    max_iters: usize,
) -> Result<ClusterResult, ClusterError> {
    check_feasible(samples.len(), k, max_cluster_size)?;
    let mut per_camera = std::collections::HashMap::new();
    for s in samples {
        *per_camera.entry(s.camera_id).or_insert(0usize) += 1;
    }
    if let Some((cam, count)) = per_camera.iter().find(|(_, &c)| c > k) {
        return Err(ClusterError::Infeasible(format!(
            "camera {cam} contributes {count} samples > k = {k}"
        )));
    }

    let mut centers = seed_centers(samples, k, seed);
    let mut assignments: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    for _ in 0..max_iters.max(1) {
        let next = solve_assignment(samples, &centers, max_cluster_size)?;
        if assignments.as_ref() == Some(&next) {
            break;
        }
        for c in 0..k {
            let members: Vec<usize> = (0..samples.len()).filter(|&i| next[i] == c).collect();
            // Size constraint guarantees non-empty clusters.
            centers[c] = mean_center(samples, &members);
        }
        trace.push(objective(samples, &centers, &next));
        assignments = Some(next);
    }
    let assignments = assignments.expect("at least one assignment iteration");
    let n = samples.len();
    Ok(ClusterResult {
        k,
        assignments,
        centers,
        conflict_flags: vec![false; n],
        fallback_flags: vec![false; n],
        objective_trace: trace,
    })
}

/// Plain unconstrained Lloyd k-means with the same seeding, kept as the
/// ablation baseline.
pub fn lloyd_kmeans(samples: &[Sample], k: usize, seed: u64, max_iters: usize) -> ClusterResult {
    let mut centers = seed_centers(samples, k, seed);
    let mut assignments = vec![0usize; samples.len()];
    let mut trace = Vec::new();
    for _ in 0..max_iters.max(1) {
        let next: Vec<usize> = samples
            .iter()
            .map(|s| {
                (0..k)
                    .min_by(|&a, &b| {
                        s.feature
                            .euclidean(&centers[a])
                            .partial_cmp(&s.feature.euclidean(&centers[b]))
                            .unwrap()
                    })
                    .unwrap()
            })
            .collect();
        let stable = next == assignments && !trace.is_empty();
        assignments = next;
        for c in 0..k {
            let members: Vec<usize> = (0..samples.len()).filter(|&i| assignments[i] == c).collect();
            if !members.is_empty() {
                centers[c] = mean_center(samples, &members);
            }
        }
        trace.push(objective(samples, &centers, &assignments));
        if stable {
            break;
        }
    }
    let n = samples.len();
    ClusterResult {
        k,
        assignments,
        centers,
        conflict_flags: vec![false; n],
        fallback_flags: vec![false; n],
        objective_trace: trace,
    }
}

/// Step 2: every maximal group of two or more same-camera samples inside
/// one cluster, ordered by (cluster, camera).
pub fn detect_conflicts(result: &ClusterResult, samples: &[Sample]) -> Vec<ConflictGroup> {
    let mut groups = Vec::new();
    for cluster in 0..result.k {
        let mut by_camera: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for (i, &a) in result.assignments.iter().enumerate() {
            if a == cluster {
                by_camera.entry(samples[i].camera_id).or_default().push(i);
            }
        }
        for (camera_id, members) in by_camera {
            if members.len() >= 2 {
                groups.push(ConflictGroup {
                    cluster,
                    camera_id,
                    samples: members,
                });
            }
        }
    }
    groups
}

/// Sample Distinguishability Score against the eligible clusters only
/// (those not already containing a sample from this sample's camera):
/// second-smallest over smallest eligible distance, `+inf` when exactly
/// one cluster is eligible.
pub fn sds(
    sample: &Sample,
    centers: &[FeatureVector],
    occupancy: &[std::collections::BTreeSet<usize>],
) -> Result<f64, ClusterError> {
    let mut eligible: Vec<f64> = centers
        .iter()
        .zip(occupancy)
        .filter(|(_, occ)| !occ.contains(&sample.camera_id))
        .map(|(c, _)| sample.feature.euclidean(c))
        .collect();
    match eligible.len() {
        0 => Err(ClusterError::NoEligibleCluster(sample.local_index)),
        1 => Ok(f64::INFINITY),
        _ => {
            eligible.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Ok(eligible[1] / eligible[0])
        }
    }
}

/// Selection record for one flagged sample at one iteration of step 3.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    sample: usize,
    /// `-1.0` marks the no-eligible-cluster fallback (real SDS is >= 1).
    sds: f64,
    /// Distance to the nearest eligible (or overall, for fallback) cluster.
    nearest_dist: f64,
    nearest_cluster: usize,
    fallback: bool,
}

/// Preference order: higher SDS, then smaller nearest distance, then
/// smaller sample index.
fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.sds != b.sds {
        return a.sds > b.sds;
    }
    if a.nearest_dist != b.nearest_dist {
        return a.nearest_dist < b.nearest_dist;
    }
    a.sample < b.sample
}

fn candidate(
    i: usize,
    sample: &Sample,
    centers: &[FeatureVector],
    occupancy: &[std::collections::BTreeSet<usize>],
) -> Candidate {
    let eligible: Vec<(usize, f64)> = centers
        .iter()
        .enumerate()
        .filter(|(c, _)| !occupancy[*c].contains(&sample.camera_id))
        .map(|(c, center)| (c, sample.feature.euclidean(center)))
        .collect();
    if eligible.is_empty() {
        // Fallback: overall nearest cluster, flagged for diagnostics.
        let (nearest_cluster, nearest_dist) = centers
            .iter()
            .enumerate()
            .map(|(c, center)| (c, sample.feature.euclidean(center)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
            .expect("at least one cluster");
        return Candidate {
            sample: i,
            sds: -1.0,
            nearest_dist,
            nearest_cluster,
            fallback: true,
        };
    }
    let (nearest_cluster, nearest_dist) = eligible
        .iter()
        .copied()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .unwrap();
    let sds = if eligible.len() == 1 {
        f64::INFINITY
    } else {
        let mut dists: Vec<f64> = eligible.iter().map(|e| e.1).collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        dists[1] / dists[0]
    };
    Candidate {
        sample: i,
        sds,
        nearest_dist,
        nearest_cluster,
        fallback: false,
    }
}

/// Step 3: source-constrained post-clustering. Flagged samples are pulled
/// out of their clusters and re-assigned one per iteration: recompute SDS
/// for every remaining flagged sample against the current occupancy,
/// assign the highest-SDS sample to its nearest eligible cluster, update
/// that cluster's occupancy, repeat. Samples left with no eligible cluster
/// take the overall-nearest cluster and a fallback flag; centers are never
/// modified here.
pub fn reassign_conflicts(
    result: &ClusterResult,
    groups: &[ConflictGroup],
    samples: &[Sample],
) -> ClusterResult {
    let mut out = result.clone();
    let mut flagged: Vec<usize> = groups.iter().flat_map(|g| g.samples.iter().copied()).collect();
    flagged.sort_unstable();
    flagged.dedup();
    for &i in &flagged {
        out.conflict_flags[i] = true;
    }

    // Occupancy from the samples that keep their step-1 assignment.
    let mut occupancy: Vec<std::collections::BTreeSet<usize>> =
        vec![std::collections::BTreeSet::new(); result.k];
    for (i, &a) in result.assignments.iter().enumerate() {
        if !out.conflict_flags[i] {
            occupancy[a].insert(samples[i].camera_id);
        }
    }

    let mut remaining = flagged;
    while !remaining.is_empty() {
        let best = remaining
            .iter()
            .map(|&i| candidate(i, &samples[i], &out.centers, &occupancy))
            .fold(None::<Candidate>, |acc, c| match acc {
                Some(a) if better(&a, &c) => Some(a),
                _ => Some(c),
            })
            .expect("remaining is non-empty");
        out.assignments[best.sample] = best.nearest_cluster;
        out.fallback_flags[best.sample] = best.fallback;
        occupancy[best.nearest_cluster].insert(samples[best.sample].camera_id);
        remaining.retain(|&i| i != best.sample);
    }
    out
}

/// Full multi-step matching: size-constrained pre-clustering, conflict
/// detection, center refresh from non-flagged members, then
/// source-constrained re-assignment.
pub fn match_people(
    samples: &[Sample],
    k: usize,
    max_cluster_size: usize,
    seed: u64,
    max_iters: usize,
) -> Result<ClusterResult, ClusterError> {
    let mut result = constrained_kmeans(samples, k, max_cluster_size, seed, max_iters)?;
    let groups = detect_conflicts(&result, samples);
    if groups.is_empty() {
        return Ok(result);
    }
    // Refresh centers from non-flagged members so step-3 distances are not
    // contaminated by the very samples being re-assigned.
    let flagged: std::collections::BTreeSet<usize> =
        groups.iter().flat_map(|g| g.samples.iter().copied()).collect();
    for c in 0..k {
        let members: Vec<usize> = (0..samples.len())
            .filter(|&i| result.assignments[i] == c && !flagged.contains(&i))
            .collect();
        if !members.is_empty() {
            result.centers[c] = mean_center(samples, &members);
        }
    }
    Ok(reassign_conflicts(&result, &groups, samples))
}

/// True when no two samples in one cluster share a camera, ignoring
/// fallback-flagged samples.
pub fn source_constraint_satisfied(result: &ClusterResult, samples: &[Sample]) -> bool {
    for cluster in 0..result.k {
        let mut seen = std::collections::BTreeSet::new();
        for (i, &a) in result.assignments.iter().enumerate() {
            if a == cluster && !result.fallback_flags[i] && !seen.insert(samples[i].camera_id) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests;
