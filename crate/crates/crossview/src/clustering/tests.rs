use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(camera_id: usize, local_index: usize, feature: &[f64]) -> Sample {
    Sample {
        feature: FeatureVector(feature.to_vec()),
        camera_id,
        local_index,
    }
}

/// Exhaustive oracle for the size-constrained assignment: enumerates all
/// K^n labelings, filters by cluster sizes in [2, max_size], and minimizes
/// the same quantized cost the flow solver uses.
pub(crate) fn brute_force_assignment(
    samples: &[Sample],
    centers: &[FeatureVector],
    max_size: usize,
) -> Option<(Vec<usize>, i64)> {
    let m = samples.len();
    let k = centers.len();
    let mut best: Option<(Vec<usize>, i64)> = None;
    let mut labels = vec![0usize; m];
    loop {
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        if sizes.iter().all(|&s| s >= 2 && s <= max_size) {
            let cost: i64 = labels
                .iter()
                .enumerate()
                .map(|(i, &l)| scaled_cost(&samples[i].feature, &centers[l]))
                .sum();
            if best.as_ref().map_or(true, |(_, c)| cost < *c) {
                best = Some((labels.clone(), cost));
            }
        }
        // Next labeling in base-k counting order.
        let mut pos = 0;
        loop {
            if pos == m {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Independent literal re-implementation of step 3: each iteration sorts
/// every remaining flagged sample by SDS (recomputed from scratch) and
/// assigns the top one. Returns the assignment order for step-by-step
/// comparison.
pub(crate) fn reassign_reference(
    result: &ClusterResult,
    flagged: &[usize],
    samples: &[Sample],
) -> (Vec<usize>, Vec<(usize, usize, bool)>) {
    let mut assignments = result.assignments.clone();
    let flagged_set: std::collections::BTreeSet<usize> = flagged.iter().copied().collect();
    let mut occupancy: Vec<std::collections::BTreeSet<usize>> =
        vec![std::collections::BTreeSet::new(); result.k];
    for (i, &a) in assignments.iter().enumerate() {
        if !flagged_set.contains(&i) {
            occupancy[a].insert(samples[i].camera_id);
        }
    }
    let mut order = Vec::new();
    let mut remaining: Vec<usize> = flagged.to_vec();
    while !remaining.is_empty() {
        // Score everyone, sort descending by (sds, -nearest, -index).
        let mut scored: Vec<(usize, f64, f64, usize, bool)> = remaining
            .iter()
            .map(|&i| {
                let s = &samples[i];
                let elig: Vec<(usize, f64)> = result
                    .centers
                    .iter()
                    .enumerate()
                    .filter(|(c, _)| !occupancy[*c].contains(&s.camera_id))
                    .map(|(c, center)| (c, s.feature.euclidean(center)))
                    .collect();
                if elig.is_empty() {
                    let (c, d) = result
                        .centers
                        .iter()
                        .enumerate()
                        .map(|(c, center)| (c, s.feature.euclidean(center)))
                        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                        .unwrap();
                    (i, -1.0, d, c, true)
                } else {
                    let (c, d) = elig
                        .iter()
                        .copied()
                        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                        .unwrap();
                    let score = if elig.len() == 1 {
                        f64::INFINITY
                    } else {
                        let mut ds: Vec<f64> = elig.iter().map(|e| e.1).collect();
                        ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                        ds[1] / ds[0]
                    };
                    (i, score, d, c, false)
                }
            })
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap()
                .then(a.2.partial_cmp(&b.2).unwrap())
                .then(a.0.cmp(&b.0))
        });
        let (i, _, _, cluster, fallback) = scored[0];
        assignments[i] = cluster;
        occupancy[cluster].insert(samples[i].camera_id);
        order.push((i, cluster, fallback));
        remaining.retain(|&x| x != i);
    }
    (assignments, order)
}

fn random_samples(rng: &mut ChaCha8Rng, m: usize, n_cameras: usize, dim: usize) -> Vec<Sample> {
    let mut per_camera = vec![0usize; n_cameras];
    (0..m)
        .map(|_| {
            let cam = rng.gen_range(0..n_cameras);
            per_camera[cam] += 1;
            let f: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            Sample {
                feature: FeatureVector(f.into_iter().map(|v| v / norm).collect()),
                camera_id: cam,
                local_index: per_camera[cam] - 1,
            }
        })
        .collect()
}

#[test]
fn separated_pairs_form_clusters() {
    let samples = vec![
        sample(0, 0, &[1.0, 0.0]),
        sample(1, 0, &[0.99, 0.01]),
        sample(0, 1, &[0.0, 1.0]),
        sample(1, 1, &[0.01, 0.99]),
    ];
    let centers = vec![
        FeatureVector(vec![1.0, 0.0]),
        FeatureVector(vec![0.0, 1.0]),
    ];
    let a = solve_assignment(&samples, &centers, 4).unwrap();
    assert_eq!(a[0], a[1]);
    assert_eq!(a[2], a[3]);
    assert_ne!(a[0], a[2]);
    let expect: f64 = [(1usize, 0usize), (3, 1)]
        .iter()
        .map(|&(i, c)| {
            let d = samples[i].feature.euclidean(&centers[c]);
            0.5 * d * d
        })
        .sum();
    assert!((objective(&samples, &centers, &a) - expect).abs() < 1e-12);
}

#[test]
fn duplicated_centers_give_zero_objective() {
    let centers = vec![
        FeatureVector(vec![1.0, 0.0]),
        FeatureVector(vec![0.0, 1.0]),
    ];
    let samples: Vec<Sample> = (0..4)
        .map(|i| sample(i % 2, i / 2, centers[i / 2].as_slice()))
        .collect();
    let a = solve_assignment(&samples, &centers, 2).unwrap();
    assert_eq!(objective(&samples, &centers, &a), 0.0);
}

#[test]
fn infeasible_instances_rejected() {
    let samples = vec![sample(0, 0, &[1.0]), sample(1, 0, &[0.5]), sample(2, 0, &[0.0])];
    let centers = vec![FeatureVector(vec![1.0]), FeatureVector(vec![0.0])];
    // 2K = 4 > 3 samples.
    assert!(matches!(
        solve_assignment(&samples, &centers, 4),
        Err(ClusterError::Infeasible(_))
    ));
    // K*N = 2 < 3 samples.
    let one_center = vec![FeatureVector(vec![1.0])];
    assert!(matches!(
        solve_assignment(&samples, &one_center, 2),
        Err(ClusterError::Infeasible(_))
    ));
}

#[test]
fn assignment_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..60 {
        let k = rng.gen_range(1..=3);
        let m = rng.gen_range(2 * k..=8);
        let n_cameras = rng.gen_range(2..=4).max(m.div_ceil(k));
        let samples = random_samples(&mut rng, m, n_cameras, 3);
        let centers: Vec<FeatureVector> = (0..k)
            .map(|_| {
                let f: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                FeatureVector(f)
            })
            .collect();
        let max_size = n_cameras;
        if k * max_size < m {
            continue;
        }
        let assignment = solve_assignment(&samples, &centers, max_size).unwrap();
        let flow_cost: i64 = assignment
            .iter()
            .enumerate()
            .map(|(i, &c)| scaled_cost(&samples[i].feature, &centers[c]))
            .sum();
        let (_, oracle_cost) = brute_force_assignment(&samples, &centers, max_size).unwrap();
        assert_eq!(flow_cost, oracle_cost);
    }
}

#[test]
fn noiseless_replicated_features_cluster_perfectly() {
    // 3 people, identical feature across 3 cameras.
    let people = [
        FeatureVector(vec![1.0, 0.0, 0.0]),
        FeatureVector(vec![0.0, 1.0, 0.0]),
        FeatureVector(vec![0.0, 0.0, 1.0]),
    ];
    let mut samples = Vec::new();
    for cam in 0..3 {
        for (p, f) in people.iter().enumerate() {
            samples.push(Sample {
                feature: f.clone(),
                camera_id: cam,
                local_index: p,
            });
        }
    }
    let result = constrained_kmeans(&samples, 3, 3, 7, 100).unwrap();
    for p in 0..3 {
        let clusters: std::collections::BTreeSet<usize> = (0..3)
            .map(|cam| result.assignments[cam * 3 + p])
            .collect();
        assert_eq!(clusters.len(), 1, "person {p} split across clusters");
    }
}

#[test]
fn constrained_kmeans_is_deterministic_per_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples = random_samples(&mut rng, 12, 4, 6);
    let a = constrained_kmeans(&samples, 3, 4, 99, 100).unwrap();
    let b = constrained_kmeans(&samples, 3, 4, 99, 100).unwrap();
    assert_eq!(a, b);
}

#[test]
fn objective_trace_is_monotone_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for trial in 0..30 {
        let samples = random_samples(&mut rng, 12, 4, 6);
        let result = constrained_kmeans(&samples, 3, 4, trial, 100).unwrap();
        for pair in result.objective_trace.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-7,
                "objective increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn no_duplicate_cameras_means_no_conflicts() {
    let samples = vec![
        sample(0, 0, &[1.0, 0.0]),
        sample(1, 0, &[1.0, 0.0]),
        sample(0, 1, &[0.0, 1.0]),
        sample(1, 1, &[0.0, 1.0]),
    ];
    let result = ClusterResult {
        k: 2,
        assignments: vec![0, 0, 1, 1],
        centers: vec![FeatureVector(vec![1.0, 0.0]), FeatureVector(vec![0.0, 1.0])],
        conflict_flags: vec![false; 4],
        fallback_flags: vec![false; 4],
        objective_trace: vec![],
    };
    assert!(detect_conflicts(&result, &samples).is_empty());
}

#[test]
fn same_camera_pair_in_cluster_is_flagged_whole() {
    // Cluster 0 holds two camera-1 samples and one camera-2 sample: the
    // camera-1 pair forms one group listing both members.
    let samples = vec![
        sample(1, 0, &[1.0, 0.0]),
        sample(1, 1, &[0.9, 0.1]),
        sample(2, 0, &[1.0, 0.0]),
        sample(1, 2, &[0.0, 1.0]),
        sample(2, 1, &[0.0, 1.0]),
    ];
    let result = ClusterResult {
        k: 2,
        assignments: vec![0, 0, 0, 1, 1],
        centers: vec![FeatureVector(vec![1.0, 0.0]), FeatureVector(vec![0.0, 1.0])],
        conflict_flags: vec![false; 5],
        fallback_flags: vec![false; 5],
        objective_trace: vec![],
    };
    let groups = detect_conflicts(&result, &samples);
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].cluster, 0);
    assert_eq!(groups[0].camera_id, 1);
    assert_eq!(groups[0].samples, vec![0, 1]);
}

#[test]
fn three_same_camera_samples_form_one_group() {
    let samples: Vec<Sample> = (0..3).map(|i| sample(2, i, &[1.0, 0.0])).collect();
    let result = ClusterResult {
        k: 1,
        assignments: vec![0, 0, 0],
        centers: vec![FeatureVector(vec![1.0, 0.0])],
        conflict_flags: vec![false; 3],
        fallback_flags: vec![false; 3],
        objective_trace: vec![],
    };
    let groups = detect_conflicts(&result, &samples);
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].samples, vec![0, 1, 2]);
}

#[test]
fn sds_single_eligible_cluster_is_infinite() {
    let s = sample(0, 0, &[1.0, 0.0]);
    let centers = vec![FeatureVector(vec![1.0, 0.0]), FeatureVector(vec![0.0, 1.0])];
    let mut occ0 = std::collections::BTreeSet::new();
    occ0.insert(0usize);
    let occupancy = vec![occ0, std::collections::BTreeSet::new()];
    assert_eq!(sds(&s, &centers, &occupancy), Ok(f64::INFINITY));
}

#[test]
fn sds_is_ratio_of_two_smallest_eligible() {
    // Eligible distances {1, 2, 5} → SDS = 2 / 1 = 2.
    let s = sample(0, 0, &[0.0]);
    let centers = vec![
        FeatureVector(vec![1.0]),
        FeatureVector(vec![2.0]),
        FeatureVector(vec![5.0]),
    ];
    let occupancy = vec![std::collections::BTreeSet::new(); 3];
    assert_eq!(sds(&s, &centers, &occupancy), Ok(2.0));
}

#[test]
fn sds_equidistant_clusters_score_one() {
    let s = sample(0, 0, &[0.0]);
    let centers = vec![FeatureVector(vec![3.0]), FeatureVector(vec![-3.0])];
    let occupancy = vec![std::collections::BTreeSet::new(); 2];
    assert_eq!(sds(&s, &centers, &occupancy), Ok(1.0));
}

#[test]
fn sds_errors_with_no_eligible_cluster() {
    let s = sample(4, 3, &[0.0]);
    let centers = vec![FeatureVector(vec![1.0])];
    let mut occ = std::collections::BTreeSet::new();
    occ.insert(4usize);
    assert_eq!(
        sds(&s, &centers, &[occ]),
        Err(ClusterError::NoEligibleCluster(3))
    );
}

#[test]
fn single_flagged_sample_takes_only_eligible_cluster() {
    let samples = vec![
        sample(0, 0, &[1.0, 0.0]),
        sample(0, 1, &[0.9, 0.1]),
        sample(1, 0, &[0.0, 1.0]),
    ];
    let result = ClusterResult {
        k: 2,
        assignments: vec![0, 0, 1],
        centers: vec![FeatureVector(vec![1.0, 0.0]), FeatureVector(vec![0.0, 1.0])],
        conflict_flags: vec![false; 3],
        fallback_flags: vec![false; 3],
        objective_trace: vec![],
    };
    let groups = detect_conflicts(&result, &samples);
    let fixed = reassign_conflicts(&result, &groups, &samples);
    // Both camera-0 samples were flagged; each cluster should end with one.
    assert!(fixed.conflict_flags[0] && fixed.conflict_flags[1]);
    assert_ne!(fixed.assignments[0], fixed.assignments[1]);
    assert!(source_constraint_satisfied(&fixed, &samples));
}

#[test]
fn crossed_distances_follow_sds_order() {
    // Two flagged camera-0 samples, two empty-occupancy clusters.
    // Sample 0: distances (1, 4) → SDS 4; sample 1: distances (2, 2.4) → 1.2.
    // Sample 0 picks first and takes cluster 0; sample 1 must take cluster 1
    // even though cluster 0 is closer for it too.
    let samples = vec![sample(0, 0, &[0.0, 0.0]), sample(0, 1, &[1.0, 0.0])];
    let result = ClusterResult {
        k: 2,
        assignments: vec![0, 0],
        centers: vec![
            FeatureVector(vec![1.0, 0.0]),
            FeatureVector(vec![4.0, 0.0]),
        ],
        conflict_flags: vec![false; 2],
        fallback_flags: vec![false; 2],
        objective_trace: vec![],
    };
    // Hand check: sample 0 distances {1, 4} → SDS 4; sample 1 {0, 3} → inf!
    // Use distances that avoid zero: shift sample 1.
    let samples = vec![samples[0].clone(), sample(0, 1, &[1.6, 0.0])];
    // sample 1 distances: {0.6, 2.4} → SDS 4. Tie with sample 0 on SDS;
    // tie-break by nearest distance: sample 1 (0.6) beats sample 0 (1.0).
    let groups = vec![ConflictGroup {
        cluster: 0,
        camera_id: 0,
        samples: vec![0, 1],
    }];
    let fixed = reassign_conflicts(&result, &groups, &samples);
    let (ref_assign, ref_order) = reassign_reference(&result, &[0, 1], &samples);
    assert_eq!(fixed.assignments, ref_assign);
    // Sample 1 assigned first, to cluster 0 (its nearest).
    assert_eq!(ref_order[0].0, 1);
    assert_eq!(fixed.assignments[1], 0);
    assert_eq!(fixed.assignments[0], 1);
}

#[test]
fn reassignment_matches_reference_on_random_conflicts() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..200 {
        let k = rng.gen_range(2..=4);
        let n_cameras = rng.gen_range(2..=4);
        let m = rng.gen_range(k..=k * n_cameras).max(2);
        let samples = random_samples(&mut rng, m, n_cameras, 4);
        let centers: Vec<FeatureVector> = (0..k)
            .map(|_| FeatureVector((0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect();
        let assignments: Vec<usize> = (0..m).map(|_| rng.gen_range(0..k)).collect();
        let result = ClusterResult {
            k,
            assignments,
            centers,
            conflict_flags: vec![false; m],
            fallback_flags: vec![false; m],
            objective_trace: vec![],
        };
        let groups = detect_conflicts(&result, &samples);
        if groups.is_empty() {
            continue;
        }
        let fixed = reassign_conflicts(&result, &groups, &samples);
        let flagged: Vec<usize> = groups.iter().flat_map(|g| g.samples.clone()).collect();
        let (ref_assign, _) = reassign_reference(&result, &flagged, &samples);
        assert_eq!(fixed.assignments, ref_assign);
        assert!(source_constraint_satisfied(&fixed, &samples));
        // Untouched samples keep their assignment.
        for i in 0..m {
            if !fixed.conflict_flags[i] {
                assert_eq!(fixed.assignments[i], result.assignments[i]);
            }
        }
    }
}

#[test]
fn match_people_two_cameras_two_people() {
    let samples = vec![
        sample(0, 0, &[1.0, 0.0]),
        sample(0, 1, &[0.0, 1.0]),
        sample(1, 0, &[0.995, 0.0998]),
        sample(1, 1, &[0.0998, 0.995]),
    ];
    let result = match_people(&samples, 2, 2, 3, 100).unwrap();
    assert_eq!(result.assignments[0], result.assignments[2]);
    assert_eq!(result.assignments[1], result.assignments[3]);
    assert_ne!(result.assignments[0], result.assignments[1]);
    assert_eq!(result.conflict_count(), 0);
}

#[test]
fn match_people_resolves_seeded_confusion() {
    // Two people with near-identical appearance seen by three cameras; a
    // third distinct person fills the remaining cluster. Unconstrained
    // k-means merges the confused pair; the multi-step method may not.
    let mut samples = Vec::new();
    let confused_a = [1.0, 0.02, 0.0];
    let confused_b = [1.0, -0.02, 0.0];
    let distinct = [0.0, 0.0, 1.0];
    for cam in 0..3 {
        for (p, f) in [confused_a, confused_b, distinct].iter().enumerate() {
            let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut feat: Vec<f64> = f.iter().map(|v| v / norm).collect();
            // Small deterministic per-view wobble.
            feat[2] += 0.01 * (cam as f64) * if p == 0 { 1.0 } else { -1.0 };
            samples.push(Sample {
                feature: FeatureVector(feat),
                camera_id: cam,
                local_index: p,
            });
        }
    }
    let result = match_people(&samples, 3, 3, 11, 100).unwrap();
    assert!(source_constraint_satisfied(&result, &samples));
    assert_eq!(result.fallback_count(), 0);
}

#[test]
fn camera_over_k_is_infeasible() {
    let samples = vec![
        sample(0, 0, &[1.0, 0.0]),
        sample(0, 1, &[0.9, 0.1]),
        sample(0, 2, &[0.8, 0.2]),
        sample(1, 0, &[0.0, 1.0]),
    ];
    assert!(matches!(
        constrained_kmeans(&samples, 2, 2, 0, 100),
        Err(ClusterError::Infeasible(_))
    ));
}
