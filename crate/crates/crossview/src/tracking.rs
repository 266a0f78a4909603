//! Short-term single-view tracking by frame-to-frame Hungarian matching.
//!
//! Each camera runs its own tracker: detections of the current frame are
//! matched one-to-one against the live tracks of the previous frame using
//! cosine distance between appearance features. Matched detections extend
//! their track (a sliding buffer of at most `T` detections), unmatched
//! detections open new tracks, and tracks that miss more than one
//! consecutive frame are closed. No motion model is used.

use crate::embedding::normalize_feature;
use crate::io::PipelineConfig;
use crate::model::{Detection, FeatureVector, Track};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("detections span cameras {0} and {1}; one tracker per camera")]
    MixedCamera(usize, usize),
    #[error("cost matrix contains a non-finite entry at ({0}, {1})")]
    NonFiniteCost(usize, usize),
}

/// Rectangular assignment problem; rows are current-frame detections,
/// columns are previous-frame tracks.
#[derive(Debug, Clone)]
pub struct AssignmentProblem {
    pub cost: Vec<Vec<f64>>,
}

impl AssignmentProblem {
    pub fn new(cost: Vec<Vec<f64>>) -> Result<AssignmentProblem, TrackError> {
        for (i, row) in cost.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if !c.is_finite() {
                    return Err(TrackError::NonFiniteCost(i, j));
                }
            }
        }
        Ok(AssignmentProblem { cost })
    }

    pub fn rows(&self) -> usize {
        self.cost.len()
    }

    pub fn cols(&self) -> usize {
        self.cost.first().map(|r| r.len()).unwrap_or(0)
    }
}

/// Minimum-cost one-to-one matching of size `min(rows, cols)`.
///
/// Shortest augmenting path formulation with dual potentials (O(n²m));
/// returns `(row, col)` pairs sorted by row. An empty matrix yields an
/// empty matching.
pub fn hungarian(problem: &AssignmentProblem) -> Vec<(usize, usize)> {
    let rows = problem.rows();
    let cols = problem.cols();
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    // The augmenting-path formulation assigns every row, so solve with the
    // smaller side as rows and transpose back afterwards.
    let transposed = rows > cols;
    let (n, m, cost_at): (usize, usize, Box<dyn Fn(usize, usize) -> f64>) = if transposed {
        let c = problem.cost.clone();
        (cols, rows, Box::new(move |i, j| c[j][i]))
    } else {
        let c = problem.cost.clone();
        (rows, cols, Box::new(move |i, j| c[i][j]))
    };

    // 1-based arrays; p[j] = row assigned to column j, p[0] = current row.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost_at(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        // Walk the alternating path back, flipping assignments.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| {
            if transposed {
                (j - 1, p[j] - 1)
            } else {
                (p[j] - 1, j - 1)
            }
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Advances one camera's tracker by a single frame.
///
/// `prev_tracks` are the live tracks after the previous frame; `current`
/// holds all detections of one camera at one frame. Returns the live track
/// list after this frame: matched tracks extended (oldest detection evicted
/// beyond length `T`), matches over the cosine gating threshold rejected,
/// unmatched detections opened as new tracks, and tracks more than one
/// frame stale closed.
pub fn step_tracks(
    prev_tracks: Vec<Track>,
    current: &[Detection],
    cfg: &PipelineConfig,
) -> Result<Vec<Track>, TrackError> {
    if let Some(first) = current.first() {
        if let Some(other) = current.iter().find(|d| d.camera_id != first.camera_id) {
            return Err(TrackError::MixedCamera(first.camera_id, other.camera_id));
        }
    }
    let frame = current.first().map(|d| d.frame_id);

    // Cosine costs against the most recent feature of each track.
    let det_feats: Vec<FeatureVector> = current
        .iter()
        .map(|d| normalize_feature(d.feature.as_slice()).unwrap_or_else(|_| d.feature.clone()))
        .collect();
    let track_feats: Vec<FeatureVector> = prev_tracks
        .iter()
        .map(|t| {
            let last = &t.detections.last().expect("tracks are never empty").feature;
            normalize_feature(last.as_slice()).unwrap_or_else(|_| last.clone())
        })
        .collect();
    let cost: Vec<Vec<f64>> = det_feats
        .iter()
        .map(|df| track_feats.iter().map(|tf| df.cosine_distance(tf)).collect())
        .collect();

    let mut matched_track = vec![usize::MAX; current.len()];
    if !prev_tracks.is_empty() && !current.is_empty() {
        let problem = AssignmentProblem::new(cost)?;
        for (row, col) in hungarian(&problem) {
            if problem.cost[row][col] <= cfg.gate_cosine {
                matched_track[row] = col;
            }
        }
    }

    let mut tracks = prev_tracks;
    let mut extended = vec![false; tracks.len()];
    for (det_idx, det) in current.iter().enumerate() {
        let col = matched_track[det_idx];
        if col != usize::MAX {
            let track = &mut tracks[col];
            track.detections.push(det.clone());
            if track.detections.len() > cfg.track_len {
                track.detections.remove(0);
            }
            track.track_feature = None;
            extended[col] = true;
        }
    }
    // Close tracks that have been stale for more than the one-frame grace gap.
    let mut live: Vec<Track> = tracks
        .into_iter()
        .zip(extended)
        .filter(|(t, ext)| {
            *ext || frame.is_none() || frame.unwrap() <= t.last_frame() + 1
        })
        .map(|(t, _)| t)
        .collect();
    for (det_idx, det) in current.iter().enumerate() {
        if matched_track[det_idx] == usize::MAX {
            live.push(Track {
                camera_id: det.camera_id,
                detections: vec![det.clone()],
                track_feature: None,
            });
        }
    }
    Ok(live)
}
