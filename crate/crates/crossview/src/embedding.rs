//! Feature normalization and track-feature aggregation.
//!
//! A track's per-frame features can disagree violently in individual
//! dimensions (sudden sign flips), so plain mean/max pooling mixes in the
//! corrupted values. Max-of-sign-voting instead decides each dimension by
//! majority sign and takes the largest magnitude among the majority, which
//! ignores a minority of flipped entries entirely. The degenerate pooling
//! variants are kept behind the same interface for the ablation harness.

use crate::model::{FeatureVector, Track};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EmbedError {
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("cannot aggregate an empty track")]
    EmptyTrack,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Track aggregation strategies; `SignVoteMax` is the pipeline default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedVariant {
    /// Majority sign per dimension, then max magnitude among that sign.
    SignVoteMax,
    /// Per-dimension mean of raw values.
    Mean,
    /// Per-dimension max of raw values.
    Max,
    /// Majority sign per dimension, then mean of the majority-sign values.
    SignVoteMean,
}

impl EmbedVariant {
    pub fn parse(s: &str) -> Option<EmbedVariant> {
        match s {
            "sign-vote" => Some(EmbedVariant::SignVoteMax),
            "mean" => Some(EmbedVariant::Mean),
            "max" => Some(EmbedVariant::Max),
            "mean-sign-vote" => Some(EmbedVariant::SignVoteMean),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EmbedVariant::SignVoteMax => "sign-vote",
            EmbedVariant::Mean => "mean",
            EmbedVariant::Max => "max",
            EmbedVariant::SignVoteMean => "mean-sign-vote",
        }
    }
}

/// L2-normalizes a raw feature; direction is preserved.
pub fn normalize_feature(raw: &[f64]) -> Result<FeatureVector, EmbedError> {
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(EmbedError::ZeroVector);
    }
    Ok(FeatureVector(raw.iter().map(|v| v / norm).collect()))
}

/// Sign of a value for voting purposes; exact zeros count as positive,
/// avoiding a three-way vote.
fn vote_sign(v: f64) -> bool {
    v >= 0.0
}

/// Raw max-of-sign-voting over a track's features, before re-normalization.
///
/// Per dimension independently: the sign held by the majority of elements
/// wins (ties resolve toward the temporally latest element), then the output
/// is that sign times the max magnitude among majority-sign elements.
pub fn sign_vote_raw(track_features: &[FeatureVector]) -> Result<Vec<f64>, EmbedError> {
    let dim = check_dims(track_features)?;
    let mut out = vec![0.0; dim];
    for d in 0..dim {
        let mut positives = 0usize;
        for f in track_features {
            if vote_sign(f.0[d]) {
                positives += 1;
            }
        }
        let negatives = track_features.len() - positives;
        let majority_positive = match positives.cmp(&negatives) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            // Tie: latest observation is least stale.
            std::cmp::Ordering::Equal => vote_sign(track_features.last().unwrap().0[d]),
        };
        let mut best = 0.0f64;
        for f in track_features {
            let v = f.0[d];
            if vote_sign(v) == majority_positive && v.abs() > best {
                best = v.abs();
            }
        }
        out[d] = if majority_positive { best } else { -best };
    }
    Ok(out)
}

/// Max-of-sign-voting track representation, re-normalized to unit norm so
/// downstream cosine/Euclidean geometry stays on the sphere.
pub fn sign_vote(track_features: &[FeatureVector]) -> Result<FeatureVector, EmbedError> {
    normalize_feature(&sign_vote_raw(track_features)?)
}

/// Aggregates track features with the chosen variant; all variants
/// re-normalize to unit norm for comparability.
pub fn aggregate(
    variant: EmbedVariant,
    track_features: &[FeatureVector],
) -> Result<FeatureVector, EmbedError> {
    let dim = check_dims(track_features)?;
    let n = track_features.len() as f64;
    let raw = match variant {
        EmbedVariant::SignVoteMax => sign_vote_raw(track_features)?,
        EmbedVariant::Mean => (0..dim)
            .map(|d| track_features.iter().map(|f| f.0[d]).sum::<f64>() / n)
            .collect(),
        EmbedVariant::Max => (0..dim)
            .map(|d| {
                track_features
                    .iter()
                    .map(|f| f.0[d])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
        EmbedVariant::SignVoteMean => {
            let mut out = vec![0.0; dim];
            for (d, slot) in out.iter_mut().enumerate() {
                let mut positives = 0usize;
                for f in track_features {
                    if vote_sign(f.0[d]) {
                        positives += 1;
                    }
                }
                let negatives = track_features.len() - positives;
                let majority_positive = match positives.cmp(&negatives) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => vote_sign(track_features.last().unwrap().0[d]),
                };
                let vals: Vec<f64> = track_features
                    .iter()
                    .map(|f| f.0[d])
                    .filter(|&v| vote_sign(v) == majority_positive)
                    .collect();
                *slot = vals.iter().sum::<f64>() / vals.len() as f64;
            }
            out
        }
    };
    normalize_feature(&raw)
}

/// Fills `track_feature` on every track using the chosen variant.
pub fn embed_tracks(tracks: &mut [Track], variant: EmbedVariant) -> Result<(), EmbedError> {
    for track in tracks.iter_mut() {
        let feats: Vec<FeatureVector> = track
            .detections
            .iter()
            .map(|d| normalize_feature(d.feature.as_slice()))
            .collect::<Result<_, _>>()?;
        track.track_feature = Some(aggregate(variant, &feats)?);
    }
    Ok(())
}

fn check_dims(track_features: &[FeatureVector]) -> Result<usize, EmbedError> {
    let first = track_features.first().ok_or(EmbedError::EmptyTrack)?;
    let dim = first.dim();
    for f in track_features {
        if f.dim() != dim {
            return Err(EmbedError::DimensionMismatch {
                expected: dim,
                got: f.dim(),
            });
        }
    }
    Ok(dim)
}
