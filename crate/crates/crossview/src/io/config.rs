//! Pipeline configuration: a flat key-value text file, every key also
//! exposed as a CLI flag of the same name.

use super::{fmt::records, IoError};
use crate::embedding::EmbedVariant;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Short-term track length T.
    pub track_len: usize,
    /// Number of people; `None` means auto (max per-camera sample count).
    pub k: Option<usize>,
    /// Cosine-distance gate for frame-to-frame matching.
    pub gate_cosine: f64,
    /// Metric prior: assumed human lower-leg length in meters.
    pub leg_length_m: f64,
    /// Joints below this confidence are unusable.
    pub joint_conf_threshold: f64,
    /// Master seed; all stage randomness derives from it.
    pub seed: u64,
    pub embed_variant: EmbedVariant,
    pub kmeans_max_iters: usize,
    /// Frames of correspondences aggregated before essential estimation.
    pub corr_frames: usize,
    pub ransac_iters: usize,
    /// RANSAC inlier threshold on Sampson distance in normalized coordinates.
    pub ransac_thresh: f64,
    pub ba_max_iters: usize,
    /// BA stops when the gradient infinity norm falls below this.
    pub ba_gtol: f64,
    /// BA stops when the step norm falls below this.
    pub ba_xtol: f64,
    /// Optional Huber loss scale in pixels; `None` keeps plain least squares.
    pub huber_delta_px: Option<f64>,
    /// Hold camera poses at their initial values during bundle adjustment.
    pub fix_cameras: bool,
}

impl Default for PipelineConfig {
    fn default() -> PipelineConfig {
        PipelineConfig {
            track_len: 10,
            k: None,
            gate_cosine: 0.5,
            leg_length_m: 0.5,
            joint_conf_threshold: 0.1,
            seed: 0,
            embed_variant: EmbedVariant::SignVoteMax,
            kmeans_max_iters: 100,
            corr_frames: 10,
            ransac_iters: 500,
            ransac_thresh: 1e-3,
            ba_max_iters: 100,
            ba_gtol: 1e-8,
            ba_xtol: 1e-10,
            huber_delta_px: None,
            fix_cameras: false,
        }
    }
}

impl PipelineConfig {
    /// Parses `key value` lines; `#` starts a comment. Unknown keys and
    /// out-of-range values are rejected.
    pub fn parse(text: &str) -> Result<PipelineConfig, IoError> {
        let mut cfg = PipelineConfig::default();
        for mut rec in records(text) {
            let line = rec.line;
            let key = rec.tag().expect("records are non-empty");
            match key {
                "t" => cfg.track_len = rec.usize("t")?,
                "k" => {
                    let tok = rec.str("k")?;
                    cfg.k = if tok == "auto" {
                        None
                    } else {
                        Some(tok.parse().map_err(|_| {
                            IoError::parse(line, format!("bad value for k: {tok:?}"))
                        })?)
                    };
                }
                "gate" => cfg.gate_cosine = rec.f64("gate")?,
                "leg-length" => cfg.leg_length_m = rec.f64("leg-length")?,
                "conf-threshold" => cfg.joint_conf_threshold = rec.f64("conf-threshold")?,
                "seed" => {
                    let tok = rec.str("seed")?;
                    cfg.seed = tok.parse().map_err(|_| {
                        IoError::parse(line, format!("bad value for seed: {tok:?}"))
                    })?;
                }
                "embed-variant" => {
                    let tok = rec.str("embed-variant")?;
                    cfg.embed_variant = EmbedVariant::parse(tok).ok_or_else(|| {
                        IoError::parse(line, format!("unknown embed-variant: {tok:?}"))
                    })?;
                }
                "kmeans-max-iters" => cfg.kmeans_max_iters = rec.usize("kmeans-max-iters")?,
                "corr-frames" => cfg.corr_frames = rec.usize("corr-frames")?,
                "ransac-iters" => cfg.ransac_iters = rec.usize("ransac-iters")?,
                "ransac-thresh" => cfg.ransac_thresh = rec.f64("ransac-thresh")?,
                "ba-max-iters" => cfg.ba_max_iters = rec.usize("ba-max-iters")?,
                "ba-gtol" => cfg.ba_gtol = rec.f64("ba-gtol")?,
                "ba-xtol" => cfg.ba_xtol = rec.f64("ba-xtol")?,
                "huber-delta" => cfg.huber_delta_px = Some(rec.f64("huber-delta")?),
                "fix-cameras" => cfg.fix_cameras = rec.bool01("fix-cameras")?,
                other => {
                    return Err(IoError::parse(line, format!("unknown config key: {other:?}")))
                }
            }
            rec.finish()?;
        }
        cfg.validate().map_err(|msg| IoError::schema(0, msg))?;
        Ok(cfg)
    }

    pub fn read(path: &std::path::Path) -> Result<PipelineConfig, IoError> {
        PipelineConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.track_len < 1 {
            return Err("t must be >= 1".into());
        }
        if let Some(k) = self.k {
            if k < 2 {
                return Err("k must be >= 2".into());
            }
        }
        if !(self.leg_length_m > 0.0) {
            return Err("leg-length must be > 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(PipelineConfig::default().validate().is_ok());
    }

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = PipelineConfig::parse("# comment\nt 5\nk 3\ngate 0.9\nembed-variant max\n")
            .unwrap();
        assert_eq!(cfg.track_len, 5);
        assert_eq!(cfg.k, Some(3));
        assert_eq!(cfg.gate_cosine, 0.9);
        assert_eq!(cfg.embed_variant, EmbedVariant::Max);
    }

    #[test]
    fn auto_k_parses_to_none() {
        let cfg = PipelineConfig::parse("k auto\n").unwrap();
        assert_eq!(cfg.k, None);
    }

    #[test]
    fn rejects_unknown_key_and_bad_k() {
        assert!(PipelineConfig::parse("bogus 1\n").is_err());
        assert!(PipelineConfig::parse("k 1\n").is_err());
        assert!(PipelineConfig::parse("leg-length -2\n").is_err());
    }
}
