//! File formats, configuration, and dataset ingestion.
//!
//! Everything on disk is a line-oriented, whitespace-delimited text format
//! with a versioned header line. Floats are written with 9 significant
//! digits, keys sorted, so identical inputs produce byte-identical files.
//! Readers validate every stated invariant and reject violations with an
//! error naming the offending line; nothing is silently repaired.

mod config;
mod embeds;
mod fmt;
mod matches;
mod results;
mod scene;
mod tracks;

pub use config::PipelineConfig;
pub use embeds::{read_embeds, write_embeds, EmbedsFile, WindowSamples};
pub use fmt::fmt_f64;
pub use matches::{read_matches, write_matches, MatchesFile, WindowMatches};
pub use results::{read_results, write_results, FrameSkeleton, ResultsFile};
pub use scene::{read_scene, write_scene, CameraGroundTruth, SceneFile, SceneGroundTruth};
pub use tracks::{read_tracks, write_tracks, TracksFile, WindowTracks};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    /// Malformed content: bad token, wrong field count, unknown record.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Well-formed content violating a schema invariant.
    #[error("schema error at line {line}: {msg}")]
    Schema { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl IoError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> IoError {
        IoError::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn schema(line: usize, msg: impl Into<String>) -> IoError {
        IoError::Schema {
            line,
            msg: msg.into(),
        }
    }
}

/// Frame interval covered by one matching window (`frame_end` inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpan {
    pub index: usize,
    pub frame_start: usize,
    pub frame_end: usize,
}
