//! Cross-view person matching and metric 3D pose recovery for multi-camera
//! networks with unknown extrinsics.
//!
//! Given time-synchronized 2D detections (bounding boxes, body joints and
//! appearance features) from `N` cameras, the pipeline stages are:
//!
//! 1. **Tracking** – short-term single-view tracks via frame-to-frame
//!    Hungarian assignment on appearance features.
//! 2. **Embedding** – one representative feature per track through
//!    max-of-sign-voting aggregation.
//! 3. **Clustering** – cross-view person matching as size- and
//!    source-constrained clustering (min-cost-flow assignment plus a
//!    distinguishability-ordered conflict re-assignment).
//! 4. **Geometry** – essential-matrix relative poses, spanning-tree camera
//!    alignment, DLT triangulation, lower-leg metric scale, and
//!    Levenberg–Marquardt bundle adjustment.
//!
//! The [`synth`] module generates seeded ground-truth scenes used both as a
//! data stand-in and as a test oracle; [`metrics`] scores clustering
//! (Purity/RI/ARI/F) and poses (PCP) against ground truth.
//!
//! All randomness is seed-driven and outputs are deterministic regardless of
//! the parallelism degree (see the `parallel` feature and [`par`]).

pub mod clustering;
pub mod embedding;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod tracking;

pub use model::{
    CameraPose, ClusterResult, Detection, FeatureVector, Intrinsics, Skeleton3D, Track,
};
