//! Domain types shared by all pipeline stages.
//!
//! Everything here is an immutable value object after construction; no
//! algorithms live in this module.

use nalgebra::{Matrix3, Point3, Vector3};

/// Number of body joints in the fixed skeleton convention.
pub const JOINT_COUNT: usize = 12;

/// Fixed 12-joint convention, face joints excluded.
///
/// 0 L-shoulder, 1 R-shoulder, 2 L-elbow, 3 R-elbow, 4 L-wrist, 5 R-wrist,
/// 6 L-hip, 7 R-hip, 8 L-knee, 9 R-knee, 10 L-ankle, 11 R-ankle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JointId(pub usize);

impl JointId {
    pub const L_SHOULDER: JointId = JointId(0);
    pub const R_SHOULDER: JointId = JointId(1);
    pub const L_ELBOW: JointId = JointId(2);
    pub const R_ELBOW: JointId = JointId(3);
    pub const L_WRIST: JointId = JointId(4);
    pub const R_WRIST: JointId = JointId(5);
    pub const L_HIP: JointId = JointId(6);
    pub const R_HIP: JointId = JointId(7);
    pub const L_KNEE: JointId = JointId(8);
    pub const R_KNEE: JointId = JointId(9);
    pub const L_ANKLE: JointId = JointId(10);
    pub const R_ANKLE: JointId = JointId(11);

    /// Creates a joint id, returning `None` when out of range.
    pub fn new(index: usize) -> Option<JointId> {
        (index < JOINT_COUNT).then_some(JointId(index))
    }

    pub fn index(self) -> usize {
        self.0
    }
}

/// The 10 limb segments used for PCP scoring and rendering, as pairs of
/// joint indices: shoulder–elbow ×2, elbow–wrist ×2, hip–knee ×2,
/// knee–ankle ×2, shoulder–hip ×2.
pub const LIMBS: [(usize, usize); 10] = [
    (0, 2),
    (1, 3),
    (2, 4),
    (3, 5),
    (6, 8),
    (7, 9),
    (8, 10),
    (9, 11),
    (0, 6),
    (1, 7),
];

/// Indices of the two lower-leg segments (knee, ankle) used by the metric
/// scale prior.
pub const LOWER_LEGS: [(usize, usize); 2] = [(8, 10), (9, 11)];

/// Appearance descriptor of one person detection.
///
/// The pipeline keeps features L2-normalized (unit Euclidean norm within
/// 1e-9); raw file input may be unnormalized until the embedding stage runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance to another feature of the same dimension.
    pub fn euclidean(&self, other: &FeatureVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Cosine distance `1 - <a, b>`; assumes both vectors are unit-norm.
    pub fn cosine_distance(&self, other: &FeatureVector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        1.0 - dot
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One person in one camera at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub camera_id: usize,
    pub frame_id: usize,
    /// Ground-truth person label, carried for evaluation only.
    pub person_hint: Option<usize>,
    /// Bounding box `(x_min, y_min, x_max, y_max)` in pixels.
    pub bbox: [f64; 4],
    /// 12 × `(u, v, confidence)` in pixels; confidence in `[0, 1]`.
    pub joints2d: [[f64; 3]; JOINT_COUNT],
    pub feature: FeatureVector,
}

impl Detection {
    /// Checks the structural invariants: well-ordered bbox and confidences
    /// in `[0, 1]`. Returns a description of the first violation.
    pub fn check(&self) -> Result<(), String> {
        if !(self.bbox[0] < self.bbox[2]) || !(self.bbox[1] < self.bbox[3]) {
            return Err(format!(
                "bbox not well-ordered: ({}, {}, {}, {})",
                self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3]
            ));
        }
        for (j, joint) in self.joints2d.iter().enumerate() {
            let c = joint[2];
            if !(0.0..=1.0).contains(&c) || c.is_nan() {
                return Err(format!("joint {j} confidence {c} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// A joint is usable when its confidence reaches `threshold`.
    pub fn joint_usable(&self, joint: usize, threshold: f64) -> bool {
        self.joints2d[joint][2] >= threshold
    }
}

/// Short temporal chain of detections of one person in one camera.
///
/// Detections share the camera id; frame ids are strictly increasing with
/// gaps of at most one skipped frame. `track_feature` is filled by the
/// embedding stage (sign voting by default) and is `None` before that.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub camera_id: usize,
    pub detections: Vec<Detection>,
    pub track_feature: Option<FeatureVector>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn last_frame(&self) -> usize {
        self.detections.last().map(|d| d.frame_id).unwrap_or(0)
    }

    /// Majority ground-truth label over member detections, for evaluation.
    pub fn person_hint(&self) -> Option<usize> {
        let mut counts: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for d in &self.detections {
            if let Some(p) = d.person_hint {
                *counts.entry(p).or_insert(0) += 1;
            }
        }
        counts
            .into_iter()
            .max_by_key(|&(p, c)| (c, std::cmp::Reverse(p)))
            .map(|(p, _)| p)
    }
}

/// Output of the constrained clustering stage.
///
/// `assignments[i]` is the cluster index of sample `i`. `conflict_flags`
/// marks samples that violated the source constraint before re-clustering;
/// `fallback_flags` marks samples re-assigned with no eligible cluster left.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub centers: Vec<FeatureVector>,
    pub conflict_flags: Vec<bool>,
    pub fallback_flags: Vec<bool>,
    /// Clustering objective after each pre-clustering iteration (diagnostic).
    pub objective_trace: Vec<f64>,
}

impl ClusterResult {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == cluster)
            .collect()
    }

    pub fn conflict_count(&self) -> usize {
        self.conflict_flags.iter().filter(|&&f| f).count()
    }

    pub fn fallback_count(&self) -> usize {
        self.fallback_flags.iter().filter(|&&f| f).count()
    }
}

/// Pinhole intrinsics with radial-tangential distortion
/// `(k1, k2, p1, p2, k3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub distortion: [f64; 5],
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Intrinsics {
        assert!(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
        Intrinsics {
            fx,
            fy,
            cx,
            cy,
            distortion: [0.0; 5],
        }
    }
}

/// World→camera rigid transform: `x_cam = R x_world + t`, translation in
/// meters once the metric scale is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub fn identity() -> CameraPose {
        CameraPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Camera center in world coordinates: `-Rᵀ t`.
    pub fn center(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    /// Maximum deviation of `RᵀR` from the identity plus `|det R - 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let e = self.rotation.transpose() * self.rotation - Matrix3::identity();
        e.amax().max((self.rotation.determinant() - 1.0).abs())
    }

    /// Projects a rotation drifted by composition back onto SO(3) via SVD.
    pub fn reorthonormalize(&mut self) {
        let svd = self.rotation.svd(true, true);
        let u = svd.u.unwrap();
        let v_t = svd.v_t.unwrap();
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        self.rotation = r;
    }
}

/// Per-person 3D joint set. A joint is valid only when triangulated from at
/// least two camera views.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton3D {
    pub person_id: usize,
    pub joints3d: [Point3<f64>; JOINT_COUNT],
    pub joint_valid: [bool; JOINT_COUNT],
}

impl Skeleton3D {
    pub fn empty(person_id: usize) -> Skeleton3D {
        Skeleton3D {
            person_id,
            joints3d: [Point3::origin(); JOINT_COUNT],
            joint_valid: [false; JOINT_COUNT],
        }
    }

    /// Length of a limb segment when both endpoints are valid.
    pub fn segment_length(&self, a: usize, b: usize) -> Option<f64> {
        (self.joint_valid[a] && self.joint_valid[b])
            .then(|| (self.joints3d[a] - self.joints3d[b]).norm())
    }
}
