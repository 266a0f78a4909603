//! Scene file: per-camera intrinsics, per-frame detection records, and an
//! optional ground-truth section (camera poses, 3D skeletons, labels).
//!
//! Layout (one record per line, `#` comments allowed):
//!
//! ```text
//! scene 1
//! ncams <N>
//! dim <D>
//! fps <float>
//! camera <id> <fx> <fy> <cx> <cy> <k1> <k2> <p1> <p2> <k3>
//! frame <frame_id>
//! det <camera_id> <person_hint|-> <bbox x4> <joints 12x(u v conf)> <feature xD>
//! endframe
//! gtcamera <id> <R row-major x9> <t x3>
//! gtskel <frame_id> <person_id> <joints 12x(x y z)> <valid x12>
//! feasible <0|1>
//! end
//! ```

use super::fmt::{fmt_f64, records};
use super::IoError;
use crate::model::{CameraPose, Detection, FeatureVector, Intrinsics, Skeleton3D, JOINT_COUNT};
use nalgebra::{Matrix3, Point3, Vector3};
use std::collections::BTreeMap;
use std::fmt::Write as _;

const FORMAT_VERSION: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CameraGroundTruth {
    pub camera_id: usize,
    pub pose: CameraPose,
}

/// Optional evaluation payload carried inside the scene file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGroundTruth {
    pub cameras: Vec<CameraGroundTruth>,
    /// Keyed by frame id; one skeleton per visible person.
    pub skeletons: BTreeMap<usize, Vec<Skeleton3D>>,
}

impl SceneGroundTruth {
    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty() && self.skeletons.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub dim: usize,
    pub fps: f64,
    /// Indexed by camera id, dense `0..n_cameras`.
    pub intrinsics: Vec<Intrinsics>,
    /// `(frame_id, detections)` sorted by frame id.
    pub frames: Vec<(usize, Vec<Detection>)>,
    pub ground_truth: SceneGroundTruth,
    /// False when the generator knows some person drops below two views.
    pub feasible: bool,
}

impl SceneFile {
    pub fn n_cameras(&self) -> usize {
        self.intrinsics.len()
    }

    /// All detections of one camera at one frame, in file order.
    pub fn camera_frame(&self, frame_idx: usize, camera_id: usize) -> Vec<&Detection> {
        self.frames[frame_idx]
            .1
            .iter()
            .filter(|d| d.camera_id == camera_id)
            .collect()
    }

    fn check(&self, line_of_frame: &[usize]) -> Result<(), IoError> {
        let n = self.n_cameras();
        let mut prev_frame: Option<usize> = None;
        for (idx, (frame_id, dets)) in self.frames.iter().enumerate() {
            let line = line_of_frame.get(idx).copied().unwrap_or(0);
            if let Some(prev) = prev_frame {
                if *frame_id <= prev {
                    return Err(IoError::schema(
                        line,
                        format!("frame {frame_id} not sorted after frame {prev}"),
                    ));
                }
            }
            prev_frame = Some(*frame_id);
            for det in dets {
                if det.camera_id >= n {
                    return Err(IoError::schema(
                        line,
                        format!(
                            "detection references camera_id {} absent from header (ncams {n})",
                            det.camera_id
                        ),
                    ));
                }
                if det.feature.dim() != self.dim {
                    return Err(IoError::schema(
                        line,
                        format!(
                            "feature dimension {} does not match header dim {}",
                            det.feature.dim(),
                            self.dim
                        ),
                    ));
                }
                det.check().map_err(|msg| {
                    IoError::schema(line, format!("invalid detection in frame {frame_id}: {msg}"))
                })?;
            }
        }
        for gt_cam in &self.ground_truth.cameras {
            if gt_cam.camera_id >= n {
                return Err(IoError::schema(
                    0,
                    format!("gtcamera id {} absent from header", gt_cam.camera_id),
                ));
            }
        }
        Ok(())
    }
}

pub fn write_scene(scene: &SceneFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scene {FORMAT_VERSION}");
    let _ = writeln!(out, "ncams {}", scene.n_cameras());
    let _ = writeln!(out, "dim {}", scene.dim);
    let _ = writeln!(out, "fps {}", fmt_f64(scene.fps));
    for (id, intr) in scene.intrinsics.iter().enumerate() {
        let _ = write!(
            out,
            "camera {id} {} {} {} {}",
            fmt_f64(intr.fx),
            fmt_f64(intr.fy),
            fmt_f64(intr.cx),
            fmt_f64(intr.cy)
        );
        for d in intr.distortion {
            let _ = write!(out, " {}", fmt_f64(d));
        }
        out.push('\n');
    }
    for (frame_id, dets) in &scene.frames {
        let _ = writeln!(out, "frame {frame_id}");
        for det in dets {
            let hint = det
                .person_hint
                .map(|p| p.to_string())
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, "det {} {hint}", det.camera_id);
            for b in det.bbox {
                let _ = write!(out, " {}", fmt_f64(b));
            }
            for joint in det.joints2d {
                for v in joint {
                    let _ = write!(out, " {}", fmt_f64(v));
                }
            }
            for v in det.feature.as_slice() {
                let _ = write!(out, " {}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out.push_str("endframe\n");
    }
    for gt_cam in &scene.ground_truth.cameras {
        let _ = write!(out, "gtcamera {}", gt_cam.camera_id);
        let r = &gt_cam.pose.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let _ = write!(out, " {}", fmt_f64(r[(i, j)]));
            }
        }
        for i in 0..3 {
            let _ = write!(out, " {}", fmt_f64(gt_cam.pose.translation[i]));
        }
        out.push('\n');
    }
    for (frame_id, skels) in &scene.ground_truth.skeletons {
        for skel in skels {
            let _ = write!(out, "gtskel {frame_id} {}", skel.person_id);
            for p in &skel.joints3d {
                let _ = write!(out, " {} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
            }
            for v in skel.joint_valid {
                let _ = write!(out, " {}", if v { 1 } else { 0 });
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "feasible {}", if scene.feasible { 1 } else { 0 });
    out.push_str("end\n");
    out
}

pub fn write_scene_file(path: &std::path::Path, scene: &SceneFile) -> Result<(), IoError> {
    std::fs::write(path, write_scene(scene))?;
    Ok(())
}

pub fn parse_scene(text: &str) -> Result<SceneFile, IoError> {
    let mut recs = records(text);
    let mut header = recs
        .next()
        .ok_or_else(|| IoError::parse(0, "empty scene file"))?;
    if header.tag() != Some("scene") {
        return Err(IoError::parse(header.line, "expected header: scene <version>"));
    }
    let version = header.usize("version")?;
    if version != FORMAT_VERSION {
        return Err(IoError::schema(
            header.line,
            format!("unsupported scene version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    header.finish()?;

    let mut ncams: Option<usize> = None;
    let mut dim: Option<usize> = None;
    let mut fps = 0.0f64;
    let mut intrinsics: Vec<Option<Intrinsics>> = Vec::new();
    let mut frames: Vec<(usize, Vec<Detection>)> = Vec::new();
    let mut line_of_frame: Vec<usize> = Vec::new();
    let mut current_frame: Option<(usize, Vec<Detection>)> = None;
    let mut ground_truth = SceneGroundTruth::default();
    let mut feasible = true;
    let mut saw_end = false;

    for mut rec in recs {
        let line = rec.line;
        if saw_end {
            return Err(IoError::parse(line, "content after end marker"));
        }
        let tag = rec.tag().expect("records are non-empty");
        match tag {
            "ncams" => {
                let n = rec.usize("ncams")?;
                if n == 0 {
                    return Err(IoError::schema(line, "ncams must be >= 1"));
                }
                ncams = Some(n);
                intrinsics = vec![None; n];
            }
            "dim" => {
                let d = rec.usize("dim")?;
                if d == 0 {
                    return Err(IoError::schema(line, "dim must be >= 1"));
                }
                dim = Some(d);
            }
            "fps" => fps = rec.f64("fps")?,
            "camera" => {
                let n = ncams.ok_or_else(|| IoError::parse(line, "camera before ncams"))?;
                let id = rec.usize("camera id")?;
                if id >= n {
                    return Err(IoError::schema(line, format!("camera id {id} >= ncams {n}")));
                }
                let fx = rec.f64("fx")?;
                let fy = rec.f64("fy")?;
                let cx = rec.f64("cx")?;
                let cy = rec.f64("cy")?;
                if !(fx > 0.0) || !(fy > 0.0) {
                    return Err(IoError::schema(line, "focal lengths must be positive"));
                }
                let d = rec.f64s(5, "distortion")?;
                if intrinsics[id].is_some() {
                    return Err(IoError::schema(line, format!("duplicate camera id {id}")));
                }
                intrinsics[id] = Some(Intrinsics {
                    fx,
                    fy,
                    cx,
                    cy,
                    distortion: [d[0], d[1], d[2], d[3], d[4]],
                });
            }
            "frame" => {
                if current_frame.is_some() {
                    return Err(IoError::parse(line, "frame opened before previous endframe"));
                }
                let frame_id = rec.usize("frame id")?;
                current_frame = Some((frame_id, Vec::new()));
                line_of_frame.push(line);
            }
            "det" => {
                let d = dim.ok_or_else(|| IoError::parse(line, "det before dim"))?;
                let (_, dets) = current_frame
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "det outside a frame block"))?;
                let camera_id = rec.usize("camera_id")?;
                let hint_tok = rec.str("person_hint")?;
                let person_hint = if hint_tok == "-" {
                    None
                } else {
                    Some(hint_tok.parse().map_err(|_| {
                        IoError::parse(line, format!("bad person_hint: {hint_tok:?}"))
                    })?)
                };
                let b = rec.f64s(4, "bbox")?;
                let mut joints2d = [[0.0f64; 3]; JOINT_COUNT];
                for joint in joints2d.iter_mut() {
                    let j = rec.f64s(3, "joint")?;
                    *joint = [j[0], j[1], j[2]];
                }
                let feature = FeatureVector(rec.f64s(d, "feature")?);
                let frame_id = current_frame.as_ref().unwrap().0;
                let _ = dets;
                let det = Detection {
                    camera_id,
                    frame_id,
                    person_hint,
                    bbox: [b[0], b[1], b[2], b[3]],
                    joints2d,
                    feature,
                };
                current_frame.as_mut().unwrap().1.push(det);
            }
            "endframe" => {
                let f = current_frame
                    .take()
                    .ok_or_else(|| IoError::parse(line, "endframe without frame"))?;
                frames.push(f);
            }
            "gtcamera" => {
                let id = rec.usize("camera id")?;
                let v = rec.f64s(12, "pose")?;
                let rotation = Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]);
                let pose = CameraPose {
                    rotation,
                    translation: Vector3::new(v[9], v[10], v[11]),
                };
                if pose.orthonormality_error() > 1e-6 {
                    return Err(IoError::schema(
                        line,
                        format!("gtcamera {id} rotation is not orthonormal"),
                    ));
                }
                ground_truth.cameras.push(CameraGroundTruth { camera_id: id, pose });
            }
            "gtskel" => {
                let frame_id = rec.usize("frame id")?;
                let person_id = rec.usize("person id")?;
                let coords = rec.f64s(JOINT_COUNT * 3, "joints3d")?;
                let mut joints3d = [Point3::origin(); JOINT_COUNT];
                for (j, p) in joints3d.iter_mut().enumerate() {
                    *p = Point3::new(coords[3 * j], coords[3 * j + 1], coords[3 * j + 2]);
                }
                let mut joint_valid = [false; JOINT_COUNT];
                for v in joint_valid.iter_mut() {
                    *v = rec.bool01("valid")?;
                }
                ground_truth.skeletons.entry(frame_id).or_default().push(Skeleton3D {
                    person_id,
                    joints3d,
                    joint_valid,
                });
            }
            "feasible" => feasible = rec.bool01("feasible")?,
            "end" => saw_end = true,
            other => return Err(IoError::parse(line, format!("unknown record: {other:?}"))),
        }
        if tag != "end" {
            rec.finish()?;
        }
    }
    if !saw_end {
        return Err(IoError::parse(0, "missing end marker"));
    }
    if current_frame.is_some() {
        return Err(IoError::parse(0, "unterminated frame block"));
    }
    let ncams = ncams.ok_or_else(|| IoError::parse(0, "missing ncams"))?;
    let dim = dim.ok_or_else(|| IoError::parse(0, "missing dim"))?;
    let intrinsics: Vec<Intrinsics> = intrinsics
        .into_iter()
        .enumerate()
        .map(|(id, i)| i.ok_or_else(|| IoError::schema(0, format!("camera {id} missing"))))
        .collect::<Result<_, _>>()?;
    debug_assert_eq!(intrinsics.len(), ncams);

    let scene = SceneFile {
        dim,
        fps,
        intrinsics,
        frames,
        ground_truth,
        feasible,
    };
    scene.check(&line_of_frame)?;
    Ok(scene)
}

/// Reads and fully validates a scene file from disk.
pub fn read_scene(path: &std::path::Path) -> Result<SceneFile, IoError> {
    parse_scene(&std::fs::read_to_string(path)?)
}
