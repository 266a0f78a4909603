//! Results file: cluster matches, cluster centers, camera poses, 3D
//! skeletons, and diagnostics. Output is byte-stable for identical inputs:
//! sections in fixed order, keys sorted, floats at 9 significant digits.

use super::fmt::{fmt_f64, records};
use super::matches::{write_window_matches, WindowMatchesParser};
use super::{IoError, WindowMatches};
use crate::model::{CameraPose, Skeleton3D, JOINT_COUNT};
use nalgebra::{Matrix3, Point3, Vector3};
use std::fmt::Write as _;

const FORMAT_VERSION: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSkeleton {
    pub frame_id: usize,
    pub skeleton: Skeleton3D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub dim: usize,
    pub windows: Vec<WindowMatches>,
    pub cameras: Vec<CameraPose>,
    pub skeletons: Vec<FrameSkeleton>,
    /// Bundle-adjustment reprojection RMSE (initial, final), when BA ran.
    pub rmse: Option<(f64, f64)>,
}

pub fn write_results(file: &ResultsFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "results {FORMAT_VERSION}");
    let _ = writeln!(out, "dim {}", file.dim);

    let mut windows: Vec<&WindowMatches> = file.windows.iter().collect();
    windows.sort_by_key(|w| w.span.index);
    let _ = writeln!(out, "matches {}", windows.len());
    for window in windows {
        write_window_matches(&mut out, window);
    }

    let _ = writeln!(out, "cameras {}", file.cameras.len());
    for (id, pose) in file.cameras.iter().enumerate() {
        let _ = write!(out, "camera {id}");
        for i in 0..3 {
            for j in 0..3 {
                let _ = write!(out, " {}", fmt_f64(pose.rotation[(i, j)]));
            }
        }
        for i in 0..3 {
            let _ = write!(out, " {}", fmt_f64(pose.translation[i]));
        }
        out.push('\n');
    }

    let mut skeletons: Vec<&FrameSkeleton> = file.skeletons.iter().collect();
    skeletons.sort_by_key(|s| (s.frame_id, s.skeleton.person_id));
    let _ = writeln!(out, "skeletons {}", skeletons.len());
    for fs in skeletons {
        let _ = write!(out, "skeleton {} {}", fs.frame_id, fs.skeleton.person_id);
        for p in &fs.skeleton.joints3d {
            let _ = write!(out, " {} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(p.z));
        }
        for v in fs.skeleton.joint_valid {
            let _ = write!(out, " {}", u8::from(v));
        }
        out.push('\n');
    }

    out.push_str("diagnostics\n");
    let conflicts: usize = file.windows.iter().map(|w| w.result.conflict_count()).sum();
    let fallbacks: usize = file.windows.iter().map(|w| w.result.fallback_count()).sum();
    let _ = writeln!(out, "conflicts {conflicts}");
    let _ = writeln!(out, "fallbacks {fallbacks}");
    if let Some((initial, fin)) = file.rmse {
        let _ = writeln!(out, "rmse {} {}", fmt_f64(initial), fmt_f64(fin));
    }
    out.push_str("end\n");
    out
}

pub fn write_results_file(path: &std::path::Path, file: &ResultsFile) -> Result<(), IoError> {
    std::fs::write(path, write_results(file))?;
    Ok(())
}

pub fn parse_results(text: &str) -> Result<ResultsFile, IoError> {
    let mut recs = records(text);
    let mut header = recs
        .next()
        .ok_or_else(|| IoError::parse(0, "empty results file"))?;
    if header.tag() != Some("results") {
        return Err(IoError::parse(header.line, "expected header: results <version>"));
    }
    let version = header.usize("version")?;
    if version != FORMAT_VERSION {
        return Err(IoError::schema(
            header.line,
            format!("unsupported results version {version}"),
        ));
    }
    header.finish()?;

    let mut dim: Option<usize> = None;
    let mut parser: Option<WindowMatchesParser> = None;
    let mut windows = Vec::new();
    let mut cameras: Vec<(usize, CameraPose)> = Vec::new();
    let mut skeletons = Vec::new();
    let mut rmse = None;
    let mut saw_end = false;

    for mut rec in recs {
        let line = rec.line;
        if saw_end {
            return Err(IoError::parse(line, "content after end marker"));
        }
        let tag = rec.tag().expect("records are non-empty").to_string();
        match tag.as_str() {
            "dim" => {
                let d = rec.usize("dim")?;
                dim = Some(d);
                parser = Some(WindowMatchesParser::new(d));
            }
            "matches" | "cameras" | "skeletons" | "diagnostics" => {
                // Section sizes are informative; records are self-describing.
                if tag == "matches" || tag == "cameras" || tag == "skeletons" {
                    let _ = rec.usize("count")?;
                }
            }
            "window" | "assign" | "center" | "objective" | "endwindow" => {
                let p = parser
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "matches before dim"))?;
                if let Some(w) = p.feed(&tag, &mut rec)? {
                    windows.push(w);
                }
            }
            "camera" => {
                let id = rec.usize("camera id")?;
                let v = rec.f64s(12, "pose")?;
                let pose = CameraPose {
                    rotation: Matrix3::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]),
                    translation: Vector3::new(v[9], v[10], v[11]),
                };
                cameras.push((id, pose));
            }
            "skeleton" => {
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
                skeletons.push(FrameSkeleton {
                    frame_id,
                    skeleton: Skeleton3D {
                        person_id,
                        joints3d,
                        joint_valid,
                    },
                });
            }
            "conflicts" | "fallbacks" => {
                let _ = rec.usize("count")?;
            }
            "rmse" => {
                rmse = Some((rec.f64("initial rmse")?, rec.f64("final rmse")?));
            }
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
    cameras.sort_by_key(|(id, _)| *id);
    for (i, (id, _)) in cameras.iter().enumerate() {
        if *id != i {
            return Err(IoError::schema(0, format!("camera ids not dense: missing {i}")));
        }
    }
    Ok(ResultsFile {
        dim: dim.ok_or_else(|| IoError::parse(0, "missing dim"))?,
        windows,
        cameras: cameras.into_iter().map(|(_, p)| p).collect(),
        skeletons,
        rmse,
    })
}

pub fn read_results(path: &std::path::Path) -> Result<ResultsFile, IoError> {
    parse_results(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::WindowSpan;
    use crate::model::{ClusterResult, FeatureVector};

    fn sample_results() -> ResultsFile {
        let result = ClusterResult {
            k: 2,
            assignments: vec![0, 1, 0, 1],
            centers: vec![
                FeatureVector(vec![1.0, 0.0]),
                FeatureVector(vec![0.0, 1.0]),
            ],
            conflict_flags: vec![false, false, true, false],
            fallback_flags: vec![false; 4],
            objective_trace: vec![0.5, 0.25],
        };
        let mut skel = Skeleton3D::empty(0);
        skel.joint_valid[0] = true;
        skel.joints3d[0] = Point3::new(0.1, 0.2, 0.3);
        ResultsFile {
            dim: 2,
            windows: vec![WindowMatches {
                span: WindowSpan {
                    index: 0,
                    frame_start: 0,
                    frame_end: 9,
                },
                result,
            }],
            cameras: vec![CameraPose::identity()],
            skeletons: vec![FrameSkeleton {
                frame_id: 0,
                skeleton: skel,
            }],
            rmse: Some((1.5, 0.25)),
        }
    }

    #[test]
    fn empty_results_round_trip() {
        let file = ResultsFile {
            dim: 4,
            windows: vec![],
            cameras: vec![],
            skeletons: vec![],
            rmse: None,
        };
        let text = write_results(&file);
        let back = parse_results(&text).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn two_camera_results_round_trip() {
        let file = sample_results();
        let text = write_results(&file);
        let back = parse_results(&text).unwrap();
        assert_eq!(back.windows, file.windows);
        assert_eq!(back.cameras, file.cameras);
        assert_eq!(back.skeletons, file.skeletons);
        assert_eq!(back.rmse, file.rmse);
    }

    #[test]
    fn identical_inputs_write_identical_bytes() {
        let a = write_results(&sample_results());
        let b = write_results(&sample_results());
        assert_eq!(a, b);
    }
}
