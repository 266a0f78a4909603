//! Tracks file: per-window snapshots of live tracks, each member stored as
//! a `(frame_id, index_in_frame)` reference into the scene file. Reading
//! resolves references against the scene, so detections are never
//! duplicated on disk.

use super::fmt::records;
use super::{IoError, SceneFile, WindowSpan};
use crate::model::Track;
use std::fmt::Write as _;

const FORMAT_VERSION: usize = 1;

/// Tracks alive in one matching window, in deterministic sample order
/// (tracker order). The embedding stage emits samples in exactly this
/// order, which is the sample-index contract shared with the embeds and
/// matches files.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTracks {
    pub span: WindowSpan,
    pub tracks: Vec<Track>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracksFile {
    pub windows: Vec<WindowTracks>,
}

pub fn write_tracks(file: &TracksFile, scene: &SceneFile) -> Result<String, IoError> {
    let mut out = String::new();
    let _ = writeln!(out, "tracks {FORMAT_VERSION}");
    for window in &file.windows {
        let _ = writeln!(
            out,
            "window {} {} {}",
            window.span.index, window.span.frame_start, window.span.frame_end
        );
        for track in &window.tracks {
            let _ = writeln!(out, "track {} {}", track.camera_id, track.len());
            for det in &track.detections {
                let (frame_idx, det_idx) = locate(scene, det).ok_or_else(|| {
                    IoError::schema(
                        0,
                        format!(
                            "track member (camera {}, frame {}) not present in scene",
                            det.camera_id, det.frame_id
                        ),
                    )
                })?;
                let _ = writeln!(out, "member {} {}", scene.frames[frame_idx].0, det_idx);
            }
        }
        out.push_str("endwindow\n");
    }
    out.push_str("end\n");
    Ok(out)
}

fn locate(scene: &SceneFile, det: &crate::model::Detection) -> Option<(usize, usize)> {
    let frame_idx = scene
        .frames
        .binary_search_by_key(&det.frame_id, |(id, _)| *id)
        .ok()?;
    let det_idx = scene.frames[frame_idx].1.iter().position(|d| d == det)?;
    Some((frame_idx, det_idx))
}

pub fn parse_tracks(text: &str, scene: &SceneFile) -> Result<TracksFile, IoError> {
    let mut recs = records(text);
    let mut header = recs
        .next()
        .ok_or_else(|| IoError::parse(0, "empty tracks file"))?;
    if header.tag() != Some("tracks") {
        return Err(IoError::parse(header.line, "expected header: tracks <version>"));
    }
    let version = header.usize("version")?;
    if version != FORMAT_VERSION {
        return Err(IoError::schema(
            header.line,
            format!("unsupported tracks version {version}"),
        ));
    }
    header.finish()?;

    let mut windows: Vec<WindowTracks> = Vec::new();
    let mut current: Option<WindowTracks> = None;
    let mut saw_end = false;
    for mut rec in recs {
        let line = rec.line;
        if saw_end {
            return Err(IoError::parse(line, "content after end marker"));
        }
        let tag = rec.tag().expect("records are non-empty");
        match tag {
            "window" => {
                if current.is_some() {
                    return Err(IoError::parse(line, "window opened before endwindow"));
                }
                let index = rec.usize("window index")?;
                let frame_start = rec.usize("frame_start")?;
                let frame_end = rec.usize("frame_end")?;
                current = Some(WindowTracks {
                    span: WindowSpan {
                        index,
                        frame_start,
                        frame_end,
                    },
                    tracks: Vec::new(),
                });
            }
            "track" => {
                let w = current
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "track outside window"))?;
                let camera_id = rec.usize("camera_id")?;
                if camera_id >= scene.n_cameras() {
                    return Err(IoError::schema(
                        line,
                        format!("track camera_id {camera_id} absent from scene header"),
                    ));
                }
                let _members = rec.usize("member count")?;
                w.tracks.push(Track {
                    camera_id,
                    detections: Vec::new(),
                    track_feature: None,
                });
            }
            "member" => {
                let w = current
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "member outside window"))?;
                let track = w
                    .tracks
                    .last_mut()
                    .ok_or_else(|| IoError::parse(line, "member before track"))?;
                let frame_id = rec.usize("frame_id")?;
                let det_idx = rec.usize("det index")?;
                let frame_idx = scene
                    .frames
                    .binary_search_by_key(&frame_id, |(id, _)| *id)
                    .map_err(|_| {
                        IoError::schema(line, format!("member frame {frame_id} not in scene"))
                    })?;
                let det = scene.frames[frame_idx].1.get(det_idx).ok_or_else(|| {
                    IoError::schema(
                        line,
                        format!("member index {det_idx} out of range in frame {frame_id}"),
                    )
                })?;
                if det.camera_id != track.camera_id {
                    return Err(IoError::schema(
                        line,
                        format!(
                            "member camera {} does not match track camera {}",
                            det.camera_id, track.camera_id
                        ),
                    ));
                }
                if let Some(last) = track.detections.last() {
                    if det.frame_id <= last.frame_id || det.frame_id > last.frame_id + 2 {
                        return Err(IoError::schema(
                            line,
                            format!(
                                "member frames not increasing with gap <= 1: {} after {}",
                                det.frame_id, last.frame_id
                            ),
                        ));
                    }
                }
                track.detections.push(det.clone());
            }
            "endwindow" => {
                let w = current
                    .take()
                    .ok_or_else(|| IoError::parse(line, "endwindow without window"))?;
                if let Some(bad) = w.tracks.iter().find(|t| t.is_empty()) {
                    return Err(IoError::schema(
                        line,
                        format!("empty track for camera {}", bad.camera_id),
                    ));
                }
                windows.push(w);
            }
            "end" => saw_end = true,
            other => return Err(IoError::parse(line, format!("unknown record: {other:?}"))),
        }
        if tag != "end" {
            rec.finish()?;
        }
    }
    if !saw_end || current.is_some() {
        return Err(IoError::parse(0, "missing end marker or unterminated window"));
    }
    Ok(TracksFile { windows })
}

pub fn read_tracks(path: &std::path::Path, scene: &SceneFile) -> Result<TracksFile, IoError> {
    parse_tracks(&std::fs::read_to_string(path)?, scene)
}
