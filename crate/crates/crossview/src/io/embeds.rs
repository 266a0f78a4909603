//! Embeddings file: one aggregated feature per track per window, in the
//! same sample order as the tracks file.

use super::fmt::{fmt_f64, records};
use super::{IoError, WindowSpan};
use crate::model::FeatureVector;
use std::fmt::Write as _;

const FORMAT_VERSION: usize = 1;

/// Clustering inputs for one window: `(camera_id, aggregated feature)` per
/// sample, ordered by sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSamples {
    pub span: WindowSpan,
    pub samples: Vec<(usize, FeatureVector)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedsFile {
    pub dim: usize,
    pub n_cameras: usize,
    pub windows: Vec<WindowSamples>,
}

pub fn write_embeds(file: &EmbedsFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "embeds {FORMAT_VERSION}");
    let _ = writeln!(out, "dim {}", file.dim);
    let _ = writeln!(out, "ncams {}", file.n_cameras);
    for window in &file.windows {
        let _ = writeln!(
            out,
            "window {} {} {}",
            window.span.index, window.span.frame_start, window.span.frame_end
        );
        for (camera_id, feature) in &window.samples {
            let _ = write!(out, "sample {camera_id}");
            for v in feature.as_slice() {
                let _ = write!(out, " {}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out.push_str("endwindow\n");
    }
    out.push_str("end\n");
    out
}

pub fn parse_embeds(text: &str) -> Result<EmbedsFile, IoError> {
    let mut recs = records(text);
    let mut header = recs
        .next()
        .ok_or_else(|| IoError::parse(0, "empty embeds file"))?;
    if header.tag() != Some("embeds") {
        return Err(IoError::parse(header.line, "expected header: embeds <version>"));
    }
    let version = header.usize("version")?;
    if version != FORMAT_VERSION {
        return Err(IoError::schema(
            header.line,
            format!("unsupported embeds version {version}"),
        ));
    }
    header.finish()?;

    let mut dim: Option<usize> = None;
    let mut n_cameras: Option<usize> = None;
    let mut windows: Vec<WindowSamples> = Vec::new();
    let mut current: Option<WindowSamples> = None;
    let mut saw_end = false;
    for mut rec in recs {
        let line = rec.line;
        if saw_end {
            return Err(IoError::parse(line, "content after end marker"));
        }
        let tag = rec.tag().expect("records are non-empty");
        match tag {
            "dim" => dim = Some(rec.usize("dim")?),
            "ncams" => n_cameras = Some(rec.usize("ncams")?),
            "window" => {
                if current.is_some() {
                    return Err(IoError::parse(line, "window opened before endwindow"));
                }
                current = Some(WindowSamples {
                    span: WindowSpan {
                        index: rec.usize("window index")?,
                        frame_start: rec.usize("frame_start")?,
                        frame_end: rec.usize("frame_end")?,
                    },
                    samples: Vec::new(),
                });
            }
            "sample" => {
                let d = dim.ok_or_else(|| IoError::parse(line, "sample before dim"))?;
                let n = n_cameras.ok_or_else(|| IoError::parse(line, "sample before ncams"))?;
                let w = current
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "sample outside window"))?;
                let camera_id = rec.usize("camera_id")?;
                if camera_id >= n {
                    return Err(IoError::schema(
                        line,
                        format!("sample camera_id {camera_id} >= ncams {n}"),
                    ));
                }
                let feature = FeatureVector(rec.f64s(d, "feature")?);
                w.samples.push((camera_id, feature));
            }
            "endwindow" => {
                let w = current
                    .take()
                    .ok_or_else(|| IoError::parse(line, "endwindow without window"))?;
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
    Ok(EmbedsFile {
        dim: dim.ok_or_else(|| IoError::parse(0, "missing dim"))?,
        n_cameras: n_cameras.ok_or_else(|| IoError::parse(0, "missing ncams"))?,
        windows,
    })
}

pub fn read_embeds(path: &std::path::Path) -> Result<EmbedsFile, IoError> {
    parse_embeds(&std::fs::read_to_string(path)?)
}
