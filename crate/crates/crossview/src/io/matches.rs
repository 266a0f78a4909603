//! Matches file: per-window cluster assignments, centers, flags, and the
//! pre-clustering objective trace.

use super::fmt::{fmt_f64, records};
use super::{IoError, WindowSpan};
use crate::model::{ClusterResult, FeatureVector};
use std::fmt::Write as _;

const FORMAT_VERSION: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatches {
    pub span: WindowSpan,
    pub result: ClusterResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchesFile {
    pub dim: usize,
    pub windows: Vec<WindowMatches>,
}

pub(crate) fn write_window_matches(out: &mut String, window: &WindowMatches) {
    let r = &window.result;
    let _ = writeln!(
        out,
        "window {} {} {} {}",
        window.span.index, window.span.frame_start, window.span.frame_end, r.k
    );
    for (i, &cluster) in r.assignments.iter().enumerate() {
        let _ = writeln!(
            out,
            "assign {i} {cluster} {} {}",
            u8::from(r.conflict_flags[i]),
            u8::from(r.fallback_flags[i])
        );
    }
    for (k, center) in r.centers.iter().enumerate() {
        let _ = write!(out, "center {k}");
        for v in center.as_slice() {
            let _ = write!(out, " {}", fmt_f64(*v));
        }
        out.push('\n');
    }
    let _ = write!(out, "objective {}", r.objective_trace.len());
    for v in &r.objective_trace {
        let _ = write!(out, " {}", fmt_f64(*v));
    }
    out.push('\n');
    out.push_str("endwindow\n");
}

pub fn write_matches(file: &MatchesFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "matches {FORMAT_VERSION}");
    let _ = writeln!(out, "dim {}", file.dim);
    for window in &file.windows {
        write_window_matches(&mut out, window);
    }
    out.push_str("end\n");
    out
}

pub(crate) struct WindowMatchesParser {
    pub dim: usize,
    current: Option<(WindowSpan, usize, Vec<(usize, usize, bool, bool)>, Vec<(usize, FeatureVector)>, Vec<f64>)>,
}

impl WindowMatchesParser {
    pub fn new(dim: usize) -> WindowMatchesParser {
        WindowMatchesParser { dim, current: None }
    }

    pub fn in_window(&self) -> bool {
        self.current.is_some()
    }

    /// Feeds one record; returns a finished window on `endwindow`.
    pub fn feed(
        &mut self,
        tag: &str,
        rec: &mut super::fmt::Record<'_>,
    ) -> Result<Option<WindowMatches>, IoError> {
        let line = rec.line;
        match tag {
            "window" => {
                if self.current.is_some() {
                    return Err(IoError::parse(line, "window opened before endwindow"));
                }
                let span = WindowSpan {
                    index: rec.usize("window index")?,
                    frame_start: rec.usize("frame_start")?,
                    frame_end: rec.usize("frame_end")?,
                };
                let k = rec.usize("k")?;
                self.current = Some((span, k, Vec::new(), Vec::new(), Vec::new()));
                Ok(None)
            }
            "assign" => {
                let cur = self
                    .current
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "assign outside window"))?;
                let sample = rec.usize("sample")?;
                let cluster = rec.usize("cluster")?;
                let conflict = rec.bool01("conflict")?;
                let fallback = rec.bool01("fallback")?;
                if cluster >= cur.1 {
                    return Err(IoError::schema(
                        line,
                        format!("cluster {cluster} >= k {}", cur.1),
                    ));
                }
                cur.2.push((sample, cluster, conflict, fallback));
                Ok(None)
            }
            "center" => {
                let dim = self.dim;
                let cur = self
                    .current
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "center outside window"))?;
                let k = rec.usize("cluster")?;
                let center = FeatureVector(rec.f64s(dim, "center")?);
                cur.3.push((k, center));
                Ok(None)
            }
            "objective" => {
                let cur = self
                    .current
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "objective outside window"))?;
                let n = rec.usize("trace length")?;
                cur.4 = rec.f64s(n, "objective")?;
                Ok(None)
            }
            "endwindow" => {
                let (span, k, mut assigns, mut centers, trace) = self
                    .current
                    .take()
                    .ok_or_else(|| IoError::parse(line, "endwindow without window"))?;
                assigns.sort_by_key(|a| a.0);
                for (i, a) in assigns.iter().enumerate() {
                    if a.0 != i {
                        return Err(IoError::schema(
                            line,
                            format!("sample indices not dense: missing sample {i}"),
                        ));
                    }
                }
                centers.sort_by_key(|c| c.0);
                if centers.len() != k || centers.iter().enumerate().any(|(i, c)| c.0 != i) {
                    return Err(IoError::schema(
                        line,
                        format!("expected centers 0..{k}, got {}", centers.len()),
                    ));
                }
                let result = ClusterResult {
                    k,
                    assignments: assigns.iter().map(|a| a.1).collect(),
                    centers: centers.into_iter().map(|c| c.1).collect(),
                    conflict_flags: assigns.iter().map(|a| a.2).collect(),
                    fallback_flags: assigns.iter().map(|a| a.3).collect(),
                    objective_trace: trace,
                };
                Ok(Some(WindowMatches { span, result }))
            }
            other => Err(IoError::parse(line, format!("unknown record: {other:?}"))),
        }
    }
}

pub fn parse_matches(text: &str) -> Result<MatchesFile, IoError> {
    let mut recs = records(text);
    let mut header = recs
        .next()
        .ok_or_else(|| IoError::parse(0, "empty matches file"))?;
    if header.tag() != Some("matches") {
        return Err(IoError::parse(header.line, "expected header: matches <version>"));
    }
    let version = header.usize("version")?;
    if version != FORMAT_VERSION {
        return Err(IoError::schema(
            header.line,
            format!("unsupported matches version {version}"),
        ));
    }
    header.finish()?;

    let mut dim: Option<usize> = None;
    let mut parser: Option<WindowMatchesParser> = None;
    let mut windows = Vec::new();
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
            "end" => saw_end = true,
            _ => {
                let p = parser
                    .as_mut()
                    .ok_or_else(|| IoError::parse(line, "record before dim"))?;
                if let Some(w) = p.feed(&tag, &mut rec)? {
                    windows.push(w);
                }
            }
        }
        if tag != "end" {
            rec.finish()?;
        }
    }
    if !saw_end || parser.as_ref().is_some_and(|p| p.in_window()) {
        return Err(IoError::parse(0, "missing end marker or unterminated window"));
    }
    Ok(MatchesFile {
        dim: dim.ok_or_else(|| IoError::parse(0, "missing dim"))?,
        windows,
    })
}

pub fn read_matches(path: &std::path::Path) -> Result<MatchesFile, IoError> {
    parse_matches(&std::fs::read_to_string(path)?)
}
