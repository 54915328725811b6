//! One line of a `.gtr` trace.
//!
//! ```text
//! <t_ms>\t<KIND>\t<field1>\t<field2>…\n
//! ```
//!
//! | kind      | fields                                                          |
//! |-----------|-----------------------------------------------------------------|
//! | `GAZE`    | x, y, pupil, valid                                              |
//! | `POINTER` | x, y                                                            |
//! | `EVENT`   | source (`system`/`user`), name, detail                          |
//! | `FRAME`   | ref                                                             |
//! | `FIX`     | start_ms, end_ms, cx, cy, n, dispersion, duration_ms, pupil     |
//! | `ZONE`    | id, x0, y0, x1, y1, label                                       |
//! | `SEG`     | label, start_ms, end_ms                                         |
//!
//! Floats carry exactly three decimals, booleans are `0`/`1`, an absent
//! optional float is `-`. Text fields escape `\\`, tab, LF and CR as `\\`,
//! `\t`, `\n`, `\r`. Lines of any other kind are kept verbatim.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixation::Fixation;
use crate::geometry::{GazeSample, Rect, ZoneId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecordError {
    #[error("empty line")]
    Empty,
    #[error("malformed timestamp {0:?}")]
    Timestamp(String),
    #[error("{kind} expects {expected} fields, found {found}")]
    Arity {
        kind: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("field {field} of {kind}: cannot parse {value:?}")]
    Field {
        kind: &'static str,
        field: &'static str,
        value: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    System,
    User,
}

impl EventSource {
    fn as_str(self) -> &'static str {
        match self {
            EventSource::System => "system",
            EventSource::User => "user",
        }
    }
}

/// Labelled screen region used for gaze statistics and referent ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestZone {
    pub id: ZoneId,
    pub rect: Rect,
    pub label: String,
}

impl InterestZone {
    pub fn new(id: impl Into<String>, rect: Rect, label: impl Into<String>) -> Self {
        Self {
            id: ZoneId::new(id),
            rect,
            label: label.into(),
        }
    }
}

/// Labelled interval of an annotated trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RecordBody {
    Gaze {
        x: f64,
        y: f64,
        pupil: Option<f64>,
        valid: bool,
    },
    Pointer {
        x: f64,
        y: f64,
    },
    Event {
        source: EventSource,
        name: String,
        detail: String,
    },
    /// Reference to an externally stored screen copy.
    Frame {
        reference: String,
    },
    Fix(Fixation),
    Zone(InterestZone),
    Seg(Segment),
    /// A kind this version does not know, kept as raw fields.
    Other {
        kind: String,
        fields: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_ms: i64,
    pub body: RecordBody,
}

impl TraceRecord {
    pub fn new(t_ms: i64, body: RecordBody) -> Self {
        Self { t_ms, body }
    }

    pub fn gaze(sample: &GazeSample) -> Self {
        Self::new(
            sample.t_ms,
            RecordBody::Gaze {
                x: sample.x_px,
                y: sample.y_px,
                pupil: sample.pupil_mm,
                valid: sample.valid,
            },
        )
    }

    pub fn fix(t_ms: i64, fixation: Fixation) -> Self {
        Self::new(t_ms, RecordBody::Fix(fixation))
    }

    pub fn kind(&self) -> &str {
        match &self.body {
            RecordBody::Gaze { .. } => "GAZE",
            RecordBody::Pointer { .. } => "POINTER",
            RecordBody::Event { .. } => "EVENT",
            RecordBody::Frame { .. } => "FRAME",
            RecordBody::Fix(_) => "FIX",
            RecordBody::Zone(_) => "ZONE",
            RecordBody::Seg(_) => "SEG",
            RecordBody::Other { kind, .. } => kind,
        }
    }

    pub fn as_gaze_sample(&self) -> Option<GazeSample> {
        match self.body {
            RecordBody::Gaze { x, y, pupil, valid } => Some(GazeSample {
                t_ms: self.t_ms,
                x_px: x,
                y_px: y,
                pupil_mm: pupil,
                valid,
            }),
            _ => None,
        }
    }

    /// Serialized line without the trailing LF.
    pub fn to_line(&self) -> String {
        let mut out = String::with_capacity(64);
        let _ = write!(out, "{}\t{}", self.t_ms, self.kind());
        let mut push = |field: &str| {
            out.push('\t');
            out.push_str(field);
        };
        match &self.body {
            RecordBody::Gaze { x, y, pupil, valid } => {
                push(&num(*x));
                push(&num(*y));
                push(&opt(*pupil));
                push(if *valid { "1" } else { "0" });
            }
            RecordBody::Pointer { x, y } => {
                push(&num(*x));
                push(&num(*y));
            }
            RecordBody::Event { source, name, detail } => {
                push(source.as_str());
                push(&escape(name));
                push(&escape(detail));
            }
            RecordBody::Frame { reference } => push(&escape(reference)),
            RecordBody::Fix(f) => {
                push(&f.start_ms.to_string());
                push(&f.end_ms.to_string());
                push(&num(f.centroid_x_px));
                push(&num(f.centroid_y_px));
                push(&f.n_samples.to_string());
                push(&num(f.dispersion_px));
                push(&num(f.duration_ms));
                push(&opt(f.mean_pupil_mm));
            }
            RecordBody::Zone(z) => {
                push(&escape(z.id.as_str()));
                push(&num(z.rect.x0));
                push(&num(z.rect.y0));
                push(&num(z.rect.x1));
                push(&num(z.rect.y1));
                push(&escape(&z.label));
            }
            RecordBody::Seg(s) => {
                push(&escape(&s.label));
                push(&s.start_ms.to_string());
                push(&s.end_ms.to_string());
            }
            RecordBody::Other { fields, .. } => {
                for f in fields {
                    push(f);
                }
            }
        }
        out
    }

    /// Parses one line (a trailing LF / CRLF is tolerated).
    pub fn parse(line: &str) -> Result<Self, RecordError> {
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            return Err(RecordError::Empty);
        }
        let mut parts = line.split('\t');
        let ts = parts.next().unwrap_or_default();
        let t_ms: i64 = ts.parse().map_err(|_| RecordError::Timestamp(ts.to_owned()))?;
        let kind = parts.next().ok_or(RecordError::Arity {
            kind: "record",
            expected: 2,
            found: 1,
        })?;
        let fields: Vec<&str> = parts.collect();
        let body = match kind {
            "GAZE" => {
                let f = Fields::new("GAZE", &fields, 4)?;
                RecordBody::Gaze {
                    x: f.float(0, "x")?,
                    y: f.float(1, "y")?,
                    pupil: f.opt_float(2, "pupil")?,
                    valid: f.flag(3, "valid")?,
                }
            }
            "POINTER" => {
                let f = Fields::new("POINTER", &fields, 2)?;
                RecordBody::Pointer {
                    x: f.float(0, "x")?,
                    y: f.float(1, "y")?,
                }
            }
            "EVENT" => {
                let f = Fields::new("EVENT", &fields, 3)?;
                let source = match fields[0] {
                    "system" => EventSource::System,
                    "user" => EventSource::User,
                    other => return Err(f.bad("source", other)),
                };
                RecordBody::Event {
                    source,
                    name: f.text(1, "name")?,
                    detail: f.text(2, "detail")?,
                }
            }
            "FRAME" => {
                let f = Fields::new("FRAME", &fields, 1)?;
                RecordBody::Frame {
                    reference: f.text(0, "ref")?,
                }
            }
            "FIX" => {
                let f = Fields::new("FIX", &fields, 8)?;
                RecordBody::Fix(Fixation {
                    start_ms: f.int(0, "start_ms")?,
                    end_ms: f.int(1, "end_ms")?,
                    centroid_x_px: f.float(2, "cx")?,
                    centroid_y_px: f.float(3, "cy")?,
                    n_samples: f.int(4, "n")?,
                    dispersion_px: f.float(5, "dispersion")?,
                    duration_ms: f.float(6, "duration_ms")?,
                    mean_pupil_mm: f.opt_float(7, "pupil")?,
                })
            }
            "ZONE" => {
                let f = Fields::new("ZONE", &fields, 6)?;
                RecordBody::Zone(InterestZone {
                    id: ZoneId(f.text(0, "id")?),
                    rect: Rect::new(
                        f.float(1, "x0")?,
                        f.float(2, "y0")?,
                        f.float(3, "x1")?,
                        f.float(4, "y1")?,
                    ),
                    label: f.text(5, "label")?,
                })
            }
            "SEG" => {
                let f = Fields::new("SEG", &fields, 3)?;
                RecordBody::Seg(Segment {
                    label: f.text(0, "label")?,
                    start_ms: f.int(1, "start_ms")?,
                    end_ms: f.int(2, "end_ms")?,
                })
            }
            other => RecordBody::Other {
                kind: other.to_owned(),
                fields: fields.iter().map(|s| (*s).to_owned()).collect(),
            },
        };
        Ok(TraceRecord { t_ms, body })
    }

    /// NDJSON form: `t_ms`, `kind` and one key per TSV column.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let mut v = match &self.body {
            RecordBody::Gaze { x, y, pupil, valid } => json!({"x": x, "y": y, "pupil": pupil, "valid": valid}),
            RecordBody::Pointer { x, y } => json!({"x": x, "y": y}),
            RecordBody::Event { source, name, detail } => {
                json!({"source": source.as_str(), "name": name, "detail": detail})
            }
            RecordBody::Frame { reference } => json!({"ref": reference}),
            RecordBody::Fix(f) => json!({
                "start_ms": f.start_ms, "end_ms": f.end_ms,
                "cx": f.centroid_x_px, "cy": f.centroid_y_px,
                "n": f.n_samples, "dispersion": f.dispersion_px,
                "duration_ms": f.duration_ms, "pupil": f.mean_pupil_mm,
            }),
            RecordBody::Zone(z) => json!({
                "id": z.id, "x0": z.rect.x0, "y0": z.rect.y0,
                "x1": z.rect.x1, "y1": z.rect.y1, "label": z.label,
            }),
            RecordBody::Seg(s) => json!({"label": s.label, "start_ms": s.start_ms, "end_ms": s.end_ms}),
            RecordBody::Other { fields, .. } => json!({"fields": fields}),
        };
        v["t_ms"] = self.t_ms.into();
        v["kind"] = self.kind().into();
        v
    }
}

fn num(v: f64) -> String {
    format!("{v:.3}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), num)
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

struct Fields<'a> {
    kind: &'static str,
    raw: &'a [&'a str],
}

impl<'a> Fields<'a> {
    fn new(kind: &'static str, raw: &'a [&'a str], expected: usize) -> Result<Self, RecordError> {
        if raw.len() != expected {
            return Err(RecordError::Arity {
                kind,
                expected,
                found: raw.len(),
            });
        }
        Ok(Self { kind, raw })
    }

    fn bad(&self, field: &'static str, value: &str) -> RecordError {
        RecordError::Field {
            kind: self.kind,
            field,
            value: value.to_owned(),
        }
    }

    fn float(&self, i: usize, field: &'static str) -> Result<f64, RecordError> {
        self.raw[i].parse().map_err(|_| self.bad(field, self.raw[i]))
    }

    fn opt_float(&self, i: usize, field: &'static str) -> Result<Option<f64>, RecordError> {
        if self.raw[i] == "-" {
            Ok(None)
        } else {
            self.float(i, field).map(Some)
        }
    }

    fn int<T: std::str::FromStr>(&self, i: usize, field: &'static str) -> Result<T, RecordError> {
        self.raw[i].parse().map_err(|_| self.bad(field, self.raw[i]))
    }

    fn flag(&self, i: usize, field: &'static str) -> Result<bool, RecordError> {
        match self.raw[i] {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(self.bad(field, other)),
        }
    }

    fn text(&self, i: usize, field: &'static str) -> Result<String, RecordError> {
        unescape(self.raw[i]).ok_or_else(|| self.bad(field, self.raw[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaze_line_format() {
        let r = TraceRecord::new(
            1234,
            RecordBody::Gaze {
                x: 512.5,
                y: 384.0,
                pupil: Some(3.2),
                valid: true,
            },
        );
        assert_eq!(r.to_line(), "1234\tGAZE\t512.500\t384.000\t3.200\t1");
        assert_eq!(TraceRecord::parse("1234\tGAZE\t512.500\t384.000\t3.200\t1").unwrap(), r);
    }

    #[test]
    fn pointer_line_format() {
        let r = TraceRecord::new(0, RecordBody::Pointer { x: 0.0, y: 0.0 });
        assert_eq!(r.to_line(), "0\tPOINTER\t0.000\t0.000");
    }

    #[test]
    fn bad_timestamp() {
        assert_eq!(
            TraceRecord::parse("x\tGAZE\t1.000\t2.000\t-\t1"),
            Err(RecordError::Timestamp("x".into()))
        );
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(
            TraceRecord::parse("5\tGAZE\t1.000\t2.000"),
            Err(RecordError::Arity {
                kind: "GAZE",
                expected: 4,
                found: 2
            })
        ));
        assert!(matches!(TraceRecord::parse("5"), Err(RecordError::Arity { .. })));
        assert_eq!(TraceRecord::parse(""), Err(RecordError::Empty));
        assert!(matches!(
            TraceRecord::parse("5\tGAZE\t1.000\t2.000\t-\tyes"),
            Err(RecordError::Field { field: "valid", .. })
        ));
    }

    #[test]
    fn text_escaping_round_trips() {
        let r = TraceRecord::new(
            7,
            RecordBody::Event {
                source: EventSource::User,
                name: "say".into(),
                detail: "put\tthat\nthere \\ now".into(),
            },
        );
        let line = r.to_line();
        assert_eq!(line.split('\t').count(), 5);
        assert_eq!(TraceRecord::parse(&line).unwrap(), r);
    }

    #[test]
    fn unknown_kinds_are_preserved_verbatim() {
        let line = "42\tAUDIO\tuser.wav\t0.250\t\\tx";
        let r = TraceRecord::parse(line).unwrap();
        assert_eq!(r.kind(), "AUDIO");
        assert_eq!(r.to_line(), line);
    }

    #[test]
    fn ndjson_uses_column_names() {
        let r = TraceRecord::parse("1234\tGAZE\t512.500\t384.000\t-\t0").unwrap();
        let v = r.to_json();
        assert_eq!(v["t_ms"], 1234);
        assert_eq!(v["kind"], "GAZE");
        assert_eq!(v["x"], 512.5);
        assert!(v["pupil"].is_null());
        assert_eq!(v["valid"], false);
    }
}
