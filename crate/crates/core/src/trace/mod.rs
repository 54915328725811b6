//! Recorded multimodal traces (`.gtr`): parsing, writing, timed replay and
//! per-zone gaze statistics.

mod record;
mod replay;
mod stats;

use std::io::{BufRead, Write};

use thiserror::Error;

pub use record::{EventSource, InterestZone, RecordBody, RecordError, Segment, TraceRecord};
pub use replay::{replay, replay_channel, ReplayOptions, ReplayReport, ReplaySpeed};
pub use stats::{zone_stats, zone_stats_of_trace, ZoneStats};

use crate::fixation::{DetectorError, Fixation};
use crate::geometry::GazeSample;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("speed factor must be > 0, got {0}")]
    Speed(f64),
    #[error("zone list is empty")]
    NoZones,
    #[error("trace has neither FIX records nor detector parameters to derive them")]
    NoFixations,
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Record `index` is stamped earlier than its predecessor.
    Order {
        index: usize,
        prev_ms: i64,
        t_ms: i64,
    },
    DuplicateZone {
        index: usize,
        id: String,
    },
    DegenerateZone {
        index: usize,
        id: String,
    },
    SegmentEnd {
        index: usize,
        label: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new(records: Vec<TraceRecord>) -> Self {
        Self { records }
    }

    /// Reads a trace, skipping blank lines and `#` comments.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, TraceError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let rec = TraceRecord::parse(&line).map_err(|source| TraceError::Parse { line: i + 1, source })?;
            records.push(rec);
        }
        Ok(Self { records })
    }

    pub fn parse_str(text: &str) -> Result<Self, TraceError> {
        Self::read(text.as_bytes())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(w, "{}", r.to_line())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        out
    }

    pub fn write_ndjson<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(w, "{}", r.to_json())?;
        }
        Ok(())
    }

    /// Empty when the trace is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen: Vec<&str> = Vec::new();
        for (index, pair) in self.records.windows(2).enumerate() {
            if pair[1].t_ms < pair[0].t_ms {
                out.push(Violation::Order {
                    index: index + 1,
                    prev_ms: pair[0].t_ms,
                    t_ms: pair[1].t_ms,
                });
            }
        }
        for (index, r) in self.records.iter().enumerate() {
            match &r.body {
                RecordBody::Zone(z) => {
                    let id = z.id.as_str();
                    if seen.contains(&id) {
                        out.push(Violation::DuplicateZone { index, id: id.into() });
                    }
                    seen.push(id);
                    if !z.rect.is_proper() {
                        out.push(Violation::DegenerateZone { index, id: id.into() });
                    }
                }
                RecordBody::Seg(s) if s.end_ms < s.start_ms => out.push(Violation::SegmentEnd {
                    index,
                    label: s.label.clone(),
                }),
                _ => {}
            }
        }
        out
    }

    /// Stable sort by timestamp.
    pub fn sort(&mut self) {
        self.records.sort_by_key(|r| r.t_ms);
    }

    pub fn gaze_samples(&self) -> Vec<GazeSample> {
        self.records.iter().filter_map(TraceRecord::as_gaze_sample).collect()
    }

    pub fn fixations(&self) -> Vec<Fixation> {
        self.records
            .iter()
            .filter_map(|r| match &r.body {
                RecordBody::Fix(f) => Some(f.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn zones(&self) -> Vec<InterestZone> {
        self.records
            .iter()
            .filter_map(|r| match &r.body {
                RecordBody::Zone(z) => Some(z.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.records
            .iter()
            .filter_map(|r| match &r.body {
                RecordBody::Seg(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }
}

/// Spacing between FRAME records; recorders keep it within 125–250 ms
/// (4 to 8 screen copies per second).
pub const FRAME_SPACING_MS: std::ops::RangeInclusive<i64> = 125..=250;

/// Decides when a recorder should take the next screen copy.
#[derive(Debug, Clone)]
pub struct FrameSchedule {
    interval_ms: i64,
    next_ms: Option<i64>,
}

impl FrameSchedule {
    /// `per_second` is clamped to 4..=8.
    pub fn new(per_second: u32) -> Self {
        let fps = per_second.clamp(4, 8) as i64;
        Self {
            interval_ms: 1000 / fps,
            next_ms: None,
        }
    }

    /// True when a frame is due at `t_ms`; advances the schedule.
    pub fn due(&mut self, t_ms: i64) -> bool {
        match self.next_ms {
            Some(next) if t_ms < next => false,
            _ => {
                self.next_ms = Some(t_ms + self.interval_ms);
                true
            }
        }
    }
}

/// Indices of FRAME records whose spacing to the previous frame falls
/// outside [`FRAME_SPACING_MS`].
pub fn frame_cadence_violations(trace: &Trace) -> Vec<usize> {
    let mut prev: Option<i64> = None;
    let mut out = Vec::new();
    for (i, r) in trace.records.iter().enumerate() {
        if let RecordBody::Frame { .. } = r.body {
            if let Some(p) = prev {
                if !FRAME_SPACING_MS.contains(&(r.t_ms - p)) {
                    out.push(i);
                }
            }
            prev = Some(r.t_ms);
        }
    }
    out
}
