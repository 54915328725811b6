use std::sync::mpsc::{channel, Receiver};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::{RecordBody, TraceError, TraceRecord};
use crate::fixation::{DetectorParams, FixEventKind, FixationDetector};
use crate::geometry::StreamConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplaySpeed {
    /// Inter-record delay is `Δt / factor`.
    Factor(f64),
    /// As fast as possible, order preserved.
    Unthrottled,
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub speed: ReplaySpeed,
    /// Runs the detector over GAZE records and injects a FIX record after
    /// the record that closed each fixation, stamped with that record's time.
    pub derive_fixations: Option<(DetectorParams, StreamConfig)>,
}

impl ReplayOptions {
    pub fn at(speed: f64) -> Self {
        Self {
            speed: ReplaySpeed::Factor(speed),
            derive_fixations: None,
        }
    }

    pub fn unthrottled() -> Self {
        Self {
            speed: ReplaySpeed::Unthrottled,
            derive_fixations: None,
        }
    }

    pub fn deriving(mut self, params: DetectorParams, config: StreamConfig) -> Self {
        self.derive_fixations = Some((params, config));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayReport {
    pub emitted: usize,
    pub derived: usize,
    pub elapsed: Duration,
}

/// Emits `records` in order through `sink`, pacing them by their stamps.
pub fn replay<F: FnMut(TraceRecord)>(
    records: &[TraceRecord],
    options: &ReplayOptions,
    mut sink: F,
) -> Result<ReplayReport, TraceError> {
    let factor = match options.speed {
        ReplaySpeed::Factor(f) if f > 0.0 && f.is_finite() => Some(f),
        ReplaySpeed::Factor(f) if f == f64::INFINITY => None,
        ReplaySpeed::Factor(f) => return Err(TraceError::Speed(f)),
        ReplaySpeed::Unthrottled => None,
    };
    let mut detector = match options.derive_fixations {
        Some((params, config)) => Some(FixationDetector::new(params, config)?),
        None => None,
    };
    let start = Instant::now();
    let t0 = records.first().map_or(0, |r| r.t_ms);
    let mut report = ReplayReport {
        emitted: 0,
        derived: 0,
        elapsed: Duration::ZERO,
    };
    let mut last_t = t0;

    for rec in records {
        if let Some(f) = factor {
            let offset_ms = (rec.t_ms - t0).max(0) as f64 / f;
            let due = start + Duration::from_secs_f64(offset_ms / 1000.0);
            let now = Instant::now();
            if due > now {
                thread::sleep(due - now);
            }
        }
        let mut derived = Vec::new();
        if let (Some(det), RecordBody::Gaze { .. }) = (detector.as_mut(), &rec.body) {
            let sample = rec.as_gaze_sample().expect("gaze record");
            for ev in det.push_sample(sample)? {
                if ev.kind == FixEventKind::End {
                    derived.push(TraceRecord::fix(rec.t_ms, ev.fixation));
                }
            }
        }
        last_t = last_t.max(rec.t_ms);
        sink(rec.clone());
        report.emitted += 1;
        for d in derived {
            sink(d);
            report.derived += 1;
        }
    }
    if let Some(det) = detector.as_mut() {
        for ev in det.flush() {
            sink(TraceRecord::fix(last_t, ev.fixation));
            report.derived += 1;
        }
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Replays on a dedicated thread. The channel is unbounded so a slow
/// consumer never stalls the pacing.
pub fn replay_channel(
    records: Vec<TraceRecord>,
    options: ReplayOptions,
) -> (Receiver<TraceRecord>, JoinHandle<Result<ReplayReport, TraceError>>) {
    let (tx, rx) = channel();
    let handle = thread::spawn(move || {
        replay(&records, &options, |r| {
            let _ = tx.send(r);
        })
    });
    (rx, handle)
}
