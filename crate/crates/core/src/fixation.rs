//! Dispersion-threshold (I-DT) fixation detection.
//!
//! The streaming [`FixationDetector`] and the one-shot [`detect_batch`] share
//! the same definition and must agree exactly:
//!
//! * dispersion of a window is `(max_x − min_x) + (max_y − min_y)`;
//! * a window grows greedily from its first sample while the dispersion stays
//!   within the threshold;
//! * the sample that would break the bound closes the window and seeds the
//!   next one;
//! * a window whose duration reaches `min_duration_ms` is a fixation, where
//!   duration is `n_samples / rate · 1000` (each sample owns one period);
//! * an invalid sample closes the window and seeds nothing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{samples_to_ms, visual_angle_to_px, GazeSample, GeometryError, Point, StreamConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("timestamps must be non-decreasing: {got} ms after {prev} ms")]
    StreamOrder { prev: i64, got: i64 },
    #[error("invalid detector parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Maximum dispersion in degrees of visual angle.
    pub dispersion_max_deg: f64,
    /// Duration a window must reach to be confirmed as a fixation.
    pub min_duration_ms: f64,
    /// Window size at which a provisional fixation start is reported.
    pub provisional_n: u32,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            dispersion_max_deg: 1.0,
            min_duration_ms: 100.0,
            provisional_n: 4,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), DetectorError> {
        if !(self.dispersion_max_deg > 0.0) {
            return Err(DetectorError::InvalidParams(format!(
                "dispersion_max_deg must be > 0, got {}",
                self.dispersion_max_deg
            )));
        }
        if !(self.min_duration_ms > 0.0) {
            return Err(DetectorError::InvalidParams(format!(
                "min_duration_ms must be > 0, got {}",
                self.min_duration_ms
            )));
        }
        if self.provisional_n < 2 {
            return Err(DetectorError::InvalidParams(format!(
                "provisional_n must be >= 2, got {}",
                self.provisional_n
            )));
        }
        Ok(())
    }

    /// Dispersion threshold converted to pixels.
    pub fn threshold_px(&self, config: &StreamConfig) -> Result<f64, DetectorError> {
        Ok(visual_angle_to_px(self.dispersion_max_deg, &config.geometry)?)
    }
}

/// `n` samples at `rate_hz` reach `min_duration_ms`. Written as a product so
/// that e.g. 6 samples at 60 Hz compare exactly against 100 ms.
fn reaches_duration(n: usize, rate_hz: f64, min_duration_ms: f64) -> bool {
    n as f64 * 1000.0 >= min_duration_ms * rate_hz
}

/// A cluster of samples (confirmed or still growing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub start_ms: i64,
    /// Timestamp of the last member sample.
    pub end_ms: i64,
    pub centroid_x_px: f64,
    pub centroid_y_px: f64,
    pub n_samples: u32,
    pub dispersion_px: f64,
    /// `n_samples / rate · 1000`.
    pub duration_ms: f64,
    pub mean_pupil_mm: Option<f64>,
}

impl Fixation {
    pub fn centroid(&self) -> Point {
        Point::new(self.centroid_x_px, self.centroid_y_px)
    }

    /// Builds the summary of a run of valid samples from scratch.
    pub fn from_samples(samples: &[GazeSample], rate_hz: f64) -> Option<Fixation> {
        let first = samples.first()?;
        let last = samples.last()?;
        let (mut sx, mut sy) = (0.0, 0.0);
        let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut pupil_sum, mut pupil_n) = (0.0, 0u32);
        for s in samples {
            sx += s.x_px;
            sy += s.y_px;
            min_x = min_x.min(s.x_px);
            max_x = max_x.max(s.x_px);
            min_y = min_y.min(s.y_px);
            max_y = max_y.max(s.y_px);
            if let Some(p) = s.pupil_mm {
                pupil_sum += p;
                pupil_n += 1;
            }
        }
        let n = samples.len() as u32;
        Some(Fixation {
            start_ms: first.t_ms,
            end_ms: last.t_ms,
            centroid_x_px: sx / f64::from(n),
            centroid_y_px: sy / f64::from(n),
            n_samples: n,
            dispersion_px: (max_x - min_x) + (max_y - min_y),
            duration_ms: samples_to_ms(n, rate_hz),
            mean_pupil_mm: (pupil_n > 0).then(|| pupil_sum / f64::from(pupil_n)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixEventKind {
    Provisional,
    Start,
    Update,
    End,
}

/// Incremental detector output. `window_id` identifies the window the
/// snapshot belongs to; it increases by one for every new window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixEvent {
    pub kind: FixEventKind,
    pub window_id: u64,
    pub fixation: Fixation,
}

/// The window currently being grown by the detector.
#[derive(Debug, Clone)]
pub struct OpenWindow {
    id: u64,
    samples: Vec<GazeSample>,
    sum_x: f64,
    sum_y: f64,
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
    pupil_sum: f64,
    pupil_n: u32,
    provisional: bool,
    confirmed: bool,
}

impl OpenWindow {
    fn seed(id: u64, s: GazeSample) -> Self {
        let mut w = OpenWindow {
            id,
            samples: Vec::with_capacity(32),
            sum_x: 0.0,
            sum_y: 0.0,
            min_x: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            min_y: f64::INFINITY,
            max_y: f64::NEG_INFINITY,
            pupil_sum: 0.0,
            pupil_n: 0,
            provisional: false,
            confirmed: false,
        };
        w.absorb(s);
        w
    }

    fn dispersion_with(&self, s: &GazeSample) -> f64 {
        (self.max_x.max(s.x_px) - self.min_x.min(s.x_px)) + (self.max_y.max(s.y_px) - self.min_y.min(s.y_px))
    }

    fn absorb(&mut self, s: GazeSample) {
        self.sum_x += s.x_px;
        self.sum_y += s.y_px;
        self.min_x = self.min_x.min(s.x_px);
        self.max_x = self.max_x.max(s.x_px);
        self.min_y = self.min_y.min(s.y_px);
        self.max_y = self.max_y.max(s.y_px);
        if let Some(p) = s.pupil_mm {
            self.pupil_sum += p;
            self.pupil_n += 1;
        }
        self.samples.push(s);
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    /// Member samples in arrival order.
    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Whether the window has reached the minimum fixation duration.
    pub fn is_confirmed(&self) -> bool {
        self.confirmed
    }

    pub fn snapshot(&self, rate_hz: f64) -> Fixation {
        let n = self.samples.len() as u32;
        Fixation {
            start_ms: self.samples[0].t_ms,
            end_ms: self.samples[self.samples.len() - 1].t_ms,
            centroid_x_px: self.sum_x / f64::from(n),
            centroid_y_px: self.sum_y / f64::from(n),
            n_samples: n,
            dispersion_px: (self.max_x - self.min_x) + (self.max_y - self.min_y),
            duration_ms: samples_to_ms(n, rate_hz),
            mean_pupil_mm: (self.pupil_n > 0).then(|| self.pupil_sum / f64::from(self.pupil_n)),
        }
    }
}

/// Streaming I-DT detector for one gaze session.
#[derive(Debug, Clone)]
pub struct FixationDetector {
    params: DetectorParams,
    config: StreamConfig,
    threshold_px: f64,
    window: Option<OpenWindow>,
    next_id: u64,
    last_t: Option<i64>,
}

impl FixationDetector {
    pub fn new(params: DetectorParams, config: StreamConfig) -> Result<Self, DetectorError> {
        params.validate()?;
        config.validate()?;
        Ok(Self {
            threshold_px: params.threshold_px(&config)?,
            params,
            config,
            window: None,
            next_id: 0,
            last_t: None,
        })
    }

    pub fn params(&self) -> &DetectorParams {
        &self.params
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn threshold_px(&self) -> f64 {
        self.threshold_px
    }

    pub fn open_window(&self) -> Option<&OpenWindow> {
        self.window.as_ref()
    }

    fn seed(&mut self, s: GazeSample) {
        self.window = Some(OpenWindow::seed(self.next_id, s));
        self.next_id += 1;
    }

    fn close(&mut self, out: &mut Vec<FixEvent>) {
        if let Some(w) = self.window.take() {
            if w.confirmed {
                out.push(FixEvent {
                    kind: FixEventKind::End,
                    window_id: w.id,
                    fixation: w.snapshot(self.config.rate_hz),
                });
            }
        }
    }

    pub fn push_sample(&mut self, sample: GazeSample) -> Result<Vec<FixEvent>, DetectorError> {
        if let Some(prev) = self.last_t {
            if sample.t_ms < prev {
                return Err(DetectorError::StreamOrder { prev, got: sample.t_ms });
            }
        }
        self.last_t = Some(sample.t_ms);

        let mut out = Vec::new();
        if !sample.valid {
            self.close(&mut out);
            return Ok(out);
        }

        let fits = self
            .window
            .as_ref()
            .map(|w| w.dispersion_with(&sample) <= self.threshold_px);
        let was_confirmed = match fits {
            Some(true) => {
                let w = self.window.as_mut().expect("window present");
                let confirmed = w.confirmed;
                w.absorb(sample);
                confirmed
            }
            Some(false) => {
                self.close(&mut out);
                self.seed(sample);
                false
            }
            None => {
                self.seed(sample);
                false
            }
        };

        let rate = self.config.rate_hz;
        let params = self.params;
        let w = self.window.as_mut().expect("window present");
        let reached = reaches_duration(w.len(), rate, params.min_duration_ms);
        // a window confirmed before provisional_n samples is still
        // announced as provisional first
        if !w.provisional && (w.len() >= params.provisional_n as usize || reached) {
            w.provisional = true;
            out.push(FixEvent {
                kind: FixEventKind::Provisional,
                window_id: w.id,
                fixation: w.snapshot(rate),
            });
        }
        if was_confirmed {
            out.push(FixEvent {
                kind: FixEventKind::Update,
                window_id: w.id,
                fixation: w.snapshot(rate),
            });
        } else if reached {
            w.confirmed = true;
            out.push(FixEvent {
                kind: FixEventKind::Start,
                window_id: w.id,
                fixation: w.snapshot(rate),
            });
        }
        Ok(out)
    }

    /// Closes the open window: `End` if it was confirmed, silent otherwise.
    pub fn flush(&mut self) -> Vec<FixEvent> {
        let mut out = Vec::new();
        self.close(&mut out);
        out
    }
}

/// Runs the detector over a whole stream and keeps every `End` snapshot.
pub fn detect_streaming(
    samples: &[GazeSample],
    params: DetectorParams,
    config: StreamConfig,
) -> Result<Vec<Fixation>, DetectorError> {
    let mut det = FixationDetector::new(params, config)?;
    let mut fixations = Vec::new();
    let keep_ends = |evs: Vec<FixEvent>, acc: &mut Vec<Fixation>| {
        acc.extend(
            evs.into_iter()
                .filter(|e| e.kind == FixEventKind::End)
                .map(|e| e.fixation),
        );
    };
    for s in samples {
        keep_ends(det.push_sample(*s)?, &mut fixations);
    }
    keep_ends(det.flush(), &mut fixations);
    Ok(fixations)
}

/// One-shot I-DT over a complete, time-ordered stream.
pub fn detect_batch(
    samples: &[GazeSample],
    params: DetectorParams,
    config: StreamConfig,
) -> Result<Vec<Fixation>, DetectorError> {
    params.validate()?;
    config.validate()?;
    if let Some(pair) = samples.windows(2).find(|p| p[1].t_ms < p[0].t_ms) {
        return Err(DetectorError::StreamOrder {
            prev: pair[0].t_ms,
            got: pair[1].t_ms,
        });
    }
    let threshold = params.threshold_px(&config)?;
    let rate = config.rate_hz;
    let mut fixations = Vec::new();
    let mut emit = |run: &[GazeSample]| {
        if !run.is_empty() && reaches_duration(run.len(), rate, params.min_duration_ms) {
            fixations.extend(Fixation::from_samples(run, rate));
        }
    };

    let mut i = 0;
    while i < samples.len() {
        if !samples[i].valid {
            i += 1;
            continue;
        }
        let (mut min_x, mut max_x) = (samples[i].x_px, samples[i].x_px);
        let (mut min_y, mut max_y) = (samples[i].y_px, samples[i].y_px);
        let mut j = i + 1;
        while j < samples.len() && samples[j].valid {
            let s = &samples[j];
            let (nx0, nx1) = (min_x.min(s.x_px), max_x.max(s.x_px));
            let (ny0, ny1) = (min_y.min(s.y_px), max_y.max(s.y_px));
            if (nx1 - nx0) + (ny1 - ny0) > threshold {
                break;
            }
            (min_x, max_x, min_y, max_y) = (nx0, nx1, ny0, ny1);
            j += 1;
        }
        emit(&samples[i..j]);
        i = j;
    }
    Ok(fixations)
}
