//! Saccade landing prediction from the velocity profile.
//!
//! Speed is a central difference over three consecutive valid samples,
//! expressed in degrees of visual angle per second. A saccade starts once the
//! speed exceeds `onset_deg_s` on `onset_samples` consecutive estimates. Its
//! peak is the estimate just before the first strict decrease; the peak time
//! is refined by a parabola through the three estimates around it and the
//! peak position interpolated between samples.
//!
//! With a symmetric speed profile half the amplitude is covered at the peak,
//! so the landing point is predicted as `onset + 2 · (peak − onset)`. The
//! onset point is the last sample seen at rest (speed ≤ `rest_deg_s`) before
//! the saccade, falling back to the first sample of the onset window.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{px_to_visual_angle, GazeSample, Point, ScreenGeometry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SaccadeError {
    #[error("speed window needs strictly increasing timestamps, got {0} then {1}")]
    DuplicateTimestamp(i64, i64),
    #[error("speed window contains an invalid sample")]
    InvalidSample,
    #[error("invalid predictor parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    /// Saccade onset threshold.
    pub onset_deg_s: f64,
    /// Consecutive supra-threshold estimates required for onset.
    pub onset_samples: u32,
    /// Below this speed a sample counts as at rest (onset anchor).
    pub rest_deg_s: f64,
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            onset_deg_s: 100.0,
            onset_samples: 2,
            rest_deg_s: 20.0,
        }
    }
}

impl PredictorParams {
    pub fn validate(&self) -> Result<(), SaccadeError> {
        if !(self.onset_deg_s > 0.0) {
            return Err(SaccadeError::InvalidParams("onset_deg_s must be > 0".into()));
        }
        if self.onset_samples == 0 {
            return Err(SaccadeError::InvalidParams("onset_samples must be >= 1".into()));
        }
        if !(self.rest_deg_s >= 0.0 && self.rest_deg_s <= self.onset_deg_s) {
            return Err(SaccadeError::InvalidParams(
                "rest_deg_s must lie in [0, onset_deg_s]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocitySample {
    /// Timestamp of the centre sample.
    pub t_ms: i64,
    pub speed_deg_s: f64,
    /// Unit vector of the displacement; zero when the speed is zero.
    pub direction: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionBasis {
    pub onset: Point,
    pub peak: Point,
    pub peak_speed_deg_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandingPrediction {
    pub predicted: Point,
    pub issued_at_ms: i64,
    pub basis: PredictionBasis,
}

/// Angular speed over a three-sample window: visual angle between the first
/// and last sample divided by their time gap.
pub fn estimate_speed(window: &[GazeSample; 3], geometry: &ScreenGeometry) -> Result<f64, SaccadeError> {
    Ok(velocity(window, geometry)?.speed_deg_s)
}

fn velocity(window: &[GazeSample; 3], geometry: &ScreenGeometry) -> Result<VelocitySample, SaccadeError> {
    if window.iter().any(|s| !s.valid) {
        return Err(SaccadeError::InvalidSample);
    }
    for pair in window.windows(2) {
        if pair[1].t_ms <= pair[0].t_ms {
            return Err(SaccadeError::DuplicateTimestamp(pair[0].t_ms, pair[1].t_ms));
        }
    }
    let (a, c) = (window[0].point(), window[2].point());
    let dist = a.distance(c);
    let dt_s = (window[2].t_ms - window[0].t_ms) as f64 / 1000.0;
    let direction = if dist > 0.0 {
        Point::new((c.x - a.x) / dist, (c.y - a.y) / dist)
    } else {
        Point::default()
    };
    Ok(VelocitySample {
        t_ms: window[1].t_ms,
        speed_deg_s: px_to_visual_angle(dist, geometry) / dt_s,
        direction,
    })
}

#[derive(Debug, Clone, Copy)]
struct Estimate {
    at: Point,
    speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Idle {
        consecutive: u32,
        fallback: Option<Point>,
    },
    InSaccade {
        onset: Point,
    },
    /// Prediction issued; waiting for the speed to drop below onset.
    Settling,
}

/// Streaming landing predictor for one session.
#[derive(Debug, Clone)]
pub struct SaccadePredictor {
    params: PredictorParams,
    geometry: ScreenGeometry,
    raw: VecDeque<GazeSample>,
    estimates: VecDeque<Estimate>,
    rest: Option<Point>,
    phase: Phase,
    last: Option<VelocitySample>,
}

impl SaccadePredictor {
    pub fn new(params: PredictorParams, geometry: ScreenGeometry) -> Result<Self, SaccadeError> {
        params.validate()?;
        Ok(Self {
            params,
            geometry,
            raw: VecDeque::with_capacity(3),
            estimates: VecDeque::with_capacity(3),
            rest: None,
            phase: Phase::Idle {
                consecutive: 0,
                fallback: None,
            },
            last: None,
        })
    }

    pub fn params(&self) -> &PredictorParams {
        &self.params
    }

    /// Most recent velocity estimate.
    pub fn last_velocity(&self) -> Option<VelocitySample> {
        self.last
    }

    pub fn in_saccade(&self) -> bool {
        matches!(self.phase, Phase::InSaccade { .. })
    }

    fn reset(&mut self) {
        self.raw.clear();
        self.estimates.clear();
        self.rest = None;
        self.last = None;
        self.phase = Phase::Idle {
            consecutive: 0,
            fallback: None,
        };
    }

    pub fn push_sample(&mut self, sample: GazeSample) -> Option<LandingPrediction> {
        if !sample.valid {
            self.reset();
            return None;
        }
        if self.raw.back().is_some_and(|prev| prev.t_ms >= sample.t_ms) {
            // zero time gap carries no speed information
            return None;
        }
        if self.raw.len() == 3 {
            self.raw.pop_front();
        }
        self.raw.push_back(sample);
        if self.raw.len() < 3 {
            return None;
        }
        let window = [self.raw[0], self.raw[1], self.raw[2]];
        let v = velocity(&window, &self.geometry).ok()?;
        self.last = Some(v);
        if self.estimates.len() == 3 {
            self.estimates.pop_front();
        }
        self.estimates.push_back(Estimate {
            at: window[1].point(),
            speed: v.speed_deg_s,
        });
        self.advance(window[0].point(), sample.t_ms)
    }

    fn advance(&mut self, window_start: Point, now_ms: i64) -> Option<LandingPrediction> {
        let speed = self.estimates.back().expect("just pushed").speed;
        let at = self.estimates.back().expect("just pushed").at;
        match self.phase {
            Phase::Idle { consecutive, fallback } => {
                if speed <= self.params.rest_deg_s {
                    self.rest = Some(at);
                }
                if speed > self.params.onset_deg_s {
                    let consecutive = consecutive + 1;
                    let fallback = fallback.or(Some(window_start));
                    if consecutive >= self.params.onset_samples {
                        let onset = self.rest.or(fallback).expect("fallback set");
                        self.phase = Phase::InSaccade { onset };
                        // the peak may already be behind us
                        if consecutive >= 2 {
                            return self.try_peak(onset, now_ms);
                        }
                    } else {
                        self.phase = Phase::Idle { consecutive, fallback };
                    }
                } else {
                    self.phase = Phase::Idle {
                        consecutive: 0,
                        fallback: None,
                    };
                }
                None
            }
            Phase::InSaccade { onset } => self.try_peak(onset, now_ms),
            Phase::Settling => {
                if speed <= self.params.onset_deg_s {
                    self.rest = (speed <= self.params.rest_deg_s).then_some(at);
                    self.phase = Phase::Idle {
                        consecutive: 0,
                        fallback: None,
                    };
                }
                None
            }
        }
    }

    fn try_peak(&mut self, onset: Point, now_ms: i64) -> Option<LandingPrediction> {
        let n = self.estimates.len();
        if n < 2 {
            return None;
        }
        let (prev, cur) = (self.estimates[n - 2], self.estimates[n - 1]);
        if !(cur.speed < prev.speed) {
            return None;
        }
        let peak = if n == 3 {
            refine_peak(self.estimates[0], prev, cur)
        } else {
            prev.at
        };
        self.phase = Phase::Settling;
        Some(LandingPrediction {
            predicted: Point::new(onset.x + 2.0 * (peak.x - onset.x), onset.y + 2.0 * (peak.y - onset.y)),
            issued_at_ms: now_ms,
            basis: PredictionBasis {
                onset,
                peak,
                peak_speed_deg_s: prev.speed,
            },
        })
    }
}

/// Position at the vertex of the parabola through three speed estimates,
/// interpolated linearly between the neighbouring sample positions.
fn refine_peak(before: Estimate, peak: Estimate, after: Estimate) -> Point {
    let (a, b, c) = (before.speed, peak.speed, after.speed);
    let den = a - 2.0 * b + c;
    let offset = if den.abs() > f64::EPSILON {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let (from, to, w) = if offset >= 0.0 {
        (peak.at, after.at, offset)
    } else {
        (before.at, peak.at, 1.0 + offset)
    };
    Point::new(from.x + (to.x - from.x) * w, from.y + (to.y - from.y) * w)
}
