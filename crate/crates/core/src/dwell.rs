//! Dwell activation with a warning step before commit.
//!
//! A sustained fixation inside an activatable zone goes through three steps:
//! after `n_arm` samples the machine emits `Armed` at the mean of those
//! samples (the UI shows a warning marker there); if the eye keeps fixating
//! for `n_commit_extra` more samples it emits `Committed` at the mean of the
//! first `n_commit_total` samples; leaving earlier yields `Cancelled`.
//!
//! Counts are defined at 60 Hz (10 / 12 / 22) and rescaled with
//! `round(n · rate / 60)` for other rates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixation::OpenWindow;
use crate::geometry::{rescale_count, GazeSample, Point, ZoneId};
use crate::trace::InterestZone;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DwellError {
    #[error("zone lookup failed: {0}")]
    ZoneLookup(String),
    #[error("invalid dwell parameters: {0}")]
    InvalidParams(String),
}

/// Maps screen points to activatable zones.
pub trait ZoneMap {
    fn zone_at(&self, p: Point) -> Result<Option<ZoneId>, DwellError>;
}

/// Closed-rectangle lookup; a point inside two zones is a configuration error.
impl ZoneMap for [InterestZone] {
    fn zone_at(&self, p: Point) -> Result<Option<ZoneId>, DwellError> {
        let mut hits = self.iter().filter(|z| z.rect.contains(p));
        match (hits.next(), hits.next()) {
            (None, _) => Ok(None),
            (Some(z), None) => Ok(Some(z.id.clone())),
            (Some(a), Some(b)) => Err(DwellError::ZoneLookup(format!(
                "point ({}, {}) lies in both {} and {}",
                p.x, p.y, a.id, b.id
            ))),
        }
    }
}

impl ZoneMap for Vec<InterestZone> {
    fn zone_at(&self, p: Point) -> Result<Option<ZoneId>, DwellError> {
        self.as_slice().zone_at(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DwellParams {
    pub n_arm: u32,
    pub n_commit_extra: u32,
    pub n_commit_total: u32,
    /// Start a fresh arm/commit cycle after each commit while the fixation
    /// lasts (auto-repeat, used for pan buttons).
    #[serde(default)]
    pub repeat: bool,
}

impl Default for DwellParams {
    fn default() -> Self {
        Self {
            n_arm: 10,
            n_commit_extra: 12,
            n_commit_total: 22,
            repeat: false,
        }
    }
}

/// Sample counts effective at one stream rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DwellCounts {
    pub arm: usize,
    pub commit: usize,
    /// Samples averaged for the commit point, `≤ commit`.
    pub average: usize,
}

impl DwellParams {
    pub fn validate(&self) -> Result<(), DwellError> {
        if self.n_arm == 0 || self.n_commit_extra == 0 || self.n_commit_total == 0 {
            return Err(DwellError::InvalidParams("all sample counts must be >= 1".into()));
        }
        if self.n_commit_total > self.n_arm + self.n_commit_extra {
            return Err(DwellError::InvalidParams(format!(
                "n_commit_total {} exceeds n_arm + n_commit_extra = {}",
                self.n_commit_total,
                self.n_arm + self.n_commit_extra
            )));
        }
        Ok(())
    }

    pub fn counts_at(&self, rate_hz: f64) -> DwellCounts {
        let arm = rescale_count(self.n_arm, rate_hz) as usize;
        let commit = arm + rescale_count(self.n_commit_extra, rate_hz) as usize;
        let average = (rescale_count(self.n_commit_total, rate_hz) as usize).min(commit);
        DwellCounts { arm, commit, average }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DwellEventKind {
    Armed,
    Committed,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellEvent {
    pub kind: DwellEventKind,
    pub zone: ZoneId,
    /// Averaged position; absent for `Cancelled`.
    pub point: Option<Point>,
    pub t_ms: i64,
    /// Detector window the dwell belongs to.
    pub window_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
enum State {
    Idle,
    /// Window seen but not eligible (outside zones, drifted, or done).
    Ignoring(u64),
    Watching {
        window: u64,
        zone: ZoneId,
        offset: usize,
    },
    Armed {
        window: u64,
        zone: ZoneId,
        offset: usize,
    },
}

/// One dwell state machine, optionally restricted to a single surface.
#[derive(Debug, Clone)]
pub struct DwellMachine {
    params: DwellParams,
    counts: DwellCounts,
    surface: Option<ZoneId>,
    state: State,
    last_t: i64,
}

fn mean_of(samples: &[GazeSample]) -> Point {
    Point::mean(samples.iter().map(GazeSample::point)).expect("non-empty run")
}

impl DwellMachine {
    /// A machine reacting to every zone the zone map reports.
    pub fn new(params: DwellParams, rate_hz: f64) -> Result<Self, DwellError> {
        params.validate()?;
        Ok(Self {
            counts: params.counts_at(rate_hz),
            params,
            surface: None,
            state: State::Idle,
            last_t: 0,
        })
    }

    /// A machine that only reacts to fixations starting in `surface`.
    pub fn for_surface(params: DwellParams, rate_hz: f64, surface: ZoneId) -> Result<Self, DwellError> {
        let mut m = Self::new(params, rate_hz)?;
        m.surface = Some(surface);
        Ok(m)
    }

    pub fn params(&self) -> &DwellParams {
        &self.params
    }

    pub fn counts(&self) -> DwellCounts {
        self.counts
    }

    pub fn surface(&self) -> Option<&ZoneId> {
        self.surface.as_ref()
    }

    pub fn is_armed(&self) -> bool {
        matches!(self.state, State::Armed { .. })
    }

    fn cancel(&mut self, zone: ZoneId, window: u64, t_ms: i64) -> DwellEvent {
        self.state = State::Ignoring(window);
        DwellEvent {
            kind: DwellEventKind::Cancelled,
            zone,
            point: None,
            t_ms,
            window_id: window,
        }
    }

    /// Advances the machine after `sample` has been pushed into the detector
    /// whose current window is `window`.
    pub fn on_sample_in_fixation<Z: ZoneMap + ?Sized>(
        &mut self,
        sample: &GazeSample,
        window: Option<&OpenWindow>,
        zones: &Z,
    ) -> Result<Vec<DwellEvent>, DwellError> {
        let t = sample.t_ms;
        self.last_t = t;
        let mut out = Vec::new();

        let tracked = match &self.state {
            State::Idle => None,
            State::Ignoring(w) => Some(*w),
            State::Watching { window, .. } | State::Armed { window, .. } => Some(*window),
        };
        let current = window.map(OpenWindow::id);
        if tracked != current {
            if let State::Armed { window, zone, .. } = self.state.clone() {
                out.push(self.cancel(zone, window, t));
            }
            self.state = match window {
                None => State::Idle,
                Some(w) => {
                    // normally a fresh window (offset 0); after a reset the
                    // cycle starts at the current sample
                    let offset = w.len() - 1;
                    match zones.zone_at(w.samples()[offset].point())? {
                        Some(zone) if self.surface.as_ref().is_none_or(|s| *s == zone) => State::Watching {
                            window: w.id(),
                            zone,
                            offset,
                        },
                        _ => State::Ignoring(w.id()),
                    }
                }
            };
        }
        let Some(w) = window else {
            return Ok(out);
        };

        match self.state.clone() {
            State::Watching { window, zone, offset } => {
                let run = &w.samples()[offset..];
                if run.len() >= self.counts.arm && w.is_confirmed() {
                    let p = mean_of(&run[..self.counts.arm]);
                    if zones.zone_at(p)?.as_ref() == Some(&zone) {
                        out.push(DwellEvent {
                            kind: DwellEventKind::Armed,
                            zone: zone.clone(),
                            point: Some(p),
                            t_ms: t,
                            window_id: window,
                        });
                        self.state = State::Armed { window, zone, offset };
                    } else {
                        self.state = State::Ignoring(window);
                    }
                }
            }
            State::Armed { window, zone, offset } => {
                let run = &w.samples()[offset..];
                if zones.zone_at(mean_of(run))?.as_ref() != Some(&zone) {
                    out.push(self.cancel(zone, window, t));
                } else if run.len() >= self.counts.commit {
                    let p = mean_of(&run[..self.counts.average]);
                    if zones.zone_at(p)?.as_ref() == Some(&zone) {
                        out.push(DwellEvent {
                            kind: DwellEventKind::Committed,
                            zone: zone.clone(),
                            point: Some(p),
                            t_ms: t,
                            window_id: window,
                        });
                        self.state = if self.params.repeat {
                            State::Watching {
                                window,
                                zone,
                                offset: offset + self.counts.commit,
                            }
                        } else {
                            State::Ignoring(window)
                        };
                    } else {
                        out.push(self.cancel(zone, window, t));
                    }
                }
            }
            State::Idle | State::Ignoring(_) => {}
        }
        Ok(out)
    }

    /// Returns to idle; a pending `Armed` becomes `Cancelled`.
    pub fn reset(&mut self) -> Vec<DwellEvent> {
        match std::mem::replace(&mut self.state, State::Idle) {
            State::Armed { window, zone, .. } => vec![DwellEvent {
                kind: DwellEventKind::Cancelled,
                zone,
                point: None,
                t_ms: self.last_t,
                window_id: window,
            }],
            _ => Vec::new(),
        }
    }
}
