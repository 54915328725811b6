//! Gaze-contingent high-resolution region.
//!
//! Each fixation anchors a circle at the mean of its first `n_anchor` samples.
//! The diameter subtends `theta_deg` of visual angle. The centre never moves
//! for the rest of that fixation, and after the fixation ends the region is
//! held until the next one anchors. The engine only describes the region;
//! rendering the blur belongs to the consumer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fixation::FixEvent;
use crate::geometry::{visual_angle_to_px, GeometryError, Point, ScreenGeometry};
use crate::saccade::LandingPrediction;

/// Foveal field.
pub const FOVEAL_DEG: f64 = 5.0;
/// Preset that also covers the parafoveal field.
pub const PARAFOVEAL_DEG: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LensError {
    #[error("no active lens region")]
    NoRegion,
    #[error("invalid lens parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Falloff {
    Step,
    /// Resolution ramps down over `ramp_deg` beyond the circle.
    Smooth {
        ramp_deg: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensParams {
    pub n_anchor: u32,
    pub theta_deg: f64,
    pub falloff: Falloff,
}

impl Default for LensParams {
    fn default() -> Self {
        Self {
            n_anchor: 4,
            theta_deg: FOVEAL_DEG,
            falloff: Falloff::Step,
        }
    }
}

impl LensParams {
    pub fn parafoveal() -> Self {
        Self {
            theta_deg: PARAFOVEAL_DEG,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), LensError> {
        if self.n_anchor == 0 {
            return Err(LensError::InvalidParams("n_anchor must be >= 1".into()));
        }
        if !(self.theta_deg > 0.0) {
            return Err(LensError::InvalidParams(format!(
                "theta_deg must be > 0, got {}",
                self.theta_deg
            )));
        }
        if let Falloff::Smooth { ramp_deg } = self.falloff {
            if !(ramp_deg >= 0.0) {
                return Err(LensError::InvalidParams(format!(
                    "ramp_deg must be >= 0, got {ramp_deg}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Inside,
    Ramp,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensRegion {
    pub center: Point,
    pub radius_px: f64,
    pub ramp_px: f64,
    pub active: bool,
}

impl LensRegion {
    pub fn inactive() -> Self {
        Self {
            center: Point::default(),
            radius_px: 0.0,
            ramp_px: 0.0,
            active: false,
        }
    }

    /// Inside is the open disk; the ramp band is `[r, r + ramp)`.
    pub fn classify(&self, p: Point) -> Result<Zone, LensError> {
        if !self.active {
            return Err(LensError::NoRegion);
        }
        let d = self.center.distance(p);
        Ok(if d < self.radius_px {
            Zone::Inside
        } else if d < self.radius_px + self.ramp_px {
            Zone::Ramp
        } else {
            Zone::Outside
        })
    }

    /// Display resolution weight: 1 inside, 0 outside, smoothstep across the
    /// ramp. Continuous and non-increasing in the distance to the centre.
    pub fn resolution_weight(&self, p: Point) -> Result<f64, LensError> {
        if !self.active {
            return Err(LensError::NoRegion);
        }
        let d = self.center.distance(p);
        if d < self.radius_px {
            return Ok(1.0);
        }
        if self.ramp_px <= 0.0 || d >= self.radius_px + self.ramp_px {
            return Ok(0.0);
        }
        let u = (d - self.radius_px) / self.ramp_px;
        Ok(1.0 - u * u * (3.0 - 2.0 * u))
    }
}

/// Lens state for one session, fed in lockstep with the fixation detector.
#[derive(Debug, Clone)]
pub struct ContingentLens {
    params: LensParams,
    radius_px: f64,
    ramp_px: f64,
    region: LensRegion,
    anchored_window: Option<u64>,
}

impl ContingentLens {
    pub fn new(params: LensParams, geometry: &ScreenGeometry) -> Result<Self, LensError> {
        params.validate()?;
        let radius_px = visual_angle_to_px(params.theta_deg, geometry)? / 2.0;
        let ramp_px = match params.falloff {
            Falloff::Step => 0.0,
            Falloff::Smooth { ramp_deg } => {
                visual_angle_to_px(params.theta_deg + 2.0 * ramp_deg, geometry)? / 2.0 - radius_px
            }
        };
        Ok(Self {
            params,
            radius_px,
            ramp_px,
            region: LensRegion::inactive(),
            anchored_window: None,
        })
    }

    pub fn params(&self) -> &LensParams {
        &self.params
    }

    pub fn radius_px(&self) -> f64 {
        self.radius_px
    }

    /// The region currently shown (inactive until the first anchor).
    pub fn region(&self) -> LensRegion {
        self.region
    }

    fn place(&mut self, center: Point) -> LensRegion {
        self.region = LensRegion {
            center,
            radius_px: self.radius_px,
            ramp_px: self.ramp_px,
            active: true,
        };
        self.region
    }

    /// Returns a new region when this event anchors its window.
    ///
    /// The anchor is the snapshot centroid of the first event whose window
    /// holds at least `n_anchor` samples; the detector's `provisional_n` must
    /// equal `n_anchor` for that centroid to be the mean of exactly the first
    /// `n_anchor` samples (the default 4 / 4 pairing).
    pub fn on_fix_event(&mut self, event: &FixEvent) -> Option<LensRegion> {
        if self.anchored_window == Some(event.window_id) {
            return None;
        }
        if event.fixation.n_samples < self.params.n_anchor {
            return None;
        }
        self.anchored_window = Some(event.window_id);
        Some(self.place(event.fixation.centroid()))
    }

    /// Moves the held region to a predicted landing point while a saccade
    /// is in flight. The next fixation re-anchors as usual.
    pub fn preposition(&mut self, prediction: &LandingPrediction) -> LensRegion {
        self.place(prediction.predicted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixation::{DetectorParams, FixationDetector};
    use crate::geometry::{GazeSample, StreamConfig};

    // 2·600·tan(2.5°)·3.7795 / 2, evaluated independently at 30 digits.
    const FOVEAL_RADIUS_PX: f64 = 99.009_920_233_632_8;

    fn anchors(points: &[(f64, f64)]) -> Vec<LensRegion> {
        let mut det = FixationDetector::new(DetectorParams::default(), StreamConfig::default()).unwrap();
        let mut lens = ContingentLens::new(LensParams::default(), &ScreenGeometry::default()).unwrap();
        let mut out = Vec::new();
        for (k, (x, y)) in points.iter().enumerate() {
            for ev in det.push_sample(GazeSample::new(k as i64 * 17, *x, *y)).unwrap() {
                out.extend(lens.on_fix_event(&ev));
            }
        }
        for ev in det.flush() {
            out.extend(lens.on_fix_event(&ev));
        }
        out
    }

    #[test]
    fn foveal_radius() {
        let lens = ContingentLens::new(LensParams::default(), &ScreenGeometry::default()).unwrap();
        assert!((lens.radius_px() - FOVEAL_RADIUS_PX).abs() < 1e-9);
    }

    #[test]
    fn constant_fixation_anchors_once() {
        let regions = anchors(&[(200.0, 200.0); 12]);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].center, Point::new(200.0, 200.0));
        assert!(regions[0].active);
    }

    #[test]
    fn symmetric_first_four_average_to_centre() {
        let mut pts = vec![(198.0, 200.0), (202.0, 200.0), (200.0, 198.0), (200.0, 202.0)];
        pts.extend([(210.0, 205.0); 8]);
        let regions = anchors(&pts);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].center, Point::new(200.0, 200.0));
    }

    #[test]
    fn region_held_after_fixation_end() {
        let mut det = FixationDetector::new(DetectorParams::default(), StreamConfig::default()).unwrap();
        let mut lens = ContingentLens::new(LensParams::default(), &ScreenGeometry::default()).unwrap();
        for k in 0..10 {
            for ev in det.push_sample(GazeSample::new(k * 17, 50.0, 50.0)).unwrap() {
                lens.on_fix_event(&ev);
            }
        }
        let held = lens.region();
        for ev in det.push_sample(GazeSample::new(180, 900.0, 900.0)).unwrap() {
            assert!(lens.on_fix_event(&ev).is_none());
        }
        assert_eq!(lens.region(), held);
    }

    #[test]
    fn classification_boundaries() {
        let r = LensRegion {
            center: Point::new(0.0, 0.0),
            radius_px: 10.0,
            ramp_px: 0.0,
            active: true,
        };
        assert_eq!(r.classify(Point::new(0.0, 0.0)), Ok(Zone::Inside));
        assert_eq!(r.classify(Point::new(10.0, 0.0)), Ok(Zone::Outside));
        let smooth = LensRegion { ramp_px: 5.0, ..r };
        assert_eq!(smooth.classify(Point::new(10.0, 0.0)), Ok(Zone::Ramp));
        assert_eq!(smooth.classify(Point::new(15.0, 0.0)), Ok(Zone::Outside));
        assert_eq!(
            LensRegion::inactive().classify(Point::default()),
            Err(LensError::NoRegion)
        );
    }

    #[test]
    fn smooth_weight_is_monotone_and_continuous() {
        let lens = ContingentLens::new(
            LensParams {
                falloff: Falloff::Smooth { ramp_deg: 5.0 },
                ..Default::default()
            },
            &ScreenGeometry::default(),
        )
        .unwrap();
        let mut region = lens.region();
        region.active = true;
        region.radius_px = lens.radius_px;
        region.ramp_px = lens.ramp_px;
        assert!(region.ramp_px > 0.0);
        let outer = region.radius_px + region.ramp_px;
        let mut prev = 1.0;
        for i in 0..=1000 {
            let d = outer * 1.1 * i as f64 / 1000.0;
            let w = region.resolution_weight(Point::new(d, 0.0)).unwrap();
            assert!(w <= prev && (prev - w) < 0.01, "at d={d}");
            prev = w;
        }
        assert_eq!(
            region.resolution_weight(Point::new(region.radius_px, 0.0)).unwrap(),
            1.0
        );
        assert_eq!(region.resolution_weight(Point::new(outer, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn param_validation() {
        let g = ScreenGeometry::default();
        assert!(ContingentLens::new(
            LensParams {
                n_anchor: 0,
                ..Default::default()
            },
            &g
        )
        .is_err());
        assert!(ContingentLens::new(
            LensParams {
                theta_deg: 0.0,
                ..Default::default()
            },
            &g
        )
        .is_err());
        assert!(ContingentLens::new(
            LensParams {
                falloff: Falloff::Smooth { ramp_deg: -1.0 },
                ..Default::default()
            },
            &g
        )
        .is_err());
        assert!(ContingentLens::new(LensParams::parafoveal(), &g).unwrap().radius_px() > FOVEAL_RADIUS_PX);
    }
}
