//! Newline-delimited JSON messages exchanged with a front end.
//!
//! Every object carries `"t"` (ms) and `"type"`; the remaining keys mirror
//! the domain types. Unknown keys are ignored on input.
//!
//! ```
//! use gazeflow::wire::{WireBody, WireMessage};
//!
//! let m = WireMessage::parse(r#"{"t":16,"type":"gaze","x":10.5,"y":20,"extra":1}"#).unwrap();
//! assert!(matches!(m.body, WireBody::Gaze { valid: true, .. }));
//! assert_eq!(m.to_line(), r#"{"t":16,"type":"gaze","x":10.5,"y":20.0,"pupil":null,"valid":true}"#);
//! ```

use serde::{Deserialize, Serialize};

use crate::dwell::{DwellEvent, DwellEventKind};
use crate::fixation::{FixEvent, FixEventKind, Fixation};
use crate::geometry::{GazeSample, Point, Rect, ZoneId};
use crate::lens::LensRegion;
use crate::map::{MapCommand, MapState};
use crate::saccade::LandingPrediction;
use crate::trace::ZoneStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub t: i64,
    #[serde(flatten)]
    pub body: WireBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensSource {
    Fixation,
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireBody {
    Gaze {
        x: f64,
        y: f64,
        #[serde(default)]
        pupil: Option<f64>,
        #[serde(default = "yes")]
        valid: bool,
    },
    FixStart {
        window_id: u64,
        #[serde(flatten)]
        fixation: Fixation,
    },
    FixUpdate {
        window_id: u64,
        #[serde(flatten)]
        fixation: Fixation,
    },
    FixEnd {
        window_id: u64,
        #[serde(flatten)]
        fixation: Fixation,
    },
    DwellArmed {
        zone: ZoneId,
        point: Option<Point>,
        window_id: u64,
    },
    DwellCommitted {
        zone: ZoneId,
        point: Option<Point>,
        window_id: u64,
    },
    DwellCancelled {
        zone: ZoneId,
        point: Option<Point>,
        window_id: u64,
    },
    Lens {
        #[serde(flatten)]
        region: LensRegion,
        source: LensSource,
    },
    Landing {
        #[serde(flatten)]
        prediction: LandingPrediction,
    },
    MapState {
        #[serde(flatten)]
        state: MapState,
        /// Zoomed area outlined on the overview.
        rect: Rect,
        command: Option<MapCommand>,
    },
    ZoneStats {
        zones: Vec<ZoneStats>,
    },
    /// Upstream: the session is over; the server flushes and keeps the
    /// connection open. Needed where nothing can be sent after a close.
    End {},
}

fn yes() -> bool {
    true
}

impl WireMessage {
    pub fn new(t: i64, body: WireBody) -> Self {
        Self { t, body }
    }

    pub fn gaze(sample: &GazeSample) -> Self {
        Self::new(
            sample.t_ms,
            WireBody::Gaze {
                x: sample.x_px,
                y: sample.y_px,
                pupil: sample.pupil_mm,
                valid: sample.valid,
            },
        )
    }

    /// `Provisional` has no wire form; the lens message covers it.
    pub fn fix(t: i64, ev: &FixEvent) -> Option<Self> {
        let (window_id, fixation) = (ev.window_id, ev.fixation.clone());
        let body = match ev.kind {
            FixEventKind::Provisional => return None,
            FixEventKind::Start => WireBody::FixStart { window_id, fixation },
            FixEventKind::Update => WireBody::FixUpdate { window_id, fixation },
            FixEventKind::End => WireBody::FixEnd { window_id, fixation },
        };
        Some(Self::new(t, body))
    }

    pub fn dwell(ev: &DwellEvent) -> Self {
        let (zone, point, window_id) = (ev.zone.clone(), ev.point, ev.window_id);
        let body = match ev.kind {
            DwellEventKind::Armed => WireBody::DwellArmed { zone, point, window_id },
            DwellEventKind::Committed => WireBody::DwellCommitted { zone, point, window_id },
            DwellEventKind::Cancelled => WireBody::DwellCancelled { zone, point, window_id },
        };
        Self::new(ev.t_ms, body)
    }

    pub fn type_name(&self) -> &'static str {
        match self.body {
            WireBody::Gaze { .. } => "gaze",
            WireBody::FixStart { .. } => "fix_start",
            WireBody::FixUpdate { .. } => "fix_update",
            WireBody::FixEnd { .. } => "fix_end",
            WireBody::DwellArmed { .. } => "dwell_armed",
            WireBody::DwellCommitted { .. } => "dwell_committed",
            WireBody::DwellCancelled { .. } => "dwell_cancelled",
            WireBody::Lens { .. } => "lens",
            WireBody::Landing { .. } => "landing",
            WireBody::MapState { .. } => "map_state",
            WireBody::ZoneStats { .. } => "zone_stats",
            WireBody::End {} => "end",
        }
    }

    /// The sample carried by a `gaze` message.
    pub fn as_gaze_sample(&self) -> Option<GazeSample> {
        match self.body {
            WireBody::Gaze { x, y, pupil, valid } => Some(GazeSample {
                t_ms: self.t,
                x_px: x,
                y_px: y,
                pupil_mm: pupil,
                valid,
            }),
            _ => None,
        }
    }

    pub fn parse(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::overview_rect;
    use crate::saccade::PredictionBasis;

    #[test]
    fn every_type_round_trips() {
        let fixation = Fixation {
            start_ms: 0,
            end_ms: 100,
            centroid_x_px: 1.0,
            centroid_y_px: 2.0,
            n_samples: 7,
            dispersion_px: 0.5,
            duration_ms: 116.667,
            mean_pupil_mm: Some(3.0),
        };
        let state = MapState::new(1000.0, 800.0, 50.0).unwrap();
        let region = LensRegion {
            center: Point::new(5.0, 6.0),
            radius_px: 99.0,
            ramp_px: 0.0,
            active: true,
        };
        let bodies = vec![
            WireBody::Gaze {
                x: 1.0,
                y: 2.0,
                pupil: None,
                valid: false,
            },
            WireBody::FixStart {
                window_id: 3,
                fixation: fixation.clone(),
            },
            WireBody::FixUpdate {
                window_id: 3,
                fixation: fixation.clone(),
            },
            WireBody::FixEnd { window_id: 3, fixation },
            WireBody::DwellArmed {
                zone: "zoom_1".into(),
                point: Some(Point::new(1.0, 1.0)),
                window_id: 1,
            },
            WireBody::DwellCommitted {
                zone: "zoom_1".into(),
                point: Some(Point::new(1.0, 1.0)),
                window_id: 1,
            },
            WireBody::DwellCancelled {
                zone: "zoom_1".into(),
                point: None,
                window_id: 1,
            },
            WireBody::Lens {
                region,
                source: LensSource::Prediction,
            },
            WireBody::Landing {
                prediction: LandingPrediction {
                    predicted: Point::new(300.0, 10.0),
                    issued_at_ms: 40,
                    basis: PredictionBasis {
                        onset: Point::new(0.0, 0.0),
                        peak: Point::new(150.0, 5.0),
                        peak_speed_deg_s: 400.0,
                    },
                },
            },
            WireBody::MapState {
                rect: overview_rect(&state),
                state,
                command: Some(MapCommand::SetZoom { index: 2 }),
            },
            WireBody::ZoneStats { zones: vec![] },
            WireBody::End {},
        ];
        for body in bodies {
            let m = WireMessage::new(42, body);
            let line = m.to_line();
            let v: serde_json::Value = serde_json::from_str(&line).unwrap();
            assert_eq!(v["t"], 42);
            assert_eq!(v["type"], m.type_name());
            assert_eq!(WireMessage::parse(&line).unwrap(), m, "{line}");
        }
    }

    #[test]
    fn missing_type_is_an_error() {
        assert!(WireMessage::parse(r#"{"t":1,"x":0,"y":0}"#).is_err());
        assert!(WireMessage::parse(r#"{"t":1,"type":"teleport"}"#).is_err());
    }
}
