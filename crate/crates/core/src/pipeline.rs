//! Sequential per-session chain: detector, dwell machines on the map
//! widgets, map state, lens and landing predictor.
//!
//! Every message produced while handling a sample is stamped with that
//! sample's time, so output is ordered by `t` whenever the input is.

use thiserror::Error;

use crate::dwell::{DwellError, DwellEventKind, DwellMachine, DwellParams};
use crate::fixation::{DetectorError, DetectorParams, FixEventKind, Fixation, FixationDetector};
use crate::geometry::{GazeSample, StreamConfig, ZoneId};
use crate::lens::{ContingentLens, LensError, LensParams};
use crate::map::{apply_command, overview_rect, Layout, MapCommand, MapError, MapState, WidgetId, ALL_WIDGETS};
use crate::saccade::{PredictorParams, SaccadeError, SaccadePredictor};
use crate::trace::{zone_stats, InterestZone};
use crate::wire::{LensSource, WireBody, WireMessage};

/// Overview map size in map pixels.
pub const DEFAULT_OVERVIEW_PX: f64 = 4096.0;
/// Pan step in overview pixels.
pub const DEFAULT_PAN_STEP_PX: f64 = 128.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("detector provisional_n ({provisional_n}) must equal lens n_anchor ({n_anchor})")]
    AnchorMismatch { provisional_n: u32, n_anchor: u32 },
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Dwell(#[from] DwellError),
    #[error(transparent)]
    Lens(#[from] LensError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Saccade(#[from] SaccadeError),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stream: StreamConfig,
    pub detector: DetectorParams,
    /// Pan buttons always run in repeat mode.
    pub dwell: DwellParams,
    pub lens: LensParams,
    pub predictor: PredictorParams,
    pub layout: Layout,
    pub map: MapState,
    /// Zones reported in `zone_stats` on flush; none means no report.
    pub zones: Vec<InterestZone>,
}

impl PipelineConfig {
    pub fn for_stream(stream: StreamConfig) -> Self {
        let g = stream.geometry;
        Self {
            stream,
            detector: DetectorParams::default(),
            dwell: DwellParams::default(),
            lens: LensParams::default(),
            predictor: PredictorParams::default(),
            layout: Layout::default_for(g.width_px, g.height_px),
            map: MapState::new(DEFAULT_OVERVIEW_PX, DEFAULT_OVERVIEW_PX, DEFAULT_PAN_STEP_PX)
                .expect("default map is valid"),
            zones: Vec::new(),
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::for_stream(StreamConfig::default())
    }
}

pub struct Pipeline {
    detector: FixationDetector,
    widgets: Vec<(WidgetId, DwellMachine)>,
    lens: ContingentLens,
    predictor: SaccadePredictor,
    layout: Layout,
    map: MapState,
    zones: Vec<InterestZone>,
    fixations: Vec<Fixation>,
    started: bool,
    last_t: i64,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        if config.detector.provisional_n != config.lens.n_anchor {
            return Err(PipelineError::AnchorMismatch {
                provisional_n: config.detector.provisional_n,
                n_anchor: config.lens.n_anchor,
            });
        }
        let rate = config.stream.rate_hz;
        let mut widgets = Vec::new();
        for w in ALL_WIDGETS.into_iter().filter(|w| *w != WidgetId::ZoomWindow) {
            if config.layout.rect_of(w).is_none() {
                continue;
            }
            let params = DwellParams {
                repeat: w.is_pan(),
                ..config.dwell
            };
            widgets.push((w, DwellMachine::for_surface(params, rate, ZoneId::new(w.as_str()))?));
        }
        Ok(Self {
            detector: FixationDetector::new(config.detector, config.stream)?,
            widgets,
            lens: ContingentLens::new(config.lens, &config.stream.geometry)?,
            predictor: SaccadePredictor::new(config.predictor, config.stream.geometry)?,
            layout: config.layout,
            map: config.map,
            zones: config.zones,
            fixations: Vec::new(),
            started: false,
            last_t: i64::MIN,
        })
    }

    pub fn map_state(&self) -> &MapState {
        &self.map
    }

    pub fn fixations(&self) -> &[Fixation] {
        &self.fixations
    }

    fn map_message(&self, t: i64, command: Option<MapCommand>) -> WireMessage {
        WireMessage::new(
            t,
            WireBody::MapState {
                state: self.map.clone(),
                rect: overview_rect(&self.map),
                command,
            },
        )
    }

    pub fn push_sample(&mut self, sample: GazeSample) -> Result<Vec<WireMessage>, PipelineError> {
        let t = sample.t_ms;
        let events = self.detector.push_sample(sample)?;
        self.last_t = t;
        let mut out = Vec::new();
        if !self.started {
            self.started = true;
            out.push(self.map_message(t, None));
        }

        for ev in &events {
            if ev.kind == FixEventKind::End {
                self.fixations.push(ev.fixation.clone());
            }
            out.extend(WireMessage::fix(t, ev));
            if let Some(region) = self.lens.on_fix_event(ev) {
                out.push(WireMessage::new(
                    t,
                    WireBody::Lens {
                        region,
                        source: LensSource::Fixation,
                    },
                ));
            }
        }

        let window = self.detector.open_window();
        let mut commands = Vec::new();
        for (widget, machine) in &mut self.widgets {
            for ev in machine.on_sample_in_fixation(&sample, window, &self.layout)? {
                if ev.kind == DwellEventKind::Committed {
                    let point = ev.point.expect("commit carries a point");
                    commands.extend(widget.command(point, &self.layout, &self.map));
                }
                out.push(WireMessage::new(t, WireMessage::dwell(&ev).body));
            }
        }
        for cmd in commands {
            self.map = apply_command(&self.map, cmd)?;
            out.push(self.map_message(t, Some(cmd)));
        }

        if let Some(prediction) = self.predictor.push_sample(sample) {
            out.push(WireMessage::new(t, WireBody::Landing { prediction }));
            let region = self.lens.preposition(&prediction);
            out.push(WireMessage::new(
                t,
                WireBody::Lens {
                    region,
                    source: LensSource::Prediction,
                },
            ));
        }
        Ok(out)
    }

    /// Closes the open window, cancels pending dwells and reports zone
    /// statistics. The pipeline can keep receiving samples afterwards.
    pub fn flush(&mut self) -> Vec<WireMessage> {
        let t = if self.started { self.last_t } else { 0 };
        let mut out = Vec::new();
        for (_, machine) in &mut self.widgets {
            out.extend(
                machine
                    .reset()
                    .iter()
                    .map(|ev| WireMessage::new(t, WireMessage::dwell(ev).body)),
            );
        }
        for ev in self.detector.flush() {
            self.fixations.push(ev.fixation.clone());
            out.extend(WireMessage::fix(t, &ev));
        }
        if let Ok(zones) = zone_stats(&self.fixations, &self.zones) {
            out.push(WireMessage::new(t, WireBody::ZoneStats { zones }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Rect};

    fn run(pipeline: &mut Pipeline, samples: impl IntoIterator<Item = GazeSample>) -> Vec<WireMessage> {
        let mut out = Vec::new();
        for s in samples {
            out.extend(pipeline.push_sample(s).unwrap());
        }
        out.extend(pipeline.flush());
        out
    }

    fn types(msgs: &[WireMessage]) -> Vec<&'static str> {
        msgs.iter().map(WireMessage::type_name).collect()
    }

    #[test]
    fn dwell_on_zoom_button_changes_zoom() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        let c = p.layout.rect_of(WidgetId::Zoom3).unwrap().center();
        let msgs = run(&mut p, (0..30).map(|k| GazeSample::new(k * 1000 / 60, c.x, c.y)));
        let ts = types(&msgs);
        assert_eq!(ts[0], "map_state");
        let armed = ts.iter().position(|t| *t == "dwell_armed").unwrap();
        let committed = ts.iter().position(|t| *t == "dwell_committed").unwrap();
        assert!(armed < committed);
        assert_eq!(msgs[armed].t, 9 * 1000 / 60);
        assert_eq!(msgs[committed].t, 21 * 1000 / 60);
        assert_eq!(p.map_state().zoom_index, 2);
        assert!(msgs.windows(2).all(|w| w[0].t <= w[1].t));
        assert_eq!(ts.iter().filter(|t| **t == "lens").count(), 1);
        assert_eq!(ts.last(), Some(&"fix_end"));
    }

    #[test]
    fn pan_button_repeats() {
        let mut cfg = PipelineConfig::default();
        cfg.map = apply_command(&cfg.map, MapCommand::SetZoom { index: 3 }).unwrap();
        let mut p = Pipeline::new(cfg).unwrap();
        let c = p.layout.rect_of(WidgetId::PanRight).unwrap().center();
        let x0 = p.map_state().focus.x;
        let msgs = run(&mut p, (0..66).map(|k| GazeSample::new(k * 1000 / 60, c.x, c.y)));
        let commits = types(&msgs).iter().filter(|t| **t == "dwell_committed").count();
        assert_eq!(commits, 3);
        assert_eq!(p.map_state().focus.x, x0 + 3.0 * DEFAULT_PAN_STEP_PX);
    }

    #[test]
    fn zone_stats_on_flush() {
        let cfg = PipelineConfig {
            zones: vec![InterestZone::new("centre", Rect::new(600.0, 500.0, 700.0, 600.0), "")],
            ..Default::default()
        };
        let mut p = Pipeline::new(cfg).unwrap();
        let msgs = run(&mut p, (0..12).map(|k| GazeSample::new(k * 17, 650.0, 550.0)));
        match &msgs.last().unwrap().body {
            WireBody::ZoneStats { zones } => assert_eq!(zones[0].fixation_count, 1),
            other => panic!("{other:?}"),
        }
        let _ = Point::default();
    }

    #[test]
    fn mismatched_anchor_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.lens.n_anchor = 6;
        assert!(matches!(Pipeline::new(cfg), Err(PipelineError::AnchorMismatch { .. })));
    }
}
