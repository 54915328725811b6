//! Interaction logic of the gaze-driven map viewer: pan buttons, seven zoom
//! levels, focus commits from the overview map, and the rectangle outlining
//! the zoomed area on the overview.
//!
//! All coordinates here are overview-map coordinates (pan steps included).
//! The view is clamped, never rejected, so every command yields a valid view.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dwell::{DwellError, ZoneMap};
use crate::geometry::{Point, Rect, ZoneId};

pub const ZOOM_LEVELS: usize = 7;
pub const DEFAULT_ZOOM_FACTORS: [f64; ZOOM_LEVELS] = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("zoom index {0} outside 0..{ZOOM_LEVELS}")]
    ZoomIndex(usize),
    #[error("zoom factors must be positive and strictly increasing")]
    ZoomFactors,
    #[error("overview size must be positive")]
    OverviewSize,
    #[error("layout widgets {0:?} and {1:?} overlap")]
    Overlap(WidgetId, WidgetId),
    #[error("layout widget {0:?} has an empty rectangle")]
    EmptyWidget(WidgetId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanDirection {
    Left,
    Right,
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum MapCommand {
    Pan { direction: PanDirection },
    SetZoom { index: usize },
    FocusCommit { point: Point },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapState {
    pub focus: Point,
    pub zoom_index: usize,
    pub pan_step_px: f64,
    pub overview_width_px: f64,
    pub overview_height_px: f64,
    pub zoom_factors: [f64; ZOOM_LEVELS],
}

impl MapState {
    /// Centred, unzoomed view of a `width × height` overview.
    pub fn new(width: f64, height: f64, pan_step_px: f64) -> Result<Self, MapError> {
        Self::with_factors(width, height, pan_step_px, DEFAULT_ZOOM_FACTORS)
    }

    pub fn with_factors(
        width: f64,
        height: f64,
        pan_step_px: f64,
        zoom_factors: [f64; ZOOM_LEVELS],
    ) -> Result<Self, MapError> {
        if !(width > 0.0 && height > 0.0) {
            return Err(MapError::OverviewSize);
        }
        if !(zoom_factors[0] > 0.0) || zoom_factors.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(MapError::ZoomFactors);
        }
        Ok(Self {
            focus: Point::new(width / 2.0, height / 2.0),
            zoom_index: 0,
            pan_step_px,
            overview_width_px: width,
            overview_height_px: height,
            zoom_factors,
        })
    }

    pub fn zoom_factor(&self) -> f64 {
        self.zoom_factors[self.zoom_index]
    }

    pub fn overview_bounds(&self) -> Rect {
        Rect::new(0.0, 0.0, self.overview_width_px, self.overview_height_px)
    }

    fn clamped(mut self) -> Self {
        let half_w = self.overview_width_px / self.zoom_factor() / 2.0;
        let half_h = self.overview_height_px / self.zoom_factor() / 2.0;
        self.focus.x = self.focus.x.clamp(half_w, self.overview_width_px - half_w);
        self.focus.y = self.focus.y.clamp(half_h, self.overview_height_px - half_h);
        self
    }
}

pub fn apply_command(state: &MapState, cmd: MapCommand) -> Result<MapState, MapError> {
    let mut next = state.clone();
    match cmd {
        MapCommand::Pan { direction } => {
            let step = state.pan_step_px;
            match direction {
                PanDirection::Left => next.focus.x -= step,
                PanDirection::Right => next.focus.x += step,
                PanDirection::Up => next.focus.y -= step,
                PanDirection::Down => next.focus.y += step,
            }
        }
        MapCommand::SetZoom { index } => {
            if index >= ZOOM_LEVELS {
                return Err(MapError::ZoomIndex(index));
            }
            next.zoom_index = index;
        }
        MapCommand::FocusCommit { point } => next.focus = point,
    }
    Ok(next.clamped())
}

/// Zoomed area outlined on the overview: centred on the focus, each side the
/// overview side divided by the zoom factor.
///
/// Corners are clamped to the overview so rounding in `focus ± half` can
/// never leave the bounds; the size then differs from `overview / factor`
/// by at most one ulp.
pub fn overview_rect(state: &MapState) -> Rect {
    let f = state.zoom_factor();
    let r = Rect::from_center(state.focus, state.overview_width_px / f, state.overview_height_px / f);
    Rect::new(
        r.x0.max(0.0),
        r.y0.max(0.0),
        r.x1.min(state.overview_width_px),
        r.y1.min(state.overview_height_px),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetId {
    PanLeft,
    PanRight,
    PanUp,
    PanDown,
    Zoom1,
    Zoom2,
    Zoom3,
    Zoom4,
    Zoom5,
    Zoom6,
    Zoom7,
    Overview,
    ZoomWindow,
}

impl WidgetId {
    pub const ZOOMS: [WidgetId; ZOOM_LEVELS] = [
        WidgetId::Zoom1,
        WidgetId::Zoom2,
        WidgetId::Zoom3,
        WidgetId::Zoom4,
        WidgetId::Zoom5,
        WidgetId::Zoom6,
        WidgetId::Zoom7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WidgetId::PanLeft => "pan_left",
            WidgetId::PanRight => "pan_right",
            WidgetId::PanUp => "pan_up",
            WidgetId::PanDown => "pan_down",
            WidgetId::Zoom1 => "zoom1",
            WidgetId::Zoom2 => "zoom2",
            WidgetId::Zoom3 => "zoom3",
            WidgetId::Zoom4 => "zoom4",
            WidgetId::Zoom5 => "zoom5",
            WidgetId::Zoom6 => "zoom6",
            WidgetId::Zoom7 => "zoom7",
            WidgetId::Overview => "overview",
            WidgetId::ZoomWindow => "zoom_window",
        }
    }

    pub fn parse(s: &str) -> Option<WidgetId> {
        ALL_WIDGETS.into_iter().find(|w| w.as_str() == s)
    }

    /// Command issued when a dwell on this widget commits at `point` (screen px).
    pub fn command(self, point: Point, layout: &Layout, state: &MapState) -> Option<MapCommand> {
        let pan = |direction| Some(MapCommand::Pan { direction });
        match self {
            WidgetId::PanLeft => pan(PanDirection::Left),
            WidgetId::PanRight => pan(PanDirection::Right),
            WidgetId::PanUp => pan(PanDirection::Up),
            WidgetId::PanDown => pan(PanDirection::Down),
            WidgetId::Overview => layout
                .screen_to_overview(point, state)
                .map(|point| MapCommand::FocusCommit { point }),
            WidgetId::ZoomWindow => None,
            zoom => WidgetId::ZOOMS
                .iter()
                .position(|w| *w == zoom)
                .map(|index| MapCommand::SetZoom { index }),
        }
    }

    pub fn is_pan(self) -> bool {
        matches!(
            self,
            WidgetId::PanLeft | WidgetId::PanRight | WidgetId::PanUp | WidgetId::PanDown
        )
    }
}

pub const ALL_WIDGETS: [WidgetId; 13] = [
    WidgetId::PanLeft,
    WidgetId::PanRight,
    WidgetId::PanUp,
    WidgetId::PanDown,
    WidgetId::Zoom1,
    WidgetId::Zoom2,
    WidgetId::Zoom3,
    WidgetId::Zoom4,
    WidgetId::Zoom5,
    WidgetId::Zoom6,
    WidgetId::Zoom7,
    WidgetId::Overview,
    WidgetId::ZoomWindow,
];

/// Screen placement of the widgets. Rectangles are half-open so adjacent
/// widgets can share an edge without overlapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    widgets: Vec<(WidgetId, Rect)>,
}

impl Layout {
    pub fn new(widgets: Vec<(WidgetId, Rect)>) -> Result<Self, MapError> {
        for (i, (a, ra)) in widgets.iter().enumerate() {
            if !ra.is_proper() {
                return Err(MapError::EmptyWidget(*a));
            }
            for (b, rb) in &widgets[i + 1..] {
                if ra.overlaps(rb) || a == b {
                    return Err(MapError::Overlap(*a, *b));
                }
            }
        }
        Ok(Self { widgets })
    }

    /// Zoom buttons top-left, overview bottom-left, zoom window on the right
    /// framed by the four pan buttons, scaled to the screen size.
    pub fn default_for(width: f64, height: f64) -> Self {
        let (sx, sy) = (width / 1280.0, height / 1024.0);
        let r = |x0: f64, y0: f64, x1: f64, y1: f64| Rect::new(x0 * sx, y0 * sy, x1 * sx, y1 * sy);
        let mut widgets = Vec::with_capacity(ALL_WIDGETS.len());
        for (i, z) in WidgetId::ZOOMS.into_iter().enumerate() {
            let x0 = 16.0 + i as f64 * 64.0;
            widgets.push((z, r(x0, 16.0, x0 + 56.0, 72.0)));
        }
        widgets.push((WidgetId::Overview, r(16.0, 496.0, 528.0, 1008.0)));
        widgets.push((WidgetId::PanUp, r(560.0, 16.0, 1264.0, 80.0)));
        widgets.push((WidgetId::PanLeft, r(560.0, 88.0, 624.0, 936.0)));
        widgets.push((WidgetId::ZoomWindow, r(632.0, 88.0, 1192.0, 936.0)));
        widgets.push((WidgetId::PanRight, r(1200.0, 88.0, 1264.0, 936.0)));
        widgets.push((WidgetId::PanDown, r(560.0, 944.0, 1264.0, 1008.0)));
        Self::new(widgets).expect("default layout is disjoint")
    }

    pub fn widgets(&self) -> &[(WidgetId, Rect)] {
        &self.widgets
    }

    pub fn rect_of(&self, id: WidgetId) -> Option<Rect> {
        self.widgets.iter().find(|(w, _)| *w == id).map(|(_, r)| *r)
    }

    /// Maps a screen point inside the overview widget to overview-map coordinates.
    pub fn screen_to_overview(&self, p: Point, state: &MapState) -> Option<Point> {
        let r = self.rect_of(WidgetId::Overview)?;
        Some(Point::new(
            (p.x - r.x0) / r.width() * state.overview_width_px,
            (p.y - r.y0) / r.height() * state.overview_height_px,
        ))
    }
}

/// Widget under `point`, `None` in gaps or off-layout.
pub fn hit_test(point: Point, layout: &Layout) -> Option<WidgetId> {
    layout
        .widgets
        .iter()
        .find(|(_, r)| r.contains_half_open(point))
        .map(|(w, _)| *w)
}

/// Only buttons and the overview activate; the zoom window is display only.
impl ZoneMap for Layout {
    fn zone_at(&self, p: Point) -> Result<Option<ZoneId>, DwellError> {
        Ok(hit_test(p, self)
            .filter(|w| *w != WidgetId::ZoomWindow)
            .map(|w| ZoneId::new(w.as_str())))
    }
}
