//! Samples, screen geometry and the unit conversions shared by every stage.
//!
//! Thresholds elsewhere in the crate are phrased either in degrees of visual
//! angle or in sample counts at a reference rate. This module turns both into
//! the units the algorithms actually run in: pixels and milliseconds.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rate at which the sample-count thresholds of the dwell protocol are defined.
pub const REFERENCE_RATE_HZ: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("visual angle must be non-negative, got {0}°")]
    NegativeAngle(f64),
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
}

/// A point in screen pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Arithmetic mean of a set of points, `None` when empty.
    pub fn mean<I: IntoIterator<Item = Point>>(points: I) -> Option<Point> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
        (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
    }
}

/// Axis-aligned rectangle in pixels, `x0 ≤ x1`, `y0 ≤ y1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn from_center(center: Point, width: f64, height: f64) -> Self {
        Self::new(
            center.x - width / 2.0,
            center.y - height / 2.0,
            center.x + width / 2.0,
            center.y + height / 2.0,
        )
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    /// Strictly positive width and height.
    pub fn is_proper(&self) -> bool {
        self.x1 > self.x0 && self.y1 > self.y0
    }

    /// Closed containment: points on the border are inside.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// Half-open containment `[x0, x1) × [y0, y1)`, used to tile pixels.
    pub fn contains_half_open(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.y >= self.y0 && p.y < self.y1
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x0 >= self.x0 && other.x1 <= self.x1 && other.y0 >= self.y0 && other.y1 <= self.y1
    }

    /// Interiors intersect.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }
}

/// Identifier of an interest zone or activatable widget.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub String);

impl ZoneId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ZoneId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ZoneId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// One time-stamped gaze measurement.
///
/// Timestamps are integer milliseconds and must be non-decreasing within a
/// stream. When `valid` is false (blink or track loss) the coordinates carry
/// no meaning and every consumer ignores them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t_ms: i64,
    pub x_px: f64,
    pub y_px: f64,
    pub pupil_mm: Option<f64>,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(t_ms: i64, x_px: f64, y_px: f64) -> Self {
        Self {
            t_ms,
            x_px,
            y_px,
            pupil_mm: None,
            valid: true,
        }
    }

    /// A blink / track-loss sample.
    pub fn invalid(t_ms: i64) -> Self {
        Self {
            t_ms,
            x_px: 0.0,
            y_px: 0.0,
            pupil_mm: None,
            valid: false,
        }
    }

    pub fn with_pupil(mut self, pupil_mm: f64) -> Self {
        self.pupil_mm = Some(pupil_mm);
        self
    }

    pub fn point(&self) -> Point {
        Point::new(self.x_px, self.y_px)
    }
}

/// Viewing setup used to convert visual angles into pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub viewing_distance_mm: f64,
    pub px_per_mm: f64,
    pub width_px: f64,
    pub height_px: f64,
}

impl Default for ScreenGeometry {
    /// 600 mm viewing distance on a 96 dpi, 1280×1024 desktop screen.
    fn default() -> Self {
        Self {
            viewing_distance_mm: 600.0,
            px_per_mm: 3.7795,
            width_px: 1280.0,
            height_px: 1024.0,
        }
    }
}

impl ScreenGeometry {
    pub fn new(viewing_distance_mm: f64, px_per_mm: f64, width_px: f64, height_px: f64) -> Result<Self, GeometryError> {
        let g = Self {
            viewing_distance_mm,
            px_per_mm,
            width_px,
            height_px,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for (field, value) in [
            ("viewing_distance_mm", self.viewing_distance_mm),
            ("px_per_mm", self.px_per_mm),
            ("width_px", self.width_px),
            ("height_px", self.height_px),
        ] {
            // written this way so NaN is rejected too
            if !(value > 0.0) {
                return Err(GeometryError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

/// Sampling rate and viewing geometry of one gaze stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub rate_hz: f64,
    pub geometry: ScreenGeometry,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            rate_hz: REFERENCE_RATE_HZ,
            geometry: ScreenGeometry::default(),
        }
    }
}

impl StreamConfig {
    pub fn new(rate_hz: f64, geometry: ScreenGeometry) -> Result<Self, GeometryError> {
        let c = Self { rate_hz, geometry };
        c.validate()?;
        Ok(c)
    }

    pub fn with_rate(rate_hz: f64) -> Result<Self, GeometryError> {
        Self::new(rate_hz, ScreenGeometry::default())
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.rate_hz > 0.0) {
            return Err(GeometryError::NonPositive {
                field: "rate_hz",
                value: self.rate_hz,
            });
        }
        self.geometry.validate()
    }

    /// Length of one sample period in milliseconds.
    pub fn period_ms(&self) -> f64 {
        1000.0 / self.rate_hz
    }
}

/// Size in pixels of the chord subtended by `theta_deg` at the viewing
/// distance: `2·d·tan(θ/2)·px_per_mm`. No small-angle approximation.
pub fn visual_angle_to_px(theta_deg: f64, geometry: &ScreenGeometry) -> Result<f64, GeometryError> {
    if theta_deg < 0.0 || theta_deg.is_nan() {
        return Err(GeometryError::NegativeAngle(theta_deg));
    }
    let half = (theta_deg / 2.0).to_radians();
    Ok(2.0 * geometry.viewing_distance_mm * half.tan() * geometry.px_per_mm)
}

/// Inverse of [`visual_angle_to_px`]. Negative sizes are treated by magnitude.
pub fn px_to_visual_angle(size_px: f64, geometry: &ScreenGeometry) -> f64 {
    let mm = size_px.abs() / geometry.px_per_mm;
    (2.0 * (mm / (2.0 * geometry.viewing_distance_mm)).atan()).to_degrees()
}

/// Wall-clock span of `n` samples, each owning one full sample period.
pub fn samples_to_ms(n: u32, rate_hz: f64) -> f64 {
    f64::from(n) * 1000.0 / rate_hz
}

/// Rescales a count defined at 60 Hz to `rate_hz`: `round(n · rate / 60)`,
/// never below one sample.
pub fn rescale_count(n: u32, rate_hz: f64) -> u32 {
    let scaled = (f64::from(n) * rate_hz / REFERENCE_RATE_HZ).round();
    (scaled as u32).max(1)
}
