//! Seeded synthetic gaze streams with known ground truth.
//!
//! A scenario is a sequence of fixate / saccade / blink segments played back
//! at a fixed rate. Sample `k` is stamped `round(k · 1000 / rate)` ms and its
//! position is evaluated at that integer timestamp.
//!
//! Noise uses `ChaCha8Rng` (crate `rand_chacha`) seeded with
//! `seed_from_u64(seed)`, with isotropic Gaussian jitter drawn through
//! `rand_distr::Normal`, x first then y, once per fixation sample and only
//! when `noise_sigma_px > 0`. Reimplementations in other languages should
//! compare against recorded `.gtr` fixtures rather than this RNG.
//!
//! Segment ownership at shared boundaries: fixations and blinks own
//! `[start, end)`, saccades own `[start, end]`, so the sample that lands
//! exactly on a saccade end is placed on its target.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{visual_angle_to_px, GazeSample, Point, ScreenGeometry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("segment {index} has non-positive duration {duration_ms} ms")]
    ZeroDuration { index: usize, duration_ms: f64 },
    #[error("segment {index} has negative noise sigma {sigma}")]
    NegativeNoise { index: usize, sigma: f64 },
    #[error("rate_hz must be > 0, got {0}")]
    InvalidRate(f64),
    #[error("scenario line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Normalised velocity profile of a saccade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedProfile {
    Triangular,
    RaisedCosine,
}

impl SpeedProfile {
    /// Speed at normalised time `u ∈ [0, 1]`, scaled so that it integrates to 1.
    pub fn speed(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        match self {
            SpeedProfile::Triangular => 4.0 * u.min(1.0 - u),
            SpeedProfile::RaisedCosine => 1.0 - (2.0 * std::f64::consts::PI * u).cos(),
        }
    }

    /// Fraction of the amplitude covered by normalised time `u` (the integral
    /// of [`SpeedProfile::speed`]).
    pub fn progress(self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match self {
            SpeedProfile::Triangular => {
                if u <= 0.5 {
                    2.0 * u * u
                } else {
                    1.0 - 2.0 * (1.0 - u) * (1.0 - u)
                }
            }
            SpeedProfile::RaisedCosine => {
                let tau = 2.0 * std::f64::consts::PI;
                u - (tau * u).sin() / tau
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Fixate {
        center: Point,
        duration_ms: f64,
        /// Per-axis standard deviation; `None` uses the 0.5° tracker-accuracy default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_sigma_px: Option<f64>,
    },
    Saccade {
        to: Point,
        duration_ms: f64,
        profile: SpeedProfile,
    },
    Blink {
        duration_ms: f64,
    },
}

impl Segment {
    pub fn duration_ms(&self) -> f64 {
        match self {
            Segment::Fixate { duration_ms, .. }
            | Segment::Saccade { duration_ms, .. }
            | Segment::Blink { duration_ms } => *duration_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub rate_hz: f64,
    pub seed: u64,
    /// Gaze position before the first segment.
    #[serde(default)]
    pub origin: Point,
    /// Constant pupil diameter attached to valid samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pupil_mm: Option<f64>,
    #[serde(default)]
    pub geometry: ScreenGeometry,
    pub segments: Vec<Segment>,
}

impl ScenarioSpec {
    pub fn new(rate_hz: f64, seed: u64) -> Self {
        Self {
            rate_hz,
            seed,
            origin: Point::default(),
            pupil_mm: None,
            geometry: ScreenGeometry::default(),
            segments: Vec::new(),
        }
    }

    pub fn starting_at(mut self, origin: Point) -> Self {
        self.origin = origin;
        self
    }

    pub fn fixate(mut self, center: Point, duration_ms: f64, noise_sigma_px: f64) -> Self {
        self.segments.push(Segment::Fixate {
            center,
            duration_ms,
            noise_sigma_px: Some(noise_sigma_px),
        });
        self
    }

    pub fn saccade(mut self, to: Point, duration_ms: f64, profile: SpeedProfile) -> Self {
        self.segments.push(Segment::Saccade {
            to,
            duration_ms,
            profile,
        });
        self
    }

    pub fn blink(mut self, duration_ms: f64) -> Self {
        self.segments.push(Segment::Blink { duration_ms });
        self
    }

    pub fn total_ms(&self) -> f64 {
        self.segments.iter().map(Segment::duration_ms).sum()
    }

    /// Noise used for fixations that do not set one: the pixel size of 0.5°.
    pub fn default_noise_px(&self) -> f64 {
        visual_angle_to_px(0.5, &self.geometry).unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.rate_hz > 0.0) {
            return Err(SynthError::InvalidRate(self.rate_hz));
        }
        for (index, seg) in self.segments.iter().enumerate() {
            let duration_ms = seg.duration_ms();
            if !(duration_ms > 0.0) {
                return Err(SynthError::ZeroDuration { index, duration_ms });
            }
            if let Segment::Fixate {
                noise_sigma_px: Some(sigma),
                ..
            } = seg
            {
                if *sigma < 0.0 || sigma.is_nan() {
                    return Err(SynthError::NegativeNoise { index, sigma: *sigma });
                }
            }
        }
        Ok(())
    }

    /// Parses the NDJSON scenario document: one `{"kind":"scenario",…}` header
    /// line followed by one line per segment.
    pub fn from_ndjson(text: &str) -> Result<Self, SynthError> {
        #[derive(Deserialize)]
        struct Header {
            rate_hz: f64,
            #[serde(default)]
            seed: u64,
            #[serde(default)]
            origin: Point,
            #[serde(default)]
            pupil_mm: Option<f64>,
            #[serde(default)]
            geometry: ScreenGeometry,
        }

        let mut spec: Option<ScenarioSpec> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| SynthError::Parse { line: i + 1, message };
            let value: serde_json::Value = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            if value.get("kind").and_then(|k| k.as_str()) == Some("scenario") {
                if spec.is_some() {
                    return Err(err("duplicate scenario header".into()));
                }
                let h: Header = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
                spec = Some(ScenarioSpec {
                    rate_hz: h.rate_hz,
                    seed: h.seed,
                    origin: h.origin,
                    pupil_mm: h.pupil_mm,
                    geometry: h.geometry,
                    segments: Vec::new(),
                });
            } else {
                let seg: Segment = serde_json::from_value(value).map_err(|e| err(e.to_string()))?;
                spec.as_mut()
                    .ok_or_else(|| err("segment before scenario header".into()))?
                    .segments
                    .push(seg);
            }
        }
        let spec = spec.ok_or(SynthError::Parse {
            line: 0,
            message: "missing scenario header".into(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_ndjson(&self) -> String {
        let mut header = serde_json::json!({
            "kind": "scenario",
            "rate_hz": self.rate_hz,
            "seed": self.seed,
            "origin": self.origin,
            "geometry": self.geometry,
        });
        if let Some(p) = self.pupil_mm {
            header["pupil_mm"] = p.into();
        }
        let mut out = header.to_string();
        out.push('\n');
        for seg in &self.segments {
            out.push_str(&serde_json::to_string(seg).expect("segment serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFixation {
    pub start_ms: f64,
    pub end_ms: f64,
    pub center: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSaccade {
    pub start_ms: f64,
    pub end_ms: f64,
    pub from: Point,
    pub to: Point,
    pub peak_ms: f64,
}

impl TruthSaccade {
    pub fn amplitude_px(&self) -> f64 {
        self.from.distance(self.to)
    }
}

/// Intended timeline of a scenario. Intervals tile `[0, total)` in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub fixations: Vec<TruthFixation>,
    pub saccades: Vec<TruthSaccade>,
    pub blinks: Vec<(f64, f64)>,
}

struct Placed<'a> {
    seg: &'a Segment,
    start: f64,
    end: f64,
    from: Point,
}

impl Placed<'_> {
    fn owns(&self, t: f64) -> bool {
        match self.seg {
            Segment::Saccade { .. } => t >= self.start && t <= self.end,
            _ => t >= self.start && t < self.end,
        }
    }
}

/// Generates the sample stream and its ground truth.
pub fn generate(spec: &ScenarioSpec) -> Result<(Vec<GazeSample>, GroundTruth), SynthError> {
    spec.validate()?;

    let mut placed = Vec::with_capacity(spec.segments.len());
    let mut truth = GroundTruth::default();
    let (mut cursor, mut pos) = (0.0, spec.origin);
    for seg in &spec.segments {
        let (start, end) = (cursor, cursor + seg.duration_ms());
        placed.push(Placed {
            seg,
            start,
            end,
            from: pos,
        });
        match seg {
            Segment::Fixate { center, .. } => {
                truth.fixations.push(TruthFixation {
                    start_ms: start,
                    end_ms: end,
                    center: *center,
                });
                pos = *center;
            }
            Segment::Saccade { to, .. } => {
                truth.saccades.push(TruthSaccade {
                    start_ms: start,
                    end_ms: end,
                    from: pos,
                    to: *to,
                    peak_ms: (start + end) / 2.0,
                });
                pos = *to;
            }
            Segment::Blink { .. } => truth.blinks.push((start, end)),
        }
        cursor = end;
    }
    let total = cursor;
    let ends_in_saccade = matches!(spec.segments.last(), Some(Segment::Saccade { .. }));

    let default_sigma = spec.default_noise_px();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut samples = Vec::new();
    let mut k: u64 = 0;
    let mut seg_idx = 0;
    loop {
        let exact = k as f64 * 1000.0 / spec.rate_hz;
        let inside = if ends_in_saccade { exact <= total } else { exact < total };
        if !inside {
            break;
        }
        let t_ms = exact.round() as i64;
        let t = t_ms as f64;
        while seg_idx + 1 < placed.len() && !placed[seg_idx].owns(t) {
            seg_idx += 1;
        }
        let p = &placed[seg_idx];
        let sample = match p.seg {
            Segment::Fixate {
                center, noise_sigma_px, ..
            } => {
                let sigma = noise_sigma_px.unwrap_or(default_sigma);
                let (dx, dy) = if sigma > 0.0 {
                    let normal = Normal::new(0.0, sigma).expect("finite sigma");
                    (normal.sample(&mut rng), normal.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                GazeSample::new(t_ms, center.x + dx, center.y + dy)
            }
            Segment::Saccade {
                to,
                duration_ms,
                profile,
            } => {
                let f = profile.progress((t - p.start) / duration_ms);
                GazeSample::new(t_ms, p.from.x + (to.x - p.from.x) * f, p.from.y + (to.y - p.from.y) * f)
            }
            Segment::Blink { .. } => GazeSample::invalid(t_ms),
        };
        samples.push(match (sample.valid, spec.pupil_mm) {
            (true, Some(pupil)) => sample.with_pupil(pupil),
            _ => sample,
        });
        k += 1;
    }
    Ok((samples, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoidal integral of the speed profile over `[0, u]`.
    fn integrate(profile: SpeedProfile, u: f64, steps: usize) -> f64 {
        let h = u / steps as f64;
        let mut acc = 0.5 * (profile.speed(0.0) + profile.speed(u));
        for i in 1..steps {
            acc += profile.speed(i as f64 * h);
        }
        acc * h
    }

    #[test]
    fn progress_matches_numerical_integral() {
        for profile in [SpeedProfile::Triangular, SpeedProfile::RaisedCosine] {
            for u in [0.1, 0.25, 0.5, 0.7, 1.0] {
                let numeric = integrate(profile, u, 20_000);
                assert!((numeric - profile.progress(u)).abs() < 1e-6, "{profile:?} at {u}");
            }
            assert!((integrate(profile, 0.5, 20_000) - 0.5).abs() < 1e-6);
        }
    }

    #[test]
    fn noiseless_fixation_gives_identical_samples() {
        let spec = ScenarioSpec::new(60.0, 1).fixate(Point::new(100.0, 100.0), 500.0, 0.0);
        let (s, truth) = generate(&spec).unwrap();
        assert_eq!(s.len(), 30);
        assert!(s.iter().all(|s| s.point() == Point::new(100.0, 100.0) && s.valid));
        assert_eq!(truth.fixations.len(), 1);
    }

    #[test]
    fn saccade_lands_on_target() {
        let spec = ScenarioSpec::new(60.0, 1)
            .starting_at(Point::new(100.0, 100.0))
            .saccade(Point::new(478.0, 100.0), 50.0, SpeedProfile::Triangular);
        let (s, truth) = generate(&spec).unwrap();
        assert_eq!(s.last().unwrap().point(), Point::new(478.0, 100.0));
        assert_eq!(s.first().unwrap().point(), Point::new(100.0, 100.0));
        assert_eq!(truth.saccades[0].peak_ms, 25.0);
        assert_eq!(truth.saccades[0].amplitude_px(), 378.0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let spec = ScenarioSpec::new(240.0, 99)
            .fixate(Point::new(300.0, 300.0), 400.0, 8.0)
            .saccade(Point::new(700.0, 200.0), 40.0, SpeedProfile::RaisedCosine)
            .blink(100.0)
            .fixate(Point::new(700.0, 200.0), 300.0, 8.0);
        let (a, _) = generate(&spec).unwrap();
        let (b, _) = generate(&spec).unwrap();
        let bits = |v: &[GazeSample]| -> Vec<(i64, u64, u64, bool)> {
            v.iter()
                .map(|s| (s.t_ms, s.x_px.to_bits(), s.y_px.to_bits(), s.valid))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        let (c, _) = generate(&ScenarioSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn timestamps_are_rounded_sample_times() {
        let spec = ScenarioSpec::new(240.0, 0).fixate(Point::default(), 1000.0, 0.0);
        let (s, _) = generate(&spec).unwrap();
        for (k, smp) in s.iter().enumerate() {
            assert_eq!(smp.t_ms, (k as f64 * 1000.0 / 240.0).round() as i64);
        }
        assert_eq!(s.len(), 240);
    }

    #[test]
    fn blink_is_invalid() {
        let spec = ScenarioSpec::new(60.0, 0)
            .fixate(Point::default(), 100.0, 0.0)
            .blink(100.0)
            .fixate(Point::default(), 100.0, 0.0);
        let (s, truth) = generate(&spec).unwrap();
        let invalid: Vec<i64> = s.iter().filter(|s| !s.valid).map(|s| s.t_ms).collect();
        assert_eq!(invalid, vec![100, 117, 133, 150, 167, 183]);
        assert_eq!(truth.blinks, vec![(100.0, 200.0)]);
    }

    #[test]
    fn zero_duration_rejected() {
        let spec = ScenarioSpec::new(60.0, 0).blink(0.0);
        assert_eq!(
            generate(&spec).unwrap_err(),
            SynthError::ZeroDuration {
                index: 0,
                duration_ms: 0.0
            }
        );
        assert!(generate(&ScenarioSpec::new(60.0, 0).fixate(Point::default(), 10.0, -1.0)).is_err());
    }

    #[test]
    fn ndjson_round_trip() {
        let spec = ScenarioSpec::new(60.0, 3)
            .fixate(Point::new(1.0, 2.0), 200.0, 0.0)
            .saccade(Point::new(50.0, 2.0), 30.0, SpeedProfile::Triangular)
            .blink(50.0);
        let text = spec.to_ndjson();
        assert_eq!(ScenarioSpec::from_ndjson(&text).unwrap(), spec);
        assert!(matches!(
            ScenarioSpec::from_ndjson("{\"kind\":\"blink\",\"duration_ms\":5}"),
            Err(SynthError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn default_noise_is_half_degree() {
        let spec = ScenarioSpec::new(60.0, 0);
        assert!((spec.default_noise_px() - 19.789_541_312_209_88).abs() < 1e-9);
    }
}
