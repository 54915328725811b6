//! Reference tables: provisional-fixation latency, dwell timings and landing
//! prediction error on synthetic saccades.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dwell::{DwellEventKind, DwellMachine, DwellParams};
use crate::fixation::{DetectorParams, FixEventKind, FixationDetector};
use crate::geometry::{samples_to_ms, visual_angle_to_px, GazeSample, Point, ScreenGeometry, StreamConfig};
use crate::saccade::{PredictorParams, SaccadePredictor};
use crate::synth::{generate, ScenarioSpec, SpeedProfile};
use crate::trace::InterestZone;

pub const BENCH_RATES: [f64; 2] = [60.0, 240.0];
pub const BENCH_PROVISIONAL_N: [u32; 4] = [2, 4, 6, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub rate_hz: f64,
    pub provisional_n: u32,
    pub latency_ms: f64,
    /// 1-based index of the sample on which the detector reported the
    /// provisional fixation.
    pub fired_at_sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellRow {
    pub rate_hz: f64,
    pub arm_samples: usize,
    pub commit_samples: usize,
    pub arm_ms: f64,
    pub commit_ms: f64,
    pub armed_at_sample: Option<usize>,
    pub committed_at_sample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandingReport {
    pub rate_hz: f64,
    pub saccades: usize,
    /// Saccades that produced exactly one prediction.
    pub predicted_once: usize,
    /// Predictions issued at or after the saccade's last sample.
    pub late: usize,
    pub median_error: f64,
    pub max_error: f64,
    /// Error of every saccade with a prediction, as a fraction of amplitude.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub latency: Vec<LatencyRow>,
    pub dwell: Vec<DwellRow>,
    pub landing: Vec<LandingReport>,
}

fn constant_stream(rate_hz: f64, n: usize, p: Point) -> Vec<GazeSample> {
    (0..n)
        .map(|k| GazeSample::new((k as f64 * 1000.0 / rate_hz).round() as i64, p.x, p.y))
        .collect()
}

pub fn latency_table(rates: &[f64], ns: &[u32]) -> Vec<LatencyRow> {
    let mut rows = Vec::new();
    for &rate_hz in rates {
        for &n in ns {
            let params = DetectorParams {
                provisional_n: n,
                ..Default::default()
            };
            let fired_at_sample = FixationDetector::new(params, StreamConfig::with_rate(rate_hz).expect("bench rate"))
                .ok()
                .and_then(|mut det| {
                    constant_stream(rate_hz, n as usize + 4, Point::new(640.0, 512.0))
                        .into_iter()
                        .position(|s| {
                            det.push_sample(s)
                                .expect("ordered stream")
                                .iter()
                                .any(|e| e.kind == FixEventKind::Provisional)
                        })
                        .map(|i| i + 1)
                });
            rows.push(LatencyRow {
                rate_hz,
                provisional_n: n,
                latency_ms: samples_to_ms(n, rate_hz),
                fired_at_sample,
            });
        }
    }
    rows
}

pub fn dwell_table(rates: &[f64], params: DwellParams) -> Vec<DwellRow> {
    let zone = [InterestZone::new(
        "button",
        crate::geometry::Rect::new(600.0, 480.0, 680.0, 544.0),
        "",
    )];
    rates
        .iter()
        .map(|&rate_hz| {
            let counts = params.counts_at(rate_hz);
            let mut det = FixationDetector::new(
                DetectorParams::default(),
                StreamConfig::with_rate(rate_hz).expect("bench rate"),
            )
            .expect("default detector");
            let mut machine = DwellMachine::new(params, rate_hz).expect("valid dwell params");
            let (mut armed, mut committed) = (None, None);
            for (i, s) in constant_stream(rate_hz, counts.commit + 8, Point::new(640.0, 512.0))
                .into_iter()
                .enumerate()
            {
                det.push_sample(s).expect("ordered stream");
                for ev in machine
                    .on_sample_in_fixation(&s, det.open_window(), zone.as_slice())
                    .expect("disjoint zones")
                {
                    match ev.kind {
                        DwellEventKind::Armed => armed = armed.or(Some(i + 1)),
                        DwellEventKind::Committed => committed = committed.or(Some(i + 1)),
                        DwellEventKind::Cancelled => {}
                    }
                }
            }
            DwellRow {
                rate_hz,
                arm_samples: counts.arm,
                commit_samples: counts.commit,
                arm_ms: samples_to_ms(counts.arm as u32, rate_hz),
                commit_ms: samples_to_ms(counts.commit as u32, rate_hz),
                armed_at_sample: armed,
                committed_at_sample: committed,
            }
        })
        .collect()
}

/// Runs the predictor over `count` noise-free saccades of 2°–20° with a
/// symmetric speed profile and duration `2.2·A + 21` ms, starting from the
/// screen centre in a random direction.
pub fn evaluate_landing(
    rate_hz: f64,
    count: usize,
    seed: u64,
    geometry: &ScreenGeometry,
    params: PredictorParams,
) -> LandingReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = Point::new(geometry.width_px / 2.0, geometry.height_px / 2.0);
    let mut errors = Vec::with_capacity(count);
    let (mut predicted_once, mut late) = (0, 0);
    for _ in 0..count {
        let amplitude_deg = rng.gen_range(2.0..=20.0);
        let angle = rng.gen_range(0.0..TAU);
        let profile = if rng.gen_bool(0.5) {
            SpeedProfile::Triangular
        } else {
            SpeedProfile::RaisedCosine
        };
        let amp_px = visual_angle_to_px(amplitude_deg, geometry).expect("positive angle");
        let target = Point::new(origin.x + amp_px * angle.cos(), origin.y + amp_px * angle.sin());
        let spec = ScenarioSpec {
            geometry: *geometry,
            ..ScenarioSpec::new(rate_hz, 0)
        }
        .starting_at(origin)
        .fixate(origin, 200.0, 0.0)
        .saccade(target, 2.2 * amplitude_deg + 21.0, profile)
        .fixate(target, 200.0, 0.0);
        let (samples, truth) = generate(&spec).expect("valid scenario");
        let sacc = &truth.saccades[0];
        let last_in_saccade = samples
            .iter()
            .filter(|s| (s.t_ms as f64) <= sacc.end_ms)
            .map(|s| s.t_ms)
            .max()
            .expect("saccade has samples");

        let mut predictor = SaccadePredictor::new(params, *geometry).expect("valid predictor params");
        let preds: Vec<_> = samples.iter().filter_map(|s| predictor.push_sample(*s)).collect();
        if preds.len() == 1 {
            predicted_once += 1;
        }
        if let Some(p) = preds.first() {
            if p.issued_at_ms >= last_in_saccade {
                late += 1;
            }
            errors.push(p.predicted.distance(target) / amp_px);
        }
    }
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let median_error = match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    };
    LandingReport {
        rate_hz,
        saccades: count,
        predicted_once,
        late,
        median_error,
        max_error: sorted.last().copied().unwrap_or(f64::NAN),
        errors,
    }
}

pub fn run(landing_count: usize, seed: u64, geometry: &ScreenGeometry) -> BenchReport {
    BenchReport {
        latency: latency_table(&BENCH_RATES, &BENCH_PROVISIONAL_N),
        dwell: dwell_table(&BENCH_RATES, DwellParams::default()),
        landing: BENCH_RATES
            .iter()
            .map(|&r| evaluate_landing(r, landing_count, seed, geometry, PredictorParams::default()))
            .collect(),
    }
}

fn sample_no(v: Option<usize>) -> String {
    v.map_or_else(|| "-".into(), |i| i.to_string())
}

pub fn render(report: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "provisional fixation latency");
    let _ = writeln!(s, "{:>8} {:>4} {:>12} {:>10}", "rate_hz", "n", "latency_ms", "fired_at");
    for r in &report.latency {
        let _ = writeln!(
            s,
            "{:>8} {:>4} {:>12.2} {:>10}",
            r.rate_hz,
            r.provisional_n,
            r.latency_ms,
            sample_no(r.fired_at_sample)
        );
    }
    let _ = writeln!(s, "\ndwell timing");
    let _ = writeln!(
        s,
        "{:>8} {:>5} {:>7} {:>9} {:>10} {:>9} {:>10}",
        "rate_hz", "arm_n", "arm_ms", "armed_at", "commit_n", "commit_ms", "commit_at"
    );
    for r in &report.dwell {
        let _ = writeln!(
            s,
            "{:>8} {:>5} {:>7.2} {:>9} {:>10} {:>9.2} {:>10}",
            r.rate_hz,
            r.arm_samples,
            r.arm_ms,
            sample_no(r.armed_at_sample),
            r.commit_samples,
            r.commit_ms,
            sample_no(r.committed_at_sample)
        );
    }
    let _ = writeln!(s, "\nlanding prediction error (fraction of amplitude)");
    let _ = writeln!(
        s,
        "{:>8} {:>9} {:>8} {:>5} {:>8} {:>8}",
        "rate_hz", "saccades", "one_pred", "late", "median", "max"
    );
    for r in &report.landing {
        let _ = writeln!(
            s,
            "{:>8} {:>9} {:>8} {:>5} {:>8.4} {:>8.4}",
            r.rate_hz, r.saccades, r.predicted_once, r.late, r.median_error, r.max_error
        );
    }
    s
}
