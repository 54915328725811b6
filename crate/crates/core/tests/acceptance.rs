//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use common::{brute_force_rank, random_record, random_scenario, resolver_case, rng};
use gazeflow::bench::evaluate_landing;
use gazeflow::deictic::{rank_referents, ResolverWeights};
use gazeflow::dwell::{DwellEventKind, DwellMachine, DwellParams};
use gazeflow::fixation::{detect_batch, DetectorParams, FixEventKind, Fixation, FixationDetector};
use gazeflow::geometry::{samples_to_ms, GazeSample, Point, Rect, ScreenGeometry, StreamConfig};
use gazeflow::lens::{ContingentLens, LensParams};
use gazeflow::map::{apply_command, overview_rect, MapCommand, MapState, PanDirection, ZOOM_LEVELS};
use gazeflow::saccade::PredictorParams;
use gazeflow::synth::generate;
use gazeflow::trace::{InterestZone, Trace};
use rand::Rng;

const BIN: &str = env!("CARGO_BIN_EXE_gazeflow");

/// Half of 2·600·tan(2.5°)·3.7795 px, evaluated at 30 digits.
const LENS_RADIUS_PX: f64 = 99.009_920_233_632_8;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Fixations rebuilt from the detector's End events, one sample at a time.
fn streamed(samples: &[GazeSample], params: DetectorParams, cfg: StreamConfig) -> Vec<Fixation> {
    let mut det = FixationDetector::new(params, cfg).unwrap();
    let mut out = Vec::new();
    for s in samples {
        for ev in det.push_sample(*s).unwrap() {
            if ev.kind == FixEventKind::End {
                out.push(ev.fixation);
            }
        }
    }
    out.extend(det.flush().into_iter().map(|e| e.fixation));
    out
}

fn stream_equals_batch() -> Outcome {
    let started = Instant::now();
    let mut total = 0;
    for seed in 0..1000 {
        let spec = random_scenario(seed);
        let (samples, _) = generate(&spec).unwrap();
        let cfg = StreamConfig::with_rate(spec.rate_hz).unwrap();
        let params = DetectorParams::default();
        let s = streamed(&samples, params, cfg);
        let b = detect_batch(&samples, params, cfg).unwrap();
        ensure!(
            s.len() == b.len(),
            "seed {seed}: {} streamed vs {} batch",
            s.len(),
            b.len()
        );
        for (x, y) in s.iter().zip(&b) {
            ensure!(
                (x.start_ms, x.end_ms, x.n_samples) == (y.start_ms, y.end_ms, y.n_samples),
                "seed {seed}: boundaries differ"
            );
            ensure!(
                x.centroid().distance(y.centroid()) <= 1e-9,
                "seed {seed}: centroid differs"
            );
        }
        total += b.len();
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "1000 scenarios, {total} fixations, {:.2} s",
        elapsed.as_secs_f64()
    ))
}

fn dwell_timing() -> Outcome {
    let zone = [InterestZone::new("button", Rect::new(560.0, 460.0, 720.0, 560.0), "")];
    let mut det = FixationDetector::new(DetectorParams::default(), StreamConfig::default()).unwrap();
    let mut dwell = DwellMachine::new(DwellParams::default(), 60.0).unwrap();
    // constant up to a small deterministic jitter so the mean is informative
    let samples: Vec<GazeSample> = (0..30)
        .map(|k| {
            let j = (k as f64 * 1.3).sin() * 2.0;
            GazeSample::new((k as f64 * 1000.0 / 60.0).round() as i64, 640.0 + j, 510.0 - j)
        })
        .collect();
    let mut armed = None;
    let mut committed = None;
    for (i, s) in samples.iter().enumerate() {
        det.push_sample(*s).unwrap();
        for ev in dwell
            .on_sample_in_fixation(s, det.open_window(), zone.as_slice())
            .unwrap()
        {
            match ev.kind {
                DwellEventKind::Armed => armed = Some(i + 1),
                DwellEventKind::Committed => committed = Some((i + 1, ev.point.unwrap())),
                DwellEventKind::Cancelled => return Err(format!("cancelled at sample {}", i + 1)),
            }
        }
    }
    ensure!(armed == Some(10), "armed at {armed:?}");
    let (at, point) = committed.ok_or("never committed")?;
    ensure!(at == 22, "committed at {at}");
    let mean = Point::mean(samples[..22].iter().map(GazeSample::point)).unwrap();
    ensure!(point.distance(mean) < 1e-9, "commit point {point:?} vs {mean:?}");
    Ok(format!(
        "armed @10 ({:.2} ms), committed @22 ({:.2} ms), point = mean of 22",
        samples_to_ms(10, 60.0),
        samples_to_ms(22, 60.0)
    ))
}

fn lens_geometry() -> Outcome {
    let mut lens = ContingentLens::new(LensParams::default(), &ScreenGeometry::default()).unwrap();
    let r = lens.radius_px();
    ensure!((r - LENS_RADIUS_PX).abs() < 0.1, "radius {r}");
    let mut det = FixationDetector::new(DetectorParams::default(), StreamConfig::default()).unwrap();
    let pts: Vec<Point> = (0..8)
        .map(|k| Point::new(400.0 + (k * 3 % 7) as f64, 300.0 - (k * 5 % 4) as f64))
        .collect();
    let mut anchors = Vec::new();
    for (k, p) in pts.iter().enumerate() {
        for ev in det.push_sample(GazeSample::new(k as i64 * 17, p.x, p.y)).unwrap() {
            anchors.extend(lens.on_fix_event(&ev));
        }
    }
    ensure!(anchors.len() == 1, "{} anchors", anchors.len());
    let want = Point::mean(pts[..4].iter().copied()).unwrap();
    ensure!(
        anchors[0].center.distance(want) < 1e-9,
        "anchor {:?} vs {want:?}",
        anchors[0].center
    );

    let out = Command::new(BIN)
        .args(["bench", "--saccades", "10", "--json"])
        .output()
        .unwrap();
    ensure!(out.status.success(), "bench failed");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let latency = |rate: f64| {
        v["latency"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["rate_hz"] == rate && r["provisional_n"] == 4)
            .and_then(|r| r["latency_ms"].as_f64())
    };
    let (l60, l240) = (
        latency(60.0).ok_or("no 60 Hz row")?,
        latency(240.0).ok_or("no 240 Hz row")?,
    );
    ensure!(
        (l60 - 66.67).abs() < 0.005 && (l240 - 16.67).abs() < 0.005,
        "latency {l60} / {l240}"
    );
    Ok(format!(
        "radius {r:.4} px, anchor = mean of 4, bench {l60:.2} ms @60 Hz, {l240:.2} ms @240 Hz"
    ))
}

fn landing_prediction() -> Outcome {
    let r = evaluate_landing(240.0, 200, 1, &ScreenGeometry::default(), PredictorParams::default());
    ensure!(
        r.predicted_once == r.saccades,
        "{} of {} predicted exactly once",
        r.predicted_once,
        r.saccades
    );
    ensure!(r.late == 0, "{} late predictions", r.late);
    ensure!(r.median_error < 0.05, "median {:.4}", r.median_error);
    ensure!(r.max_error < 0.10, "max {:.4}", r.max_error);
    Ok(format!(
        "240 Hz, {} saccades, median {:.2}%, max {:.2}%",
        r.saccades,
        r.median_error * 100.0,
        r.max_error * 100.0
    ))
}

fn deictic_resolver() -> Outcome {
    for seed in 0..500 {
        let (u, fx, zones) = resolver_case(seed);
        let w = ResolverWeights::default();
        let got = rank_referents(&u, &fx, &zones, &w).map_err(|e| e.to_string())?;
        ensure!(
            got == brute_force_rank(&u, &fx, &zones, &w),
            "seed {seed}: differs from oracle"
        );
        let c = (2 * rng(seed).gen_range(0..50) + 1) as f64 * 0.125;
        let scaled = rank_referents(&u, &fx, &zones, &w.scaled(c)).map_err(|e| e.to_string())?;
        ensure!(
            got.iter().map(|s| &s.zone).eq(scaled.iter().map(|s| &s.zone)),
            "seed {seed}: order changes under scale {c}"
        );
    }
    Ok("500 cases equal the oracle; order invariant under scaling".into())
}

fn replay_wall_ms(speed: &str) -> f64 {
    let t = Instant::now();
    let status = Command::new(BIN)
        .args(["replay", "--speed", speed, &fixture("replay_2s.gtr")])
        .stdout(Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    t.elapsed().as_secs_f64() * 1000.0
}

fn trace_round_trip() -> Outcome {
    let mut r = rng(6);
    let trace = Trace::new((0..100_000).map(|_| random_record(&mut r)).collect());
    let back = Trace::parse_str(&trace.to_text()).map_err(|e| e.to_string())?;
    ensure!(back == trace, "round trip differs");
    let (one, two) = (replay_wall_ms("1"), replay_wall_ms("2"));
    let ratio = two / one;
    ensure!(
        (ratio - 0.5).abs() <= 0.05,
        "speed 2 / speed 1 = {ratio:.3} ({two:.0} / {one:.0} ms)"
    );
    Ok(format!(
        "10^5 records; replay {one:.0} ms at 1x, {two:.0} ms at 2x (ratio {ratio:.3})"
    ))
}

fn map_controller() -> Outcome {
    let mut r = rng(7);
    let mut commands = 0;
    for i in 0..10_000 {
        let (w, h) = (r.gen_range(100.0..8000.0), r.gen_range(100.0..8000.0));
        let mut s = MapState::new(w, h, r.gen_range(1.0..600.0)).unwrap();
        for _ in 0..r.gen_range(1..30) {
            let cmd = match r.gen_range(0..3) {
                0 => MapCommand::Pan {
                    direction: [
                        PanDirection::Left,
                        PanDirection::Right,
                        PanDirection::Up,
                        PanDirection::Down,
                    ][r.gen_range(0..4)],
                },
                1 => MapCommand::SetZoom {
                    index: r.gen_range(0..ZOOM_LEVELS),
                },
                _ => MapCommand::FocusCommit {
                    point: Point::new(r.gen_range(-0.2 * w..1.2 * w), r.gen_range(-0.2 * h..1.2 * h)),
                },
            };
            s = apply_command(&s, cmd).map_err(|e| e.to_string())?;
            commands += 1;
            let rect = overview_rect(&s);
            ensure!(
                s.overview_bounds().contains_rect(&rect),
                "sequence {i}: {rect:?} out of bounds"
            );
            let (ew, eh) = (w / s.zoom_factor(), h / s.zoom_factor());
            ensure!(
                (rect.width() - ew).abs() <= 1e-9 * ew && (rect.height() - eh).abs() <= 1e-9 * eh,
                "sequence {i}: size {}x{} vs {ew}x{eh}",
                rect.width(),
                rect.height()
            );
        }
    }
    Ok(format!("10^4 sequences, {commands} commands"))
}

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("1 stream/batch fixation equivalence", stream_equals_batch),
        ("2 dwell timing", dwell_timing),
        ("3 lens geometry and latency", lens_geometry),
        ("4 landing prediction", landing_prediction),
        ("5 deictic resolver", deictic_resolver),
        ("6 trace round trip and replay speed", trace_round_trip),
        ("7 map controller", map_controller),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| (*s).to_owned()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
