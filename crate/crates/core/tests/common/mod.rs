#![allow(dead_code)]

use gazeflow::deictic::{ReferentScore, ResolverWeights, UtteranceInterval};
use gazeflow::fixation::Fixation;
use gazeflow::geometry::{visual_angle_to_px, Point, Rect, ScreenGeometry, ZoneId};
use gazeflow::synth::{ScenarioSpec, SpeedProfile};
use gazeflow::trace::{EventSource, InterestZone, RecordBody, Segment, TraceRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn screen_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.gen_range(80.0..1200.0), rng.gen_range(80.0..944.0))
}

/// Fixations, saccades and blinks at 60 or 240 Hz with noise up to 0.3 of
/// the default dispersion threshold.
pub fn random_scenario(seed: u64) -> ScenarioSpec {
    let mut rng = rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let rate = if rng.gen_bool(0.5) { 60.0 } else { 240.0 };
    let threshold = visual_angle_to_px(1.0, &ScreenGeometry::default()).unwrap();
    let mut p = screen_point(&mut rng);
    let mut spec = ScenarioSpec::new(rate, seed).starting_at(p);
    if rng.gen_bool(0.5) {
        spec.pupil_mm = Some(rng.gen_range(2.0..6.0));
    }
    for _ in 0..rng.gen_range(2..8) {
        spec = spec.fixate(p, rng.gen_range(30.0..700.0), rng.gen_range(0.0..0.3) * threshold);
        if rng.gen_bool(0.15) {
            spec = spec.blink(rng.gen_range(50.0..250.0));
        } else {
            p = screen_point(&mut rng);
            let profile = if rng.gen_bool(0.5) {
                SpeedProfile::Triangular
            } else {
                SpeedProfile::RaisedCosine
            };
            spec = spec.saccade(p, rng.gen_range(15.0..80.0), profile);
        }
    }
    spec.fixate(p, rng.gen_range(30.0..700.0), rng.gen_range(0.0..0.3) * threshold)
}

fn milli(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-5_000_000i64..5_000_000) as f64 / 1000.0
}

fn text(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[char] = &['a', 'Z', '0', ' ', '\t', '\n', '\r', '\\', 'é', '→', '-', '#'];
    (0..rng.gen_range(0..12))
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())])
        .collect()
}

/// Any record kind, with floats on the 3-decimal grid so the text form is exact.
pub fn random_record(rng: &mut ChaCha8Rng) -> TraceRecord {
    let t_ms = rng.gen_range(-1000i64..10_000_000);
    let opt = |rng: &mut ChaCha8Rng| rng.gen_bool(0.7).then(|| rng.gen_range(0..9000) as f64 / 1000.0);
    let body = match rng.gen_range(0..8) {
        0 => RecordBody::Gaze {
            x: milli(rng),
            y: milli(rng),
            pupil: opt(rng),
            valid: rng.gen_bool(0.9),
        },
        1 => RecordBody::Pointer {
            x: milli(rng),
            y: milli(rng),
        },
        2 => RecordBody::Event {
            source: if rng.gen_bool(0.5) {
                EventSource::System
            } else {
                EventSource::User
            },
            name: text(rng),
            detail: text(rng),
        },
        3 => RecordBody::Frame { reference: text(rng) },
        4 => RecordBody::Fix(Fixation {
            start_ms: rng.gen_range(-1000..1_000_000),
            end_ms: rng.gen_range(-1000..1_000_000),
            centroid_x_px: milli(rng),
            centroid_y_px: milli(rng),
            n_samples: rng.gen(),
            dispersion_px: milli(rng),
            duration_ms: milli(rng),
            mean_pupil_mm: opt(rng),
        }),
        5 => RecordBody::Zone(InterestZone {
            id: ZoneId(text(rng)),
            rect: Rect::new(milli(rng), milli(rng), milli(rng), milli(rng)),
            label: text(rng),
        }),
        6 => RecordBody::Seg(Segment {
            label: text(rng),
            start_ms: rng.gen(),
            end_ms: rng.gen(),
        }),
        _ => RecordBody::Other {
            kind: ["AUDIO", "GAZE2", "X"][rng.gen_range(0..3)].into(),
            fields: (0..rng.gen_range(0..4))
                .map(|_| text(rng).replace(['\t', '\n', '\r'], "_"))
                .collect(),
        },
    };
    TraceRecord::new(t_ms, body)
}

pub fn fixation(start_ms: i64, end_ms: i64, at: Point) -> Fixation {
    Fixation {
        start_ms,
        end_ms,
        centroid_x_px: at.x,
        centroid_y_px: at.y,
        n_samples: 1,
        dispersion_px: 0.0,
        duration_ms: (end_ms - start_ms) as f64,
        mean_pupil_mm: None,
    }
}

/// Small resolver case on a 4×1 grid of 100 px zones.
pub fn resolver_case(seed: u64) -> (UtteranceInterval, Vec<Fixation>, Vec<InterestZone>) {
    let mut rng = rng(seed);
    let n_zones = rng.gen_range(1..=4);
    let zones: Vec<InterestZone> = (0..n_zones)
        .map(|i| {
            let x0 = i as f64 * 100.0;
            InterestZone::new(format!("z{i}"), Rect::new(x0, 0.0, x0 + 100.0, 100.0), "")
        })
        .collect();
    let start = rng.gen_range(0..3000);
    let utterance = UtteranceInterval::new(start, start + rng.gen_range(0..2000));
    let mut t = rng.gen_range(-500..1000);
    let fixations = (0..rng.gen_range(0..8))
        .map(|_| {
            let s = t + rng.gen_range(0..400);
            let e = s + rng.gen_range(0..700);
            t = e;
            let at = Point::new(rng.gen_range(-20.0..420.0), rng.gen_range(-20.0..120.0));
            // sometimes exactly on a shared edge
            let at = if rng.gen_bool(0.1) { Point::new(100.0, 50.0) } else { at };
            fixation(s, e, at)
        })
        .collect();
    (utterance, fixations, zones)
}

/// Millisecond-by-millisecond accumulation, independent of the interval
/// arithmetic in the resolver.
pub fn brute_force_rank(
    u: &UtteranceInterval,
    fixations: &[Fixation],
    zones: &[InterestZone],
    w: &ResolverWeights,
) -> Vec<ReferentScore> {
    let mut out: Vec<ReferentScore> = zones
        .iter()
        .map(|z| {
            let (mut pre, mut during, mut post) = (0i64, 0i64, 0i64);
            let mut last = None;
            for f in fixations {
                let (cx, cy) = (f.centroid_x_px, f.centroid_y_px);
                let inside = z.rect.x0 <= cx && cx <= z.rect.x1 && z.rect.y0 <= cy && cy <= z.rect.y1;
                if !inside {
                    continue;
                }
                let mut hit = false;
                for t in f.start_ms..f.end_ms {
                    if t >= u.start_ms - w.pre_window_ms && t < u.start_ms {
                        pre += 1;
                        hit = true;
                    } else if t >= u.start_ms && t < u.end_ms {
                        during += 1;
                        hit = true;
                    } else if t >= u.end_ms && t < u.end_ms + w.post_window_ms {
                        post += 1;
                        hit = true;
                    }
                }
                if hit {
                    last = last.max(Some(f.end_ms));
                }
            }
            ReferentScore {
                zone: z.id.clone(),
                score: w.w_pre * pre as f64 + w.w_during * during as f64 + w.w_post * post as f64,
                breakdown: gazeflow::deictic::Breakdown {
                    pre_ms: pre,
                    during_ms: during,
                    post_ms: post,
                },
                last_fixation_ms: last,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(b.last_fixation_ms.cmp(&a.last_fixation_ms))
            .then(a.zone.cmp(&b.zone))
    });
    out
}
