//! `gazeflow` command line.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

mod serve;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench;
use crate::deictic::{assign_deictics, rank_referents, ResolverWeights, UtteranceInterval};
use crate::dwell::DwellParams;
use crate::fixation::{DetectorParams, FixEventKind, FixationDetector};
use crate::geometry::{ScreenGeometry, StreamConfig};
use crate::lens::{Falloff, LensParams};
use crate::pipeline::PipelineConfig;
use crate::saccade::PredictorParams;
use crate::synth::{generate, ScenarioSpec};
use crate::trace::{
    replay, zone_stats_of_trace, InterestZone, RecordBody, ReplayOptions, ReplaySpeed, Segment, Trace, TraceRecord,
};

pub use serve::{serve_lines, ServeSummary};

#[derive(Debug, Parser)]
#[command(name = "gazeflow", version, about = "Real-time gaze interaction engine")]
struct Cli {
    /// Screen geometry as "viewing_distance_mm,px_per_mm,width_px,height_px".
    #[arg(long, global = true, env = "GAZE_GEOMETRY", value_parser = parse_geometry,
          default_value = "600,3.7795,1280,1024")]
    geometry: ScreenGeometry,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect fixations in the GAZE records of a trace.
    Detect(DetectArgs),
    /// Re-emit a trace with its original timing.
    Replay(ReplayArgs),
    /// Generate a synthetic trace from an NDJSON scenario.
    Simulate(SimulateArgs),
    /// Rank zones as referents of an utterance.
    Resolve(ResolveArgs),
    /// Per-zone fixation counts, durations and pupil means.
    Stats(StatsArgs),
    /// Print latency, dwell timing and landing-error tables.
    Bench(BenchArgs),
    /// Run the interaction pipeline over NDJSON wire messages.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
struct DetectorOpts {
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = 60.0)]
    rate: f64,
    /// Maximum window dispersion in degrees of visual angle (the tracker's
    /// 1° spread at 60 Hz).
    #[arg(long = "dispersion-deg", default_value_t = 1.0)]
    dispersion_deg: f64,
    /// Minimum fixation duration in ms.
    #[arg(long = "min-ms", default_value_t = 100.0)]
    min_ms: f64,
    /// Samples before a provisional fixation is reported (4 samples ≈ 70 ms
    /// at 60 Hz, the lens anchor).
    #[arg(long = "provisional-n", default_value_t = 4)]
    provisional_n: u32,
}

impl DetectorOpts {
    fn params(&self) -> DetectorParams {
        DetectorParams {
            dispersion_max_deg: self.dispersion_deg,
            min_duration_ms: self.min_ms,
            provisional_n: self.provisional_n,
        }
    }

    fn stream(&self, geometry: ScreenGeometry) -> Result<StreamConfig, CliError> {
        StreamConfig::new(self.rate, geometry).map_err(data)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Gtr,
    Ndjson,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    detector: DetectorOpts,
    #[arg(long, value_enum, default_value_t = Format::Gtr)]
    format: Format,
    /// Input trace; `-` or absent reads standard input.
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Playback speed factor.
    #[arg(long, default_value_t = 1.0, conflicts_with = "fast")]
    speed: f64,
    /// Emit as fast as possible.
    #[arg(long)]
    fast: bool,
    /// Inject FIX records derived from the GAZE records.
    #[arg(long = "derive-fix")]
    derive_fix: bool,
    #[command(flatten)]
    detector: DetectorOpts,
    #[arg(long, value_enum, default_value_t = Format::Gtr)]
    format: Format,
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Also write the ground-truth segments as SEG records.
    #[arg(long)]
    truth: bool,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// NDJSON scenario; `-` or absent reads standard input.
    scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ZoneOpts {
    /// Trace whose ZONE records define the zones (default: the input's own).
    #[arg(long)]
    zones: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ResolveArgs {
    #[command(flatten)]
    zones: ZoneOpts,
    /// Utterance interval "start_ms,end_ms"; otherwise the SEG record
    /// labelled `--utterance-label`.
    #[arg(long, value_parser = parse_interval)]
    utterance: Option<(i64, i64)>,
    #[arg(long = "utterance-label", default_value = "utterance")]
    utterance_label: String,
    /// Number of deictic references ("that", "there") to assign.
    #[arg(long, default_value_t = 1)]
    deictics: u32,
    /// Weight of fixation time before the utterance.
    #[arg(long = "w-pre", default_value_t = 0.5)]
    w_pre: f64,
    /// Weight of fixation time during the utterance.
    #[arg(long = "w-during", default_value_t = 1.0)]
    w_during: f64,
    /// Weight of fixation time after the utterance (users tend to look at
    /// the object once they have finished speaking).
    #[arg(long = "w-post", default_value_t = 2.0)]
    w_post: f64,
    #[arg(long = "pre-window-ms", default_value_t = 1500)]
    pre_window_ms: i64,
    #[arg(long = "post-window-ms", default_value_t = 1500)]
    post_window_ms: i64,
    #[command(flatten)]
    detector: DetectorOpts,
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    zones: ZoneOpts,
    #[command(flatten)]
    detector: DetectorOpts,
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Synthetic saccades per rate in the landing table.
    #[arg(long, default_value_t = 200)]
    saccades: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Read from standard input, write to standard output (the default).
    #[arg(long, conflicts_with_all = ["listen", "ws"])]
    stdio: bool,
    /// Serve newline-delimited messages on a TCP address.
    #[arg(long, value_name = "ADDR", conflicts_with = "ws")]
    listen: Option<String>,
    /// Serve the same messages as WebSocket text frames, for browsers.
    #[arg(long, value_name = "ADDR")]
    ws: Option<String>,
    /// Exit after the first connection closes.
    #[arg(long)]
    once: bool,
    #[command(flatten)]
    detector: DetectorOpts,
    /// Dwell samples before the warning circle appears (10 at 60 Hz ≈ 170 ms).
    #[arg(long = "dwell-arm", default_value_t = 10)]
    dwell_arm: u32,
    /// Further samples until the command fires (12 at 60 Hz ≈ 200 ms).
    #[arg(long = "dwell-commit-extra", default_value_t = 12)]
    dwell_commit_extra: u32,
    /// Samples averaged into the committed point (the first 22).
    #[arg(long = "dwell-average", default_value_t = 22)]
    dwell_average: u32,
    /// Lens diameter in degrees of visual angle (5° foveal field).
    #[arg(long = "lens-deg", default_value_t = 5.0)]
    lens_deg: f64,
    /// Width of a smooth resolution ramp around the lens, in degrees.
    #[arg(long = "lens-ramp-deg")]
    lens_ramp_deg: Option<f64>,
    /// Saccade onset speed in °/s.
    #[arg(long = "onset-deg-s", default_value_t = 100.0)]
    onset_deg_s: f64,
    /// Zones reported in `zone_stats` when a session ends.
    #[command(flatten)]
    zones: ZoneOpts,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn parse_geometry(s: &str) -> Result<ScreenGeometry, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let [d, ppm, w, h] = parts[..] else {
        return Err(format!("expected 4 comma-separated numbers, got {}", parts.len()));
    };
    ScreenGeometry::new(d, ppm, w, h).map_err(|e| e.to_string())
}

fn parse_interval(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected start_ms,end_ms")?;
    let a = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let geometry = cli.geometry;
    let result = match cli.command {
        Command::Detect(a) => detect(a, geometry),
        Command::Replay(a) => replay_cmd(a, geometry),
        Command::Simulate(a) => simulate(a),
        Command::Resolve(a) => resolve(a, geometry),
        Command::Stats(a) => stats(a, geometry),
        Command::Bench(a) => bench_cmd(a, geometry),
        Command::Serve(a) => serve::serve(a, geometry),
    };
    match result {
        // a closed downstream pipe (`| head`) is not an error
        Err(CliError::Data(msg)) if msg.contains("Broken pipe") => Ok(()),
        other => other,
    }
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>, CliError> {
    match path {
        None => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(BufReader::new(io::stdin()))),
        Some(p) => {
            let f = File::open(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufReader::new(f)))
        }
    }
}

fn read_trace(path: Option<&Path>) -> Result<Trace, CliError> {
    Trace::read(open_input(path)?).map_err(data)
}

fn emit(out: &mut impl Write, rec: &TraceRecord, format: Format) -> io::Result<()> {
    match format {
        Format::Gtr => writeln!(out, "{}", rec.to_line()),
        Format::Ndjson => writeln!(out, "{}", rec.to_json()),
    }
}

fn detect(args: DetectArgs, geometry: ScreenGeometry) -> Result<(), CliError> {
    let trace = read_trace(args.input.as_deref())?;
    let mut det = FixationDetector::new(args.detector.params(), args.detector.stream(geometry)?).map_err(data)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut last_t = 0;
    for rec in &trace.records {
        let Some(sample) = rec.as_gaze_sample() else {
            continue;
        };
        last_t = sample.t_ms;
        for ev in det.push_sample(sample).map_err(data)? {
            if ev.kind == FixEventKind::End {
                emit(&mut out, &TraceRecord::fix(sample.t_ms, ev.fixation), args.format).map_err(data)?;
            }
        }
    }
    for ev in det.flush() {
        emit(&mut out, &TraceRecord::fix(last_t, ev.fixation), args.format).map_err(data)?;
    }
    out.flush().map_err(data)
}

fn replay_cmd(args: ReplayArgs, geometry: ScreenGeometry) -> Result<(), CliError> {
    if !(args.speed > 0.0) {
        return Err(CliError::Usage(format!("--speed must be > 0, got {}", args.speed)));
    }
    let trace = read_trace(args.input.as_deref())?;
    let mut options = ReplayOptions {
        speed: if args.fast {
            ReplaySpeed::Unthrottled
        } else {
            ReplaySpeed::Factor(args.speed)
        },
        derive_fixations: None,
    };
    if args.derive_fix {
        options = options.deriving(args.detector.params(), args.detector.stream(geometry)?);
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut failure = None;
    replay(&trace.records, &options, |rec| {
        if failure.is_none() {
            if let Err(e) = emit(&mut out, &rec, args.format).and_then(|_| out.flush()) {
                failure = Some(e);
            }
        }
    })
    .map_err(data)?;
    match failure {
        Some(e) => Err(data(e)),
        None => Ok(()),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut text = String::new();
    open_input(args.scenario.as_deref())?
        .read_to_string(&mut text)
        .map_err(data)?;
    let spec = ScenarioSpec::from_ndjson(&text).map_err(data)?;
    let (samples, truth) = generate(&spec).map_err(data)?;
    let mut records: Vec<TraceRecord> = samples.iter().map(TraceRecord::gaze).collect();
    if args.truth {
        let seg = |label: &str, s: f64, e: f64| {
            TraceRecord::new(
                s.round() as i64,
                RecordBody::Seg(Segment {
                    label: label.into(),
                    start_ms: s.round() as i64,
                    end_ms: e.round() as i64,
                }),
            )
        };
        records.extend(truth.fixations.iter().map(|f| seg("fixate", f.start_ms, f.end_ms)));
        records.extend(truth.saccades.iter().map(|s| seg("saccade", s.start_ms, s.end_ms)));
        records.extend(truth.blinks.iter().map(|&(s, e)| seg("blink", s, e)));
    }
    let mut trace = Trace::new(records);
    trace.sort();
    match args.output {
        Some(path) => {
            let f = File::create(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            trace.write(&mut w).and_then(|_| w.flush()).map_err(data)
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            trace.write(&mut w).and_then(|_| w.flush()).map_err(data)
        }
    }
}

fn load_zones(opts: &ZoneOpts, trace: &Trace) -> Result<Vec<InterestZone>, CliError> {
    let zones = match &opts.zones {
        Some(p) => read_trace(Some(p))?.zones(),
        None => trace.zones(),
    };
    if zones.is_empty() {
        return Err(data("no ZONE records found"));
    }
    Ok(zones)
}

fn resolve(args: ResolveArgs, geometry: ScreenGeometry) -> Result<(), CliError> {
    let trace = read_trace(args.input.as_deref())?;
    let zones = load_zones(&args.zones, &trace)?;
    let (start_ms, end_ms) = match args.utterance {
        Some(iv) => iv,
        None => {
            let seg = trace
                .segments()
                .into_iter()
                .find(|s| s.label == args.utterance_label)
                .ok_or_else(|| data(format!("no SEG record labelled {:?}", args.utterance_label)))?;
            (seg.start_ms, seg.end_ms)
        }
    };
    let utterance = UtteranceInterval {
        start_ms,
        end_ms,
        deictic_count: args.deictics,
    };
    let weights = ResolverWeights {
        w_pre: args.w_pre,
        w_during: args.w_during,
        w_post: args.w_post,
        pre_window_ms: args.pre_window_ms,
        post_window_ms: args.post_window_ms,
    };
    let mut fixations = trace.fixations();
    if fixations.is_empty() {
        fixations = crate::fixation::detect_batch(
            &trace.gaze_samples(),
            args.detector.params(),
            args.detector.stream(geometry)?,
        )
        .map_err(data)?;
    }
    let ranked = rank_referents(&utterance, &fixations, &zones, &weights).map_err(data)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for r in &ranked {
        writeln!(out, "{}", serde_json::to_string(r).expect("serializable")).map_err(data)?;
    }
    if args.deictics > 1 {
        let assigned = assign_deictics(&utterance, &fixations, &zones, &weights).map_err(data)?;
        writeln!(out, "{}", serde_json::json!({ "assigned": assigned })).map_err(data)?;
    }
    out.flush().map_err(data)
}

fn stats(args: StatsArgs, geometry: ScreenGeometry) -> Result<(), CliError> {
    let trace = read_trace(args.input.as_deref())?;
    let zones = load_zones(&args.zones, &trace)?;
    let derive = Some((args.detector.params(), args.detector.stream(geometry)?));
    let stats = zone_stats_of_trace(&trace, &zones, derive).map_err(data)?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for s in &stats {
        writeln!(out, "{}", serde_json::to_string(s).expect("serializable")).map_err(data)?;
    }
    out.flush().map_err(data)
}

fn bench_cmd(args: BenchArgs, geometry: ScreenGeometry) -> Result<(), CliError> {
    let report = bench::run(args.saccades, args.seed, &geometry);
    let text = if args.json {
        serde_json::to_string_pretty(&report).expect("serializable") + "\n"
    } else {
        bench::render(&report)
    };
    io::stdout().write_all(text.as_bytes()).map_err(data)
}

fn pipeline_config(args: &ServeArgs, geometry: ScreenGeometry) -> Result<PipelineConfig, CliError> {
    let stream = args.detector.stream(geometry)?;
    let zones = match &args.zones.zones {
        Some(p) => read_trace(Some(p))?.zones(),
        None => Vec::new(),
    };
    Ok(PipelineConfig {
        detector: args.detector.params(),
        dwell: DwellParams {
            n_arm: args.dwell_arm,
            n_commit_extra: args.dwell_commit_extra,
            n_commit_total: args.dwell_average,
            repeat: false,
        },
        lens: LensParams {
            n_anchor: args.detector.provisional_n,
            theta_deg: args.lens_deg,
            falloff: args
                .lens_ramp_deg
                .map_or(Falloff::Step, |ramp_deg| Falloff::Smooth { ramp_deg }),
        },
        predictor: PredictorParams {
            onset_deg_s: args.onset_deg_s,
            rest_deg_s: PredictorParams::default().rest_deg_s.min(args.onset_deg_s),
            ..Default::default()
        },
        zones,
        ..PipelineConfig::for_stream(stream)
    })
}
