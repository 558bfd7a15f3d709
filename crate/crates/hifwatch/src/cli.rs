//! Command implementations behind the `hifwatch` binary.
//!
//! Exit codes: 0 success, 1 I/O or pipeline failure, 2 bad config key,
//! 3 malformed CSV, 4 sample-rate mismatch, 5 schedule/report mismatch.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{self, ConfigError, Settings};
use crate::detector::{self, Evaluation, GroundTruth, TOOL_VERSION};
use crate::io::{self, CsvError};
use crate::wavesim::{self, EventSchedule, SimConfig};

/// Relative tolerance between a file's sample rate and the configured one.
pub const RATE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "hifwatch", version, about = "Arcing fault synthesis and detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a waveform CSV and a schedule echo.
    Simulate(RunArgs),
    /// Run the detector on a waveform CSV.
    Detect(RunArgs),
    /// Score a detection report against a schedule.
    Evaluate(RunArgs),
    /// Export downsampled plot series from a detect output directory.
    Report(RunArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct RunArgs {
    /// Config file path or preset name (case_a, case_b).
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Overrides sim.rng_seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Allow overwriting existing output files.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 1)]
    pub downsample: usize,
    /// Schedule echo written by `simulate` (evaluate only).
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Waveform CSV for the current series (report only).
    #[arg(long)]
    pub waveform: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("malformed csv: {0}")]
    Csv(CsvError),
    #[error("sample rate mismatch: file has {found} Hz, config expects {expected} Hz")]
    SampleRate { expected: f64, found: f64 },
    #[error("schedule does not match report: {0}")]
    ScheduleMismatch(String),
    #[error("{0}")]
    Io(String),
    #[error("refusing to overwrite {0} (pass --force)")]
    Exists(PathBuf),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Csv(CsvError::Malformed { .. }) => 3,
            CliError::SampleRate { .. } => 4,
            CliError::ScheduleMismatch(_) => 5,
            _ => 1,
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Csv(other),
        }
    }
}

/// Written next to the waveform by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEcho {
    pub tool_version: String,
    pub sim: SimConfig,
    pub schedule: EventSchedule,
    pub waveform_digest: String,
    pub samples: usize,
    pub sample_rate: f64,
    pub record_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub input_digest: String,
    pub faults: usize,
    pub detection_rate: f64,
    pub false_positive_count: usize,
    pub benign_window_detections: usize,
    pub evaluation: Evaluation,
}

pub const WAVEFORM_FILE: &str = "waveform.csv";
pub const SCHEDULE_FILE: &str = "schedule.json";
pub const REPORT_FILE: &str = "report.json";
pub const SCORES_FILE: &str = "scores.csv";
pub const NORM_FILE: &str = "norm_scores.csv";
pub const FORCING_FILE: &str = "forcing.csv";
pub const NODES_FILE: &str = "graph_nodes.csv";
pub const EDGES_FILE: &str = "graph_edges.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const BUNDLE_FILES: [&str; 4] = ["current.csv", "forcing_magnitude.csv", "anomaly_score.csv", "threshold.csv"];

fn settings(args: &RunArgs) -> Result<Settings, CliError> {
    let mut s = match &args.config {
        Some(source) => config::load(source)?,
        None => config::load_defaults()?,
    };
    if let Some(seed) = args.seed {
        s.sim.rng_seed = seed;
    }
    Ok(s)
}

fn prepare_outputs(dir: &Path, names: &[&str], force: bool) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let paths: Vec<PathBuf> = names.iter().map(|n| dir.join(n)).collect();
    if !force {
        if let Some(p) = paths.iter().find(|p| p.exists()) {
            return Err(CliError::Exists(p.clone()));
        }
    }
    Ok(paths)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn required<'a>(opt: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    opt.as_deref().ok_or_else(|| CliError::Io(format!("--{flag} is required")))
}

pub fn simulate(args: &RunArgs) -> Result<(), CliError> {
    let s = settings(args)?;
    let w = wavesim::synthesize(&s.sim, &s.schedule).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let paths = prepare_outputs(&args.output, &[WAVEFORM_FILE, SCHEDULE_FILE], args.force)?;
    io::write_waveform(&w, &paths[0])?;
    let echo = ScheduleEcho {
        tool_version: TOOL_VERSION.to_string(),
        sim: s.sim.clone(),
        schedule: s.schedule.clone(),
        waveform_digest: detector::waveform_digest(&w),
        samples: w.len(),
        sample_rate: w.sample_rate.hz(),
        record_duration: w.len() as f64 / w.sample_rate.hz(),
    };
    write_text(&paths[1], &to_json(&echo))
}

fn ground_truth(s: &Settings, w: &wavesim::Waveform) -> Option<GroundTruth> {
    if !s.schedule.is_empty() {
        return Some(GroundTruth { faults: s.schedule.hif_intervals(), benign_onsets: s.schedule.benign_onsets() });
    }
    w.labels.as_ref()?;
    Some(GroundTruth { faults: w.labelled_intervals(), benign_onsets: Vec::new() })
}

pub fn detect(args: &RunArgs) -> Result<(), CliError> {
    let s = settings(args)?;
    let input = required(&args.input, "input")?;
    let file = io::read_waveform(input)?;
    let expected = s.sim.sample_rate();
    if ((file.estimated_rate - expected.hz()) / expected.hz()).abs() > RATE_TOLERANCE {
        return Err(CliError::SampleRate { expected: expected.hz(), found: file.estimated_rate });
    }
    let w = file.with_rate(expected);
    let truth = ground_truth(&s, &w);
    let report = detector::run_pipeline(&w, &s.detector, truth.as_ref())
        .map_err(|e| CliError::Pipeline(e.to_string()))?
        .with_input_path(input.display().to_string());
    let names = [REPORT_FILE, SCORES_FILE, NORM_FILE, FORCING_FILE, NODES_FILE, EDGES_FILE];
    let paths = prepare_outputs(&args.output, &names, args.force)?;
    write_text(&paths[0], &to_json(&report))?;
    io::write_scores(&report, &paths[1])?;
    io::write_norm_scores(&report, &paths[2])?;
    io::write_forcing(&report, &paths[3])?;
    if let Some(g) = &report.subsequence_graph {
        io::write_graph(g, &paths[4], &paths[5])?;
    }
    Ok(())
}

/// The parts of a saved report `evaluate` needs.
#[derive(Debug, Deserialize)]
struct SavedReport {
    input_digest: String,
    record_duration: f64,
    intervals: Vec<detector::DetectedInterval>,
    config: detector::DetectorConfig,
}

pub fn evaluate(args: &RunArgs) -> Result<(), CliError> {
    let report: SavedReport = read_json(required(&args.input, "input")?)?;
    let schedule = match &args.schedule {
        Some(path) => {
            let echo: ScheduleEcho = read_json(path)?;
            if echo.waveform_digest != report.input_digest {
                return Err(CliError::ScheduleMismatch(format!(
                    "schedule echo is for waveform {}, report is for {}",
                    echo.waveform_digest, report.input_digest
                )));
            }
            echo.schedule
        }
        None => settings(args)?.schedule,
    };
    if schedule.is_empty() {
        return Err(CliError::ScheduleMismatch("schedule has no events".into()));
    }
    if let Some(e) = schedule.events().iter().find(|e| e.onset >= report.record_duration) {
        return Err(CliError::ScheduleMismatch(format!(
            "event at {} s lies beyond the {} s record",
            e.onset, report.record_duration
        )));
    }
    let truth = GroundTruth { faults: schedule.hif_intervals(), benign_onsets: schedule.benign_onsets() };
    let d = &report.config.detector;
    let evaluation = detector::evaluate(&report.intervals, &truth, d.match_horizon(), d.system_frequency);
    let metrics = Metrics {
        input_digest: report.input_digest,
        faults: evaluation.faults.len(),
        detection_rate: evaluation.detection_rate,
        false_positive_count: evaluation.false_positives.len(),
        benign_window_detections: evaluation.benign_window_detections,
        evaluation,
    };
    let paths = prepare_outputs(&args.output, &[METRICS_FILE], args.force)?;
    write_text(&paths[0], &to_json(&metrics))
}

#[derive(Debug, Deserialize)]
struct ReportHeader {
    input_path: Option<String>,
    anomaly_threshold: f64,
}

fn column_rows(t: &io::TextTable, time: &str, value: &str, step: usize, path: &Path) -> Result<Vec<String>, CliError> {
    let missing = |c: &str| CliError::Csv(CsvError::Malformed { path: path.display().to_string(), line: 1, reason: format!("missing column {c}") });
    let ti = t.column(time).ok_or_else(|| missing(time))?;
    let vi = t.column(value).ok_or_else(|| missing(value))?;
    Ok(t.rows.iter().step_by(step).map(|r| format!("{},{}", r[ti], r[vi])).collect())
}

pub fn report(args: &RunArgs) -> Result<(), CliError> {
    let step = args.downsample.max(1);
    let input = required(&args.input, "input")?;
    let (dir, scores_path) = if input.is_dir() {
        (input.to_path_buf(), input.join(SCORES_FILE))
    } else {
        (input.parent().map(Path::to_path_buf).unwrap_or_default(), input.to_path_buf())
    };
    let header: ReportHeader = read_json(&dir.join(REPORT_FILE))?;
    let scores = io::read_text_table(&scores_path)?;
    let forcing_path = dir.join(FORCING_FILE);
    let forcing = io::read_text_table(&forcing_path)?;
    let waveform_path = match (&args.waveform, &header.input_path) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(CliError::Io("no waveform path; pass --waveform".into())),
    };
    let current = io::read_text_table(&waveform_path)?;
    let threshold = io::fmt_value(header.anomaly_threshold);
    let ti = scores.column("time_s").ok_or_else(|| CliError::Csv(CsvError::Malformed { path: scores_path.display().to_string(), line: 1, reason: "missing column time_s".into() }))?;

    let bundles = [
        ("time_s,i_primary", column_rows(&current, "time_s", "i_primary", step, &waveform_path)?),
        ("time_s,forcing_magnitude", column_rows(&forcing, "time_s", "forcing_magnitude", step, &forcing_path)?),
        ("time_s,anomaly_score", column_rows(&scores, "time_s", "anomaly_score", step, &scores_path)?),
        ("time_s,anomaly_threshold", scores.rows.iter().step_by(step).map(|r| format!("{},{threshold}", r[ti])).collect()),
    ];
    let paths = prepare_outputs(&args.output, &BUNDLE_FILES, args.force)?;
    for (path, (head, rows)) in paths.iter().zip(bundles) {
        io::write_text_rows(path, head, rows)?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detect(a) => detect(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Report(a) => report(a),
    }
}

/// Parses process arguments, runs, and returns the exit code.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("hifwatch: {e}");
            e.exit_code()
        }
    }
}
