//! Forcing → graph scores → baseline normalization → 3σ rule → intervals.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::havok::{self, ForcingMode, ForcingModel, HavokConfig, HavokError, Timing};
use crate::s2g::{self, S2gConfig, S2gError, ScoreSeries, SubsequenceGraph};
use crate::wavesim::Waveform;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Fewest baseline scores the 3σ statistics are computed from.
pub const MIN_BASELINE_SCORES: usize = 100;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("invalid detector config: {0}")]
    Config(String),
    #[error("baseline holds {got} usable scores, need at least {need}")]
    BaselineTooShort { got: usize, need: usize },
    #[error("havok stage: {0}")]
    Havok(#[from] HavokError),
    #[error("s2g stage: {0}")]
    S2g(#[from] S2gError),
}

/// Thresholding and smoothing settings (the `[detector]` config section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    /// Leading event-free span, seconds.
    pub baseline_span: f64,
    /// Moving-average width in samples, for both forcing magnitude and scores.
    pub smoothing_window: usize,
    pub sigma_multiplier: f64,
    /// Flagged runs shorter than this many seconds are dropped.
    pub min_event_duration: f64,
    /// Fixed normality threshold instead of the adaptive rule.
    pub fixed_theta: Option<f64>,
    /// Matching horizon after a fault onset, in cycles.
    pub match_horizon_cycles: f64,
    /// Used to convert cycle counts to seconds.
    pub system_frequency: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            baseline_span: 0.5,
            smoothing_window: 128,
            sigma_multiplier: 3.0,
            min_event_duration: 0.002,
            fixed_theta: None,
            match_horizon_cycles: 1.0,
            system_frequency: 60.0,
        }
    }
}

impl DetectorSettings {
    pub fn validate(&self) -> Result<(), DetectorError> {
        let bad = |m: &str| Err(DetectorError::Config(m.into()));
        if !(self.baseline_span > 0.0) {
            return bad("baseline_span must be positive");
        }
        if self.smoothing_window < 1 {
            return bad("smoothing_window must be at least 1");
        }
        if !(self.sigma_multiplier > 0.0) {
            return bad("sigma_multiplier must be positive");
        }
        if !(self.min_event_duration >= 0.0) {
            return bad("min_event_duration must be non-negative");
        }
        if !(self.match_horizon_cycles > 0.0) || !(self.system_frequency > 0.0) {
            return bad("match_horizon_cycles and system_frequency must be positive");
        }
        if self.fixed_theta.is_some_and(|t| !t.is_finite()) {
            return bad("fixed_theta must be finite");
        }
        Ok(())
    }

    pub fn match_horizon(&self) -> f64 {
        self.match_horizon_cycles / self.system_frequency
    }
}

/// Everything the pipeline needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub detector: DetectorSettings,
    pub havok: HavokConfig,
    pub s2g: S2gConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub baseline_mean: f64,
    pub baseline_std: f64,
    /// True when the baseline had zero variance and unit variance was assumed.
    pub degenerate_variance: bool,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let (lo, hi) = values.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return (lo, 0.0, n);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    (mean, var.sqrt(), n)
}

/// Centered moving average with edge replication; length is preserved.
pub fn moving_average_centered(x: &[f64], w: usize) -> Vec<f64> {
    let n = x.len();
    if w <= 1 || n == 0 {
        return x.to_vec();
    }
    let left = (w - 1) / 2;
    let right = w - 1 - left;
    let at = |i: isize| x[i.clamp(0, n as isize - 1) as usize];
    let mut out = Vec::with_capacity(n);
    let mut sum: f64 = (-(left as isize)..=right as isize).map(at).sum();
    for p in 0..n as isize {
        out.push(sum / w as f64);
        sum += at(p + right as isize + 1) - at(p - left as isize);
    }
    out
}

/// Trailing moving average over the available prefix; length is preserved.
pub fn moving_average_trailing(x: &[f64], w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut sum = 0.0;
    for (i, &v) in x.iter().enumerate() {
        sum += v;
        if i >= w {
            sum -= x[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// Z-normalizes against scores stamped inside the baseline span, then applies
/// a centered moving average. Timestamps and coverage move with the window.
pub fn normalize_scores(s: &ScoreSeries, w: usize, baseline_end: f64) -> Result<(ScoreSeries, NormalizationStats), DetectorError> {
    if w < 1 {
        return Err(DetectorError::Config("smoothing window must be at least 1".into()));
    }
    let base = s.norm_scores.iter().zip(&s.timestamps).filter(|(_, &t)| t < baseline_end).map(|(v, _)| *v);
    let (mean, std, count) = mean_std(base);
    if count == 0 {
        return Err(DetectorError::BaselineTooShort { got: 0, need: MIN_BASELINE_SCORES });
    }
    let degenerate = !(std > 0.0);
    let scale = if degenerate { 1.0 } else { std };
    let z: Vec<f64> = s.norm_scores.iter().map(|v| (v - mean) / scale).collect();
    let smoothed = moving_average_centered(&z, w);
    let n = s.len();
    let left = (w - 1) / 2;
    let right = w - 1 - left;
    let mut out = ScoreSeries { timestamps: Vec::with_capacity(n), norm_scores: smoothed, coverage: Vec::with_capacity(n) };
    for p in 0..n {
        let hi = (p + right).min(n - 1);
        let lo = p.saturating_sub(left);
        out.timestamps.push(s.timestamps[hi]);
        out.coverage.push((s.coverage[lo].0, s.coverage[hi].1));
    }
    Ok((out, NormalizationStats { baseline_mean: mean, baseline_std: std, degenerate_variance: degenerate }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub theta: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub baseline_positions: usize,
    #[serde(skip)]
    pub mask: Vec<bool>,
}

/// `θ = μ - kσ` over baseline positions whose smoothing window is not clipped
/// by the record start; a position is flagged when its score is below θ.
pub fn three_sigma(s: &ScoreSeries, cfg: &DetectorSettings, baseline_end: f64) -> Result<ThresholdResult, DetectorError> {
    let skip = cfg.smoothing_window.saturating_sub(1);
    let base = s
        .norm_scores
        .iter()
        .zip(&s.timestamps)
        .skip(skip)
        .filter(|(_, &t)| t < baseline_end)
        .map(|(v, _)| *v);
    let (mean, std, count) = mean_std(base);
    if count < MIN_BASELINE_SCORES {
        return Err(DetectorError::BaselineTooShort { got: count, need: MIN_BASELINE_SCORES });
    }
    let theta = cfg.fixed_theta.unwrap_or(mean - cfg.sigma_multiplier * std);
    let mask = s.norm_scores.iter().map(|&v| v < theta).collect();
    Ok(ThresholdResult { theta, baseline_mean: mean, baseline_std: std, baseline_positions: count, mask })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedInterval {
    pub onset: f64,
    pub duration: f64,
    pub peak_anomaly_score: f64,
}

/// Maximal flagged runs lasting at least `min_dur` seconds.
pub fn extract_intervals(mask: &[bool], timestamps: &[f64], anomaly: &[f64], min_dur: f64) -> Vec<DetectedInterval> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if !mask[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < mask.len() && mask[i] {
            i += 1;
        }
        let onset = timestamps[start];
        let duration = timestamps[i - 1] - onset;
        if duration >= min_dur {
            let peak = anomaly.get(start..i).map_or(f64::NAN, |a| a.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            out.push(DetectedInterval { onset, duration, peak_anomaly_score: peak });
        }
    }
    out
}

/// Reference events for scoring a run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// `(onset, end)` of each arcing fault.
    pub faults: Vec<(f64, f64)>,
    pub benign_onsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultOutcome {
    pub onset: f64,
    pub detected_onset: Option<f64>,
    pub latency: Option<f64>,
    pub latency_cycles: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsePositive {
    pub onset: f64,
    pub duration: f64,
    /// Onset of the benign event whose window this detection fell in.
    pub benign_event: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub faults: Vec<FaultOutcome>,
    pub detected: usize,
    pub missed: usize,
    pub detection_rate: f64,
    /// Detections inside an active fault after its first match.
    pub fault_attributed: usize,
    pub false_positives: Vec<FalsePositive>,
    pub benign_window_detections: usize,
}

/// Matches detections to faults whose onset precedes them within `horizon`.
///
/// A detection that starts later than the horizon but before the fault ends
/// (plus one horizon) belongs to that fault and is not a false positive.
pub fn evaluate(intervals: &[DetectedInterval], truth: &GroundTruth, horizon: f64, frequency: f64) -> Evaluation {
    let mut faults: Vec<FaultOutcome> = truth
        .faults
        .iter()
        .map(|&(onset, _)| FaultOutcome { onset, detected_onset: None, latency: None, latency_cycles: None })
        .collect();
    let mut fault_attributed = 0;
    let mut false_positives = Vec::new();
    for iv in intervals {
        let a = iv.onset;
        let matched = truth
            .faults
            .iter()
            .enumerate()
            .filter(|(_, (h, _))| *h <= a && a <= h + horizon)
            .max_by(|x, y| x.1 .0.total_cmp(&y.1 .0))
            .map(|(i, _)| i);
        if let Some(i) = matched {
            let f = &mut faults[i];
            if f.detected_onset.is_none() {
                let latency = a - f.onset;
                f.detected_onset = Some(a);
                f.latency = Some(latency);
                f.latency_cycles = Some(latency * frequency);
            } else {
                fault_attributed += 1;
            }
            continue;
        }
        if truth.faults.iter().any(|&(h, e)| h <= a && a <= e + horizon) {
            fault_attributed += 1;
            continue;
        }
        let benign_event = truth.benign_onsets.iter().copied().rev().find(|&b| b <= a && a <= b + horizon);
        false_positives.push(FalsePositive { onset: a, duration: iv.duration, benign_event });
    }
    let detected = faults.iter().filter(|f| f.detected_onset.is_some()).count();
    let total = faults.len();
    Evaluation {
        detected,
        missed: total - detected,
        detection_rate: if total == 0 { 1.0 } else { detected as f64 / total as f64 },
        fault_attributed,
        benign_window_detections: false_positives.iter().filter(|f| f.benign_event.is_some()).count(),
        false_positives,
        faults,
    }
}

/// Forcing trace stamped at the newest sample of each Hankel row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForcingTrace {
    pub timestamps: Vec<f64>,
    pub forcing: Vec<f64>,
    /// Smoothed absolute forcing.
    pub magnitude: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HavokSummary {
    pub window_k: usize,
    pub rank_r: usize,
    pub leading_singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub anomalous_nodes: usize,
    pub anomalous_edges: usize,
}

/// Result of one pipeline run. Bulk series are exported separately as CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub tool_version: String,
    pub input_digest: String,
    pub input_path: Option<String>,
    pub sample_rate: f64,
    pub samples: usize,
    pub record_duration: f64,
    pub config: DetectorConfig,
    pub havok: HavokSummary,
    pub graph: GraphSummary,
    pub normalization: NormalizationStats,
    pub threshold_theta: f64,
    /// θ expressed on the anomaly-score axis (its negation).
    pub anomaly_threshold: f64,
    pub baseline_positions: usize,
    pub flagged_positions: usize,
    pub score_positions: usize,
    pub intervals: Vec<DetectedInterval>,
    pub evaluation: Option<Evaluation>,
    pub report_digest: String,
    #[serde(skip)]
    pub score_series: ScoreSeries,
    #[serde(skip)]
    pub raw_scores: ScoreSeries,
    #[serde(skip)]
    pub mask: Vec<bool>,
    #[serde(skip)]
    pub forcing: ForcingTrace,
    #[serde(skip)]
    pub subsequence_graph: Option<SubsequenceGraph>,
}

impl DetectionReport {
    /// Negated normalized scores, so faults show as peaks.
    pub fn anomaly_scores(&self) -> Vec<f64> {
        self.score_series.norm_scores.iter().map(|v| -v).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn seal(&mut self) {
        self.report_digest.clear();
        let body = serde_json::to_string(self).expect("report serializes");
        self.report_digest = hex_digest(body.as_bytes());
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 over the sample rate, start time and primary samples.
pub fn waveform_digest(w: &Waveform) -> String {
    let mut h = Sha256::new();
    h.update(w.sample_rate.hz().to_le_bytes());
    h.update(w.t0.to_le_bytes());
    for v in w.primary() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn extract_forcing(x: &[f64], baseline_n: usize, cfg: &HavokConfig, timing: Timing, frequency: f64) -> Result<(Vec<f64>, Vec<f64>, ForcingModel), DetectorError> {
    let k = cfg.window_k;
    if baseline_n < 2 * k {
        return Err(DetectorError::BaselineTooShort { got: baseline_n, need: 2 * k });
    }
    let model = ForcingModel::fit(&x[..baseline_n], k, cfg.rank)?;
    let timestamps: Vec<f64> = (0..x.len() + 1 - k).map(|i| timing.time(i + k - 1)).collect();
    let forcing = match cfg.forcing_mode {
        ForcingMode::BaselineProjection => model.apply(x, timing)?.forcing,
        ForcingMode::Rolling => {
            let spc = timing.sample_rate / frequency;
            let window = (cfg.analysis_window_cycles * spc).round() as usize;
            let hop = ((cfg.hop_cycles * spc).round() as usize).max(1);
            havok::rolling_forcing(x, k, model.rank_r, window.min(x.len()), hop, timing)?
        }
    };
    Ok((timestamps, forcing, model))
}

/// Runs the full chain on the primary channel.
///
/// `truth`, when given, is used to evaluate the detected intervals.
pub fn run_pipeline(w: &Waveform, cfg: &DetectorConfig, truth: Option<&GroundTruth>) -> Result<DetectionReport, DetectorError> {
    let settings = &cfg.detector;
    settings.validate()?;
    cfg.s2g.validate()?;
    let x = w.primary();
    let fs = w.sample_rate.hz();
    let timing = Timing { t0: w.t0, sample_rate: fs };
    let baseline_n = ((settings.baseline_span * fs).round() as usize).min(x.len());
    let k = cfg.havok.window_k;

    let (f_times, forcing, model) = extract_forcing(x, baseline_n, &cfg.havok, timing, settings.system_frequency)?;
    let magnitude_raw: Vec<f64> = forcing.iter().map(|v| v.abs()).collect();
    let magnitude = moving_average_trailing(&magnitude_raw, settings.smoothing_window);

    let l = cfg.s2g.subseq_len;
    let subseqs = s2g::extract_subsequences(&magnitude, l)?;
    let fit_count = (baseline_n + 2).saturating_sub(k + l).max(1);
    let quantized = s2g::quantize_to_nodes(&subseqs, &cfg.s2g, Some(fit_count))?;
    let graph = SubsequenceGraph::from_quantized(quantized, l)?;
    let raw = s2g::score_all(&graph, cfg.s2g.query_len, timing.shifted(k - 1))?;

    let baseline_end = timing.time(baseline_n);
    let (normalized, stats) = normalize_scores(&raw, settings.smoothing_window, baseline_end)?;
    let threshold = three_sigma(&normalized, settings, baseline_end)?;
    let anomaly: Vec<f64> = normalized.norm_scores.iter().map(|v| -v).collect();
    let intervals = extract_intervals(&threshold.mask, &normalized.timestamps, &anomaly, settings.min_event_duration);
    let evaluation = truth.map(|t| evaluate(&intervals, t, settings.match_horizon(), settings.system_frequency));

    // Anomalous paths are judged on the normalized scale, mapped back to raw paths.
    let cls = s2g::classify(
        &graph,
        &ScoreSeries {
            timestamps: normalized.timestamps.clone(),
            norm_scores: normalized.norm_scores.clone(),
            coverage: raw.coverage.clone(),
        },
        cfg.s2g.query_len,
        threshold.theta,
    );

    let mut report = DetectionReport {
        tool_version: TOOL_VERSION.to_string(),
        input_digest: waveform_digest(w),
        input_path: None,
        sample_rate: fs,
        samples: x.len(),
        record_duration: x.len() as f64 / fs,
        config: cfg.clone(),
        havok: HavokSummary {
            window_k: k,
            rank_r: model.rank_r,
            leading_singular_values: model.singular_values.iter().take(model.rank_r + 2).copied().collect(),
        },
        graph: GraphSummary {
            nodes: graph.nodes.len(),
            edges: graph.edges.len(),
            anomalous_nodes: cls.subgraph.nodes.len(),
            anomalous_edges: cls.subgraph.edges.len(),
        },
        normalization: stats,
        threshold_theta: threshold.theta,
        anomaly_threshold: -threshold.theta,
        baseline_positions: threshold.baseline_positions,
        flagged_positions: threshold.mask.iter().filter(|&&m| m).count(),
        score_positions: threshold.mask.len(),
        intervals,
        evaluation,
        report_digest: String::new(),
        score_series: normalized,
        raw_scores: raw,
        mask: threshold.mask,
        forcing: ForcingTrace { timestamps: f_times, forcing, magnitude },
        subsequence_graph: Some(graph),
    };
    report.seal();
    Ok(report)
}

impl DetectionReport {
    /// Records where the input came from and re-seals the digest.
    pub fn with_input_path(mut self, path: impl Into<String>) -> Self {
        self.input_path = Some(path.into());
        self.seal();
        self
    }
}
