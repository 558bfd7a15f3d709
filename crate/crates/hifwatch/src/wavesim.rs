//! Primary-side current synthesis.
//!
//! A stiff sinusoidal source sits behind a source impedance and feeds a
//! steady baseline load plus independent event branches (arcing faults and
//! R-L switching events). Branch currents are computed on the secondary side
//! and reflected to the primary through the transformer ratio.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of the channel every synthesized waveform carries.
pub const PRIMARY_CHANNEL: &str = "i_primary";

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("non-finite current sample at index {index}")]
    NonFiniteSample { index: usize },
    #[error("arc conductance must be positive, got {0}")]
    SingularArc(f64),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("event {index} at {onset} s does not fit inside a {duration} s record")]
    ScheduleOutOfRange { index: usize, onset: f64, duration: f64 },
    #[error("invalid event parameters for event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
}

/// Series resistance and inductance of a branch or source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Impedance {
    pub resistance: f64,
    pub inductance: f64,
}

impl Impedance {
    pub fn new(resistance: f64, inductance: f64) -> Self {
        Self { resistance, inductance }
    }
}

/// Harmonic content of the baseline load current, relative to its fundamental.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub order: u32,
    pub fraction: f64,
    /// Phase offset in radians.
    pub phase: f64,
}

/// Transformer energization surrogate: `A e^(-t/τd) (cos ωt + h2 cos 2ωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InrushParams {
    /// Peak as a multiple of the baseline peak current.
    pub peak_multiple: f64,
    pub decay_time_constant: f64,
    pub second_harmonic_fraction: f64,
    #[serde(default)]
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub system_frequency: f64,
    pub samples_per_cycle: usize,
    pub duration: f64,
    pub source_voltage_rms: f64,
    pub source_impedance: Impedance,
    pub transformer_ratio: f64,
    /// Noise standard deviation as a fraction of the baseline peak current.
    pub noise_sigma: f64,
    pub inrush: Option<InrushParams>,
    pub rng_seed: u64,
    pub baseline_load: Impedance,
    pub baseline_harmonics: Vec<Harmonic>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            system_frequency: 60.0,
            samples_per_cycle: 2048,
            duration: 2.0,
            source_voltage_rms: 2400.0,
            source_impedance: Impedance::new(0.05, 0.5e-3),
            transformer_ratio: 115.0 / 4.16,
            noise_sigma: 1e-4,
            inrush: None,
            rng_seed: 0,
            baseline_load: Impedance::new(5.0, 8e-3),
            baseline_harmonics: vec![
                Harmonic { order: 3, fraction: 0.02, phase: 0.3 },
                Harmonic { order: 5, fraction: 0.012, phase: 1.1 },
            ],
        }
    }
}

impl SimConfig {
    pub fn sample_rate(&self) -> SampleRate {
        SampleRate(self.system_frequency * self.samples_per_cycle as f64)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate().hz()
    }

    pub fn sample_count(&self) -> usize {
        (self.duration * self.sample_rate().hz()).round() as usize
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.system_frequency
    }

    /// Instantaneous source voltage.
    pub fn source_voltage(&self, t: f64) -> f64 {
        SQRT_2 * self.source_voltage_rms * (self.omega() * t).sin()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.system_frequency > 0.0) {
            return bad("system_frequency must be positive");
        }
        if self.samples_per_cycle < 64 {
            return bad("samples_per_cycle must be at least 64");
        }
        if !(self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if !(self.transformer_ratio > 0.0) {
            return bad("transformer_ratio must be positive");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be non-negative");
        }
        if self.source_impedance.resistance < 0.0 || self.source_impedance.inductance < 0.0 {
            return bad("source_impedance must be non-negative");
        }
        let b = self.baseline_load;
        if b.resistance < 0.0 || b.inductance < 0.0 {
            return bad("baseline_load must be non-negative");
        }
        if let Some(inrush) = &self.inrush {
            if !(inrush.decay_time_constant > 0.0) {
                return bad("inrush.decay_time_constant must be positive");
            }
        }
        Ok(())
    }
}

/// Samples per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleRate(pub f64);

impl SampleRate {
    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn period(self) -> f64 {
        1.0 / self.0
    }
}

/// Arc branch parameters of the Kizilcay conductance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HifParams {
    /// Constant series resistance of the fault path.
    #[serde(rename = "R0")]
    pub series_resistance: f64,
    #[serde(rename = "tau")]
    pub time_constant: f64,
    #[serde(rename = "u0")]
    pub arc_voltage: f64,
    #[serde(rename = "r0")]
    pub arc_resistance: f64,
    #[serde(rename = "g_init")]
    pub initial_conductance: f64,
}

impl Default for HifParams {
    fn default() -> Self {
        Self {
            series_resistance: 40.0,
            time_constant: 0.4e-3,
            arc_voltage: 300.0,
            arc_resistance: 0.5,
            initial_conductance: 1e-3,
        }
    }
}

impl HifParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("R0", self.series_resistance),
            ("tau", self.time_constant),
            ("u0", self.arc_voltage),
            ("r0", self.arc_resistance),
            ("g_init", self.initial_conductance),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("{name} must be strictly positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Steady conductance for a constant current magnitude.
    pub fn steady_conductance(&self, current: f64) -> f64 {
        let a = current.abs();
        a / (self.arc_voltage + self.arc_resistance * a)
    }

    fn conductance_rate(&self, current: f64, g: f64) -> f64 {
        (self.steady_conductance(current) - g) / self.time_constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RlKind {
    MotorStart,
    LoadSwitch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlParams {
    #[serde(rename = "R")]
    pub resistance: f64,
    #[serde(rename = "L")]
    pub inductance: f64,
    pub kind: RlKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventModel {
    Hif(HifParams),
    Rl(RlParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub onset: f64,
    /// `None` keeps the branch connected to the end of the record.
    pub duration: Option<f64>,
    pub model: EventModel,
}

impl Event {
    pub fn hif(onset: f64, duration: f64, params: HifParams) -> Self {
        Self { onset, duration: Some(duration), model: EventModel::Hif(params) }
    }

    pub fn rl(onset: f64, kind: RlKind, resistance: f64, inductance: f64) -> Self {
        Self {
            onset,
            duration: None,
            model: EventModel::Rl(RlParams { resistance, inductance, kind }),
        }
    }

    pub fn is_hif(&self) -> bool {
        matches!(self.model, EventModel::Hif(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self.model {
            EventModel::Hif(_) => "hif",
            EventModel::Rl(RlParams { kind: RlKind::MotorStart, .. }) => "motor_start",
            EventModel::Rl(RlParams { kind: RlKind::LoadSwitch, .. }) => "load_switch",
        }
    }
}

/// Events sorted by onset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventSchedule {
    events: Vec<Event>,
}

impl EventSchedule {
    pub fn new(mut events: Vec<Event>) -> Self {
        events.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        Self { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(onset, end)` of every arcing fault.
    pub fn hif_intervals(&self) -> Vec<(f64, f64)> {
        self.events
            .iter()
            .filter(|e| e.is_hif())
            .map(|e| (e.onset, e.onset + e.duration.unwrap_or(f64::INFINITY)))
            .collect()
    }

    /// Onsets of motor starts and load switches.
    pub fn benign_onsets(&self) -> Vec<f64> {
        self.events.iter().filter(|e| !e.is_hif()).map(|e| e.onset).collect()
    }

    pub fn validate(&self, duration: f64) -> Result<(), SimError> {
        for (index, e) in self.events.iter().enumerate() {
            let end = e.onset + e.duration.unwrap_or(0.0);
            if !(e.onset >= 0.0 && e.onset < duration) || end > duration + 1e-12 {
                return Err(SimError::ScheduleOutOfRange { index, onset: e.onset, duration });
            }
            if let Some(d) = e.duration {
                if !(d > 0.0) {
                    return Err(SimError::InvalidEvent { index, reason: "duration must be positive".into() });
                }
            }
            match &e.model {
                EventModel::Hif(p) => p.validate().map_err(|reason| SimError::InvalidEvent { index, reason })?,
                EventModel::Rl(p) => {
                    if !(p.resistance > 0.0) || !(p.inductance >= 0.0) {
                        return Err(SimError::InvalidEvent {
                            index,
                            reason: "R must be positive and L non-negative".into(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniformly sampled record.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub sample_rate: SampleRate,
    pub t0: f64,
    pub channels: BTreeMap<String, Vec<f64>>,
    /// 1 inside an arcing-fault interval.
    pub labels: Option<Vec<u8>>,
}

impl Waveform {
    pub fn from_primary(sample_rate: SampleRate, t0: f64, current: Vec<f64>, labels: Option<Vec<u8>>) -> Self {
        let mut channels = BTreeMap::new();
        channels.insert(PRIMARY_CHANNEL.to_string(), current);
        Self { sample_rate, t0, channels, labels }
    }

    pub fn primary(&self) -> &[f64] {
        self.channels.get(PRIMARY_CHANNEL).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.primary().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.sample_rate.hz()
    }

    /// Multiplies every channel by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.channels.values_mut() {
            v.iter_mut().for_each(|x| *x *= factor);
        }
        out
    }

    /// `(onset, end)` seconds of each run of label 1.
    pub fn labelled_intervals(&self) -> Vec<(f64, f64)> {
        let Some(labels) = &self.labels else { return Vec::new() };
        let mut out = Vec::new();
        let mut start = None;
        for (i, &l) in labels.iter().enumerate() {
            match (l != 0, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((self.time(s), self.time(i)));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((self.time(s), self.time(labels.len())));
        }
        out
    }
}

fn rk4(f: impl Fn(f64, f64) -> f64, t: f64, y: f64, h: f64) -> f64 {
    let a = f(t, y);
    let b = f(t + h / 2.0, y + h / 2.0 * a);
    let c = f(t + h / 2.0, y + h / 2.0 * b);
    let d = f(t + h, y + h * c);
    y + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
}

/// Sub-steps per sample so that `h R / L` stays inside the RK4 accuracy region.
fn substeps(dt: f64, resistance: f64, inductance: f64) -> usize {
    let stiffness = dt * resistance / inductance;
    ((stiffness / 0.25).ceil() as usize).max(1)
}

/// Advances `L di/dt = v(t) - R i` over one sample step.
fn rl_advance(i: f64, t: f64, dt: f64, resistance: f64, inductance: f64, v: &impl Fn(f64) -> f64) -> f64 {
    let n = substeps(dt, resistance, inductance);
    let h = dt / n as f64;
    let f = |t: f64, i: f64| (v(t) - resistance * i) / inductance;
    (0..n).fold(i, |i, s| rk4(f, t + s as f64 * h, i, h))
}

fn check_dt(dt: f64) -> Result<(), SimError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(SimError::BadTimeStep(dt))
    }
}

/// Integrates the arc conductance ODE for a sampled current.
///
/// Between samples the current is interpolated linearly. Output has one
/// conductance per input sample, starting at `g_init`.
pub fn integrate_arc_conductance(current: &[f64], p: &HifParams, dt: f64) -> Result<Vec<f64>, SimError> {
    check_dt(dt)?;
    if let Some(index) = current.iter().position(|x| !x.is_finite()) {
        return Err(SimError::NonFiniteSample { index });
    }
    let mut out = Vec::with_capacity(current.len());
    let mut g = p.initial_conductance;
    for (n, &i0) in current.iter().enumerate() {
        out.push(g);
        let Some(&i1) = current.get(n + 1) else { break };
        let interp = |s: f64| i0 + (i1 - i0) * (s / dt);
        g = rk4(|s, g| p.conductance_rate(interp(s), g), 0.0, g, dt);
    }
    Ok(out)
}

/// Voltage across the fault path: constant resistance in series with the arc.
pub fn hif_branch_voltage(current: f64, conductance: f64, series_resistance: f64) -> Result<f64, SimError> {
    if !(conductance > 0.0) {
        return Err(SimError::SingularArc(conductance));
    }
    Ok(current * series_resistance + current / conductance)
}

/// Current drawn by an R-L branch from a sampled voltage, starting at rest.
pub fn simulate_rl_current(voltage: &[f64], p: &RlParams, dt: f64) -> Result<Vec<f64>, SimError> {
    check_dt(dt)?;
    if let Some(index) = voltage.iter().position(|x| !x.is_finite()) {
        return Err(SimError::NonFiniteSample { index });
    }
    if p.inductance == 0.0 {
        return Ok(voltage.iter().map(|v| v / p.resistance).collect());
    }
    let mut out = Vec::with_capacity(voltage.len());
    let mut i = 0.0;
    for (n, &v0) in voltage.iter().enumerate() {
        out.push(i);
        let Some(&v1) = voltage.get(n + 1) else { break };
        let v = |s: f64| v0 + (v1 - v0) * (s / dt);
        i = rl_advance(i, 0.0, dt, p.resistance, p.inductance, &v);
    }
    Ok(out)
}

fn onset_index(onset: f64, fs: f64) -> usize {
    (onset * fs).round() as usize
}

/// Secondary-side current of one R-L event branch behind the source impedance.
pub fn rl_event_current(cfg: &SimConfig, event: &Event, p: &RlParams) -> Vec<f64> {
    let n = cfg.sample_count();
    let fs = cfg.sample_rate().hz();
    let dt = cfg.dt();
    let mut out = vec![0.0; n];
    let r = p.resistance + cfg.source_impedance.resistance;
    let l = p.inductance + cfg.source_impedance.inductance;
    let start = onset_index(event.onset, fs).min(n);
    let stop = event.duration.map_or(n, |d| onset_index(event.onset + d, fs).min(n));
    let v = |t: f64| cfg.source_voltage(t);
    let mut i = 0.0;
    for k in start..stop {
        out[k] = i;
        let t = k as f64 * dt;
        i = if l > 0.0 { rl_advance(i, t, dt, r, l, &v) } else { v(t + dt) / r };
    }
    out
}

/// Secondary-side current of one arcing-fault branch.
///
/// Each sample step solves the series loop with the conductance held, then
/// advances the conductance with the current interpolated across the step.
pub fn hif_event_current(cfg: &SimConfig, event: &Event, p: &HifParams) -> Vec<f64> {
    let n = cfg.sample_count();
    let fs = cfg.sample_rate().hz();
    let dt = cfg.dt();
    let mut out = vec![0.0; n];
    let start = onset_index(event.onset, fs).min(n);
    let stop = event.duration.map_or(n, |d| onset_index(event.onset + d, fs).min(n));
    let r_src = cfg.source_impedance.resistance;
    let l_src = cfg.source_impedance.inductance;
    let v = |t: f64| cfg.source_voltage(t);
    let mut g = p.initial_conductance;
    let mut i = if l_src > 0.0 { 0.0 } else { v(start as f64 * dt) / (r_src + p.series_resistance + 1.0 / g) };
    for k in start..stop {
        out[k] = i;
        let t = k as f64 * dt;
        let r_loop = r_src + p.series_resistance + 1.0 / g;
        let next = if l_src > 0.0 { rl_advance(i, t, dt, r_loop, l_src, &v) } else { v(t + dt) / r_loop };
        let interp = |s: f64| i + (next - i) * ((s - t) / dt);
        g = rk4(|s, g| p.conductance_rate(interp(s), g), t, g, dt);
        i = next;
    }
    out
}

/// Baseline load current on the secondary side, already in steady state.
fn baseline_current(cfg: &SimConfig) -> (Vec<f64>, f64) {
    let w = cfg.omega();
    let r = cfg.baseline_load.resistance + cfg.source_impedance.resistance;
    let x = w * (cfg.baseline_load.inductance + cfg.source_impedance.inductance);
    let z = r.hypot(x);
    let peak = if z > 0.0 { SQRT_2 * cfg.source_voltage_rms / z } else { 0.0 };
    let lag = x.atan2(r);
    let dt = cfg.dt();
    let samples = (0..cfg.sample_count())
        .map(|k| {
            let t = k as f64 * dt;
            let mut i = peak * (w * t - lag).sin();
            for h in &cfg.baseline_harmonics {
                i += h.fraction * peak * (h.order as f64 * w * t + h.phase).sin();
            }
            i
        })
        .collect();
    (samples, peak)
}

fn inrush_current(cfg: &SimConfig, p: &InrushParams, baseline_peak: f64) -> Vec<f64> {
    let w = cfg.omega();
    let dt = cfg.dt();
    let amplitude = p.peak_multiple * baseline_peak;
    (0..cfg.sample_count())
        .map(|k| {
            let s = k as f64 * dt - p.onset;
            if s < 0.0 {
                return 0.0;
            }
            amplitude * (-s / p.decay_time_constant).exp() * ((w * s).cos() + p.second_harmonic_fraction * (2.0 * w * s).cos())
        })
        .collect()
}

/// Secondary-side current contributed by a single event.
pub fn event_branch_current(cfg: &SimConfig, event: &Event) -> Vec<f64> {
    match &event.model {
        EventModel::Hif(p) => hif_event_current(cfg, event, p),
        EventModel::Rl(p) => rl_event_current(cfg, event, p),
    }
}

/// Builds the primary-side record for a schedule.
pub fn synthesize(cfg: &SimConfig, schedule: &EventSchedule) -> Result<Waveform, SimError> {
    cfg.validate()?;
    schedule.validate(cfg.duration)?;
    let n = cfg.sample_count();
    let fs = cfg.sample_rate().hz();
    let (mut total, baseline_peak) = baseline_current(cfg);
    if let Some(inrush) = &cfg.inrush {
        for (t, x) in total.iter_mut().zip(inrush_current(cfg, inrush, baseline_peak)) {
            *t += x;
        }
    }
    let mut labels = vec![0u8; n];
    for event in schedule.events() {
        for (t, x) in total.iter_mut().zip(event_branch_current(cfg, event)) {
            *t += x;
        }
        if event.is_hif() {
            let start = onset_index(event.onset, fs).min(n);
            let stop = event.duration.map_or(n, |d| onset_index(event.onset + d, fs).min(n));
            labels[start..stop].iter_mut().for_each(|l| *l = 1);
        }
    }
    let ratio = cfg.transformer_ratio;
    total.iter_mut().for_each(|x| *x /= ratio);
    if cfg.noise_sigma > 0.0 {
        let sd = cfg.noise_sigma * baseline_peak / ratio;
        let normal = Normal::new(0.0, sd).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        for x in total.iter_mut() {
            *x += normal.sample(&mut rng);
        }
    }
    Ok(Waveform::from_primary(cfg.sample_rate(), 0.0, total, Some(labels)))
}
