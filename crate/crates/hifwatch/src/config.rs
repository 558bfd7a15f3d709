//! Sectioned TOML configuration with presets and environment overrides.
//!
//! Sections: `[sim]`, `[schedule]` (with `[[schedule.events]]`), `[havok]`,
//! `[s2g]`, `[detector]`. Unknown keys anywhere are rejected.
//!
//! Environment variables named `HIFWATCH_<SECTION>__<KEY>` override scalar
//! keys, e.g. `HIFWATCH_HAVOK__WINDOW_K=256`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{DetectorConfig, DetectorSettings};
use crate::havok::HavokConfig;
use crate::s2g::S2gConfig;
use crate::wavesim::{Event, EventModel, EventSchedule, HifParams, RlKind, RlParams, SimConfig};

pub const ENV_PREFIX: &str = "HIFWATCH_";

/// Default arcing-fault duration when an event omits it.
pub const DEFAULT_HIF_DURATION: f64 = 0.05;

pub const PRESETS: &[(&str, &str)] = &[
    ("case_a", include_str!("../presets/case_a.toml")),
    ("case_b", include_str!("../presets/case_b.toml")),
];

#[derive(Debug, Error, PartialEq)]
#[error("{key}: {message}")]
pub struct ConfigError {
    /// Dotted path of the offending key.
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Hif,
    MotorStart,
    LoadSwitch,
}

/// One `[[schedule.events]]` entry as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub kind: EventKind,
    pub onset: f64,
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(rename = "R", default)]
    pub resistance: Option<f64>,
    #[serde(rename = "L", default)]
    pub inductance: Option<f64>,
    #[serde(rename = "R0", default)]
    pub series_resistance: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub u0: Option<f64>,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub g_init: Option<f64>,
}

impl EventSpec {
    fn to_event(&self, index: usize) -> Result<Event, ConfigError> {
        let key = |k: &str| format!("schedule.events[{index}].{k}");
        let rl_kind = match self.kind {
            EventKind::Hif => None,
            EventKind::MotorStart => Some(RlKind::MotorStart),
            EventKind::LoadSwitch => Some(RlKind::LoadSwitch),
        };
        match rl_kind {
            None => {
                if self.resistance.is_some() || self.inductance.is_some() {
                    return Err(ConfigError::new(key("R"), "R/L do not apply to kind \"hif\""));
                }
                let d = HifParams::default();
                let p = HifParams {
                    series_resistance: self.series_resistance.unwrap_or(d.series_resistance),
                    time_constant: self.tau.unwrap_or(d.time_constant),
                    arc_voltage: self.u0.unwrap_or(d.arc_voltage),
                    arc_resistance: self.r0.unwrap_or(d.arc_resistance),
                    initial_conductance: self.g_init.unwrap_or(d.initial_conductance),
                };
                Ok(Event::hif(self.onset, self.duration.unwrap_or(DEFAULT_HIF_DURATION), p))
            }
            Some(kind) => {
                let arc_fields = [
                    ("R0", self.series_resistance),
                    ("tau", self.tau),
                    ("u0", self.u0),
                    ("r0", self.r0),
                    ("g_init", self.g_init),
                ];
                if let Some((name, _)) = arc_fields.iter().find(|(_, v)| v.is_some()) {
                    return Err(ConfigError::new(key(name), "arc parameters only apply to kind \"hif\""));
                }
                let resistance = self.resistance.ok_or_else(|| ConfigError::new(key("R"), "missing resistance"))?;
                let inductance = self.inductance.ok_or_else(|| ConfigError::new(key("L"), "missing inductance"))?;
                Ok(Event {
                    onset: self.onset,
                    duration: self.duration,
                    model: EventModel::Rl(RlParams { resistance, inductance, kind }),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub events: Vec<EventSpec>,
}

/// The file as written.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub schedule: ScheduleSection,
    pub havok: HavokConfig,
    pub s2g: S2gConfig,
    pub detector: DetectorSettings,
}

/// Validated configuration ready for use.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub sim: SimConfig,
    pub schedule: EventSchedule,
    pub detector: DetectorConfig,
}

impl Settings {
    pub fn from_file(file: ConfigFile) -> Result<Self, ConfigError> {
        file.sim.validate().map_err(|e| ConfigError::new("sim", e.to_string()))?;
        let events = file
            .schedule
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| e.to_event(i))
            .collect::<Result<Vec<_>, _>>()?;
        let schedule = EventSchedule::new(events);
        schedule
            .validate(file.sim.duration)
            .map_err(|e| ConfigError::new("schedule.events", e.to_string()))?;
        let mut detector = file.detector;
        detector.system_frequency = file.sim.system_frequency;
        detector.validate().map_err(|e| ConfigError::new("detector", e.to_string()))?;
        file.s2g.validate().map_err(|e| ConfigError::new("s2g", e.to_string()))?;
        if file.havok.window_k < 2 {
            return Err(ConfigError::new("havok.window_k", "must be at least 2"));
        }
        Ok(Self { sim: file.sim, schedule, detector: DetectorConfig { detector, havok: file.havok, s2g: file.s2g } })
    }
}

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies `PREFIX_SECTION__KEY=value` pairs onto a parsed table.
pub fn apply_overrides<I, K, V>(table: &mut toml::Table, vars: I) -> Result<(), ConfigError>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut pairs: Vec<(String, String)> = vars
        .into_iter()
        .filter_map(|(k, v)| k.as_ref().strip_prefix(ENV_PREFIX).map(|rest| (rest.to_string(), v.as_ref().to_string())))
        .collect();
    pairs.sort();
    for (name, raw) in pairs {
        let path: Vec<String> = name.split("__").map(str::to_lowercase).collect();
        let dotted = path.join(".");
        if path.len() < 2 || path.iter().any(String::is_empty) {
            return Err(ConfigError::new(dotted, "override must name a section and a key"));
        }
        let mut cursor = &mut *table;
        for seg in &path[..path.len() - 1] {
            let entry = cursor.entry(seg.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            cursor = entry
                .as_table_mut()
                .ok_or_else(|| ConfigError::new(dotted.clone(), "cannot override inside a non-table value"))?;
        }
        cursor.insert(path[path.len() - 1].clone(), override_value(&raw));
    }
    Ok(())
}

/// Parses config text, applying the given environment overrides.
pub fn parse_config<I, K, V>(text: &str, env: I) -> Result<Settings, ConfigError>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::new("<file>", e.message().to_string()))?;
    apply_overrides(&mut table, env)?;
    let file: ConfigFile = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let mut key = e.path().to_string();
        let message = e.inner().to_string().lines().next().unwrap_or_default().to_string();
        if let Some(field) = message.strip_prefix("unknown field `").and_then(|m| m.split('`').next()) {
            if key == "." {
                key = field.to_string();
            } else if !key.ends_with(&format!(".{field}")) && key != field {
                key = format!("{key}.{field}");
            }
        }
        ConfigError::new(key, message)
    })?;
    Settings::from_file(file)
}

/// Loads a preset by name or a config file by path, with process env overrides.
pub fn load(source: &str) -> Result<Settings, ConfigError> {
    let text = match preset(source) {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(Path::new(source)).map_err(|e| ConfigError::new("<file>", format!("{source}: {e}")))?,
    };
    parse_config(&text, std::env::vars())
}

/// Defaults plus process env overrides, for runs without a config file.
pub fn load_defaults() -> Result<Settings, ConfigError> {
    parse_config("", std::env::vars())
}
