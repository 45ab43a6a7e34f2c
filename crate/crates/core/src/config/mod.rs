//! Scenario description shared by the simulator and the command-line runner.

pub mod scenarios;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FlowKey, ACCESS_CATEGORIES, STABILITY_MARGIN};
use crate::scheduler::SchedulerKind;
use crate::sim::DistributionSpec;

/// Smallest packet count accepted per flow.
pub const MIN_PACKETS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config at `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub service: DistributionSpec,
    #[serde(default)]
    pub prop_latency_s: f64,
    /// Per-band vacation length, overriding the scenario default in
    /// parametric mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vacation: Option<DistributionSpec>,
}

impl BandConfig {
    pub fn mu(&self) -> f64 {
        1.0 / self.service.mean()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcConfig {
    pub ac: u8,
    /// Higher value is served first.
    pub priority: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub sta: u32,
    pub ac: u8,
    pub lambda_pps: f64,
    pub packet_count: u64,
    /// Bands this flow may use; all bands when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bands: Option<Vec<bool>>,
    /// Packets per transport connection.
    #[serde(default = "default_conn_packets")]
    pub conn_packets: u64,
}

impl FlowConfig {
    pub fn key(&self) -> FlowKey {
        FlowKey::new(self.sta, self.ac)
    }

    pub fn mask(&self, bands: usize) -> Vec<bool> {
        self.bands.clone().unwrap_or_else(|| vec![true; bands])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VacationMode {
    /// Vacations are whatever time a band spends serving other queues.
    Emergent,
    /// Whenever a band empties it takes vacations drawn from this law.
    Parametric(DistributionSpec),
}

/// `"all"` or an explicit list of policies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchedulerSet {
    All,
    List(Vec<SchedulerKind>),
}

impl SchedulerSet {
    pub fn resolve(&self, bands: usize) -> Vec<SchedulerKind> {
        match self {
            SchedulerSet::All => SchedulerKind::all(bands),
            SchedulerSet::List(v) => v.clone(),
        }
    }
}

impl Serialize for SchedulerSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SchedulerSet::All => s.serialize_str("all"),
            SchedulerSet::List(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SchedulerSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            List(Vec<SchedulerKind>),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "all" => Ok(SchedulerSet::All),
            Raw::Name(s) => s
                .parse::<SchedulerKind>()
                .map(|k| SchedulerSet::List(vec![k]))
                .map_err(serde::de::Error::custom),
            Raw::List(v) => Ok(SchedulerSet::List(v)),
        }
    }
}

impl fmt::Display for SchedulerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerSet::All => f.write_str("all"),
            SchedulerSet::List(v) => {
                let names: Vec<String> = v.iter().map(|k| k.to_string()).collect();
                f.write_str(&names.join(","))
            }
        }
    }
}

fn default_conn_packets() -> u64 {
    1000
}
fn default_feedback_interval() -> u64 {
    100
}
fn default_warmup() -> f64 {
    0.1
}
fn default_replications() -> u32 {
    10
}
fn default_queue_cap() -> usize {
    1_000_000
}
fn default_window() -> usize {
    1000
}
fn default_min_samples() -> usize {
    30
}
fn default_acs() -> Vec<AcConfig> {
    vec![AcConfig { ac: 0, priority: 0 }]
}
fn default_schedulers() -> SchedulerSet {
    SchedulerSet::All
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub bands: Vec<BandConfig>,
    pub stas: u32,
    #[serde(default = "default_acs")]
    pub acs: Vec<AcConfig>,
    pub flows: Vec<FlowConfig>,
    #[serde(default = "default_schedulers")]
    pub schedulers: SchedulerSet,
    pub vacation_mode: VacationMode,
    #[serde(default = "default_feedback_interval")]
    pub feedback_interval: u64,
    #[serde(default = "default_warmup")]
    pub warmup_frac: f64,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time_s: Option<f64>,
    #[serde(default = "default_queue_cap")]
    pub queue_cap: usize,
    #[serde(default = "default_window")]
    pub estimator_window: usize,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn schedulers(&self) -> Vec<SchedulerKind> {
        self.schedulers.resolve(self.bands.len())
    }

    /// Seeds of the configured replications.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replications as u64).map(|r| self.seed_base.wrapping_add(r)).collect()
    }

    /// Vacation law of band `j`, if it takes injected vacations.
    pub fn band_vacation(&self, j: usize) -> Option<DistributionSpec> {
        match &self.vacation_mode {
            VacationMode::Emergent => None,
            VacationMode::Parametric(default) => Some(self.bands[j].vacation.unwrap_or(*default)),
        }
    }

    pub fn total_lambda(&self) -> f64 {
        self.flows.iter().map(|f| f.lambda_pps).sum()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = self.bands.len();
        if m == 0 {
            return Err(invalid("bands", "at least one band is required"));
        }
        for (j, b) in self.bands.iter().enumerate() {
            b.service
                .validate()
                .map_err(|r| invalid(format!("bands[{j}].service"), r))?;
            if !(b.prop_latency_s >= 0.0 && b.prop_latency_s.is_finite()) {
                return Err(invalid(format!("bands[{j}].prop_latency_s"), "must be finite and non-negative"));
            }
            if let Some(v) = &b.vacation {
                v.validate().map_err(|r| invalid(format!("bands[{j}].vacation"), r))?;
            }
        }
        if let VacationMode::Parametric(v) = &self.vacation_mode {
            v.validate().map_err(|r| invalid("vacation_mode.parametric", r))?;
        }
        if self.stas == 0 {
            return Err(invalid("stas", "at least one station is required"));
        }
        if self.acs.is_empty() {
            return Err(invalid("acs", "at least one access category is required"));
        }
        let mut seen = BTreeSet::new();
        for (i, a) in self.acs.iter().enumerate() {
            if a.ac >= ACCESS_CATEGORIES {
                return Err(invalid(format!("acs[{i}].ac"), format!("must be below {ACCESS_CATEGORIES}")));
            }
            if !seen.insert(a.ac) {
                return Err(invalid(format!("acs[{i}].ac"), "duplicate access category"));
            }
        }
        if self.flows.is_empty() {
            return Err(invalid("flows", "at least one flow is required"));
        }
        let mut keys = BTreeSet::new();
        for (i, f) in self.flows.iter().enumerate() {
            let at = |field: &str| format!("flows[{i}].{field}");
            if f.sta >= self.stas {
                return Err(invalid(at("sta"), format!("station {} out of range for {} stations", f.sta, self.stas)));
            }
            if !seen.contains(&f.ac) {
                return Err(invalid(at("ac"), format!("access category {} is not listed in acs", f.ac)));
            }
            if !keys.insert((f.sta, f.ac)) {
                return Err(invalid(at("sta"), "duplicate (sta, ac) flow"));
            }
            if !(f.lambda_pps > 0.0 && f.lambda_pps.is_finite()) {
                return Err(invalid(at("lambda_pps"), "must be positive and finite"));
            }
            if f.packet_count < MIN_PACKETS {
                return Err(invalid(at("packet_count"), format!("must be at least {MIN_PACKETS}")));
            }
            if f.conn_packets == 0 {
                return Err(invalid(at("conn_packets"), "must be positive"));
            }
            if let Some(mask) = &f.bands {
                if mask.len() != m {
                    return Err(invalid(at("bands"), format!("expected {m} entries, got {}", mask.len())));
                }
                if !mask.iter().any(|&b| b) {
                    return Err(invalid(at("bands"), "every band is masked"));
                }
            }
            let capacity: f64 = f
                .mask(m)
                .iter()
                .zip(&self.bands)
                .filter(|(on, _)| **on)
                .map(|(_, b)| b.mu())
                .sum();
            if f.lambda_pps >= STABILITY_MARGIN * capacity {
                return Err(invalid(
                    at("lambda_pps"),
                    format!("offered load {} exceeds {STABILITY_MARGIN} of usable capacity {capacity}", f.lambda_pps),
                ));
            }
        }
        let capacity: f64 = self.bands.iter().map(BandConfig::mu).sum();
        if self.total_lambda() >= STABILITY_MARGIN * capacity {
            return Err(invalid(
                "flows",
                format!("total offered load {} exceeds {STABILITY_MARGIN} of capacity {capacity}", self.total_lambda()),
            ));
        }
        if let SchedulerSet::List(v) = &self.schedulers {
            if v.is_empty() {
                return Err(invalid("schedulers", "empty scheduler list"));
            }
            for (i, k) in v.iter().enumerate() {
                if let SchedulerKind::SingleBand(j) = k {
                    if *j >= m {
                        return Err(invalid(format!("schedulers[{i}]"), format!("band {j} out of range")));
                    }
                }
            }
        }
        if self.feedback_interval == 0 {
            return Err(invalid("feedback_interval", "must be positive"));
        }
        if !(0.0..0.5).contains(&self.warmup_frac) {
            return Err(invalid("warmup_frac", "must lie in [0, 0.5)"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be positive"));
        }
        if let Some(t) = self.max_time_s {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("max_time_s", "must be positive and finite"));
            }
        }
        if self.queue_cap == 0 {
            return Err(invalid("queue_cap", "must be positive"));
        }
        if self.estimator_window == 0 {
            return Err(invalid("estimator_window", "must be positive"));
        }
        if self.min_samples == 0 || self.min_samples > self.estimator_window {
            return Err(invalid("min_samples", "must lie in [1, estimator_window]"));
        }
        Ok(())
    }
}
