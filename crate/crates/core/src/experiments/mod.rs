//! Experiment drivers behind the command-line subcommands.
//!
//! Each driver returns its in-memory results (for tests) and can write an
//! [`ExperimentReport`] plus CSV/JSON artifacts to an output directory.
//! Wall-clock time goes to a separate `timing.json` so the report itself is
//! byte-identical across runs with the same seed.

pub mod bimodal;
pub mod boltzmann;
pub mod selftest;
pub mod wine;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{HerdingConfig, KvConfig, HERDING_KEYS};
use crate::error::{Error, Result};

/// JSON Schema every `report.json` conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../../report.schema.json");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    /// Effective configuration as `key = value` pairs.
    pub config: BTreeMap<String, String>,
    /// Metric values; `null` when undefined or infinite (see `flags`).
    pub metrics: BTreeMap<String, Option<f64>>,
    pub flags: BTreeMap<String, bool>,
    /// Artifact file names relative to the output directory.
    pub artifacts: Vec<String>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            ..Self::default()
        }
    }

    /// Records a metric. Infinite values become `null` with a
    /// `<name>_infinite` flag; NaN becomes `null`.
    pub fn metric(&mut self, name: &str, value: f64) {
        if value.is_infinite() {
            self.flags.insert(format!("{name}_infinite"), true);
            self.metrics.insert(name.to_string(), None);
        } else {
            self.metrics.insert(name.to_string(), value.is_finite().then_some(value));
        }
    }

    pub fn missing(&mut self, name: &str) {
        self.metrics.insert(name.to_string(), None);
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.to_string(), value);
    }

    pub fn echo(&mut self, prefix: &str, config: &HerdingConfig) {
        for key in HERDING_KEYS {
            if let Some(v) = config.to_kv().get_raw(key) {
                self.config.insert(format!("{prefix}{key}"), v.to_string());
            }
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.to_string());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied().flatten()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Writes `timing.json` with the wall-clock seconds of a run.
pub fn write_timing(dir: &Path, experiment: &str, seconds: f64) -> Result<()> {
    let body = serde_json::json!({ "experiment": experiment, "wall_clock_seconds": seconds });
    std::fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&body)? + "\n")?;
    Ok(())
}

/// Rejects keys outside the herding set and `extra`.
pub(crate) fn check_keys(kv: &KvConfig, extra: &[&str]) -> Result<()> {
    let known: Vec<&str> = HERDING_KEYS.iter().chain(extra).copied().collect();
    kv.check_known(&known)
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(Error::from)
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:?}")
}
