//! Run configuration and the flat `key = value` config format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered `key = value` pairs; `#` starts a comment.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvConfig {
    entries: Vec<(String, String)>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if kv.get_raw(key).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            kv.entries.push((key.to_string(), value.trim().to_string()));
        }
        Ok(kv)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get_raw(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get_raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("cannot parse `{key} = {v}`")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get_raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|_| Error::Config(format!("cannot parse element `{s}` of `{key}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn require_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.get_list(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// Rejects keys outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn merge(&mut self, other: &KvConfig) {
        for (k, v) in &other.entries {
            self.set(k, v.clone());
        }
    }
}

impl fmt::Display for KvConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Step-size schedule `eps^(T)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// `eps^(T) = eps_herding`; mixture weights decay geometrically with
    /// ratio `1 - eps_herding`.
    Constant,
    /// `eps^(T) = 1 / (T + 1)`; uniform mixture weights.
    Harmonic,
}

impl FromStr for EpsilonSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Self::Constant),
            "harmonic" => Ok(Self::Harmonic),
            other => Err(Error::Config(format!("unknown epsilon schedule `{other}`"))),
        }
    }
}

impl fmt::Display for EpsilonSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Constant => "constant",
            Self::Harmonic => "harmonic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HerdingConfig {
    pub eps_herding: f64,
    pub t_output: usize,
    pub t_burnin: usize,
    pub eta_learn: f64,
    pub k_update: usize,
    pub use_modified_weights: bool,
    pub p_jump: f64,
    pub lambda: f64,
    pub seed: u64,
    pub epsilon_schedule: EpsilonSchedule,
}

pub const HERDING_KEYS: &[&str] = &[
    "eps_herding",
    "t_output",
    "t_burnin",
    "eta_learn",
    "k_update",
    "use_modified_weights",
    "p_jump",
    "lambda",
    "seed",
    "epsilon_schedule",
];

impl HerdingConfig {
    /// Bimodal target, entropic herding (lambda = 100).
    pub fn bimodal() -> Self {
        Self {
            eps_herding: 0.02,
            t_output: 100,
            t_burnin: 50,
            eta_learn: 0.2,
            k_update: 50,
            use_modified_weights: true,
            p_jump: 0.0,
            lambda: 100.0,
            seed: 0,
            epsilon_schedule: EpsilonSchedule::Constant,
        }
    }

    /// Bimodal target, point herding.
    pub fn bimodal_point() -> Self {
        Self {
            eps_herding: 0.002,
            t_output: 1000,
            t_burnin: 500,
            ..Self::bimodal()
        }
    }

    /// Boltzmann machine; lambda = 13 matches the reported scatter comparison.
    pub fn boltzmann() -> Self {
        Self {
            eps_herding: 0.05,
            t_output: 320,
            t_burnin: 100,
            eta_learn: 0.2,
            k_update: 50,
            use_modified_weights: false,
            p_jump: 0.1,
            lambda: 13.0,
            seed: 0,
            epsilon_schedule: EpsilonSchedule::Constant,
        }
    }

    /// Wine quality data (lambda = 200).
    pub fn wine() -> Self {
        Self {
            eps_herding: 0.01,
            t_output: 500,
            t_burnin: 100,
            eta_learn: 0.2,
            k_update: 20,
            use_modified_weights: true,
            p_jump: 0.1,
            lambda: 200.0,
            seed: 0,
            epsilon_schedule: EpsilonSchedule::Constant,
        }
    }

    pub fn t_max(&self) -> usize {
        self.t_burnin + self.t_output
    }

    /// `eps^(T)` for outer step `T >= 1`.
    pub fn eps_at(&self, t: usize) -> f64 {
        match self.epsilon_schedule {
            EpsilonSchedule::Constant => self.eps_herding,
            EpsilonSchedule::Harmonic => 1.0 / (t as f64 + 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.epsilon_schedule == EpsilonSchedule::Constant
            && !(self.eps_herding > 0.0 && self.eps_herding < 1.0)
        {
            return bad(format!("eps_herding must lie in (0, 1), got {}", self.eps_herding));
        }
        if self.t_output == 0 {
            return bad("t_output must be positive".into());
        }
        if self.k_update == 0 {
            return bad("k_update must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.p_jump) {
            return bad(format!("p_jump must lie in [0, 1], got {}", self.p_jump));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.eta_learn > 0.0) || !self.eta_learn.is_finite() {
            return bad(format!("eta_learn must be positive, got {}", self.eta_learn));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        kv.set("eps_herding", format!("{:?}", self.eps_herding));
        kv.set("t_output", self.t_output.to_string());
        kv.set("t_burnin", self.t_burnin.to_string());
        kv.set("eta_learn", format!("{:?}", self.eta_learn));
        kv.set("k_update", self.k_update.to_string());
        kv.set("use_modified_weights", self.use_modified_weights.to_string());
        kv.set("p_jump", format!("{:?}", self.p_jump));
        kv.set("lambda", format!("{:?}", self.lambda));
        kv.set("seed", self.seed.to_string());
        kv.set("epsilon_schedule", self.epsilon_schedule.to_string());
        kv
    }

    /// Overrides fields of `base` with whichever herding keys `kv` carries.
    pub fn from_kv_over(base: &Self, kv: &KvConfig) -> Result<Self> {
        let c = Self {
            eps_herding: kv.get_or("eps_herding", base.eps_herding)?,
            t_output: kv.get_or("t_output", base.t_output)?,
            t_burnin: kv.get_or("t_burnin", base.t_burnin)?,
            eta_learn: kv.get_or("eta_learn", base.eta_learn)?,
            k_update: kv.get_or("k_update", base.k_update)?,
            use_modified_weights: kv.get_or("use_modified_weights", base.use_modified_weights)?,
            p_jump: kv.get_or("p_jump", base.p_jump)?,
            lambda: kv.get_or("lambda", base.lambda)?,
            seed: kv.get_or("seed", base.seed)?,
            epsilon_schedule: kv.get_or("epsilon_schedule", base.epsilon_schedule)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        kv.check_known(HERDING_KEYS)?;
        for key in HERDING_KEYS.iter().filter(|k| **k != "epsilon_schedule") {
            if kv.get_raw(key).is_none() {
                return Err(Error::Config(format!("missing key `{key}`")));
            }
        }
        Self::from_kv_over(&Self::bimodal(), kv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults_round_trip() {
        for c in [
            HerdingConfig::bimodal(),
            HerdingConfig::bimodal_point(),
            HerdingConfig::boltzmann(),
            HerdingConfig::wine(),
        ] {
            let text = c.to_kv().to_string();
            let back = HerdingConfig::from_kv(&KvConfig::parse(&text).unwrap()).unwrap();
            assert_eq!(c, back);
        }
    }

    #[test]
    fn parse_comments_and_errors() {
        let kv = KvConfig::parse("# header\n lambda = 13 # inline\n\nseed=4\n").unwrap();
        assert_eq!(kv.require::<f64>("lambda").unwrap(), 13.0);
        assert_eq!(kv.require::<u64>("seed").unwrap(), 4);
        assert!(KvConfig::parse("lambda 13").is_err());
        assert!(KvConfig::parse("a = 1\na = 2").is_err());
        assert!(kv.check_known(&["lambda"]).is_err());
        assert!(kv.require::<u64>("missing").is_err());
    }

    #[test]
    fn schedules() {
        let mut c = HerdingConfig::bimodal();
        assert_eq!(c.eps_at(7), 0.02);
        c.epsilon_schedule = EpsilonSchedule::Harmonic;
        assert_eq!(c.eps_at(3), 0.25);
    }

    #[test]
    fn validation() {
        let mut c = HerdingConfig::boltzmann();
        c.p_jump = 1.5;
        assert!(c.validate().is_err());
        let mut c = HerdingConfig::boltzmann();
        c.eps_herding = 1.0;
        assert!(c.validate().is_err());
        c.epsilon_schedule = EpsilonSchedule::Harmonic;
        assert!(c.validate().is_ok());
    }
}
