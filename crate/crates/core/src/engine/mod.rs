//! Herding dynamics behind a common [`HerdingStrategy`] trait.
//!
//! Built-in strategies, by registry name:
//!
//! - `entropic`: gradient-based entropic herding over a smooth family.
//! - `entropic-scan`: entropic herding restricted to point masses on a
//!   finite domain, with the inner problem solved exactly by scanning.
//! - `point`: classic point herding by exact argmax over a finite domain.
//! - `point-metropolis`: point components moved by gradient steps and
//!   Metropolis-accepted random proposals.

pub mod adam;
pub mod inner;
mod run;
mod strategies;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use adam::OptimizerState;
pub use inner::{
    effective_weights, inner_gradient, inner_gradient_step, inner_objective, jump_move,
    metropolis_accept, std_moments, Acceptance,
};
pub use run::{point_equivalence_transform, HerdingRun, StepRecord};
pub use strategies::{
    run_point_from, EntropicScanStrategy, EntropicStrategy, PointMetropolisStrategy, PointStrategy,
};

use crate::config::HerdingConfig;
use crate::error::{Error, Result};
use crate::families::{ComponentParams, FamilyRegistry};
use crate::features::FeatureMap;
use crate::moments::MomentSpec;

/// Everything a strategy needs besides the run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Problem {
    pub features: FeatureMap,
    pub spec: MomentSpec,
    /// Candidate family name in the [`FamilyRegistry`].
    pub family: String,
    /// Starting component; the family's neutral start when absent.
    pub initial: Option<ComponentParams>,
    /// Finite candidate set for the scanning strategies.
    pub domain: Option<Vec<Vec<f64>>>,
    /// Box applied to point locations after gradient steps.
    pub bounds: Option<(f64, f64)>,
}

impl Problem {
    pub fn new(features: FeatureMap, spec: MomentSpec, family: &str) -> Self {
        Self {
            features,
            spec,
            family: family.to_string(),
            initial: None,
            domain: None,
            bounds: None,
        }
    }

    pub fn with_domain(mut self, domain: Vec<Vec<f64>>) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Self {
        self.bounds = Some((lo, hi));
        self
    }

    pub fn with_initial(mut self, initial: ComponentParams) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.spec = self.spec.with_lambda(lambda)?;
        Ok(self)
    }

    fn domain(&self) -> Result<&[Vec<f64>]> {
        match &self.domain {
            Some(d) if !d.is_empty() => Ok(d),
            _ => Err(Error::EmptyDomain),
        }
    }
}

pub trait HerdingStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn run(&self, problem: &Problem, config: &HerdingConfig, families: &FamilyRegistry) -> Result<HerdingRun>;
}

/// Name-keyed registry of herding strategies, carrying the family registry
/// they resolve candidate families from.
#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: Vec<Arc<dyn HerdingStrategy>>,
    families: Arc<FamilyRegistry>,
}

impl StrategyRegistry {
    pub fn new(families: FamilyRegistry) -> Self {
        Self {
            strategies: Vec::new(),
            families: Arc::new(families),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::new(FamilyRegistry::builtin());
        r.register(Arc::new(EntropicStrategy));
        r.register(Arc::new(EntropicScanStrategy));
        r.register(Arc::new(PointStrategy));
        r.register(Arc::new(PointMetropolisStrategy));
        r
    }

    /// Adds `strategy`, replacing any entry with the same name.
    pub fn register(&mut self, strategy: Arc<dyn HerdingStrategy>) {
        self.strategies.retain(|s| s.name() != strategy.name());
        self.strategies.push(strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn HerdingStrategy> {
        self.strategies
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::Unknown {
                kind: "strategy",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.name()).collect()
    }

    pub fn families(&self) -> &FamilyRegistry {
        &self.families
    }

    pub fn run(&self, name: &str, problem: &Problem, config: &HerdingConfig) -> Result<HerdingRun> {
        config.validate()?;
        self.get(name)?.run(problem, config, &self.families)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}
