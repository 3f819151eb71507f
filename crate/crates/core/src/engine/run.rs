use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{EpsilonSchedule, HerdingConfig};
use crate::error::{Error, Result};
use crate::families::ComponentParams;
use crate::mixture::MixtureModel;

/// State after outer step `t` (`t = 0` is the initial component).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub component: ComponentParams,
    /// Standardised feature means of `component`.
    pub eta: Vec<f64>,
    /// Weights after the update at step `t`. Point herding stores its own
    /// weight vector `w` here.
    pub a: Vec<f64>,
    pub tentative_loss: f64,
    pub entropy: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HerdingRun {
    pub strategy: String,
    pub config: HerdingConfig,
    pub initial: StepRecord,
    /// Steps `1..=t_burnin + t_output`.
    pub trajectory: Vec<StepRecord>,
    /// Uniform mixture of the last `t_output` components.
    pub output: MixtureModel,
    pub jumps_accepted: usize,
}

impl HerdingRun {
    pub(crate) fn assemble(
        strategy: &str,
        config: &HerdingConfig,
        initial: StepRecord,
        trajectory: Vec<StepRecord>,
        jumps_accepted: usize,
    ) -> Result<Self> {
        let start = trajectory.len().saturating_sub(config.t_output);
        let output = MixtureModel::uniform(trajectory[start..].iter().map(|s| s.component.clone()).collect())?;
        Ok(Self {
            strategy: strategy.to_string(),
            config: config.clone(),
            initial,
            trajectory,
            output,
            jumps_accepted,
        })
    }

    /// Components `r^(0..=t)`.
    pub fn components_through(&self, t: usize) -> Vec<ComponentParams> {
        std::iter::once(&self.initial)
            .chain(&self.trajectory[..t])
            .map(|s| s.component.clone())
            .collect()
    }

    /// Aggregate weights `rho^(s, t)` for `s = 0..=t` implied by the epsilon
    /// schedule.
    pub fn aggregate_weights(&self, t: usize) -> Vec<f64> {
        let mut rho = vec![1.0];
        for step in 1..=t {
            let eps = self.config.eps_at(step);
            for r in rho.iter_mut() {
                *r *= 1.0 - eps;
            }
            rho.push(eps);
        }
        rho
    }

    /// The running aggregate `p^(t)` whose moments the weights track.
    pub fn aggregate_at(&self, t: usize) -> Result<MixtureModel> {
        let comps = self.components_through(t);
        let rho = self.aggregate_weights(t);
        // drop components whose weight underflowed to zero
        let (c, w): (Vec<_>, Vec<_>) = comps.into_iter().zip(rho).filter(|(_, w)| *w > 0.0).unzip();
        MixtureModel::new_normalized(c, w)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// One row per step: `t, coords..., eta..., a..., tentative_loss, entropy`.
    pub fn write_trajectory_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let first = &self.initial;
        let mut header = vec!["t".to_string()];
        header.extend((0..first.component.coords().len()).map(|k| format!("param_{k}")));
        header.extend((0..first.eta.len()).map(|k| format!("eta_{k}")));
        header.extend((0..first.a.len()).map(|k| format!("a_{k}")));
        header.push("tentative_loss".into());
        header.push("entropy".into());
        w.write_record(&header)?;
        for s in std::iter::once(first).chain(&self.trajectory) {
            let mut row = vec![s.t.to_string()];
            row.extend(s.component.coords().iter().map(|v| format!("{v:?}")));
            row.extend(s.eta.iter().map(|v| format!("{v:?}")));
            row.extend(s.a.iter().map(|v| format!("{v:?}")));
            row.push(format!("{:?}", s.tentative_loss));
            row.push(format!("{:?}", s.entropy));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Maps an entropic run over point masses with the harmonic schedule onto
/// point-herding weights: `w'_t = -(t + 1) / lambda * a^(t)` for
/// `t = 0..=t_max`.
pub fn point_equivalence_transform(run: &HerdingRun, lambda: f64) -> Result<Vec<Vec<f64>>> {
    if run.config.epsilon_schedule != EpsilonSchedule::Harmonic {
        return Err(Error::ScheduleMismatch);
    }
    if !matches!(run.initial.component, ComponentParams::PointMass { .. }) {
        return Err(Error::InvalidMixture("equivalence needs point-mass components".into()));
    }
    Ok(std::iter::once(&run.initial)
        .chain(&run.trajectory)
        .map(|s| {
            let scale = -((s.t + 1) as f64) / lambda;
            s.a.iter().map(|a| scale * a).collect()
        })
        .collect())
}
