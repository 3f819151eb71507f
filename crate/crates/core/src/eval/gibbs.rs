use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureMap};
use crate::numeric::{log_sum_exp, Accumulator};

/// Largest enumerable state space, `2^20`.
pub const MAX_STATES: usize = 1 << 20;

/// All `2^n` spin configurations. State `k` has `x_i = +1` iff bit `i` of
/// `k` is set.
pub fn spin_states(n: usize) -> Result<Vec<Vec<f64>>> {
    if n > 20 {
        return Err(Error::StateSpaceTooLarge { n, limit: 20 });
    }
    Ok((0..1usize << n)
        .map(|k| (0..n).map(|i| if k >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect())
}

/// Exactly enumerated Gibbs distribution `pi(x) ∝ exp(-sum_m theta_m phi_m(x))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsModel {
    theta: Vec<f64>,
    features: FeatureMap,
    states: Vec<Vec<f64>>,
    log_z: f64,
    probs: Vec<f64>,
    eta: Vec<f64>,
    /// Coupling matrix when built in Boltzmann form.
    coupling: Option<Vec<Vec<f64>>>,
}

impl GibbsModel {
    /// Boltzmann machine `p(x) ∝ exp(-sum_{i<j} W_ij x_i x_j)` without biases.
    pub fn boltzmann(w: Vec<Vec<f64>>) -> Result<Self> {
        let n = w.len();
        for (i, row) in w.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if row[i] != 0.0 {
                return Err(Error::Numerical(format!("coupling diagonal W_{i}{i} is non-zero")));
            }
            for j in 0..n {
                if row[j] != w[j][i] {
                    return Err(Error::Numerical("coupling matrix is not symmetric".into()));
                }
            }
        }
        let features = FeatureMap::spin_pairwise(n);
        let theta = features
            .ids()
            .iter()
            .map(|id| match id {
                FeatureId::Pair(i, j) => w[*i][*j],
                _ => unreachable!("spin pairwise ids"),
            })
            .collect();
        let mut model = enumerate_gibbs(theta, &features, spin_states(n)?)?;
        model.coupling = Some(w);
        Ok(model)
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `eta_m(theta) = E_pi[phi_m]`.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn coupling(&self) -> Option<&[Vec<f64>]> {
        self.coupling.as_deref()
    }

    /// `E_theta(x) = sum_m theta_m phi_m(x)`.
    pub fn energy(&self, x: &[f64]) -> f64 {
        energy(&self.theta, &self.features, x)
    }

    /// Index of a spin state in [`spin_states`] order.
    pub fn spin_index(x: &[f64]) -> usize {
        x.iter()
            .enumerate()
            .map(|(i, v)| if *v > 0.0 { 1 << i } else { 0 })
            .sum()
    }

    pub fn entropy(&self) -> f64 {
        table_entropy(&self.probs)
    }

    /// `n` exact i.i.d. draws by inverse-CDF over the enumeration.
    pub fn sample_indices<R: rand::Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        use rand::distr::Distribution;
        let d = rand::distr::weighted::WeightedIndex::new(&self.probs).expect("valid probability table");
        (0..n).map(|_| d.sample(rng)).collect()
    }
}

fn energy(theta: &[f64], features: &FeatureMap, x: &[f64]) -> f64 {
    features
        .eval(x)
        .iter()
        .zip(theta)
        .map(|(p, t)| p * t)
        .sum()
}

/// Enumerates `pi_theta` over `domain`: log-partition, probabilities and
/// feature means.
pub fn enumerate_gibbs(theta: Vec<f64>, features: &FeatureMap, domain: Vec<Vec<f64>>) -> Result<GibbsModel> {
    if domain.len() > MAX_STATES {
        return Err(Error::StateSpaceTooLarge {
            n: (domain.len() as f64).log2().ceil() as usize,
            limit: 20,
        });
    }
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if theta.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: theta.len(),
        });
    }
    let neg_e: Vec<f64> = domain.par_iter().map(|x| -energy(&theta, features, x)).collect();
    let log_z = log_sum_exp(&neg_e);
    let probs: Vec<f64> = neg_e.iter().map(|v| (v - log_z).exp()).collect();
    let eta = table_moments(&probs, &domain, features);
    Ok(GibbsModel {
        theta,
        features: features.clone(),
        states: domain,
        log_z,
        probs,
        eta,
        coupling: None,
    })
}

/// `sum_x p(x) phi(x)` with compensated accumulation.
pub fn table_moments(probs: &[f64], states: &[Vec<f64>], features: &FeatureMap) -> Vec<f64> {
    let mut acc = vec![Accumulator::new(); features.len()];
    let mut buf = Vec::with_capacity(features.len());
    for (p, x) in probs.iter().zip(states) {
        if *p == 0.0 {
            continue;
        }
        features.eval_into(x, &mut buf);
        for (a, v) in acc.iter_mut().zip(&buf) {
            a.add(p * v);
        }
    }
    acc.iter().map(Accumulator::value).collect()
}

/// Shannon entropy of a probability table (0 log 0 = 0).
pub fn table_entropy(probs: &[f64]) -> f64 {
    let mut acc = Accumulator::new();
    for &p in probs {
        if p > 0.0 {
            acc.add(-p * p.ln());
        }
    }
    acc.value()
}
