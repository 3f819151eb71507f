//! Weighted mixtures of candidate components: the output model of a run.

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

pub use crate::families::FamilyTag;

use crate::error::{Error, Result};
use crate::families::{self, ComponentParams};
use crate::features::FeatureMap;
use crate::numeric::{bisect, log_sum_exp, normal_cdf, Accumulator};
use crate::rng::{stream, Stream};

/// Largest spin count for which exact enumeration is attempted.
pub const MAX_ENUM_SPINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureFile", into = "MixtureFile")]
pub struct MixtureModel {
    family: FamilyTag,
    dim: usize,
    weights: Vec<f64>,
    components: Vec<ComponentParams>,
}

/// On-disk layout `{"family", "dim", "weights", "components"}`.
#[derive(Serialize, Deserialize)]
struct MixtureFile {
    family: FamilyTag,
    dim: usize,
    weights: Vec<f64>,
    components: Vec<ComponentParams>,
}

impl From<MixtureModel> for MixtureFile {
    fn from(m: MixtureModel) -> Self {
        Self {
            family: m.family,
            dim: m.dim,
            weights: m.weights,
            components: m.components,
        }
    }
}

impl TryFrom<MixtureFile> for MixtureModel {
    type Error = String;

    fn try_from(f: MixtureFile) -> std::result::Result<Self, String> {
        let m = MixtureModel::new(f.components, f.weights).map_err(|e| e.to_string())?;
        if m.family != f.family || m.dim != f.dim {
            return Err("family/dim header disagrees with components".into());
        }
        Ok(m)
    }
}

impl MixtureModel {
    pub fn new(components: Vec<ComponentParams>, weights: Vec<f64>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidMixture("no components".into()))?;
        if components.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        let (family, dim) = (first.tag(), first.dim());
        if components.iter().any(|c| c.tag() != family || c.dim() != dim) {
            return Err(Error::InvalidMixture("mixed families or dimensions".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMixture("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}")));
        }
        Ok(Self {
            family,
            dim,
            weights,
            components,
        })
    }

    /// Equal weights `1/len`.
    pub fn uniform(components: Vec<ComponentParams>) -> Result<Self> {
        let n = components.len();
        Self::new(components, vec![1.0 / n.max(1) as f64; n])
    }

    /// Normalises non-negative `weights` before construction.
    pub fn new_normalized(components: Vec<ComponentParams>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidMixture("weights sum to zero".into()));
        }
        Self::new(components, weights.iter().map(|w| w / total).collect())
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[ComponentParams] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Per-component `log rho_t + log r_t(x)`.
    pub fn component_log_terms(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| {
                let lp = match self.family {
                    FamilyTag::PointMass => families::log_mass(c, x)?,
                    _ => families::log_density(c, x)?,
                };
                Ok(w.ln() + lp)
            })
            .collect()
    }

    /// Log-density (continuous) or log-mass (spin / point mixtures).
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(log_sum_exp(&self.component_log_terms(x)?))
    }

    /// `n` independent draws: component index by weight, then a draw from it.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, Stream::Sampling);
        let index = WeightedIndex::new(&self.weights).expect("weights validated at construction");
        (0..n)
            .map(|_| families::sample(&self.components[index.sample(&mut rng)], &mut rng))
            .collect()
    }

    /// Mixture feature means (linear in the weights).
    pub fn feature_moments(&self, features: &FeatureMap) -> Result<Vec<f64>> {
        let mut acc = vec![Accumulator::new(); features.len()];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for (a, v) in acc.iter_mut().zip(families::feature_moments(c, features)?) {
                a.add(w * v);
            }
        }
        Ok(acc.iter().map(Accumulator::value).collect())
    }

    /// `sum_t rho_t H(r_t)`.
    pub fn mean_component_entropy(&self) -> f64 {
        self.components
            .iter()
            .zip(&self.weights)
            .map(|(c, w)| w * families::entropy(c))
            .sum()
    }

    /// Conditional of coordinate `target` given the others, as a 1-D mixture.
    ///
    /// `observed` holds all coordinates; the entry at `target` is ignored.
    pub fn conditional_univariate(&self, target: usize, observed: &[f64]) -> Result<MixtureModel> {
        if !self.family.is_continuous() {
            return Err(Error::InvalidMixture("conditionals need a Gaussian family".into()));
        }
        if observed.len() != self.dim || target >= self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: observed.len(),
            });
        }
        let mut log_w = Vec::with_capacity(self.len());
        let mut parts = Vec::with_capacity(self.len());
        for (c, rho) in self.components.iter().zip(&self.weights) {
            let mut lw = rho.ln();
            for (j, &xj) in observed.iter().enumerate() {
                if j != target {
                    lw += families::marginal_log_density(c, j, xj).expect("gaussian family");
                }
            }
            log_w.push(lw);
            let coords = c.coords();
            parts.push(ComponentParams::Gauss1D {
                mu: coords[target],
                log_sigma: coords[self.dim + target],
            });
        }
        let max_log_weight = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max_log_weight.is_finite() {
            return Err(Error::AllWeightsVanish { max_log_weight });
        }
        let z = log_sum_exp(&log_w);
        let weights: Vec<f64> = log_w.iter().map(|lw| (lw - z).exp()).collect();
        MixtureModel::new_normalized(parts, weights)
    }

    /// CDF of a 1-D Gaussian or point mixture.
    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: self.dim,
            });
        }
        let mut acc = Accumulator::new();
        for (c, w) in self.components.iter().zip(&self.weights) {
            let p = match c {
                ComponentParams::Gauss1D { mu, log_sigma } => normal_cdf(x, *mu, log_sigma.exp()),
                ComponentParams::GaussDiag { mu, log_sigma } => normal_cdf(x, mu[0], log_sigma[0].exp()),
                ComponentParams::PointMass { x: at } => {
                    if at[0] <= x {
                        1.0
                    } else {
                        0.0
                    }
                }
                ComponentParams::SpinBernoulli { .. } => {
                    return Err(Error::InvalidMixture("cdf of a spin mixture".into()))
                }
            };
            acc.add(w * p);
        }
        Ok(acc.value())
    }

    /// Mixture quantiles by bisection on the CDF.
    pub fn quantiles_univariate(&self, probs: &[f64]) -> Result<Vec<f64>> {
        if !self.family.is_continuous() || self.dim != 1 {
            return Err(Error::InvalidMixture("quantiles need a 1-D Gaussian mixture".into()));
        }
        let (lo, hi) = self.envelope(10.0);
        probs
            .iter()
            .map(|&p| {
                let mut a = lo;
                let mut b = hi;
                // bisect until the probability error is below 1e-8 or the
                // bracket collapses
                for _ in 0..300 {
                    let mid = 0.5 * (a + b);
                    let c = self.cdf_1d(mid)?;
                    if (c - p).abs() <= 1e-8 && b - a < 1e-10 * (1.0 + mid.abs()) {
                        break;
                    }
                    if c < p {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    if b - a <= f64::EPSILON * (1.0 + mid.abs()) {
                        break;
                    }
                }
                Ok(0.5 * (a + b))
            })
            .collect()
    }

    /// `[min(mu - k sigma), max(mu + k sigma)]` over the components (1-D).
    pub fn envelope(&self, k: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in &self.components {
            let loc = c.location().map(|v| v[0]).unwrap_or(0.0);
            let s = c.sigmas().map(|v| v[0]).unwrap_or(0.0);
            lo = lo.min(loc - k * s);
            hi = hi.max(loc + k * s);
        }
        (lo, hi)
    }

    /// Exact entropy of a spin or point mixture.
    pub fn entropy_exact_discrete(&self) -> Result<f64> {
        match self.family {
            FamilyTag::PointMass => {
                // aggregate weight per distinct point
                let mut pts: Vec<(Vec<f64>, f64)> = Vec::new();
                for (c, w) in self.components.iter().zip(&self.weights) {
                    let x = c.coords();
                    match pts.iter_mut().find(|(p, _)| *p == x) {
                        Some(slot) => slot.1 += w,
                        None => pts.push((x, *w)),
                    }
                }
                Ok(-pts
                    .iter()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(_, p)| p * p.ln())
                    .sum::<f64>())
            }
            FamilyTag::SpinBernoulli => {
                let table = self.spin_table()?;
                let mut acc = Accumulator::new();
                for &p in &table {
                    if p > 0.0 {
                        acc.add(-p * p.ln());
                    }
                }
                Ok(acc.value())
            }
            _ => Err(Error::InvalidMixture("exact entropy needs a discrete family".into())),
        }
    }

    /// Probabilities of every spin state, indexed as in [`crate::eval::spin_states`].
    pub fn spin_table(&self) -> Result<Vec<f64>> {
        if self.dim > MAX_ENUM_SPINS {
            return Err(Error::StateSpaceTooLarge {
                n: self.dim,
                limit: MAX_ENUM_SPINS,
            });
        }
        let states = crate::eval::spin_states(self.dim)?;
        self.table_over(&states)
    }

    /// Probabilities over an explicit finite domain.
    pub fn table_over(&self, states: &[Vec<f64>]) -> Result<Vec<f64>> {
        states.iter().map(|x| Ok(self.log_density(x)?.exp())).collect()
    }

    /// Monte-Carlo entropy `-mean log p(x_k)` with its standard error.
    pub fn entropy_mc(&self, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
        if !self.family.is_continuous() {
            return Err(Error::InvalidMixture("Monte-Carlo entropy needs a continuous family".into()));
        }
        let xs = self.sample(n_samples, seed);
        let vals: Vec<f64> = xs
            .iter()
            .map(|x| self.log_density(x).map(|v| -v))
            .collect::<Result<_>>()?;
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Ok((mean, (var / n).sqrt()))
    }

    /// Probability mass per bin `[edges[k], edges[k+1])` of a 1-D mixture.
    pub fn bin_masses(&self, edges: &[f64]) -> Result<Vec<f64>> {
        let cdf: Vec<f64> = edges.iter().map(|&e| self.cdf_1d(e)).collect::<Result<_>>()?;
        if self.family == FamilyTag::PointMass {
            // half-open bins for point masses
            let mut masses = vec![0.0; edges.len() - 1];
            for (c, w) in self.components.iter().zip(&self.weights) {
                let x = c.coords()[0];
                if let Some(k) = (0..masses.len()).find(|&k| x >= edges[k] && x < edges[k + 1]) {
                    masses[k] += w;
                }
            }
            return Ok(masses);
        }
        Ok(cdf.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Solves `cdf(x) = p` for a monotone `cdf` on `[lo, hi]`.
pub fn invert_cdf<F: Fn(f64) -> f64>(cdf: F, p: f64, lo: f64, hi: f64) -> f64 {
    bisect(|x| cdf(x) - p, lo, hi, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::integrate;

    fn g(mu: f64, s: f64) -> ComponentParams {
        ComponentParams::gauss1d(mu, s)
    }

    #[test]
    fn identical_components_collapse() {
        let m = MixtureModel::uniform(vec![g(0.0, 1.0), g(0.0, 1.0)]).unwrap();
        for x in [-2.0, 0.0, 0.3, 5.0] {
            let single = families::log_density(&g(0.0, 1.0), &[x]).unwrap();
            assert!((m.log_density(&[x]).unwrap() - single).abs() < 1e-12);
        }
    }

    #[test]
    fn narrow_pair_density() {
        let m = MixtureModel::uniform(vec![g(-1.0, 0.01), g(1.0, 0.01)]).unwrap();
        let expected = 0.5f64.ln() + crate::numeric::normal_ln_pdf(0.0, 0.0, 0.01);
        assert!((m.log_density(&[-1.0]).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 2.9930).abs() < 1e-4);
    }

    #[test]
    fn spin_mixture_normalises() {
        let m = MixtureModel::new(
            vec![
                ComponentParams::spin_from_probs(&[0.9, 0.2]),
                ComponentParams::spin_from_probs(&[0.3, 0.6]),
            ],
            vec![0.4, 0.6],
        )
        .unwrap();
        let total: f64 = m.spin_table().unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuous_mixture_integrates_to_one() {
        let m = MixtureModel::new(vec![g(-2.0, 0.3), g(1.0, 1.5), g(4.0, 0.05)], vec![0.2, 0.5, 0.3])
            .unwrap();
        let (lo, hi) = m.envelope(10.0);
        let z = integrate(|x| m.log_density(&[x]).unwrap().exp(), lo, hi, 1e-10);
        assert!((z - 1.0).abs() < 1e-6);
    }

    #[test]
    fn construction_errors() {
        assert!(MixtureModel::new(vec![], vec![]).is_err());
        assert!(MixtureModel::new(vec![g(0.0, 1.0)], vec![0.5]).is_err());
        assert!(MixtureModel::new(vec![g(0.0, 1.0), g(0.0, 1.0)], vec![1.5, -0.5]).is_err());
        assert!(MixtureModel::new(
            vec![g(0.0, 1.0), ComponentParams::point(vec![0.0])],
            vec![0.5, 0.5]
        )
        .is_err());
    }

    #[test]
    fn sampling() {
        let m = MixtureModel::new(
            vec![ComponentParams::point(vec![0.0]), ComponentParams::point(vec![1.0])],
            vec![0.25, 0.75],
        )
        .unwrap();
        assert!(m.sample(0, 1).is_empty());
        let xs = m.sample(100_000, 9);
        let f = xs.iter().filter(|x| x[0] == 0.0).count() as f64 / 1e5;
        assert!((f - 0.25).abs() < 0.01);
        assert_eq!(m.sample(20, 4), m.sample(20, 4));
    }

    #[test]
    fn conditional_examples() {
        let c = ComponentParams::gauss_diag(vec![0.5, -1.0, 2.0], &[1.0, 0.5, 2.0]);
        let single = MixtureModel::uniform(vec![c]).unwrap();
        let cond = single.conditional_univariate(1, &[0.3, 99.0, 1.0]).unwrap();
        assert_eq!(cond.weights(), &[1.0]);
        assert_eq!(cond.components()[0], ComponentParams::Gauss1D { mu: -1.0, log_sigma: 0.5f64.ln() });

        // identical marginals on the observed coordinates keep the prior weights
        let a = ComponentParams::gauss_diag(vec![0.0, 5.0], &[1.0, 1.0]);
        let b = ComponentParams::gauss_diag(vec![0.0, -5.0], &[1.0, 3.0]);
        let m = MixtureModel::new(vec![a.clone(), b.clone()], vec![0.3, 0.7]).unwrap();
        let cond = m.conditional_univariate(1, &[0.4, 0.0]).unwrap();
        assert!((cond.weights()[0] - 0.3).abs() < 1e-12);

        // likelihood ratio on one observed coordinate
        let a = ComponentParams::gauss_diag(vec![0.0, 0.0], &[1.0, 1.0]);
        let b = ComponentParams::gauss_diag(vec![10.0, 0.0], &[1.0, 1.0]);
        let m = MixtureModel::uniform(vec![a, b]).unwrap();
        let x0 = 1.0;
        let cond = m.conditional_univariate(1, &[x0, 0.0]).unwrap();
        let ratio = cond.weights()[0] / cond.weights()[1];
        let closed = (-0.5 * x0 * x0 + 0.5 * (x0 - 10.0f64).powi(2)).exp();
        assert!((ratio / closed - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conditional_weights_vanish() {
        let a = ComponentParams::gauss_diag(vec![0.0, 0.0], &[0.01, 1.0]);
        let m = MixtureModel::uniform(vec![a]).unwrap();
        assert!(matches!(
            m.conditional_univariate(1, &[f64::INFINITY, 0.0]),
            Err(Error::AllWeightsVanish { .. })
        ));
    }

    #[test]
    fn quantile_examples() {
        let n = MixtureModel::uniform(vec![g(0.0, 1.0)]).unwrap();
        let q = n.quantiles_univariate(&[0.5, 0.9]).unwrap();
        assert!(q[0].abs() < 1e-8);
        assert!((q[1] - 1.281_551_565_544_6).abs() < 1e-7);
        let bi = MixtureModel::uniform(vec![g(-5.0, 1.0), g(5.0, 1.0)]).unwrap();
        assert!(bi.quantiles_univariate(&[0.5]).unwrap()[0].abs() < 1e-6);
    }

    #[test]
    fn discrete_entropy_examples() {
        let uniform = MixtureModel::uniform(vec![ComponentParams::spin_from_probs(&[0.5; 10])]).unwrap();
        assert!((uniform.entropy_exact_discrete().unwrap() - 10.0 * 2f64.ln()).abs() < 1e-10);
        let one = MixtureModel::uniform(vec![ComponentParams::point(vec![1.0, -1.0])]).unwrap();
        assert_eq!(one.entropy_exact_discrete().unwrap(), 0.0);
        let two = MixtureModel::uniform(vec![
            ComponentParams::point(vec![1.0, -1.0]),
            ComponentParams::point(vec![-1.0, -1.0]),
        ])
        .unwrap();
        assert!((two.entropy_exact_discrete().unwrap() - 2f64.ln()).abs() < 1e-15);
        let big = MixtureModel::uniform(vec![ComponentParams::spin_from_probs(&[0.5; 21])]).unwrap();
        assert!(matches!(
            big.entropy_exact_discrete(),
            Err(Error::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn mc_entropy_examples() {
        let n = MixtureModel::uniform(vec![g(0.0, 1.0)]).unwrap();
        let (h, se) = n.entropy_mc(1_000_000, 3).unwrap();
        assert!((h - 1.418_938_533_204_672_7).abs() < 3.0 * se);
        let narrow = MixtureModel::uniform(vec![g(0.0, 0.01)]).unwrap();
        let (h, se) = narrow.entropy_mc(100_000, 3).unwrap();
        assert!((h - (1.418_938_533_204_672_7 + 0.01f64.ln())).abs() < 4.0 * se);
        let twin = MixtureModel::uniform(vec![g(0.0, 1.0), g(0.0, 1.0)]).unwrap();
        let (h2, se2) = twin.entropy_mc(200_000, 5).unwrap();
        assert!((h2 - 1.418_938_533_204_672_7).abs() < 4.0 * se2);
    }

    #[test]
    fn json_round_trip() {
        let m = MixtureModel::new(vec![g(0.0, 1.0), g(1.0, 0.5)], vec![0.25, 0.75]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"family\":\"gauss1d\""));
        assert!(text.contains("\"dim\":1"));
        let back: MixtureModel = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn moments_are_linear_in_weights() {
        let f = FeatureMap::poly1d(4);
        let comps = vec![g(0.3, 0.4), g(-1.0, 2.0), g(2.0, 0.1)];
        let w = vec![0.1, 0.6, 0.3];
        let m = MixtureModel::new(comps.clone(), w.clone()).unwrap();
        let mix = m.feature_moments(&f).unwrap();
        for k in 0..4 {
            let direct: f64 = comps
                .iter()
                .zip(&w)
                .map(|(c, w)| w * families::feature_moments(c, &f).unwrap()[k])
                .sum();
            assert!((mix[k] - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }
}
