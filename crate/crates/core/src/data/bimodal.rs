use rand::Rng;
use rand_distr::StandardNormal;

use crate::features::FeatureMap;
use crate::numeric::integrate;
use crate::rng::{stream, Stream};

pub const DOMAIN: (f64, f64) = (-4.0, 4.0);

/// Unnormalised log-density `E(x) = -(x^4 - 3x^2 + 0.5x)`.
pub fn log_density_unnorm(x: f64) -> f64 {
    -(x.powi(4) - 3.0 * x * x + 0.5 * x)
}

/// The bimodal target normalised by quadrature over [`DOMAIN`].
#[derive(Clone, Debug)]
pub struct BimodalTarget {
    log_z: f64,
}

impl BimodalTarget {
    pub fn new() -> Self {
        let z = integrate(|x| log_density_unnorm(x).exp(), DOMAIN.0, DOMAIN.1, 1e-13);
        Self { log_z: z.ln() }
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < DOMAIN.0 || x > DOMAIN.1 {
            return 0.0;
        }
        (log_density_unnorm(x) - self.log_z).exp()
    }

    /// Exact `E[phi_m]` by quadrature.
    pub fn feature_means(&self, features: &FeatureMap) -> Vec<f64> {
        (0..features.len())
            .map(|m| integrate(|x| features.eval(&[x])[m] * self.pdf(x), DOMAIN.0, DOMAIN.1, 1e-13))
            .collect()
    }
}

impl Default for BimodalTarget {
    fn default() -> Self {
        Self::new()
    }
}

pub const MH_PROPOSAL_SD: f64 = 0.5;
pub const MH_BURN_IN: usize = 1000;

/// Random-walk Metropolis-Hastings draws from the bimodal target.
pub fn mh_sample_bimodal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Stream::Chain);
    let mut x = 0.0;
    let mut e = log_density_unnorm(x);
    let mut out = Vec::with_capacity(n);
    for k in 0..MH_BURN_IN + n {
        let z: f64 = rng.sample(StandardNormal);
        let y = x + MH_PROPOSAL_SD * z;
        let ey = log_density_unnorm(y);
        if ey >= e || rng.random::<f64>() < (ey - e).exp() {
            x = y;
            e = ey;
        }
        if k >= MH_BURN_IN {
            out.push(x);
        }
    }
    out
}

/// Uniform grid over [`DOMAIN`] with spacing `step`, as one-element points.
pub fn grid(step: f64) -> Vec<Vec<f64>> {
    let n = ((DOMAIN.1 - DOMAIN.0) / step).round() as usize;
    (0..=n).map(|k| vec![DOMAIN.0 + k as f64 * step]).collect()
}
