//! Moment targets and feature standardisation.
//!
//! Herding runs in standardised feature coordinates `phi'_m = (phi_m -
//! mu_m) / sigma_m`, where the target of every standardised feature is zero
//! and every feature carries the same weight `lambda`. In raw coordinates
//! this is the per-feature weight `Lambda_m = lambda / sigma_m`.

use serde::{Deserialize, Serialize};

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::eval::GibbsModel;
use crate::features::FeatureMap;
use crate::numeric::Accumulator;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    raw_mean: Vec<f64>,
    raw_std: Vec<f64>,
    lambda: f64,
}

impl MomentSpec {
    pub fn new(raw_mean: Vec<f64>, raw_std: Vec<f64>, lambda: f64) -> Result<Self> {
        if raw_mean.len() != raw_std.len() {
            return Err(Error::DimensionMismatch {
                expected: raw_mean.len(),
                got: raw_std.len(),
            });
        }
        if let Some(index) = raw_std.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::ZeroVarianceFeature {
                index,
                name: format!("#{index}"),
            });
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            raw_mean,
            raw_std,
            lambda,
        })
    }

    /// Targets taken from the empirical distribution of `data`.
    pub fn from_data(features: &FeatureMap, data: &[Vec<f64>], lambda: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let w = 1.0 / data.len() as f64;
        Self::from_weighted(features, data.iter().map(|x| (x.as_slice(), w)), lambda)
    }

    /// Exact targets under an enumerated model.
    pub fn from_model(features: &FeatureMap, model: &GibbsModel, lambda: f64) -> Result<Self> {
        Self::from_weighted(
            features,
            model.states().iter().zip(model.probs()).map(|(x, &p)| (x.as_slice(), p)),
            lambda,
        )
    }

    /// Population mean and standard deviation of each feature under the
    /// weighted points (weights must sum to one).
    pub fn from_weighted<'a, I>(features: &FeatureMap, points: I, lambda: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], f64)> + Clone,
    {
        let m = features.len();
        let mut buf = Vec::with_capacity(m);
        let mut sums = vec![Accumulator::new(); m];
        let mut any = false;
        for (x, w) in points.clone() {
            any = true;
            features.eval_into(x, &mut buf);
            for (s, v) in sums.iter_mut().zip(&buf) {
                s.add(w * v);
            }
        }
        if !any {
            return Err(Error::EmptyData);
        }
        let mean: Vec<f64> = sums.iter().map(Accumulator::value).collect();
        // second pass for a centred variance
        let mut sq = vec![Accumulator::new(); m];
        for (x, w) in points {
            features.eval_into(x, &mut buf);
            for ((s, v), mu) in sq.iter_mut().zip(&buf).zip(&mean) {
                s.add(w * (v - mu) * (v - mu));
            }
        }
        let names = features.names();
        let mut std = Vec::with_capacity(m);
        for (index, s) in sq.iter().enumerate() {
            let var = s.value();
            let sd = var.max(0.0).sqrt();
            if !(sd > 1e-12 * (1.0 + mean[index].abs())) {
                return Err(Error::ZeroVarianceFeature {
                    index,
                    name: names[index].clone(),
                });
            }
            std.push(sd);
        }
        Self::new(mean, std, lambda)
    }

    pub fn len(&self) -> usize {
        self.raw_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_mean.is_empty()
    }

    pub fn raw_mean(&self) -> &[f64] {
        &self.raw_mean
    }

    pub fn raw_std(&self) -> &[f64] {
        &self.raw_std
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.raw_mean.clone(), self.raw_std.clone(), lambda)
    }

    /// Standardised targets; identically zero.
    pub fn target(&self) -> Vec<f64> {
        vec![0.0; self.len()]
    }

    /// `Lambda_m = lambda / sigma_m`, the raw-coordinate weight.
    pub fn effective_weight(&self) -> Vec<f64> {
        self.raw_std.iter().map(|s| self.lambda / s).collect()
    }

    pub fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.raw_mean)
            .zip(&self.raw_std)
            .map(|((v, mu), sd)| (v - mu) / sd)
            .collect()
    }

    pub fn standardize_in_place(&self, raw: &mut [f64]) {
        for ((v, mu), sd) in raw.iter_mut().zip(&self.raw_mean).zip(&self.raw_std) {
            *v = (*v - mu) / sd;
        }
    }

    pub fn destandardize(&self, std: &[f64]) -> Vec<f64> {
        std.iter()
            .zip(&self.raw_mean)
            .zip(&self.raw_std)
            .map(|((v, mu), sd)| v * sd + mu)
            .collect()
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        kv.set("raw_mean", join(&self.raw_mean));
        kv.set("raw_std", join(&self.raw_std));
        kv.set("lambda", format!("{:?}", self.lambda));
        kv
    }

    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        Self::new(
            kv.require_list("raw_mean")?,
            kv.require_list("raw_std")?,
            kv.require("lambda")?,
        )
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_mean_and_population_std() {
        let f = FeatureMap::poly1d(1);
        let data = vec![vec![1.0], vec![2.0], vec![3.0]];
        let s = MomentSpec::from_data(&f, &data, 2.0).unwrap();
        assert!((s.raw_mean()[0] - 2.0).abs() < 1e-15);
        assert!((s.raw_std()[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.effective_weight()[0] - 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.target(), vec![0.0]);
    }

    #[test]
    fn constant_feature_rejected() {
        let f = FeatureMap::poly1d(2);
        let data = vec![vec![1.5]; 5];
        assert!(matches!(
            MomentSpec::from_data(&f, &data, 1.0),
            Err(Error::ZeroVarianceFeature { index: 0, .. })
        ));
        assert!(matches!(MomentSpec::from_data(&f, &[], 1.0), Err(Error::EmptyData)));
    }

    #[test]
    fn spin_pair_over_all_states() {
        let f = FeatureMap::spin_pairwise(2);
        let data = vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ];
        let s = MomentSpec::from_data(&f, &data, 1.0).unwrap();
        assert_eq!(s.raw_mean(), &[0.0]);
        assert_eq!(s.raw_std(), &[1.0]);
    }

    #[test]
    fn standardized_data_has_zero_mean_unit_std() {
        let f = FeatureMap::poly1d(4);
        let data: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64 * 0.37).sin() * 2.0]).collect();
        let s = MomentSpec::from_data(&f, &data, 1.0).unwrap();
        let z: Vec<Vec<f64>> = data.iter().map(|x| s.standardize(&f.eval(x))).collect();
        for m in 0..4 {
            let mean = z.iter().map(|r| r[m]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[m] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-10);
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn kv_round_trip() {
        let s = MomentSpec::new(vec![0.1, -2.5], vec![1.0, 0.3], 13.0).unwrap();
        let text = s.to_kv().to_string();
        let back = MomentSpec::from_kv(&KvConfig::parse(&text).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
