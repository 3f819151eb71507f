//! Classification and calibration metrics, plus the multivariate-normal
//! baseline used for the wine comparison.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;

/// Rank-based AUC: the fraction of (pos, neg) pairs ordered correctly, ties
/// counted as one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Result<f64> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // midranks over tie groups, then Mann-Whitney U
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += all[i..=j].iter().filter(|e| e.1).count() as f64 * mid;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Ok((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Fraction of `truths` inside the `[lo, hi]` quantile interval of the
/// matching 1-D conditional.
pub fn quantile_coverage(conditionals: &[MixtureModel], truths: &[f64], lo: f64, hi: f64) -> Result<f64> {
    if conditionals.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: conditionals.len(),
            got: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut hits = 0usize;
    for (c, &x) in conditionals.iter().zip(truths) {
        let q = c.quantiles_univariate(&[lo, hi])?;
        if q[0] <= x && x <= q[1] {
            hits += 1;
        }
    }
    Ok(hits as f64 / truths.len() as f64)
}

/// Coverage from precomputed intervals.
pub fn interval_coverage(intervals: &[(f64, f64)], truths: &[f64]) -> f64 {
    let hits = intervals.iter().zip(truths).filter(|((a, b), x)| a <= *x && *x <= b).count();
    hits as f64 / truths.len().max(1) as f64
}

/// Multivariate normal fitted to first and second moments.
#[derive(Clone, Debug)]
pub struct MvnBaseline {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

impl MvnBaseline {
    /// Maximum-likelihood fit (population covariance).
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let d = rows[0].len();
        let mut mean = DVector::zeros(d);
        for r in rows {
            mean += DVector::from_column_slice(r);
        }
        mean /= n as f64;
        let mut cov = DMatrix::zeros(d, d);
        for r in rows {
            let c = DVector::from_column_slice(r) - &mean;
            cov += &c * c.transpose();
        }
        cov /= n as f64;
        Self::new(mean, cov)
    }

    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let chol_l = chol.l();
        let log_det = 2.0 * chol_l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(Self {
            mean,
            cov,
            chol_l,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let c = DVector::from_column_slice(x) - &self.mean;
        let z = self.chol_l.solve_lower_triangular(&c).expect("triangular factor is non-singular");
        -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + self.log_det + z.norm_squared())
    }

    /// Mean and standard deviation of `x_target` given the other coordinates
    /// of `x` (the entry at `target` is ignored).
    pub fn conditional(&self, target: usize, x: &[f64]) -> Result<(f64, f64)> {
        let d = self.dim();
        if x.len() != d || target >= d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        let rest: Vec<usize> = (0..d).filter(|&k| k != target).collect();
        let s_oo = self.cov.select_rows(&rest).select_columns(&rest);
        let s_to = DVector::from_iterator(rest.len(), rest.iter().map(|&k| self.cov[(target, k)]));
        let dx = DVector::from_iterator(rest.len(), rest.iter().map(|&k| x[k] - self.mean[k]));
        let chol = s_oo
            .cholesky()
            .ok_or_else(|| Error::Numerical("conditioning covariance is not positive definite".into()))?;
        let alpha = chol.solve(&s_to);
        let mean = self.mean[target] + alpha.dot(&dx);
        let var = self.cov[(target, target)] - alpha.dot(&s_to);
        if !(var > 0.0) {
            return Err(Error::Numerical(format!("conditional variance {var} is not positive")));
        }
        Ok((mean, var.sqrt()))
    }

    pub fn conditional_quantiles(&self, target: usize, x: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
        let (m, s) = self.conditional(target, x)?;
        let n = Normal::new(m, s).map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(probs.iter().map(|&p| n.inverse_cdf(p)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::ComponentParams;
    use crate::rng::{stream, Stream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[2.0, 3.0], &[1.0, 2.0]).unwrap(), 0.875);
        assert_eq!(auc(&[5.0, 6.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(auc(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.5);
        assert!(auc(&[], &[1.0]).is_err());
    }

    #[test]
    fn auc_matches_pair_count() {
        let mut rng = stream(5, Stream::Oracle);
        let pos: Vec<f64> = (0..40).map(|_| rng.random_range(0..10) as f64).collect();
        let neg: Vec<f64> = (0..30).map(|_| rng.random_range(0..8) as f64).collect();
        let mut count = 0.0;
        for p in &pos {
            for n in &neg {
                count += if p > n { 1.0 } else if p == n { 0.5 } else { 0.0 };
            }
        }
        let want = count / (pos.len() * neg.len()) as f64;
        assert!((auc(&pos, &neg).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn coverage_examples() {
        let c = MixtureModel::uniform(vec![ComponentParams::gauss1d(0.0, 1.0)]).unwrap();
        assert_eq!(quantile_coverage(&[c.clone()], &[0.0], 0.1, 0.9).unwrap(), 1.0);
        assert_eq!(quantile_coverage(&[c], &[10.0], 0.1, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn coverage_is_calibrated() {
        let mut rng = stream(11, Stream::Oracle);
        let mut conds = Vec::new();
        let mut truths = Vec::new();
        for k in 0..10_000u64 {
            let m = MixtureModel::uniform(vec![
                ComponentParams::gauss1d(rng.random_range(-2.0..0.0), rng.random_range(0.3..1.0)),
                ComponentParams::gauss1d(rng.random_range(0.0..2.0), rng.random_range(0.3..1.0)),
            ])
            .unwrap();
            truths.push(m.sample(1, k)[0][0]);
            conds.push(m);
        }
        let cov = quantile_coverage(&conds, &truths, 0.1, 0.9).unwrap();
        assert!((cov - 0.8).abs() < 0.02, "{cov}");
    }

    #[test]
    fn mvn_against_independent_formulas() {
        let mut rng = stream(2, Stream::Oracle);
        let rows: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                vec![1.0 + a, -1.0 + 0.5 * a + b]
            })
            .collect();
        let m = MvnBaseline::fit(&rows).unwrap();
        // bivariate closed forms from the fitted parameters
        let (m1, m2) = (m.mean()[0], m.mean()[1]);
        let (s11, s12, s22) = (m.cov()[(0, 0)], m.cov()[(0, 1)], m.cov()[(1, 1)]);
        let x = [0.3, 0.7];
        let det = s11 * s22 - s12 * s12;
        let (d1, d2) = (x[0] - m1, x[1] - m2);
        let q = (s22 * d1 * d1 - 2.0 * s12 * d1 * d2 + s11 * d2 * d2) / det;
        let want = -0.5 * (q + det.ln()) - (2.0 * std::f64::consts::PI).ln();
        assert!((m.log_density(&x) - want).abs() < 1e-12);
        let (cm, cs) = m.conditional(1, &x).unwrap();
        assert!((cm - (m2 + s12 / s11 * d1)).abs() < 1e-12);
        assert!((cs * cs - (s22 - s12 * s12 / s11)).abs() < 1e-12);
        assert!((s12 - 0.5).abs() < 0.05 && (s22 - 1.25).abs() < 0.05);
        let q = m.conditional_quantiles(1, &x, &[0.5]).unwrap();
        assert!((q[0] - cm).abs() < 1e-9);
    }
}
