//! Independent Gaussians, parametrised by mean and `l = log sigma`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::features::{FeatureId, FeatureKind, FeatureMap};
use crate::numeric::{normal_ln_pdf, LN_2PI};

/// Lower bound on sigma.
pub const SIGMA_FLOOR: f64 = 0.01;

pub fn log_sigma_floor() -> f64 {
    SIGMA_FLOOR.ln()
}

/// Raw moments `E[y^k]`, `k = 0..=order`, of `y ~ N(m, s2)`.
fn raw_moments(m: f64, s2: f64, order: usize) -> Vec<f64> {
    let mut e = Vec::with_capacity(order + 1);
    e.push(1.0);
    if order >= 1 {
        e.push(m);
    }
    for k in 2..=order {
        let v = m * e[k - 1] + (k - 1) as f64 * s2 * e[k - 2];
        e.push(v);
    }
    e
}

/// `E[y^k]` with its derivatives with respect to the mean and `l`.
fn moment_and_grads(e: &[f64], s2: f64, k: usize) -> (f64, f64, f64) {
    let kf = k as f64;
    let d_mean = if k >= 1 { kf * e[k - 1] } else { 0.0 };
    let d_l = if k >= 2 { s2 * kf * (kf - 1.0) * e[k - 2] } else { 0.0 };
    (e[k], d_mean, d_l)
}

pub fn moments_1d(mu: f64, l: f64, features: &FeatureMap) -> Vec<f64> {
    let FeatureKind::Poly1D { max_degree } = features.kind() else {
        unreachable!("pairing checked by caller")
    };
    let s2 = (2.0 * l).exp();
    raw_moments(mu, s2, *max_degree)[1..].to_vec()
}

/// Rows per feature, columns `(mu, l)`.
pub fn jacobian_1d(mu: f64, l: f64, features: &FeatureMap) -> Vec<Vec<f64>> {
    let FeatureKind::Poly1D { max_degree } = features.kind() else {
        unreachable!("pairing checked by caller")
    };
    let s2 = (2.0 * l).exp();
    let e = raw_moments(mu, s2, *max_degree);
    (1..=*max_degree)
        .map(|k| {
            let (_, dm, dl) = moment_and_grads(&e, s2, k);
            vec![dm, dl]
        })
        .collect()
}

pub fn moments_diag(mu: &[f64], l: &[f64], features: &FeatureMap) -> Vec<f64> {
    let centers = features.centers().expect("pairing checked by caller");
    let per_var: Vec<(f64, f64, Vec<f64>)> = mu
        .iter()
        .zip(l)
        .zip(centers)
        .map(|((mu, l), c)| {
            let s2 = (2.0 * l).exp();
            let m = mu - c;
            (m, s2, raw_moments(m, s2, 4))
        })
        .collect();
    features
        .ids()
        .iter()
        .map(|id| match *id {
            FeatureId::Centered(2, i, j) if i != j => per_var[i].0 * per_var[j].0,
            FeatureId::Centered(order, i, _) => per_var[i].2[order as usize],
            _ => unreachable!("pairing checked by caller"),
        })
        .collect()
}

/// Rows per feature, columns `(mu_1..mu_n, l_1..l_n)`.
pub fn jacobian_diag(mu: &[f64], l: &[f64], features: &FeatureMap) -> Vec<Vec<f64>> {
    let n = mu.len();
    let centers = features.centers().expect("pairing checked by caller");
    let per_var: Vec<(f64, f64, Vec<f64>)> = mu
        .iter()
        .zip(l)
        .zip(centers)
        .map(|((mu, l), c)| {
            let s2 = (2.0 * l).exp();
            let m = mu - c;
            (m, s2, raw_moments(m, s2, 4))
        })
        .collect();
    features
        .ids()
        .iter()
        .map(|id| {
            let mut row = vec![0.0; 2 * n];
            match *id {
                FeatureId::Centered(2, i, j) if i != j => {
                    row[i] = per_var[j].0;
                    row[j] = per_var[i].0;
                }
                FeatureId::Centered(order, i, _) => {
                    let (_, s2, ref e) = per_var[i];
                    let (_, dm, dl) = moment_and_grads(e, s2, order as usize);
                    row[i] = dm;
                    row[n + i] = dl;
                }
                _ => unreachable!("pairing checked by caller"),
            }
            row
        })
        .collect()
}

/// Differential entropy in nats of independent normals with log-sds `l`.
pub fn entropy(l: &[f64]) -> f64 {
    l.iter().map(|l| l + 0.5 * (LN_2PI + 1.0)).sum()
}

pub fn log_density(mu: &[f64], l: &[f64], x: &[f64]) -> f64 {
    mu.iter()
        .zip(l)
        .zip(x)
        .map(|((m, l), x)| normal_ln_pdf(*x, *m, l.exp()))
        .sum()
}

pub fn sample<R: Rng + ?Sized>(mu: &[f64], l: &[f64], rng: &mut R) -> Vec<f64> {
    mu.iter()
        .zip(l)
        .map(|(m, l)| {
            let z: f64 = rng.sample(StandardNormal);
            m + l.exp() * z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_for_low_orders() {
        let (mu, s): (f64, f64) = (0.7, 1.3);
        let e = raw_moments(mu, s * s, 4);
        let s2 = s * s;
        assert!((e[2] - (mu * mu + s2)).abs() < 1e-12);
        assert!((e[3] - (mu.powi(3) + 3.0 * mu * s2)).abs() < 1e-12);
        assert!((e[4] - (mu.powi(4) + 6.0 * mu * mu * s2 + 3.0 * s2 * s2)).abs() < 1e-12);
    }
}
