//! Independent +/-1 spins, parametrised by logits `s_i = log(p_i / (1 - p_i))`.

use rand::Rng;

use crate::features::{FeatureId, FeatureMap};
use crate::numeric::{sigmoid, softplus};

pub fn probs(s: &[f64]) -> Vec<f64> {
    s.iter().map(|&v| sigmoid(v)).collect()
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `eta_ij = (2 p_i - 1)(2 p_j - 1)`.
pub fn moments(s: &[f64], features: &FeatureMap) -> Vec<f64> {
    let mag: Vec<f64> = s.iter().map(|&v| (0.5 * v).tanh()).collect();
    features
        .ids()
        .iter()
        .map(|id| match *id {
            FeatureId::Pair(i, j) => mag[i] * mag[j],
            _ => unreachable!("pairing checked by caller"),
        })
        .collect()
}

/// `d eta / d p`; the logistic factor `p (1 - p)` is deliberately left out so
/// that saturated spins still receive a usable update direction.
pub fn jacobian(s: &[f64], features: &FeatureMap) -> Vec<Vec<f64>> {
    let mag: Vec<f64> = s.iter().map(|&v| (0.5 * v).tanh()).collect();
    features
        .ids()
        .iter()
        .map(|id| {
            let mut row = vec![0.0; s.len()];
            if let FeatureId::Pair(i, j) = *id {
                row[i] = 2.0 * mag[j];
                row[j] = 2.0 * mag[i];
            }
            row
        })
        .collect()
}

fn binary_entropy(s: f64) -> f64 {
    let p = sigmoid(s);
    let q = sigmoid(-s);
    // log p = -softplus(-s), log(1-p) = -softplus(s)
    let a = if p > 0.0 { p * softplus(-s) } else { 0.0 };
    let b = if q > 0.0 { q * softplus(s) } else { 0.0 };
    a + b
}

pub fn entropy(s: &[f64]) -> f64 {
    s.iter().map(|&v| binary_entropy(v)).sum()
}

/// `dH/dp_i = log((1 - p_i) / p_i) = -s_i`.
pub fn entropy_gradient(s: &[f64]) -> Vec<f64> {
    s.iter().map(|v| -v).collect()
}

pub fn log_mass(s: &[f64], x: &[f64]) -> f64 {
    s.iter()
        .zip(x)
        .map(|(&v, &xi)| if xi > 0.0 { -softplus(-v) } else { -softplus(v) })
        .sum()
}

pub fn sample<R: Rng + ?Sized>(s: &[f64], rng: &mut R) -> Vec<f64> {
    s.iter()
        .map(|&v| {
            let u: f64 = rng.random();
            if u < sigmoid(v) {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}
