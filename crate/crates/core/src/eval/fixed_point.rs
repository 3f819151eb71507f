//! Solver for the optimality condition `theta = Lambda (eta(theta) - mu)`.
//!
//! The condition is the stationarity equation of the convex potential
//! `G(theta) = log Z(theta) + sum_m theta_m^2 / (2 Lambda_m) + theta . mu`,
//! whose Hessian `Cov_pi(phi) + diag(1/Lambda)` is positive definite, so the
//! default method is a line-searched Newton iteration on `G`. The damped
//! fixed-point iteration is kept for comparison; it stalls for large `Lambda`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::moments::MomentSpec;
use crate::numeric::{bisect, log_sum_exp};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FixedPointMethod {
    Newton,
    /// `theta <- (1 - alpha) theta + alpha Lambda (eta(theta) - mu)`.
    Damped { alpha: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPoint {
    pub theta: Vec<f64>,
    /// `max_m |theta_m - Lambda_m (eta_m - mu_m)|`.
    pub residual: f64,
    pub iterations: usize,
    /// Probability of each state under `pi_theta*`.
    pub probs: Vec<f64>,
    pub eta: Vec<f64>,
}

pub const RESIDUAL_TOL: f64 = 1e-10;
const DAMPED_MAX_ITER: usize = 100_000;
const NEWTON_MAX_ITER: usize = 500;

struct Eval {
    log_z: f64,
    probs: Vec<f64>,
    eta: Vec<f64>,
}

fn evaluate(theta: &[f64], phi: &[Vec<f64>]) -> Eval {
    let neg_e: Vec<f64> = phi
        .iter()
        .map(|row| -row.iter().zip(theta).map(|(p, t)| p * t).sum::<f64>())
        .collect();
    let log_z = log_sum_exp(&neg_e);
    let probs: Vec<f64> = neg_e.iter().map(|v| (v - log_z).exp()).collect();
    let mut eta = vec![0.0; theta.len()];
    for (p, row) in probs.iter().zip(phi) {
        for (e, v) in eta.iter_mut().zip(row) {
            *e += p * v;
        }
    }
    Eval { log_z, probs, eta }
}

fn residual(theta: &[f64], eta: &[f64], mu: &[f64], lam: &[f64]) -> f64 {
    theta
        .iter()
        .zip(eta)
        .zip(mu.iter().zip(lam))
        .map(|((t, e), (m, l))| (t - l * (e - m)).abs())
        .fold(0.0, f64::max)
}

fn potential(theta: &[f64], log_z: f64, mu: &[f64], lam: &[f64]) -> f64 {
    log_z
        + theta
            .iter()
            .zip(mu.iter().zip(lam))
            .map(|(t, (m, l))| t * t / (2.0 * l) + t * m)
            .sum::<f64>()
}

/// Solves the fixed point over an explicit table of feature vectors, one row
/// per state, with targets `mu` and per-feature weights `lam`.
pub fn solve_table(phi: &[Vec<f64>], mu: &[f64], lam: &[f64], method: FixedPointMethod) -> Result<FixedPoint> {
    if phi.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let m = mu.len();
    if lam.len() != m || phi[0].len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: phi[0].len(),
        });
    }
    match method {
        FixedPointMethod::Newton => newton(phi, mu, lam),
        FixedPointMethod::Damped { alpha } => damped(phi, mu, lam, alpha),
    }
}

fn newton(phi: &[Vec<f64>], mu: &[f64], lam: &[f64]) -> Result<FixedPoint> {
    let m = mu.len();
    let mut theta = vec![0.0; m];
    let mut cur = evaluate(&theta, phi);
    let mut trace = Vec::new();
    for it in 0..NEWTON_MAX_ITER {
        let r = residual(&theta, &cur.eta, mu, lam);
        trace.push(r);
        if r <= RESIDUAL_TOL {
            return Ok(FixedPoint {
                theta,
                residual: r,
                iterations: it,
                probs: cur.probs,
                eta: cur.eta,
            });
        }
        let grad = DVector::from_iterator(
            m,
            (0..m).map(|k| theta[k] / lam[k] + mu[k] - cur.eta[k]),
        );
        let mut hess = DMatrix::from_diagonal(&DVector::from_iterator(m, lam.iter().map(|l| 1.0 / l)));
        for (p, row) in cur.probs.iter().zip(phi) {
            if *p == 0.0 {
                continue;
            }
            for a in 0..m {
                let da = row[a] - cur.eta[a];
                for b in a..m {
                    hess[(a, b)] += p * da * (row[b] - cur.eta[b]);
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::Numerical("fixed-point Hessian is not positive definite".into()))?
            .solve(&grad);
        let g0 = potential(&theta, cur.log_z, mu, lam);
        let slope = -grad.dot(&step);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
            let next = evaluate(&trial, phi);
            let g1 = potential(&trial, next.log_z, mu, lam);
            // Armijo condition, or accept once the step is at round-off scale
            if g1 <= g0 + 1e-4 * t * slope || t < 1e-12 {
                theta = trial;
                cur = next;
                break;
            }
            t *= 0.5;
        }
    }
    let r = residual(&theta, &cur.eta, mu, lam);
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual: r,
        trace,
    })
}

fn damped(phi: &[Vec<f64>], mu: &[f64], lam: &[f64], alpha: f64) -> Result<FixedPoint> {
    let mut theta = vec![0.0; mu.len()];
    let mut trace = Vec::new();
    for it in 0..DAMPED_MAX_ITER {
        let cur = evaluate(&theta, phi);
        let r = residual(&theta, &cur.eta, mu, lam);
        if it % 1000 == 0 {
            trace.push(r);
        }
        if r <= RESIDUAL_TOL {
            return Ok(FixedPoint {
                theta,
                residual: r,
                iterations: it,
                probs: cur.probs,
                eta: cur.eta,
            });
        }
        if !r.is_finite() {
            break;
        }
        for k in 0..theta.len() {
            theta[k] = (1.0 - alpha) * theta[k] + alpha * lam[k] * (cur.eta[k] - mu[k]);
        }
    }
    let cur = evaluate(&theta, phi);
    Err(Error::NoConvergence {
        iterations: DAMPED_MAX_ITER,
        residual: residual(&theta, &cur.eta, mu, lam),
        trace,
    })
}

/// Fixed point in standardised coordinates (`mu = 0`, `Lambda = lambda`)
/// over the enumerated `states`.
pub fn fixed_point_solve(
    features: &FeatureMap,
    spec: &MomentSpec,
    states: &[Vec<f64>],
    method: FixedPointMethod,
) -> Result<FixedPoint> {
    let phi: Vec<Vec<f64>> = states.iter().map(|x| spec.standardize(&features.eval(x))).collect();
    let m = features.len();
    solve_table(&phi, &vec![0.0; m], &vec![spec.lambda(); m], method)
}

/// `(theta_1, theta_2)` for features `(x, x^2)` on the real line, raw
/// targets `mu` and weights `lam`.
///
/// `pi_theta` is Gaussian with `s^2 = 1/(2 theta_2)` and
/// `m = -theta_1 / (2 theta_2)`, which reduces the condition to
/// `m = lam_1 mu_1 / (2 theta_2 + lam_1)` and a scalar equation in
/// `theta_2`. For `mu_1 = 0` that equation is the quadratic
/// `2 theta_2^2 + 2 lam_2 mu_2 theta_2 - lam_2 = 0`.
pub fn gaussian_1d_closed_form(mu: [f64; 2], lam: [f64; 2]) -> Result<[f64; 2]> {
    let [mu1, mu2] = mu;
    let [l1, l2] = lam;
    if !(l1 > 0.0 && l2 > 0.0) {
        return Err(Error::Config("weights must be positive".into()));
    }
    let theta2 = if mu1 == 0.0 {
        // positive root, written to avoid cancellation for large lam_2 mu_2
        let b = l2 * mu2;
        let disc = (b * b + 2.0 * l2).sqrt();
        if b >= 0.0 {
            l2 / (b + disc)
        } else {
            (disc - b) / 2.0
        }
    } else {
        let f = |t2: f64| {
            let m = l1 * mu1 / (2.0 * t2 + l1);
            t2 - l2 * (m * m + 0.5 / t2 - mu2)
        };
        // f is increasing in theta_2 > 0 with f(0+) = -inf
        let mut hi = 1.0;
        while f(hi) < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Numerical("no positive root for theta_2".into()));
            }
        }
        bisect(f, f64::MIN_POSITIVE, hi, 0.0)
    };
    let m = l1 * mu1 / (2.0 * theta2 + l1);
    Ok([l1 * (m - mu1), theta2])
}
