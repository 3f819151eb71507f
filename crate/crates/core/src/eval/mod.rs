//! Exact oracles and diagnostics on small enumerable instances.

mod fixed_point;
mod gibbs;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use fixed_point::{
    fixed_point_solve, gaussian_1d_closed_form, solve_table, FixedPoint, FixedPointMethod,
    RESIDUAL_TOL,
};
pub use gibbs::{enumerate_gibbs, spin_states, table_entropy, table_moments, GibbsModel, MAX_STATES};

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::mixture::MixtureModel;
use crate::moments::MomentSpec;
use crate::numeric::{integrate, log_sum_exp, Accumulator};

/// `KL(p || q) = sum_x p(x) (log p(x) - log q(x))`.
///
/// Returns `+inf` when `q` vanishes somewhere `p` does not; callers treat
/// that as a flagged value rather than an error.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = Accumulator::new();
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return f64::INFINITY;
        }
        acc.add(pi * (pi.ln() - qi.ln()));
    }
    acc.value().max(0.0)
}

/// `lambda/2 sum eta'^2 - H` from standardised moments and an entropy.
pub fn loss_from_parts(eta_std: &[f64], lambda: f64, entropy: f64) -> f64 {
    0.5 * lambda * eta_std.iter().map(|v| v * v).sum::<f64>() - entropy
}

/// Target loss of an explicit probability table over `states`.
pub fn loss_of_table(probs: &[f64], states: &[Vec<f64>], spec: &MomentSpec, features: &FeatureMap) -> f64 {
    let eta = spec.standardize(&table_moments(probs, states, features));
    loss_from_parts(&eta, spec.lambda(), table_entropy(probs))
}

/// Target loss `L(p)` with the entropy computed exactly over `states`.
pub fn loss_exact(p: &MixtureModel, spec: &MomentSpec, features: &FeatureMap, states: &[Vec<f64>]) -> Result<f64> {
    if states.len() > MAX_STATES {
        return Err(Error::StateSpaceTooLarge {
            n: (states.len() as f64).log2().ceil() as usize,
            limit: 20,
        });
    }
    let eta = spec.standardize(&p.feature_moments(features)?);
    let h = table_entropy(&p.table_over(states)?);
    Ok(loss_from_parts(&eta, spec.lambda(), h))
}

/// Moment sum of squared errors in standardised coordinates.
pub fn moment_sse(p: &MixtureModel, spec: &MomentSpec, features: &FeatureMap) -> Result<f64> {
    let eta = spec.standardize(&p.feature_moments(features)?);
    Ok(eta.iter().map(|v| v * v).sum())
}

/// The decomposition `H(p) - sum rho H(r) = H_rho - E_p[H_c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyGap {
    /// Exact mixture entropy `H(p)`.
    pub entropy: f64,
    /// `sum_t rho_t H(r_t)`.
    pub mean_component_entropy: f64,
    /// `H(p) - mean_component_entropy`.
    pub gap: f64,
    /// Entropy of the mixture weights.
    pub h_rho: f64,
    /// `E_p[H_c(x)]`, the expected entropy of the component posterior.
    pub mean_h_c: f64,
    /// `gap - (h_rho - mean_h_c)`; zero up to round-off.
    pub residual: f64,
}

pub fn entropy_gap(model: &MixtureModel, states: &[Vec<f64>]) -> Result<EntropyGap> {
    if states.len() > MAX_STATES {
        return Err(Error::StateSpaceTooLarge {
            n: (states.len() as f64).log2().ceil() as usize,
            limit: 20,
        });
    }
    let mut h = Accumulator::new();
    let mut e_hc = Accumulator::new();
    for x in states {
        let terms = model.component_log_terms(x)?;
        let lp = log_sum_exp(&terms);
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let px = lp.exp();
        h.add(-px * lp);
        let mut hc = Accumulator::new();
        for t in &terms {
            let lc = t - lp;
            if lc > f64::NEG_INFINITY {
                hc.add(-lc.exp() * lc);
            }
        }
        e_hc.add(px * hc.value());
    }
    let h_rho = table_entropy(model.weights());
    let mean_component_entropy = model.mean_component_entropy();
    let entropy = h.value();
    let gap = entropy - mean_component_entropy;
    let mean_h_c = e_hc.value();
    Ok(EntropyGap {
        entropy,
        mean_component_entropy,
        gap,
        h_rho,
        mean_h_c,
        residual: gap - (h_rho - mean_h_c),
    })
}

/// Bin edges `lo, lo + w, ..., hi`.
pub fn bin_edges(lo: f64, hi: f64, width: f64) -> Vec<f64> {
    let n = ((hi - lo) / width).round() as usize;
    (0..=n).map(|k| lo + k as f64 * width).collect()
}

/// `1/2 sum |a - b|`.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// What to histogram against the target.
pub enum HistSource<'a> {
    Mixture(&'a MixtureModel),
    Samples(&'a [f64]),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistogramComparison {
    pub edges: Vec<f64>,
    pub model: Vec<f64>,
    pub target: Vec<f64>,
    pub tv: f64,
}

/// Bins `source` and a normalised 1-D `target_pdf` on `[lo, hi]` with
/// bins of `width`, returning both mass vectors and their TV distance.
pub fn histogram_compare<F: Fn(f64) -> f64>(
    source: HistSource<'_>,
    target_pdf: F,
    lo: f64,
    hi: f64,
    width: f64,
) -> Result<HistogramComparison> {
    let edges = bin_edges(lo, hi, width);
    let model = match source {
        HistSource::Mixture(m) => m.bin_masses(&edges)?,
        HistSource::Samples(xs) => sample_masses(xs, &edges),
    };
    let target: Vec<f64> = edges
        .windows(2)
        .map(|w| integrate(&target_pdf, w[0], w[1], 1e-13))
        .collect();
    let tv = total_variation(&model, &target);
    Ok(HistogramComparison {
        edges,
        model,
        target,
        tv,
    })
}

/// Fraction of `xs` in each half-open bin.
pub fn sample_masses(xs: &[f64], edges: &[f64]) -> Vec<f64> {
    let nb = edges.len() - 1;
    let mut counts = vec![0usize; nb];
    let (lo, hi) = (edges[0], edges[nb]);
    let width = (hi - lo) / nb as f64;
    for &x in xs {
        if x < lo || x >= hi {
            continue;
        }
        let mut k = (((x - lo) / width) as usize).min(nb - 1);
        // guard against the division landing one bin off at an edge
        if x < edges[k] {
            k -= 1;
        } else if x >= edges[k + 1] {
            k += 1;
        }
        counts[k] += 1;
    }
    let n = xs.len().max(1) as f64;
    counts.iter().map(|c| *c as f64 / n).collect()
}

/// Renders a spin state as `+`/`-` characters.
pub fn spin_label(x: &[f64]) -> String {
    x.iter().map(|v| if *v > 0.0 { '+' } else { '-' }).collect()
}

/// Per-state comparison table: `state, p_target, p_model, p_empirical`.
pub fn write_state_table(
    path: &Path,
    states: &[Vec<f64>],
    p_target: &[f64],
    p_model: &[f64],
    p_empirical: Option<&[f64]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["state", "p_target", "p_model", "p_empirical"])?;
    for (k, x) in states.iter().enumerate() {
        let emp = p_empirical.map(|e| format!("{:e}", e[k])).unwrap_or_default();
        w.write_record([
            spin_label(x),
            format!("{:e}", p_target[k]),
            format!("{:e}", p_model[k]),
            emp,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Posterior over mixture components at `x`.
pub fn component_posterior(model: &MixtureModel, x: &[f64]) -> Result<Vec<f64>> {
    let terms = model.component_log_terms(x)?;
    let lp = log_sum_exp(&terms);
    Ok(terms.iter().map(|t| (t - lp).exp()).collect())
}

#[cfg(test)]
mod tests;
