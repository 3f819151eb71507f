//! Pieces of one inner optimisation: objective, gradient step, jumps and
//! the Metropolis rule.

use rand::Rng;

use crate::engine::adam::OptimizerState;
use crate::error::Result;
use crate::families::{self, CandidateFamily, ComponentParams, LocationRange};
use crate::features::FeatureMap;
use crate::moments::MomentSpec;
use crate::rng::StreamRng;
use crate::state::WeightState;

/// `eta'(q)`, standardised feature means of `q`.
pub fn std_moments(q: &ComponentParams, spec: &MomentSpec, features: &FeatureMap) -> Result<Vec<f64>> {
    Ok(spec.standardize(&families::feature_moments(q, features)?))
}

/// `F(q) = sum_m w_m eta'_m(q) - H(q)`.
pub fn inner_objective(q: &ComponentParams, w: &[f64], spec: &MomentSpec, features: &FeatureMap) -> Result<f64> {
    let eta = std_moments(q, spec, features)?;
    Ok(eta.iter().zip(w).map(|(e, a)| e * a).sum::<f64>() - families::entropy(q))
}

/// Gradient of `F` in the optimiser coordinates of `q` (spins: see
/// [`families::moment_gradients`]).
pub fn inner_gradient(q: &ComponentParams, w: &[f64], spec: &MomentSpec, features: &FeatureMap) -> Result<Vec<f64>> {
    let jac = families::moment_gradients(q, features)?;
    let mut grad: Vec<f64> = families::entropy_gradient(q).iter().map(|h| -h).collect();
    for ((row, wm), sd) in jac.iter().zip(w).zip(spec.raw_std()) {
        let scale = wm / sd;
        if scale == 0.0 {
            continue;
        }
        for (g, d) in grad.iter_mut().zip(row) {
            *g += scale * d;
        }
    }
    Ok(grad)
}

/// Weights driving the inner step at iterate `q`: `a` itself, or the
/// modified `a'` recomputed from `q`.
pub fn effective_weights(
    q: &ComponentParams,
    state: &WeightState,
    use_modified: bool,
    eps: f64,
    spec: &MomentSpec,
    features: &FeatureMap,
) -> Result<Vec<f64>> {
    if use_modified {
        Ok(state.modified(&std_moments(q, spec, features)?, spec.lambda(), eps))
    } else {
        Ok(state.a.clone())
    }
}

/// One Adam step on `F`, followed by the sigma floor and an optional box
/// clamp on point locations.
pub fn inner_gradient_step(
    q: &ComponentParams,
    w: &[f64],
    opt: &mut OptimizerState,
    spec: &MomentSpec,
    features: &FeatureMap,
    bounds: Option<(f64, f64)>,
) -> Result<ComponentParams> {
    let grad = inner_gradient(q, w, spec, features)?;
    let step = opt.step(&grad);
    let coords: Vec<f64> = q.coords().iter().zip(&step).map(|(c, d)| c + d).collect();
    let mut next = q.clone();
    next.set_coords(&coords);
    next.clamp_sigma();
    if let (Some((lo, hi)), ComponentParams::PointMass { x }) = (bounds, &mut next) {
        for v in x.iter_mut() {
            *v = v.clamp(lo, hi);
        }
    }
    Ok(next)
}

/// `min(1, exp(-delta))` acceptance.
pub fn metropolis_accept(delta: f64, rng: &mut StreamRng) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if delta == f64::INFINITY {
        return false;
    }
    rng.random::<f64>() < (-delta).exp()
}

/// How a proposed jump is accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Acceptance {
    /// Only on a strict decrease of `F`.
    Strict,
    Metropolis,
}

/// With probability `p_jump` proposes a family jump and applies the
/// acceptance rule. Returns the (possibly unchanged) component and whether
/// the jump was taken.
#[allow(clippy::too_many_arguments)]
pub fn jump_move(
    q: &ComponentParams,
    w: &[f64],
    spec: &MomentSpec,
    features: &FeatureMap,
    p_jump: f64,
    family: &dyn CandidateFamily,
    seen: &LocationRange,
    acceptance: Acceptance,
    rng: &mut StreamRng,
) -> Result<(ComponentParams, bool)> {
    if p_jump <= 0.0 || rng.random::<f64>() >= p_jump {
        return Ok((q.clone(), false));
    }
    let cand = family.propose_jump(q, seen, features, rng);
    let f_cur = inner_objective(q, w, spec, features)?;
    let f_new = inner_objective(&cand, w, spec, features)?;
    let take = match acceptance {
        Acceptance::Strict => f_new < f_cur,
        Acceptance::Metropolis => metropolis_accept(f_new - f_cur, rng),
    };
    Ok(if take { (cand, true) } else { (q.clone(), false) })
}
