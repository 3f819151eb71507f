//! Built-in oracle suite: analytic gradients against finite differences,
//! the entropy-gap identity, fixed-point optimality and the point-herding
//! equivalence.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{EpsilonSchedule, HerdingConfig};
use crate::engine::{point_equivalence_transform, run_point_from, Problem, StrategyRegistry};
use crate::error::Result;
use crate::eval::{entropy_gap, fixed_point_solve, loss_exact, loss_of_table, spin_states, FixedPointMethod};
use crate::experiments::{ensure_dir, ExperimentReport};
use crate::families::{self, ComponentParams};
use crate::features::FeatureMap;
use crate::mixture::MixtureModel;
use crate::moments::MomentSpec;
use crate::rng::{stream, Stream, StreamRng};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Moment function under test; the selftest normally uses the library's
/// closed forms, and the negative control swaps in a corrupted one.
pub type MomentFn = dyn Fn(&ComponentParams, &FeatureMap) -> Result<Vec<f64>>;

pub fn exact_moments(p: &ComponentParams, f: &FeatureMap) -> Result<Vec<f64>> {
    families::feature_moments(p, f)
}

/// Adds a spurious `0.05 * coord_0^2` to the first moment.
pub fn corrupted_moments(p: &ComponentParams, f: &FeatureMap) -> Result<Vec<f64>> {
    let mut m = families::feature_moments(p, f)?;
    let c0 = match p {
        ComponentParams::SpinBernoulli { .. } => p.spin_probs().expect("spin")[0],
        _ => p.coords()[0],
    };
    m[0] += 0.05 * c0 * c0;
    Ok(m)
}

/// Coordinates the analytic gradients are taken in: the stored ones, or
/// `p_i` for spins.
fn grad_coords(p: &ComponentParams) -> Vec<f64> {
    match p {
        ComponentParams::SpinBernoulli { .. } => p.spin_probs().expect("spin"),
        _ => p.coords(),
    }
}

fn with_grad_coords(p: &ComponentParams, c: &[f64]) -> ComponentParams {
    match p {
        ComponentParams::SpinBernoulli { .. } => ComponentParams::spin_from_probs(c),
        _ => {
            let mut q = p.clone();
            q.set_coords(c);
            q
        }
    }
}

/// Worst relative deviation between analytic and central-difference
/// gradients of the moments and the entropy.
pub fn gradient_deviation(p: &ComponentParams, f: &FeatureMap, moments: &MomentFn) -> Result<f64> {
    let jac = families::moment_gradients(p, f)?;
    let dh = families::entropy_gradient(p);
    let c = grad_coords(p);
    let mut worst: f64 = 0.0;
    for k in 0..c.len() {
        let h = 1e-5 * c[k].abs().max(1e-2);
        let (mut up, mut dn) = (c.clone(), c.clone());
        up[k] += h;
        dn[k] -= h;
        let (pu, pd) = (with_grad_coords(p, &up), with_grad_coords(p, &dn));
        let (mu, md) = (moments(&pu, f)?, moments(&pd, f)?);
        for m in 0..mu.len() {
            let fd = (mu[m] - md[m]) / (2.0 * h);
            worst = worst.max((fd - jac[m][k]).abs() / fd.abs().max(1.0));
        }
        let fd = (families::entropy(&pu) - families::entropy(&pd)) / (2.0 * h);
        worst = worst.max((fd - dh[k]).abs() / fd.abs().max(1.0));
    }
    Ok(worst)
}

fn random_component(kind: usize, rng: &mut StreamRng) -> ComponentParams {
    match kind {
        0 => ComponentParams::gauss1d(rng.random_range(-1.5..1.5), rng.random_range(0.3..2.0)),
        1 => ComponentParams::gauss_diag(
            (0..3).map(|_| rng.random_range(-1.5..1.5)).collect(),
            &(0..3).map(|_| rng.random_range(0.3..2.0)).collect::<Vec<_>>(),
        ),
        _ => ComponentParams::spin_from_probs(&(0..4).map(|_| rng.random_range(0.1..0.9)).collect::<Vec<_>>()),
    }
}

fn feature_set(kind: usize) -> FeatureMap {
    match kind {
        0 => FeatureMap::poly1d(4),
        1 => FeatureMap::centered_moments_at(vec![0.2, -0.1, 0.4]),
        _ => FeatureMap::spin_pairwise(4),
    }
}

pub fn check_gradients(moments: &MomentFn, seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream(seed, Stream::Oracle);
    let mut worst: f64 = 0.0;
    for kind in 0..3 {
        let f = feature_set(kind);
        for _ in 0..20 {
            worst = worst.max(gradient_deviation(&random_component(kind, &mut rng), &f, moments)?);
        }
    }
    Ok(CheckOutcome {
        name: "gradients".into(),
        passed: worst <= 1e-4,
        detail: format!("max relative deviation {worst:.3e}"),
    })
}

fn random_spin_mixture(n: usize, k: usize, rng: &mut StreamRng) -> Result<MixtureModel> {
    let comps = (0..k)
        .map(|_| ComponentParams::spin_from_probs(&(0..n).map(|_| rng.random_range(0.05..0.95)).collect::<Vec<_>>()))
        .collect();
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    MixtureModel::new_normalized(comps, w)
}

pub fn check_gap_identity(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream(seed, Stream::Oracle);
    let states = spin_states(4)?;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = random_spin_mixture(4, 5, &mut rng)?;
        worst = worst.max(entropy_gap(&m, &states)?.residual.abs());
    }
    Ok(CheckOutcome {
        name: "entropy_gap".into(),
        passed: worst <= 1e-10,
        detail: format!("max residual {worst:.3e}"),
    })
}

pub fn check_fixed_point(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream(seed, Stream::Oracle);
    let n = 4;
    let f = FeatureMap::spin_pairwise(n);
    let states = spin_states(n)?;
    let target = random_spin_mixture(n, 3, &mut rng)?;
    let mu = target.feature_moments(&f)?;
    let spec = MomentSpec::new(mu, vec![0.5; f.len()], 5.0)?;
    let fp = fixed_point_solve(&f, &spec, &states, FixedPointMethod::Newton)?;
    let l_star = loss_of_table(&fp.probs, &states, &spec, &f);
    let mut violations = 0;
    for _ in 0..100 {
        let q = random_spin_mixture(n, 4, &mut rng)?;
        if l_star > loss_exact(&q, &spec, &f, &states)? + 1e-9 {
            violations += 1;
        }
    }
    Ok(CheckOutcome {
        name: "fixed_point".into(),
        passed: fp.residual <= 1e-8 && violations == 0,
        detail: format!("residual {:.3e}, {violations} mixtures below L(pi*)", fp.residual),
    })
}

pub fn check_point_equivalence(seed: u64) -> Result<CheckOutcome> {
    let mut rng = stream(seed, Stream::Oracle);
    let f = FeatureMap::poly1d(3);
    let domain: Vec<Vec<f64>> = (0..41).map(|k| vec![-2.0 + 0.1 * k as f64]).collect();
    let mean: Vec<f64> = (0..3).map(|_| rng.random_range(-0.3..0.3)).collect();
    let spec = MomentSpec::new(vec![mean[0], 1.0 + mean[1], mean[2]], vec![1.0, 1.5, 2.0], 3.0)?;
    let problem = Problem::new(f, spec.clone(), "point").with_domain(domain);
    let cfg = HerdingConfig {
        t_output: 300,
        t_burnin: 0,
        epsilon_schedule: EpsilonSchedule::Harmonic,
        lambda: 3.0,
        ..HerdingConfig::bimodal()
    };
    let ent = StrategyRegistry::builtin().run("entropic-scan", &problem, &cfg)?;
    let w = point_equivalence_transform(&ent, spec.lambda())?;
    let pt = run_point_from(&problem, &cfg, ent.initial.component.clone(), &w[0])?;
    let same_x = ent.trajectory.iter().zip(&pt.trajectory).all(|(a, b)| a.component == b.component);
    let mut worst: f64 = 0.0;
    for (wt, s) in w[1..].iter().zip(&pt.trajectory) {
        for (a, b) in wt.iter().zip(&s.a) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(CheckOutcome {
        name: "point_equivalence".into(),
        passed: same_x && worst <= 1e-12,
        detail: format!("same sequence: {same_x}, max |w' - w| {worst:.3e}"),
    })
}

/// Runs the whole suite with the given moment function.
pub fn run_selftest_with(moments: &MomentFn, seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_gradients(moments, seed)?,
        check_gap_identity(seed)?,
        check_fixed_point(seed)?,
        check_point_equivalence(seed)?,
    ])
}

pub fn run_selftest(seed: u64) -> Result<Vec<CheckOutcome>> {
    run_selftest_with(&exact_moments, seed)
}

pub fn cmd_selftest(seed: u64, out: Option<&std::path::Path>) -> Result<(ExperimentReport, bool)> {
    let checks = run_selftest(seed)?;
    let mut report = ExperimentReport::new("selftest", seed);
    for c in &checks {
        report.flag(&c.name, c.passed);
        report.notes.push(format!("{}: {}", c.name, c.detail));
    }
    let all = checks.iter().all(|c| c.passed);
    report.flag("all_passed", all);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        report.save(dir)?;
    }
    Ok((report, all))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_selftest(1).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn corrupted_moments_fail_gradient_check() {
        let c = check_gradients(&corrupted_moments, 1).unwrap();
        assert!(!c.passed, "{}", c.detail);
    }
}
