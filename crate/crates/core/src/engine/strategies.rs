use crate::config::HerdingConfig;
use crate::engine::adam::OptimizerState;
use crate::engine::inner::{
    effective_weights, inner_gradient_step, jump_move, std_moments, Acceptance,
};
use crate::engine::run::{HerdingRun, StepRecord};
use crate::engine::{HerdingStrategy, Problem};
use crate::error::{Error, Result};
use crate::families::{self, ComponentParams, FamilyRegistry, LocationRange};
use crate::rng::{stream, Stream};
use crate::state::WeightState;

struct LoopOptions {
    acceptance: Acceptance,
    use_modified: bool,
    p_jump: f64,
    jump_stream: Stream,
}

/// The shared entropic loop: warm-started inner optimisation, optional
/// jumps, then the herding weight update.
fn entropic_loop(
    name: &str,
    problem: &Problem,
    config: &HerdingConfig,
    registry: &FamilyRegistry,
    opts: LoopOptions,
) -> Result<HerdingRun> {
    let family = registry.get(&problem.family)?;
    let (features, spec) = (&problem.features, &problem.spec);
    let lambda = spec.lambda();
    let mut r = problem.initial.clone().unwrap_or_else(|| family.initial(features));
    if !families::supports(&r, features) {
        return Err(Error::UnsupportedPairing {
            family: family.name().to_string(),
            features: features.label(),
        });
    }
    let eta0 = std_moments(&r, spec, features)?;
    let h0 = families::entropy(&r);
    let mut state = WeightState::initial(&eta0, h0, lambda);
    let initial = StepRecord {
        t: 0,
        component: r.clone(),
        eta: eta0,
        a: state.a.clone(),
        tentative_loss: state.tentative_loss(lambda),
        entropy: h0,
    };
    let mut seen = LocationRange::default();
    seen.observe(&r);
    let mut rng = stream(config.seed, opts.jump_stream);
    let mut trajectory = Vec::with_capacity(config.t_max());
    let mut jumps = 0;
    for t in 1..=config.t_max() {
        let eps = config.eps_at(t);
        let mut opt = OptimizerState::new(r.coords().len(), config.eta_learn);
        let mut q = if t == 1 { family.break_symmetry(&r, &mut rng) } else { r };
        for _ in 0..config.k_update {
            let w = effective_weights(&q, &state, opts.use_modified, eps, spec, features)?;
            q = inner_gradient_step(&q, &w, &mut opt, spec, features, problem.bounds)?;
            seen.observe(&q);
            if opts.p_jump > 0.0 {
                let w = effective_weights(&q, &state, opts.use_modified, eps, spec, features)?;
                let (next, took) = jump_move(
                    &q,
                    &w,
                    spec,
                    features,
                    opts.p_jump,
                    family,
                    &seen,
                    opts.acceptance,
                    &mut rng,
                )?;
                if took {
                    jumps += 1;
                }
                q = next;
            }
        }
        r = q;
        let eta = std_moments(&r, spec, features)?;
        if eta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite moments at step {t}")));
        }
        let h = families::entropy(&r);
        state.update(&eta, h, lambda, eps);
        trajectory.push(StepRecord {
            t,
            component: r.clone(),
            eta,
            a: state.a.clone(),
            tentative_loss: state.tentative_loss(lambda),
            entropy: h,
        });
    }
    HerdingRun::assemble(name, config, initial, trajectory, jumps)
}

/// Gradient-based entropic herding.
#[derive(Debug, Default)]
pub struct EntropicStrategy;

impl HerdingStrategy for EntropicStrategy {
    fn name(&self) -> &'static str {
        "entropic"
    }

    fn run(&self, problem: &Problem, config: &HerdingConfig, families: &FamilyRegistry) -> Result<HerdingRun> {
        entropic_loop(
            self.name(),
            problem,
            config,
            families,
            LoopOptions {
                acceptance: Acceptance::Strict,
                use_modified: config.use_modified_weights,
                p_jump: config.p_jump,
                jump_stream: Stream::Jump,
            },
        )
    }
}

/// Point components driven by gradient steps plus a random proposal at
/// every inner step, accepted by the Metropolis rule. Modified weights are
/// never used.
#[derive(Debug, Default)]
pub struct PointMetropolisStrategy;

impl HerdingStrategy for PointMetropolisStrategy {
    fn name(&self) -> &'static str {
        "point-metropolis"
    }

    fn run(&self, problem: &Problem, config: &HerdingConfig, families: &FamilyRegistry) -> Result<HerdingRun> {
        let mut problem = problem.clone();
        problem.family = "point".into();
        entropic_loop(
            self.name(),
            &problem,
            config,
            families,
            LoopOptions {
                acceptance: Acceptance::Metropolis,
                use_modified: false,
                p_jump: 1.0,
                jump_stream: Stream::Proposal,
            },
        )
    }
}

/// First index of the smallest score; later candidates must be strictly
/// better to displace the incumbent.
fn scan_min<F: Fn(&[f64]) -> f64>(domain: &[Vec<f64>], score: F) -> usize {
    let mut best = 0;
    let mut best_val = score(&domain[0]);
    for (k, x) in domain.iter().enumerate().skip(1) {
        let v = score(x);
        if v < best_val {
            best = k;
            best_val = v;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Entropic herding over point masses on a finite domain, with the inner
/// problem `argmin_x sum_m a_m phi'_m(x)` solved exactly.
#[derive(Debug, Default)]
pub struct EntropicScanStrategy;

impl HerdingStrategy for EntropicScanStrategy {
    fn name(&self) -> &'static str {
        "entropic-scan"
    }

    fn run(&self, problem: &Problem, config: &HerdingConfig, families: &FamilyRegistry) -> Result<HerdingRun> {
        let domain = problem.domain()?;
        let (features, spec) = (&problem.features, &problem.spec);
        let lambda = spec.lambda();
        let table: Vec<Vec<f64>> = domain.iter().map(|x| spec.standardize(&features.eval(x))).collect();
        let r0 = match &problem.initial {
            Some(r) => r.clone(),
            None => families.get("point")?.initial(features),
        };
        let eta0 = std_moments(&r0, spec, features)?;
        let mut state = WeightState::initial(&eta0, 0.0, lambda);
        let initial = StepRecord {
            t: 0,
            component: r0,
            eta: eta0,
            a: state.a.clone(),
            tentative_loss: state.tentative_loss(lambda),
            entropy: 0.0,
        };
        let mut trajectory = Vec::with_capacity(config.t_max());
        for t in 1..=config.t_max() {
            let eps = config.eps_at(t);
            let idx = scan_min(&table, |phi| dot(&state.a, phi));
            let eta = table[idx].clone();
            state.update(&eta, 0.0, lambda, eps);
            trajectory.push(StepRecord {
                t,
                component: ComponentParams::point(domain[idx].clone()),
                eta,
                a: state.a.clone(),
                tentative_loss: state.tentative_loss(lambda),
                entropy: 0.0,
            });
        }
        HerdingRun::assemble(self.name(), config, initial, trajectory, 0)
    }
}

/// Classic point herding by exact argmax over a finite domain.
#[derive(Debug, Default)]
pub struct PointStrategy;

impl HerdingStrategy for PointStrategy {
    fn name(&self) -> &'static str {
        "point"
    }

    /// Starts from `w^(0) = -eta'(r^(0))`, the weight the entropic update
    /// would hold after the initial component.
    fn run(&self, problem: &Problem, config: &HerdingConfig, families: &FamilyRegistry) -> Result<HerdingRun> {
        let r0 = match &problem.initial {
            Some(r) => r.clone(),
            None => families.get("point")?.initial(&problem.features),
        };
        let eta0 = std_moments(&r0, &problem.spec, &problem.features)?;
        let w0: Vec<f64> = eta0.iter().map(|v| -v).collect();
        run_point_from(problem, config, r0, &w0)
    }
}

/// Point herding from explicit initial weights `w0` (standardised).
///
/// `x^(t) = argmax_x sum_m w_m phi'_m(x)`, then `w <- w - phi'(x^(t))`.
/// `initial` is recorded as the `t = 0` entry.
pub fn run_point_from(
    problem: &Problem,
    config: &HerdingConfig,
    initial: ComponentParams,
    w0: &[f64],
) -> Result<HerdingRun> {
    let domain = problem.domain()?;
    let (features, spec) = (&problem.features, &problem.spec);
    if w0.len() != features.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: w0.len(),
        });
    }
    let lambda = spec.lambda();
    let table: Vec<Vec<f64>> = domain.iter().map(|x| spec.standardize(&features.eval(x))).collect();
    let mut w = w0.to_vec();
    let mut sum = vec![0.0; w.len()];
    let init_eta = std_moments(&initial, spec, features)?;
    let first = StepRecord {
        t: 0,
        component: initial,
        a: w.clone(),
        tentative_loss: 0.5 * lambda * init_eta.iter().map(|v| v * v).sum::<f64>(),
        eta: init_eta,
        entropy: 0.0,
    };
    let mut trajectory = Vec::with_capacity(config.t_max());
    for t in 1..=config.t_max() {
        let idx = scan_min(&table, |phi| -dot(&w, phi));
        let phi = &table[idx];
        for ((wm, s), p) in w.iter_mut().zip(sum.iter_mut()).zip(phi) {
            *wm -= p;
            *s += p;
        }
        let mean_sq: f64 = sum.iter().map(|s| (s / t as f64).powi(2)).sum();
        trajectory.push(StepRecord {
            t,
            component: ComponentParams::point(domain[idx].clone()),
            eta: phi.clone(),
            a: w.clone(),
            tentative_loss: 0.5 * lambda * mean_sq,
            entropy: 0.0,
        });
    }
    HerdingRun::assemble("point", config, first, trajectory, 0)
}
