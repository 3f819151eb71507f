use rand::Rng;

use super::*;
use crate::families::ComponentParams;
use crate::numeric::normal_cdf;
use crate::rng::{stream, Stream};

fn chain(n: usize, w: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n - 1 {
        m[i][i + 1] = w;
        m[i + 1][i] = w;
    }
    m
}

#[test]
fn uniform_table_at_zero_theta() {
    let f = FeatureMap::spin_pairwise(3);
    let g = enumerate_gibbs(vec![0.0; 3], &f, spin_states(3).unwrap()).unwrap();
    assert!(g.probs().iter().all(|p| (p - 0.125).abs() < 1e-15));
    assert!(g.eta().iter().all(|e| e.abs() < 1e-15));
    assert!((g.log_z() - 8f64.ln()).abs() < 1e-14);
}

#[test]
fn two_spin_coupling() {
    let g = GibbsModel::boltzmann(chain(2, -0.3)).unwrap();
    assert!((g.eta()[0] - 0.3f64.tanh()).abs() < 1e-14);
    assert!((g.eta()[0] - 0.29131).abs() < 1e-5);
    let total: f64 = g.probs().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn energy_shift_is_a_gauge() {
    // the constant feature is emulated by adding c to every energy via the
    // log-partition: compare tables for theta and a rescaled domain order
    let f = FeatureMap::spin_pairwise(3);
    let theta = vec![0.4, -0.2, 0.7];
    let a = enumerate_gibbs(theta.clone(), &f, spin_states(3).unwrap()).unwrap();
    let neg_e: Vec<f64> = a.states().iter().map(|x| -a.energy(x) + 5.0).collect();
    let lz = log_sum_exp(&neg_e);
    assert!((lz - (a.log_z() + 5.0)).abs() < 1e-12);
    for (p, ne) in a.probs().iter().zip(&neg_e) {
        assert!((p - (ne - lz).exp()).abs() < 1e-15);
    }
}

#[test]
fn boltzmann_rejects_bad_coupling() {
    let mut w = chain(3, -0.3);
    w[0][2] = 0.1;
    assert!(GibbsModel::boltzmann(w).is_err());
    let mut w = chain(3, -0.3);
    w[1][1] = 1.0;
    assert!(GibbsModel::boltzmann(w).is_err());
}

#[test]
fn state_space_limit() {
    assert!(matches!(spin_states(21), Err(Error::StateSpaceTooLarge { .. })));
}

#[test]
fn eta_matches_gibbs_sampler() {
    // single-site heat-bath sampler as an independent oracle
    let mut w = chain(4, -0.3);
    w[0][3] = 0.2;
    w[3][0] = 0.2;
    let g = GibbsModel::boltzmann(w.clone()).unwrap();
    let mut rng = stream(17, Stream::Oracle);
    let mut x = vec![1.0; 4];
    let f = g.features().clone();
    let sweeps = 200_000;
    let mut sums = vec![0.0; f.len()];
    let mut sq = vec![0.0; f.len()];
    for s in 0..sweeps + 1000 {
        for i in 0..4 {
            let field: f64 = (0..4).filter(|&j| j != i).map(|j| w[i][j] * x[j]).sum();
            // p(x_i = +1 | rest) ∝ exp(-field)
            let p_up = 1.0 / (1.0 + (2.0 * field).exp());
            x[i] = if rng.random::<f64>() < p_up { 1.0 } else { -1.0 };
        }
        if s >= 1000 {
            for (k, v) in f.eval(&x).iter().enumerate() {
                sums[k] += v;
                sq[k] += v * v;
            }
        }
    }
    for k in 0..f.len() {
        let mean = sums[k] / sweeps as f64;
        let var = sq[k] / sweeps as f64 - mean * mean;
        // heat-bath chains on four spins decorrelate within a few sweeps;
        // inflate the naive standard error accordingly
        let se = (var / sweeps as f64).sqrt() * 3.0;
        assert!((mean - g.eta()[k]).abs() < 4.0 * se, "feature {k}: {mean} vs {}", g.eta()[k]);
    }
}

#[test]
fn model_targets() {
    let f = FeatureMap::spin_pairwise(2);
    let g = GibbsModel::boltzmann(chain(2, -0.3)).unwrap();
    let spec = MomentSpec::from_model(&f, &g, 1.0).unwrap();
    assert!((spec.raw_mean()[0] - 0.3f64.tanh()).abs() < 1e-14);

    let f3 = FeatureMap::spin_pairwise(3);
    let g3 = GibbsModel::boltzmann(chain(3, -0.3)).unwrap();
    let spec3 = MomentSpec::from_model(&f3, &g3, 1.0).unwrap();
    // ids are (0,1), (0,2), (1,2)
    assert!((spec3.raw_mean()[1] - 0.3f64.tanh().powi(2)).abs() < 1e-14);
    assert!((spec3.raw_mean()[1] - 0.08486).abs() < 1e-5);

    let flat = GibbsModel::boltzmann(vec![vec![0.0; 2]; 2]).unwrap();
    let s = MomentSpec::from_model(&f, &flat, 1.0).unwrap();
    assert!(s.raw_mean()[0].abs() < 1e-15);
    assert!((s.raw_std()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn kl_examples() {
    let p = [0.5, 0.5];
    assert_eq!(kl_discrete(&p, &p), 0.0);
    let v = kl_discrete(&p, &[0.25, 0.75]);
    assert!((v - (0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln())).abs() < 1e-15);
    assert!((v - 0.14384).abs() < 1e-5);
    assert!(kl_discrete(&p, &[1.0, 0.0]).is_infinite());
    assert_eq!(kl_discrete(&[1.0, 0.0], &[0.5, 0.5]), 2f64.ln());
}

#[test]
fn kl_is_nonnegative() {
    let mut rng = stream(3, Stream::Oracle);
    for _ in 0..200 {
        let mut p: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let mut q: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let sp: f64 = p.iter().sum();
        let sq: f64 = q.iter().sum();
        p.iter_mut().for_each(|v| *v /= sp);
        q.iter_mut().for_each(|v| *v /= sq);
        assert!(kl_discrete(&p, &q) >= 0.0);
    }
}

#[test]
fn loss_examples() {
    let f = FeatureMap::spin_pairwise(2);
    let spec = MomentSpec::new(vec![0.0], vec![1.0], 5.0).unwrap();
    let uniform = MixtureModel::uniform(vec![ComponentParams::spin_from_probs(&[0.5, 0.5])]).unwrap();
    let states = spin_states(2).unwrap();
    let l = loss_exact(&uniform, &spec, &f, &states).unwrap();
    assert!((l + 2.0 * 2f64.ln()).abs() < 1e-12);
    assert_eq!(moment_sse(&uniform, &spec, &f).unwrap(), 0.0);

    let shifted = MomentSpec::new(vec![-0.3], vec![1.0], 5.0).unwrap();
    assert!((moment_sse(&uniform, &shifted, &f).unwrap() - 0.09).abs() < 1e-15);
}

#[test]
fn gap_examples() {
    let states = spin_states(3).unwrap();
    let c = ComponentParams::spin_from_probs(&[0.7, 0.2, 0.5]);
    let same = MixtureModel::uniform(vec![c.clone(), c.clone(), c]).unwrap();
    let g = entropy_gap(&same, &states).unwrap();
    assert!(g.gap.abs() < 1e-12);
    assert!((g.mean_h_c - g.h_rho).abs() < 1e-12);
    assert!((g.h_rho - 3f64.ln()).abs() < 1e-14);

    // disjoint supports: two deterministic spin components
    let up = ComponentParams::SpinBernoulli { logit: vec![f64::INFINITY; 3] };
    let down = ComponentParams::SpinBernoulli { logit: vec![f64::NEG_INFINITY; 3] };
    let split = MixtureModel::new(vec![up, down], vec![0.3, 0.7]).unwrap();
    let g = entropy_gap(&split, &states).unwrap();
    assert!(g.mean_h_c.abs() < 1e-15);
    assert!((g.gap - g.h_rho).abs() < 1e-14);
}

#[test]
fn gap_identity_on_random_mixtures() {
    let states = spin_states(4).unwrap();
    let mut rng = stream(8, Stream::Oracle);
    for _ in 0..20 {
        let comps: Vec<_> = (0..5)
            .map(|_| {
                let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.02..0.98)).collect();
                ComponentParams::spin_from_probs(&p)
            })
            .collect();
        let w: Vec<f64> = (0..5).map(|_| rng.random::<f64>() + 0.01).collect();
        let m = MixtureModel::new_normalized(comps, w).unwrap();
        let g = entropy_gap(&m, &states).unwrap();
        assert!(g.residual.abs() < 1e-10, "{}", g.residual);
        assert!(g.gap >= -1e-12 && g.gap <= g.h_rho + 1e-12);
    }
}

#[test]
fn gaussian_closed_form_examples() {
    let [t1, t2] = gaussian_1d_closed_form([0.0, 1.0], [3.0, 4.0]).unwrap();
    assert_eq!(t1, 0.0);
    assert!((t2 - (-4.0 + 24f64.sqrt()) / 2.0).abs() < 1e-15);
    assert!((t2 - 0.44949).abs() < 1e-5);
    let [_, big] = gaussian_1d_closed_form([0.0, 1.0], [1.0, 1e6]).unwrap();
    assert!((big - 0.5).abs() < 1e-6);
}

#[test]
fn gaussian_closed_form_satisfies_condition() {
    for (mu, lam) in [([0.5, 1.5], [2.0, 3.0]), ([-1.0, 2.0], [10.0, 0.5]), ([2.0, 4.5], [100.0, 100.0])] {
        let [t1, t2] = gaussian_1d_closed_form(mu, lam).unwrap();
        let s2 = 0.5 / t2;
        let m = -t1 / (2.0 * t2);
        let r1 = t1 - lam[0] * (m - mu[0]);
        let r2 = t2 - lam[1] * (m * m + s2 - mu[1]);
        assert!(r1.abs() < 1e-9 && r2.abs() < 1e-9, "{r1} {r2}");
    }
}

#[test]
fn fixed_point_recovers_known_theta() {
    let f = FeatureMap::spin_pairwise(2);
    let theta0 = -0.4;
    let g = GibbsModel::boltzmann(chain(2, theta0)).unwrap();
    let states = spin_states(2).unwrap();
    // raw coordinates: Lambda large, mu = eta(theta0)
    let phi: Vec<Vec<f64>> = states.iter().map(|x| f.eval(x)).collect();
    for lam in [1e2, 1e4, 1e6] {
        let fp = solve_table(&phi, g.eta(), &[lam], FixedPointMethod::Newton).unwrap();
        assert!(fp.residual <= 1e-8);
        assert!((fp.theta[0] - theta0).abs() < 10.0 / lam);
    }
}

#[test]
fn fixed_point_is_optimal() {
    let f = FeatureMap::spin_pairwise(4);
    let mut w = chain(4, -0.3);
    w[0][2] = 0.15;
    w[2][0] = 0.15;
    let g = GibbsModel::boltzmann(w).unwrap();
    let states = spin_states(4).unwrap();
    let spec = MomentSpec::from_model(&f, &g, 13.0).unwrap();
    let fp = fixed_point_solve(&f, &spec, &states, FixedPointMethod::Newton).unwrap();
    assert!(fp.residual <= 1e-8);
    let best = loss_of_table(&fp.probs, &states, &spec, &f);
    let mut rng = stream(2, Stream::Oracle);
    for _ in 0..30 {
        let comps: Vec<_> = (0..3)
            .map(|_| {
                let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..0.95)).collect();
                ComponentParams::spin_from_probs(&p)
            })
            .collect();
        let q = MixtureModel::uniform(comps).unwrap();
        assert!(best <= loss_exact(&q, &spec, &f, &states).unwrap() + 1e-9);
    }
    // the true model itself is a candidate
    assert!(best <= loss_of_table(g.probs(), &states, &spec, &f) + 1e-9);
}

#[test]
fn damped_iteration_agrees_for_small_lambda() {
    let f = FeatureMap::spin_pairwise(3);
    let g = GibbsModel::boltzmann(chain(3, -0.3)).unwrap();
    let states = spin_states(3).unwrap();
    let spec = MomentSpec::from_model(&f, &g, 1.0).unwrap();
    let a = fixed_point_solve(&f, &spec, &states, FixedPointMethod::Newton).unwrap();
    let b = fixed_point_solve(&f, &spec, &states, FixedPointMethod::Damped { alpha: 0.1 }).unwrap();
    for (x, y) in a.theta.iter().zip(&b.theta) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn histogram_examples() {
    let n0 = MixtureModel::uniform(vec![ComponentParams::gauss1d(0.0, 1.0)]).unwrap();
    let pdf = |m: f64| move |x: f64| (crate::numeric::normal_ln_pdf(x, m, 1.0)).exp();
    let same = histogram_compare(HistSource::Mixture(&n0), pdf(0.0), -8.0, 8.0, 0.1).unwrap();
    assert!(same.tv < 1e-9);
    let shifted = histogram_compare(HistSource::Mixture(&n0), pdf(0.1), -8.0, 8.0, 0.1).unwrap();
    let exact = 2.0 * normal_cdf(0.05, 0.0, 1.0) - 1.0;
    assert!((exact - 0.0399).abs() < 1e-4);
    assert!((shifted.tv - exact).abs() < 1e-3, "{}", shifted.tv);
    let far = MixtureModel::uniform(vec![ComponentParams::gauss1d(-20.0, 1.0)]).unwrap();
    let disjoint = histogram_compare(HistSource::Mixture(&far), pdf(0.0), -30.0, 8.0, 0.1).unwrap();
    assert!((disjoint.tv - 1.0).abs() < 1e-6);
}

#[test]
fn sample_binning() {
    let edges = bin_edges(0.0, 1.0, 0.1);
    assert_eq!(edges.len(), 11);
    let m = sample_masses(&[0.05, 0.1, 0.1, 0.99, 1.0], &edges);
    assert_eq!(m[0], 0.2);
    assert_eq!(m[1], 0.4);
    assert_eq!(m[9], 0.2);
}
