//! Boltzmann machine on ten spins: entropic herding against exact i.i.d.
//! samples, and the lambda by output-length sweep.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{HerdingConfig, KvConfig};
use crate::data::boltzmann::make_boltzmann_instance;
use crate::engine::{HerdingRun, Problem, StrategyRegistry};
use crate::error::{Error, Result};
use crate::eval::{kl_discrete, table_entropy, table_moments, write_state_table, GibbsModel};
use crate::experiments::{check_keys, ensure_dir, fmt, ExperimentReport};
use crate::features::FeatureMap;
use crate::mixture::MixtureModel;
use crate::moments::MomentSpec;
use crate::numeric::spearman;
use crate::rng::{derive_seed, stream, Stream};

pub const DEFAULT_LAMBDAS: [f64; 6] = [1.0, 3.0, 13.0, 50.0, 100.0, 200.0];
pub const DEFAULT_T_OUTPUTS: [usize; 5] = [20, 40, 80, 160, 320];

#[derive(Clone, Debug)]
pub struct BoltzmannOptions {
    pub n_spins: usize,
    /// Seed of the coupling draw; the herding seed is `herding.seed`.
    pub instance_seed: u64,
    pub herding: HerdingConfig,
    /// Exact samples for the empirical baseline.
    pub n_empirical: usize,
    pub sweep: bool,
    pub lambdas: Vec<f64>,
    pub t_outputs: Vec<usize>,
    pub trials: usize,
}

impl Default for BoltzmannOptions {
    fn default() -> Self {
        Self {
            n_spins: 10,
            instance_seed: 0,
            herding: HerdingConfig::boltzmann(),
            n_empirical: 320,
            sweep: false,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            t_outputs: DEFAULT_T_OUTPUTS.to_vec(),
            trials: 10,
        }
    }
}

const EXTRA_KEYS: &[&str] = &["n_spins", "instance_seed", "n_empirical", "sweep", "sweep_lambdas", "sweep_t_outputs", "trials"];

impl BoltzmannOptions {
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        check_keys(kv, EXTRA_KEYS)?;
        let d = Self::default();
        let herding = HerdingConfig::from_kv_over(&d.herding, kv)?;
        let o = Self {
            n_spins: kv.get_or("n_spins", d.n_spins)?,
            instance_seed: kv.get_or("instance_seed", herding.seed)?,
            n_empirical: kv.get_or("n_empirical", d.n_empirical)?,
            sweep: kv.get_or("sweep", d.sweep)?,
            lambdas: kv.get_list("sweep_lambdas")?.unwrap_or(d.lambdas),
            t_outputs: kv.get_list("sweep_t_outputs")?.unwrap_or(d.t_outputs),
            trials: kv.get_or("trials", d.trials)?,
            herding,
        };
        if o.lambdas.is_empty() || o.t_outputs.is_empty() || o.trials == 0 {
            return Err(Error::Config("sweep needs lambdas, output lengths and at least one trial".into()));
        }
        Ok(o)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.herding.seed = seed;
        self.instance_seed = seed;
        self
    }
}

/// Target model, features and exact standardisation.
pub struct BoltzmannSetup {
    pub model: GibbsModel,
    pub features: FeatureMap,
    pub spec: MomentSpec,
}

pub fn boltzmann_setup(n_spins: usize, instance_seed: u64, lambda: f64) -> Result<BoltzmannSetup> {
    if n_spins > crate::mixture::MAX_ENUM_SPINS {
        return Err(Error::StateSpaceTooLarge {
            n: n_spins,
            limit: crate::mixture::MAX_ENUM_SPINS,
        });
    }
    let model = make_boltzmann_instance(n_spins, instance_seed)?;
    let features = FeatureMap::spin_pairwise(n_spins);
    let spec = MomentSpec::from_model(&features, &model, lambda)?;
    Ok(BoltzmannSetup { model, features, spec })
}

/// Output quality against the exact target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputMetrics {
    /// `sum_m (eta_m - mu_m)^2` in raw feature units.
    pub sse: f64,
    pub entropy: f64,
    pub kl: f64,
}

pub fn evaluate_table(setup: &BoltzmannSetup, table: &[f64]) -> OutputMetrics {
    let eta = table_moments(table, setup.model.states(), &setup.features);
    let sse = eta.iter().zip(setup.spec.raw_mean()).map(|(e, m)| (e - m).powi(2)).sum();
    OutputMetrics {
        sse,
        entropy: table_entropy(table),
        kl: kl_discrete(setup.model.probs(), table),
    }
}

/// Fraction of the states that make up the top half of the target mass
/// whose model mass lies within `factor` of the target.
pub fn within_factor_fraction(target: &[f64], model: &[f64], mass: f64, factor: f64) -> f64 {
    let mut order: Vec<usize> = (0..target.len()).collect();
    order.sort_by(|&a, &b| target[b].total_cmp(&target[a]));
    let (mut acc, mut n, mut hits) = (0.0, 0usize, 0usize);
    for k in order {
        if acc >= mass {
            break;
        }
        acc += target[k];
        n += 1;
        let r = model[k] / target[k];
        if r <= factor && r >= 1.0 / factor {
            hits += 1;
        }
    }
    hits as f64 / n.max(1) as f64
}

/// Empirical distribution of `n` exact samples over the state table.
pub fn empirical_table(model: &GibbsModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, Stream::Sampling);
    let mut table = vec![0.0; model.states().len()];
    for k in model.sample_indices(n, &mut rng) {
        table[k] += 1.0 / n as f64;
    }
    table
}

pub struct BoltzmannResult {
    pub setup: BoltzmannSetup,
    pub run: HerdingRun,
    pub model_table: Vec<f64>,
    pub empirical: Vec<f64>,
    pub herding: OutputMetrics,
    pub sampled: OutputMetrics,
    pub within_factor: f64,
    pub sweep: Option<Vec<SweepCell>>,
}

pub fn run_boltzmann(opts: &BoltzmannOptions) -> Result<BoltzmannResult> {
    let setup = boltzmann_setup(opts.n_spins, opts.instance_seed, opts.herding.lambda)?;
    let problem = Problem::new(setup.features.clone(), setup.spec.clone(), "spin");
    let run = StrategyRegistry::builtin().run("entropic", &problem, &opts.herding)?;
    let model_table = run.output.table_over(setup.model.states())?;
    let empirical = empirical_table(&setup.model, opts.n_empirical, opts.herding.seed);
    let herding = evaluate_table(&setup, &model_table);
    let sampled = evaluate_table(&setup, &empirical);
    let within_factor = within_factor_fraction(setup.model.probs(), &model_table, 0.5, 1.5);
    let sweep = if opts.sweep { Some(run_sweep(&setup, opts)?) } else { None };
    Ok(BoltzmannResult {
        setup,
        run,
        model_table,
        empirical,
        herding,
        sampled,
        within_factor,
        sweep,
    })
}

/// One `(lambda, t_output, trial)` cell of the sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepCell {
    pub lambda: f64,
    pub t_output: usize,
    pub trial: usize,
    pub metrics: OutputMetrics,
}

/// Runs every `(lambda, trial)` once at the longest output length and reads
/// the shorter lengths off its prefix: with a fixed seed the run for
/// `T_burnin + T` steps is exactly the first steps of the longer one.
pub fn run_sweep(setup: &BoltzmannSetup, opts: &BoltzmannOptions) -> Result<Vec<SweepCell>> {
    let t_longest = *opts.t_outputs.iter().max().expect("non-empty output lengths");
    let jobs: Vec<(f64, usize)> = opts
        .lambdas
        .iter()
        .flat_map(|&l| (0..opts.trials).map(move |k| (l, k)))
        .collect();
    let reg = StrategyRegistry::builtin();
    let per_job: Vec<Result<Vec<SweepCell>>> = jobs
        .par_iter()
        .map(|&(lambda, trial)| {
            let mut cfg = opts.herding.clone();
            cfg.lambda = lambda;
            cfg.t_output = t_longest;
            cfg.seed = derive_seed(opts.herding.seed, trial as u64);
            let problem = Problem::new(setup.features.clone(), setup.spec.with_lambda(lambda)?, "spin");
            let run = reg.run("entropic", &problem, &cfg)?;
            opts.t_outputs
                .iter()
                .map(|&t_out| {
                    let comps = run.trajectory[cfg.t_burnin..cfg.t_burnin + t_out]
                        .iter()
                        .map(|s| s.component.clone())
                        .collect();
                    let table = MixtureModel::uniform(comps)?.table_over(setup.model.states())?;
                    Ok(SweepCell {
                        lambda,
                        t_output: t_out,
                        trial,
                        metrics: evaluate_table(setup, &table),
                    })
                })
                .collect()
        })
        .collect();
    let mut cells = Vec::new();
    for r in per_job {
        cells.extend(r?);
    }
    Ok(cells)
}

/// Trial means per `(lambda, t_output)`, ordered by lambda then output length.
/// `kl` is infinite when any trial's is.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepMean {
    pub lambda: f64,
    pub t_output: usize,
    pub sse: f64,
    pub entropy: f64,
    pub kl: f64,
}

pub fn sweep_means(cells: &[SweepCell]) -> Vec<SweepMean> {
    let mut keys: Vec<(f64, usize)> = cells.iter().map(|c| (c.lambda, c.t_output)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(lambda, t_output)| {
            let sel: Vec<&OutputMetrics> = cells
                .iter()
                .filter(|c| c.lambda == lambda && c.t_output == t_output)
                .map(|c| &c.metrics)
                .collect();
            let n = sel.len() as f64;
            SweepMean {
                lambda,
                t_output,
                sse: sel.iter().map(|m| m.sse).sum::<f64>() / n,
                entropy: sel.iter().map(|m| m.entropy).sum::<f64>() / n,
                kl: sel.iter().map(|m| m.kl).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Counts adjacent pairs that increase, for a series ordered by lambda.
pub fn increases(series: &[f64]) -> usize {
    series.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Trade-off summary at one output length: SSE and entropy trends in lambda.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TradeOff {
    pub lambdas: Vec<f64>,
    pub sse: Vec<f64>,
    pub entropy: Vec<f64>,
    pub sse_increases: usize,
    pub entropy_increases: usize,
    pub sse_spearman: f64,
    pub entropy_spearman: f64,
}

pub fn trade_off(means: &[SweepMean], t_output: usize) -> TradeOff {
    let row: Vec<&SweepMean> = means.iter().filter(|m| m.t_output == t_output).collect();
    let lambdas: Vec<f64> = row.iter().map(|m| m.lambda).collect();
    let sse: Vec<f64> = row.iter().map(|m| m.sse).collect();
    let entropy: Vec<f64> = row.iter().map(|m| m.entropy).collect();
    TradeOff {
        sse_increases: increases(&sse),
        entropy_increases: increases(&entropy),
        sse_spearman: spearman(&lambdas, &sse),
        entropy_spearman: spearman(&lambdas, &entropy),
        lambdas,
        sse,
        entropy,
    }
}

fn write_sweep(cells: &[SweepCell], means: &[SweepMean], out: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(out.join("sweep_trials.csv"))?;
    w.write_record(["lambda", "t_output", "trial", "sse", "entropy", "kl"])?;
    for c in cells {
        w.write_record([
            fmt(c.lambda),
            c.t_output.to_string(),
            c.trial.to_string(),
            fmt(c.metrics.sse),
            fmt(c.metrics.entropy),
            fmt(c.metrics.kl),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.join("sweep_means.csv"))?;
    w.write_record(["lambda", "t_output", "sse", "entropy", "kl"])?;
    for m in means {
        w.write_record([fmt(m.lambda), m.t_output.to_string(), fmt(m.sse), fmt(m.entropy), fmt(m.kl)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_boltzmann(opts: &BoltzmannOptions, out: &Path) -> Result<ExperimentReport> {
    ensure_dir(out)?;
    let r = run_boltzmann(opts)?;
    let mut report = ExperimentReport::new("boltzmann", opts.herding.seed);
    report.echo("", &opts.herding);
    report.set("n_spins", opts.n_spins);
    report.set("instance_seed", opts.instance_seed);
    report.set("n_empirical", opts.n_empirical);
    report.metric("states", r.model_table.len() as f64);
    report.metric("target_entropy", r.setup.model.entropy());
    report.metric("herding.sse", r.herding.sse);
    report.metric("herding.entropy", r.herding.entropy);
    report.metric("herding.kl", r.herding.kl);
    report.metric("herding.within_1_5_top_half", r.within_factor);
    report.metric(
        "herding.min_state_mass",
        r.model_table.iter().copied().fold(f64::INFINITY, f64::min),
    );
    report.metric("empirical.sse", r.sampled.sse);
    report.metric("empirical.entropy", r.sampled.entropy);
    report.metric("empirical.kl", r.sampled.kl);
    report.flag("herding.all_states_positive", r.model_table.iter().all(|p| *p > 0.0));

    write_state_table(
        &out.join("scatter.csv"),
        r.setup.model.states(),
        r.setup.model.probs(),
        &r.model_table,
        Some(&r.empirical),
    )?;
    report.artifact("scatter.csv");
    r.run.output.save_json(&out.join("mixture.json"))?;
    report.artifact("mixture.json");
    r.run.write_trajectory_csv(&out.join("trajectory.csv"))?;
    report.artifact("trajectory.csv");

    match &r.sweep {
        Some(cells) => {
            let means = sweep_means(cells);
            write_sweep(cells, &means, out)?;
            report.artifact("sweep_trials.csv");
            report.artifact("sweep_means.csv");
            report.set("sweep_lambdas", opts.lambdas.iter().map(|l| fmt(*l)).collect::<Vec<_>>().join(","));
            report.set(
                "sweep_t_outputs",
                opts.t_outputs.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
            );
            report.set("trials", opts.trials);
            let t_longest = *opts.t_outputs.iter().max().expect("non-empty");
            let t = trade_off(&means, t_longest);
            report.metric("sweep.sse_spearman", t.sse_spearman);
            report.metric("sweep.entropy_spearman", t.entropy_spearman);
            report.metric("sweep.sse_increases", t.sse_increases as f64);
            report.metric("sweep.entropy_increases", t.entropy_increases as f64);
        }
        None => {
            for k in ["sweep.sse_spearman", "sweep.entropy_spearman", "sweep.sse_increases", "sweep.entropy_increases"] {
                report.missing(k);
            }
        }
    }
    report.notes.push("KL values reported as null carry a matching *_infinite flag".into());
    report.save(out)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_fraction_counts_top_half() {
        let target = [0.4, 0.3, 0.2, 0.1];
        // top half of the mass is reached after the 0.4 and 0.3 states
        let model = [0.41, 0.1, 0.2, 0.29];
        assert_eq!(within_factor_fraction(&target, &model, 0.5, 1.5), 0.5);
        assert_eq!(within_factor_fraction(&target, &target, 0.5, 1.5), 1.0);
    }

    #[test]
    fn increase_counter() {
        assert_eq!(increases(&[3.0, 2.0, 2.0, 1.0]), 0);
        assert_eq!(increases(&[3.0, 4.0, 2.0, 5.0]), 2);
    }

    #[test]
    fn sweep_prefix_matches_shorter_run() {
        let setup = boltzmann_setup(4, 1, 13.0).unwrap();
        let mut cfg = HerdingConfig::boltzmann();
        cfg.t_burnin = 5;
        cfg.k_update = 5;
        cfg.t_output = 12;
        let problem = Problem::new(setup.features.clone(), setup.spec.clone(), "spin");
        let reg = StrategyRegistry::builtin();
        let long = reg.run("entropic", &problem, &cfg).unwrap();
        cfg.t_output = 4;
        let short = reg.run("entropic", &problem, &cfg).unwrap();
        assert_eq!(short.trajectory[..], long.trajectory[..short.trajectory.len()]);
    }

    #[test]
    fn empirical_table_sums_to_one() {
        let setup = boltzmann_setup(10, 0, 13.0).unwrap();
        let e = empirical_table(&setup.model, 320, 0);
        assert!((e.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(kl_discrete(setup.model.probs(), &e).is_infinite());
    }

    #[test]
    fn too_many_spins() {
        assert!(matches!(boltzmann_setup(21, 0, 1.0), Err(Error::StateSpaceTooLarge { .. })));
    }
}
