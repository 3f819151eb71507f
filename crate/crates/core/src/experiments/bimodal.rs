//! One-dimensional bimodal target: point herding against entropic herding,
//! each with and without stochastic moves.

use std::path::Path;

use crate::config::{HerdingConfig, KvConfig};
use crate::data::bimodal::{self, BimodalTarget, DOMAIN};
use crate::engine::{HerdingRun, Problem, StrategyRegistry};
use crate::error::Result;
use crate::eval::{bin_edges, histogram_compare, HistSource, HistogramComparison};
use crate::experiments::{check_keys, ensure_dir, fmt, ExperimentReport};
use crate::features::FeatureMap;
use crate::mixture::MixtureModel;
use crate::moments::MomentSpec;

pub const BIN_WIDTH: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct BimodalOptions {
    pub seed: u64,
    /// Input sample size for the moment targets.
    pub n_samples: usize,
    /// Argmax grid spacing for point herding.
    pub grid_step: f64,
    pub entropic: HerdingConfig,
    pub point: HerdingConfig,
    /// Jump probability of the entropic-with-jumps variant.
    pub jump_p: f64,
}

impl Default for BimodalOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_samples: 10_000,
            grid_step: 1e-3,
            entropic: HerdingConfig::bimodal(),
            point: HerdingConfig::bimodal_point(),
            jump_p: 0.1,
        }
    }
}

const EXTRA_KEYS: &[&str] = &["n_samples", "grid_step", "jump_p", "point_t_output", "point_t_burnin", "point_eps_herding"];

impl BimodalOptions {
    /// Herding keys configure the entropic variants; `lambda` and `seed`
    /// also apply to the point variants.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        check_keys(kv, EXTRA_KEYS)?;
        let d = Self::default();
        let entropic = HerdingConfig::from_kv_over(&d.entropic, kv)?;
        let point = HerdingConfig {
            t_output: kv.get_or("point_t_output", d.point.t_output)?,
            t_burnin: kv.get_or("point_t_burnin", d.point.t_burnin)?,
            eps_herding: kv.get_or("point_eps_herding", d.point.eps_herding)?,
            lambda: entropic.lambda,
            seed: entropic.seed,
            ..d.point
        };
        point.validate()?;
        Ok(Self {
            seed: entropic.seed,
            n_samples: kv.get_or("n_samples", d.n_samples)?,
            grid_step: kv.get_or("grid_step", d.grid_step)?,
            jump_p: kv.get_or("jump_p", d.jump_p)?,
            entropic,
            point,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.entropic.seed = seed;
        self.point.seed = seed;
        self
    }
}

pub struct BimodalVariant {
    pub name: &'static str,
    pub run: HerdingRun,
    pub histogram: HistogramComparison,
}

pub struct BimodalResult {
    pub features: FeatureMap,
    pub spec: MomentSpec,
    pub variants: Vec<BimodalVariant>,
}

impl BimodalResult {
    pub fn variant(&self, name: &str) -> Option<&BimodalVariant> {
        self.variants.iter().find(|v| v.name == name)
    }

    pub fn tv(&self, name: &str) -> Option<f64> {
        self.variant(name).map(|v| v.histogram.tv)
    }
}

/// Moment targets of the polynomial features from an MH sample of the target.
pub fn bimodal_problem(n_samples: usize, seed: u64, lambda: f64) -> Result<(FeatureMap, MomentSpec)> {
    let features = FeatureMap::poly1d(4);
    let xs: Vec<Vec<f64>> = bimodal::mh_sample_bimodal(n_samples, seed).into_iter().map(|x| vec![x]).collect();
    let spec = MomentSpec::from_data(&features, &xs, lambda)?;
    Ok((features, spec))
}

pub fn run_bimodal(opts: &BimodalOptions) -> Result<BimodalResult> {
    let (features, spec) = bimodal_problem(opts.n_samples, opts.seed, opts.entropic.lambda)?;
    let target = BimodalTarget::new();
    let reg = StrategyRegistry::builtin();
    let base = Problem::new(features.clone(), spec.clone(), "gauss1d");

    let point_problem = Problem {
        family: "point".into(),
        ..base.clone()
    }
    .with_domain(bimodal::grid(opts.grid_step));
    let metro_problem = Problem {
        family: "point".into(),
        ..base.clone()
    }
    .with_bounds(DOMAIN.0, DOMAIN.1);
    let mut jump_cfg = opts.entropic.clone();
    jump_cfg.p_jump = opts.jump_p;

    // "point" is the finite-memory variant driven by eps_herding like the
    // others; "point-classic" keeps every past sample with equal weight.
    let plan: [(&'static str, &str, &Problem, &HerdingConfig); 5] = [
        ("point", "entropic-scan", &point_problem, &opts.point),
        ("entropic", "entropic", &base, &opts.entropic),
        ("point-metropolis", "point-metropolis", &metro_problem, &opts.point),
        ("entropic-jump", "entropic", &base, &jump_cfg),
        ("point-classic", "point", &point_problem, &opts.point),
    ];
    let mut variants = Vec::new();
    for (name, strategy, problem, cfg) in plan {
        let run = reg.run(strategy, problem, cfg)?;
        let histogram = histogram_compare(
            HistSource::Mixture(&run.output),
            |x| target.pdf(x),
            DOMAIN.0,
            DOMAIN.1,
            BIN_WIDTH,
        )?;
        variants.push(BimodalVariant { name, run, histogram });
    }
    Ok(BimodalResult {
        features,
        spec,
        variants,
    })
}

/// Largest raw moment error of the point-sample average over the `t` steps
/// following the first `skip`.
pub fn point_moment_error(run: &HerdingRun, spec: &MomentSpec, skip: usize, t: usize) -> f64 {
    let m = spec.len();
    let mut sum = vec![0.0; m];
    for s in &run.trajectory[skip..skip + t] {
        for (acc, e) in sum.iter_mut().zip(&s.eta) {
            *acc += e;
        }
    }
    // eta is standardised; convert the mean error back to raw units
    sum.iter()
        .zip(spec.raw_std())
        .map(|(s, sd)| (s / t as f64 * sd).abs())
        .fold(0.0, f64::max)
}

/// Per-step bin masses of each component (`t` × 0.1-width bins), unnormalised.
pub fn write_colormap(run: &HerdingRun, path: &Path) -> Result<()> {
    let edges = bin_edges(DOMAIN.0, DOMAIN.1, BIN_WIDTH);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(edges.windows(2).map(|e| format!("{:.1}", 0.5 * (e[0] + e[1]))));
    w.write_record(&header)?;
    for s in &run.trajectory {
        let masses = MixtureModel::uniform(vec![s.component.clone()])?.bin_masses(&edges)?;
        let mut row = vec![s.t.to_string()];
        row.extend(masses.iter().map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histograms(result: &BimodalResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["bin_lo".to_string(), "bin_hi".into(), "target".into()];
    header.extend(result.variants.iter().map(|v| v.name.to_string()));
    w.write_record(&header)?;
    let first = &result.variants[0].histogram;
    for k in 0..first.target.len() {
        let mut row = vec![fmt(first.edges[k]), fmt(first.edges[k + 1]), fmt(first.target[k])];
        row.extend(result.variants.iter().map(|v| fmt(v.histogram.model[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_bimodal(opts: &BimodalOptions, out: &Path) -> Result<ExperimentReport> {
    ensure_dir(out)?;
    let result = run_bimodal(opts)?;
    let mut report = ExperimentReport::new("bimodal", opts.seed);
    report.echo("", &opts.entropic);
    report.echo("point.", &opts.point);
    report.set("n_samples", opts.n_samples);
    report.set("grid_step", fmt(opts.grid_step));
    report.set("jump_p", fmt(opts.jump_p));
    for v in &result.variants {
        report.metric(&format!("tv.{}", v.name), v.histogram.tv);
        report.metric(&format!("components.{}", v.name), v.run.output.len() as f64);
        let file = format!("mixture_{}.json", v.name);
        v.run.output.save_json(&out.join(&file))?;
        report.artifact(&file);
        let file = format!("trajectory_{}.csv", v.name);
        v.run.write_trajectory_csv(&out.join(&file))?;
        report.artifact(&file);
        let file = format!("colormap_{}.csv", v.name);
        write_colormap(&v.run, &out.join(&file))?;
        report.artifact(&file);
    }
    write_histograms(&result, &out.join("histograms.csv"))?;
    report.artifact("histograms.csv");
    if let Some(v) = result.variant("point-classic") {
        let burn = opts.point.t_burnin;
        report.metric(
            "point-classic.moment_error",
            point_moment_error(&v.run, &result.spec, burn, v.run.trajectory.len() - burn),
        );
    }
    report.notes.push("colormap files hold raw per-step bin masses; normalise per plot if desired".into());
    report.save(out)?;
    Ok(report)
}
