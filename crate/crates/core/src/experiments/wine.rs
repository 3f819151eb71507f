//! Wine quality data: per-colour entropic herding models, a
//! likelihood-ratio colour classifier and conditional inference of residual
//! sugar against a multivariate-normal baseline.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{HerdingConfig, KvConfig};
use crate::data::metrics::{auc, interval_coverage, MvnBaseline};
use crate::data::wine::{self, WineData, COLUMNS, RED_FILE, RESIDUAL_SUGAR, WHITE_FILE};
use crate::engine::{HerdingRun, Problem, StrategyRegistry};
use crate::error::{Error, Result};
use crate::eval::bin_edges;
use crate::experiments::{check_keys, ensure_dir, fmt, ExperimentReport};
use crate::features::FeatureMap;
use crate::mixture::MixtureModel;
use crate::moments::MomentSpec;
use crate::numeric::normal_cdf;

pub const QUANTILE_LO: f64 = 0.10;
pub const QUANTILE_HI: f64 = 0.90;
pub const CELL_WIDTH: f64 = 0.5;
pub const GRID: (f64, f64) = (-5.0, 5.0);

#[derive(Clone, Debug)]
pub struct WineOptions {
    pub data_dir: Option<PathBuf>,
    pub herding: HerdingConfig,
    pub validation_fraction: f64,
    pub red_url: String,
    pub white_url: String,
    /// Pinned digests checked before the files are read.
    pub red_sha256: Option<String>,
    pub white_sha256: Option<String>,
}

impl Default for WineOptions {
    fn default() -> Self {
        Self {
            data_dir: None,
            herding: HerdingConfig::wine(),
            validation_fraction: 0.2,
            red_url: wine::RED_URL.into(),
            white_url: wine::WHITE_URL.into(),
            red_sha256: None,
            white_sha256: None,
        }
    }
}

const EXTRA_KEYS: &[&str] = &[
    "data_dir",
    "validation_fraction",
    "red_url",
    "white_url",
    "red_sha256",
    "white_sha256",
];

impl WineOptions {
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        check_keys(kv, EXTRA_KEYS)?;
        let d = Self::default();
        Ok(Self {
            data_dir: kv.get_raw("data_dir").map(PathBuf::from),
            herding: HerdingConfig::from_kv_over(&d.herding, kv)?,
            validation_fraction: kv.get_or("validation_fraction", d.validation_fraction)?,
            red_url: kv.get_or("red_url", d.red_url)?,
            white_url: kv.get_or("white_url", d.white_url)?,
            red_sha256: kv.get("red_sha256")?,
            white_sha256: kv.get("white_sha256")?,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.herding.seed = seed;
        self
    }

    /// Config `data_dir`, else `ENTROHERD_DATA_DIR`.
    pub fn resolve_data_dir(&self) -> Option<PathBuf> {
        self.data_dir.clone().or_else(wine::data_dir_from_env)
    }

    /// Checks whichever digests are pinned against the files in `dir`.
    pub fn verify_files(&self, dir: &Path) -> Result<()> {
        for (file, digest) in [(RED_FILE, &self.red_sha256), (WHITE_FILE, &self.white_sha256)] {
            if let Some(d) = digest {
                wine::verify_sha256(&dir.join(file), d)?;
            }
        }
        Ok(())
    }
}

/// Herding model and baseline for one colour.
pub struct ColourModel {
    pub name: &'static str,
    pub run: HerdingRun,
    pub mvn: MvnBaseline,
    pub features: FeatureMap,
    pub spec: MomentSpec,
}

impl ColourModel {
    pub fn fit(name: &'static str, train: &[Vec<f64>], config: &HerdingConfig) -> Result<Self> {
        let n = train[0].len();
        let centers: Vec<f64> = (0..n).map(|k| train.iter().map(|r| r[k]).sum::<f64>() / train.len() as f64).collect();
        let features = FeatureMap::centered_moments_at(centers);
        let spec = MomentSpec::from_data(&features, train, config.lambda)?;
        let problem = Problem::new(features.clone(), spec.clone(), "gauss-diag");
        let run = StrategyRegistry::builtin().run("entropic", &problem, config)?;
        Ok(Self {
            name,
            run,
            mvn: MvnBaseline::fit(train)?,
            features,
            spec,
        })
    }

    pub fn mixture(&self) -> &MixtureModel {
        &self.run.output
    }
}

/// Conditional `[lo, hi]` interval of residual sugar under both models and
/// the true value, for one validation row.
#[derive(Clone, Debug)]
pub struct ConditionalRow {
    pub colour: &'static str,
    pub truth: f64,
    pub herding: Vec<f64>,
    pub mvn: Vec<f64>,
}

pub const VIOLIN_PROBS: [f64; 7] = [0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95];

pub struct WineResult {
    pub data: WineData,
    pub red: ColourModel,
    pub white: ColourModel,
    /// `(colour, -log p_red(x), -log p_white(x))` for every validation row.
    pub nll: Vec<(&'static str, f64, f64)>,
    pub auc_herding: f64,
    pub auc_mvn: f64,
    pub conditionals: Vec<ConditionalRow>,
    pub coverage_herding: f64,
    pub coverage_mvn: f64,
}

fn quantile_index(p: f64) -> usize {
    VIOLIN_PROBS.iter().position(|q| *q == p).expect("quantile level is tabulated")
}

pub fn run_wine_on(data: WineData, config: &HerdingConfig) -> Result<WineResult> {
    let (red, white) = rayon::join(
        || ColourModel::fit("red", &data.red_train, config),
        || ColourModel::fit("white", &data.white_train, config),
    );
    let (red, white) = (red?, white?);

    let score = |x: &[f64]| -> Result<(f64, f64)> {
        Ok((-red.mixture().log_density(x)?, -white.mixture().log_density(x)?))
    };
    let mut nll = Vec::new();
    let (mut pos, mut neg, mut pos_mvn, mut neg_mvn) = (vec![], vec![], vec![], vec![]);
    for (colour, rows) in [("red", &data.red_val), ("white", &data.white_val)] {
        for x in rows.iter() {
            let (nr, nw) = score(x)?;
            nll.push((colour, nr, nw));
            // higher score means "more red"
            let s = nw - nr;
            let s_mvn = red.mvn.log_density(x) - white.mvn.log_density(x);
            if colour == "red" {
                pos.push(s);
                pos_mvn.push(s_mvn);
            } else {
                neg.push(s);
                neg_mvn.push(s_mvn);
            }
        }
    }
    let auc_herding = auc(&pos, &neg)?;
    let auc_mvn = auc(&pos_mvn, &neg_mvn)?;

    let mut conditionals = Vec::new();
    for (model, rows) in [(&red, &data.red_val), (&white, &data.white_val)] {
        let rows: Vec<Result<ConditionalRow>> = rows
            .par_iter()
            .map(|x| {
                let cond = model.mixture().conditional_univariate(RESIDUAL_SUGAR, x)?;
                Ok(ConditionalRow {
                    colour: model.name,
                    truth: x[RESIDUAL_SUGAR],
                    herding: cond.quantiles_univariate(&VIOLIN_PROBS)?,
                    mvn: model.mvn.conditional_quantiles(RESIDUAL_SUGAR, x, &VIOLIN_PROBS)?,
                })
            })
            .collect();
        for r in rows {
            conditionals.push(r?);
        }
    }
    let (lo, hi) = (quantile_index(QUANTILE_LO), quantile_index(QUANTILE_HI));
    let truths: Vec<f64> = conditionals.iter().map(|c| c.truth).collect();
    let iv_h: Vec<(f64, f64)> = conditionals.iter().map(|c| (c.herding[lo], c.herding[hi])).collect();
    let iv_m: Vec<(f64, f64)> = conditionals.iter().map(|c| (c.mvn[lo], c.mvn[hi])).collect();
    Ok(WineResult {
        coverage_herding: interval_coverage(&iv_h, &truths),
        coverage_mvn: interval_coverage(&iv_m, &truths),
        data,
        red,
        white,
        nll,
        auc_herding,
        auc_mvn,
        conditionals,
    })
}

pub fn load_data(dir: &Path, fraction: f64, seed: u64) -> Result<WineData> {
    WineData::load(&dir.join(RED_FILE), &dir.join(WHITE_FILE), fraction, seed)
}

/// 1-D cell masses of each component for variable `k`.
fn component_cells(m: &MixtureModel, k: usize, edges: &[f64]) -> Vec<Vec<f64>> {
    m.components()
        .iter()
        .map(|c| {
            let (mu, s) = (c.location().expect("gaussian")[k], c.sigmas().expect("gaussian")[k]);
            edges.windows(2).map(|e| normal_cdf(e[1], mu, s) - normal_cdf(e[0], mu, s)).collect()
        })
        .collect()
}

/// Pair-plot cell masses on `GRID` with `CELL_WIDTH` cells, for the model
/// and the training data, one row per `(i, j, cell_i, cell_j)` with `i < j`.
pub fn write_pair_grid(model: &ColourModel, train: &[Vec<f64>], path: &Path) -> Result<()> {
    let edges = bin_edges(GRID.0, GRID.1, CELL_WIDTH);
    let nb = edges.len() - 1;
    let m = model.mixture();
    let cells: Vec<Vec<Vec<f64>>> = (0..COLUMNS.len()).map(|k| component_cells(m, k, &edges)).collect();
    let cell_of = |v: f64| -> Option<usize> {
        (v >= GRID.0 && v < GRID.1).then(|| (((v - GRID.0) / CELL_WIDTH) as usize).min(nb - 1))
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["var_i", "var_j", "x_lo", "y_lo", "model_mass", "data_mass"])?;
    let n = COLUMNS.len();
    for i in 0..n {
        for j in i + 1..n {
            let mut data = vec![0.0; nb * nb];
            for r in train {
                if let (Some(a), Some(b)) = (cell_of(r[i]), cell_of(r[j])) {
                    data[a * nb + b] += 1.0 / train.len() as f64;
                }
            }
            for a in 0..nb {
                for b in 0..nb {
                    let mass: f64 = m
                        .weights()
                        .iter()
                        .enumerate()
                        .map(|(c, wt)| wt * cells[i][c][a] * cells[j][c][b])
                        .sum();
                    w.write_record([
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        fmt(edges[a]),
                        fmt(edges[b]),
                        fmt(mass),
                        fmt(data[a * nb + b]),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_nll(result: &WineResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["colour", "nll_red_model", "nll_white_model"])?;
    for (c, a, b) in &result.nll {
        w.write_record([c.to_string(), fmt(*a), fmt(*b)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_conditionals(result: &WineResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["colour".to_string(), "truth".into()];
    header.extend(VIOLIN_PROBS.iter().map(|p| format!("herding_q{:02}", (p * 100.0).round())));
    header.extend(VIOLIN_PROBS.iter().map(|p| format!("mvn_q{:02}", (p * 100.0).round())));
    w.write_record(&header)?;
    for c in &result.conditionals {
        let mut row = vec![c.colour.to_string(), fmt(c.truth)];
        row.extend(c.herding.iter().map(|v| fmt(*v)));
        row.extend(c.mvn.iter().map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_wine(opts: &WineOptions, out: &Path) -> Result<ExperimentReport> {
    let dir = opts
        .resolve_data_dir()
        .ok_or_else(|| Error::Config("no wine data directory: set data_dir or ENTROHERD_DATA_DIR".into()))?;
    opts.verify_files(&dir)?;
    let data = load_data(&dir, opts.validation_fraction, opts.herding.seed)?;
    ensure_dir(out)?;
    data.save(out)?;
    let r = run_wine_on(data, &opts.herding)?;
    let mut report = ExperimentReport::new("wine", opts.herding.seed);
    report.echo("", &opts.herding);
    report.set("validation_fraction", fmt(opts.validation_fraction));
    report.set("features", r.red.features.len());
    report.metric("auc.herding", r.auc_herding);
    report.metric("auc.mvn", r.auc_mvn);
    report.metric("coverage.herding", r.coverage_herding);
    report.metric("coverage.mvn", r.coverage_mvn);
    for m in [&r.red, &r.white] {
        let sse = crate::eval::moment_sse(m.mixture(), &m.spec, &m.features)?;
        report.metric(&format!("{}.moment_sse_std", m.name), sse);
        let file = format!("mixture_{}.json", m.name);
        m.mixture().save_json(&out.join(&file))?;
        report.artifact(&file);
        let file = format!("pairgrid_{}.csv", m.name);
        let train = if m.name == "red" { &r.data.red_train } else { &r.data.white_train };
        write_pair_grid(m, train, &out.join(&file))?;
        report.artifact(&file);
    }
    for f in ["wine_red_train.csv", "wine_red_validation.csv", "wine_white_train.csv", "wine_white_validation.csv", "wine_preprocessing.json"] {
        report.artifact(f);
    }
    write_nll(&r, &out.join("validation_nll.csv"))?;
    report.artifact("validation_nll.csv");
    write_conditionals(&r, &out.join("conditional_residual_sugar.csv"))?;
    report.artifact("conditional_residual_sugar.csv");
    report.save(out)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_pipeline_runs() {
        let data = load_data(&wine::fixture_dir(), 0.2, 3).unwrap();
        let mut cfg = HerdingConfig::wine();
        cfg.t_burnin = 5;
        cfg.t_output = 20;
        cfg.k_update = 5;
        let r = run_wine_on(data, &cfg).unwrap();
        assert_eq!(r.red.features.len(), 99);
        assert_eq!(r.nll.len(), 20);
        assert_eq!(r.conditionals.len(), 20);
        assert!((0.0..=1.0).contains(&r.auc_herding));
        assert!((0.0..=1.0).contains(&r.coverage_herding));
        for c in &r.conditionals {
            assert!(c.herding.windows(2).all(|w| w[0] <= w[1]));
            assert!(c.mvn.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
