//! Command-line front end for the herding experiments.
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use entroherd::config::KvConfig;
use entroherd::data::wine::{self, RED_FILE, WHITE_FILE};
use entroherd::experiments::bimodal::{cmd_bimodal, BimodalOptions};
use entroherd::experiments::boltzmann::{cmd_boltzmann, BoltzmannOptions};
use entroherd::experiments::selftest::cmd_selftest;
use entroherd::experiments::wine::{cmd_wine, WineOptions};
use entroherd::experiments::{write_timing, ExperimentReport};
use entroherd::{Error, Result};
use log::info;

#[derive(Parser)]
#[command(name = "entroherd", version, about = "Entropic herding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// 1-D bimodal target, point and entropic variants.
    Bimodal(RunArgs),
    /// 10-spin Boltzmann machine; `--sweep` adds the lambda x T grid.
    Boltzmann(RunArgs),
    /// Wine quality classification and conditional coverage.
    Wine(RunArgs),
    /// Gradient, gap, fixed-point and equivalence checks.
    Selftest(RunArgs),
    /// Download the wine files into `--out` or `ENTROHERD_DATA_DIR`.
    Fetch(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run the full parameter sweep (boltzmann only).
    #[arg(long)]
    sweep: bool,
}

impl RunArgs {
    fn kv(&self) -> Result<KvConfig> {
        match &self.config {
            Some(p) => KvConfig::load(p),
            None => Ok(KvConfig::default()),
        }
    }

    fn out(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| Error::Config("--out is required".into()))
    }

    fn no_sweep(&self, command: &str) -> Result<()> {
        if self.sweep {
            return Err(Error::Config(format!("--sweep is not valid for `{command}`")));
        }
        Ok(())
    }
}

fn seeded<T>(opts: T, seed: Option<u64>, with: fn(T, u64) -> T) -> T {
    match seed {
        Some(s) => with(opts, s),
        None => opts,
    }
}

fn finish(report: &ExperimentReport, out: &Path, start: Instant) -> Result<()> {
    let secs = start.elapsed().as_secs_f64();
    write_timing(out, &report.experiment, secs)?;
    for (k, v) in &report.metrics {
        match v {
            Some(v) => println!("{k} = {v}"),
            None => println!("{k} = null"),
        }
    }
    for (k, v) in &report.flags {
        println!("{k} = {v}");
    }
    info!("{} finished in {secs:.1}s, report in {}", report.experiment, out.display());
    Ok(())
}

fn download(url: &str, dest: &Path) -> Result<()> {
    info!("fetching {url}");
    let mut body = Vec::new();
    ureq::get(url)
        .call()
        .map_err(|e| Error::Io(std::io::Error::other(format!("{url}: {e}"))))?
        .into_body()
        .into_reader()
        .read_to_end(&mut body)?;
    std::fs::write(dest, body)?;
    Ok(())
}

fn fetch(args: &RunArgs) -> Result<()> {
    args.no_sweep("fetch")?;
    let opts = WineOptions::from_kv(&args.kv()?)?;
    let dir = args
        .out
        .clone()
        .or_else(|| opts.resolve_data_dir())
        .ok_or_else(|| Error::Config("fetch needs --out, data_dir or ENTROHERD_DATA_DIR".into()))?;
    std::fs::create_dir_all(&dir)?;
    download(&opts.red_url, &dir.join(RED_FILE))?;
    download(&opts.white_url, &dir.join(WHITE_FILE))?;
    opts.verify_files(&dir)?;
    for file in [RED_FILE, WHITE_FILE] {
        println!("{file} sha256 = {}", wine::sha256_file(&dir.join(file))?);
    }
    Ok(())
}

/// Returns `Ok(false)` when the self-test ran but a check failed.
fn run(cli: &Cli) -> Result<bool> {
    let start = Instant::now();
    match &cli.command {
        Command::Bimodal(a) => {
            a.no_sweep("bimodal")?;
            let opts = seeded(BimodalOptions::from_kv(&a.kv()?)?, a.seed, BimodalOptions::with_seed);
            let out = a.out()?;
            let report = cmd_bimodal(&opts, out)?;
            finish(&report, out, start)?;
        }
        Command::Boltzmann(a) => {
            let mut opts = seeded(BoltzmannOptions::from_kv(&a.kv()?)?, a.seed, BoltzmannOptions::with_seed);
            opts.sweep |= a.sweep;
            let out = a.out()?;
            let report = cmd_boltzmann(&opts, out)?;
            finish(&report, out, start)?;
        }
        Command::Wine(a) => {
            a.no_sweep("wine")?;
            let opts = seeded(WineOptions::from_kv(&a.kv()?)?, a.seed, WineOptions::with_seed);
            let out = a.out()?;
            let report = cmd_wine(&opts, out)?;
            finish(&report, out, start)?;
        }
        Command::Selftest(a) => {
            a.no_sweep("selftest")?;
            let kv = a.kv()?;
            kv.check_known(&["seed"])?;
            let seed = match a.seed {
                Some(s) => s,
                None => kv.get_or("seed", 0)?,
            };
            let (report, passed) = cmd_selftest(seed, a.out.as_deref())?;
            for note in &report.notes {
                println!("{note}");
            }
            println!("all_passed = {passed}");
            if let Some(out) = &a.out {
                write_timing(out, "selftest", start.elapsed().as_secs_f64())?;
            }
            return Ok(passed);
        }
        Command::Fetch(a) => fetch(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: self-test failed");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
