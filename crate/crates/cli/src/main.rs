//! `bifrac <experiment> --config <file> [--threads N] [--out DIR]`
//!
//! Runs one experiment and writes `report.json`, the experiment's CSV files,
//! `manifest.json` (inputs, version and output hashes; byte-identical across
//! repeated runs) and `timing.json` (wall time, the only run-dependent file).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error
//! (including exponents outside the admissible range), 3 memory budget
//! exceeded.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bifrac_core::operator::DEFAULT_BUDGET;
use clap::Parser;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, EXPERIMENTS};
use crate::experiments::Context;

/// Environment variable overriding the FFT memory budget (bytes).
const BUDGET_ENV: &str = "BIFRAC_BUDGET";
const DEFAULT_OUT: &str = "bifrac-out";

#[derive(Parser, Debug)]
#[command(name = "bifrac", version, about = "Numerical experiments for bilinear fractional integrals and their commutators")]
struct Args {
    /// Experiment to run.
    experiment: String,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Cap on worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(bifrac_core::Error),
    Io(String),
}

impl Failure {
    pub fn unknown_experiment(name: &str) -> Self {
        Failure::Usage(format!("unknown experiment {name:?}; valid experiments: {}", EXPERIMENTS.join(", ")))
    }

    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Core(bifrac_core::Error::Exponents(_)) => 2,
            Failure::Core(bifrac_core::Error::BudgetExceeded { .. }) => 3,
            Failure::Core(_) | Failure::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e @ bifrac_core::Error::BudgetExceeded { .. }) => {
                write!(f, "{e}; raise `budget` in the config or set {BUDGET_ENV}")
            }
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<bifrac_core::Error> for Failure {
    fn from(e: bifrac_core::Error) -> Self {
        Failure::Core(e)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn budget(config: &ExperimentConfig) -> Result<u64, Failure> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{BUDGET_ENV} must be a byte count, got {v:?}"))),
        Err(_) => Ok(config.budget.unwrap_or(DEFAULT_BUDGET)),
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_failure(&path, e))
}

fn run(args: &Args) -> Result<PathBuf, Failure> {
    let started = Instant::now();
    if !EXPERIMENTS.contains(&args.experiment.as_str()) {
        return Err(Failure::unknown_experiment(&args.experiment));
    }
    let text = std::fs::read(&args.config).map_err(|e| io_failure(&args.config, e))?;
    let config = ExperimentConfig::parse(
        std::str::from_utf8(&text).map_err(|_| Failure::Usage("config is not valid UTF-8".into()))?,
    )?;
    if let Some(named) = &config.experiment {
        if named != &args.experiment {
            return Err(Failure::Usage(format!(
                "config is for experiment {named:?} but {:?} was requested",
                args.experiment
            )));
        }
    }
    let ctx = Context { cfg: config.exponents()?, grid: config.grid()?, budget: budget(&config)?, config: &config };

    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out).map_err(|e| io_failure(&out, e))?;

    let outcome = experiments::run(&args.experiment, &ctx)?;

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let report = serde_json::to_string_pretty(&outcome.report).expect("reports serialize") + "\n";
    files.push(("report.json".into(), report.into_bytes()));
    files.extend(outcome.csv.into_iter().map(|(n, c)| (n, c.into_bytes())));
    for (name, bytes) in &files {
        write(&out, name, bytes)?;
    }

    let manifest = json!({
        "tool": "bifrac",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": args.experiment,
        "config": {
            "file": args.config.file_name().map(|n| n.to_string_lossy().into_owned()),
            "sha256": sha256_hex(&text),
        },
        "exponents": {
            "n": ctx.cfg.dim(),
            "alpha": ctx.cfg.alpha(),
            "p1": ctx.cfg.p1(),
            "p2": ctx.cfg.p2(),
            "p": ctx.cfg.p(),
            "q": ctx.cfg.q(),
        },
        "grid": config.grid,
        "fixtures": config.fixtures,
        "mode": config.mode,
        "delta": config.delta,
        "seed": config.seed,
        "budget_bytes": ctx.budget,
        "threads": args.threads,
        "outputs": files
            .iter()
            .map(|(name, bytes)| json!({ "file": name, "sha256": sha256_hex(bytes) }))
            .collect::<Vec<_>>(),
        "timing_file": "timing.json",
    });
    write(&out, "manifest.json", (serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n").as_bytes())?;
    let timing = json!({ "wall_seconds": started.elapsed().as_secs_f64() });
    write(&out, "timing.json", (serde_json::to_string_pretty(&timing).expect("timing serializes") + "\n").as_bytes())?;
    Ok(out)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&args) {
        Ok(out) => {
            println!("{}: outputs written to {}", args.experiment, out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
