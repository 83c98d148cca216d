//! `banach-oc` — experiment runner for the optimal-control toolkit.
//!
//! Four verbs: `simulate` integrates the configured system forward and
//! writes the terminal profile and state-norm history; `optimize` runs the
//! adjoint-based and/or sample-and-hold descent and writes cost logs,
//! controls, and profiles; `compare` runs both methods and writes merged
//! comparison files; `selftest` runs the built-in invariant checks.
//!
//! Configuration is a flat `key = value` file (see `effective_config.txt`
//! written by any run for the full key list); `--out`, `--method`, and
//! `--seed` override it.  The environment variable `BANACH_OC_THREADS`
//! caps probe concurrency (0 forces sequential execution).  `optimize`
//! and `compare` exit nonzero if any recorded cost sequence increased.

mod config;
mod csvio;
mod experiment;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{ExperimentConfig, Method};

#[derive(Parser)]
#[command(
    name = "banach-oc",
    version,
    about = "Optimal control of control-affine systems: forward simulation, \
             adjoint-based descent, and sample-and-hold synthesis, with \
             plot-ready CSV output"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system under u = 0 (or a stored control file) and
    /// write profile.csv + energy.csv.
    Simulate(RunArgs),
    /// Run the selected descent method(s); write cost_log.csv,
    /// control.csv, profile.csv, and summary.csv.  Exits nonzero if a
    /// recorded cost sequence increased.
    Optimize(RunArgs),
    /// Run both methods on the same problem; write compare_profiles.csv
    /// and compare_controls.csv.
    Compare(RunArgs),
    /// Run the built-in invariant checks and report one line per check.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file; omitted keys keep the
    /// bundled neural-field defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (created if missing); overrides the config `out`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Descent method; overrides the config `method`.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,

    /// Seed for randomized initial controls; overrides the config `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Pmp,
    Monotone,
    Both,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pmp => Method::Pmp,
            MethodArg::Monotone => Method::Monotone,
            MethodArg::Both => Method::Both,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Selftest => selftest::run(),
        Command::Simulate(args) => {
            let (cfg, out) = prepare(&args)?;
            experiment::run_simulate(&cfg, &out)?;
            Ok(true)
        }
        Command::Optimize(args) => {
            let (cfg, out) = prepare(&args)?;
            let held = experiment::run_optimize(&cfg, &out)?;
            if !held {
                eprintln!("error: a recorded cost sequence increased; see the cost log");
            }
            Ok(held)
        }
        Command::Compare(args) => {
            let (cfg, out) = prepare(&args)?;
            let held = experiment::run_compare(&cfg, &out)?;
            if !held {
                eprintln!("error: a recorded cost sequence increased");
            }
            Ok(held)
        }
    }
}

/// Load the configuration, apply flag overrides, create the output
/// directory, and record the effective configuration there.
fn prepare(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            config::parse(&text, &path.display().to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.out = out.display().to_string();
    }
    if let Some(method) = args.method {
        cfg.method = method.into();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let out = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    std::fs::write(out.join("effective_config.txt"), cfg.serialize())
        .with_context(|| format!("writing {}", out.join("effective_config.txt").display()))?;
    Ok((cfg, out))
}
