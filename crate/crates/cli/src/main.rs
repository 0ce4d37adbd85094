//! Experiment driver for the loss-landscape laboratory.
//!
//! Exit codes: 0 when the checked property held, 1 when a run completed but
//! the property was falsified (a finding), 2 for configuration or usage
//! errors.

mod commands;
mod config;
mod report;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Ctx, UsageError};
use config::RootConfig;

const SEED_ENV: &str = "LANDSCAPE_LAB_SEED";

#[derive(Parser)]
#[command(
    name = "landscape-lab",
    version,
    about = "Numerical audits of over-parameterized loss landscapes",
    after_help = "Seed precedence: --seed, then the config file, then \
                  LANDSCAPE_LAB_SEED, then 0. Reports land in --out as \
                  report.json (deterministic), meta.json (timing), and a \
                  per-command CSV table."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; each subcommand reads its own section
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Random seed, overriding config and environment
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Output directory for reports and tables
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override the trial or sample count of the command
    #[arg(long, global = true, value_name = "INT")]
    trials: Option<usize>,

    /// Override the command's acceptance tolerance
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,

    /// Cap the number of worker threads
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,

    /// Suppress the summary line on stdout
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo certificate that random hidden weights give the last
    /// hidden layer full column rank
    CertifyRank,
    /// Perturb to full rank, solve the last layer, and audit the
    /// monotone path to the loss infimum
    Descend,
    /// Check the uniform gap between repaired activations and their base
    /// against the explicit envelope
    Approximate,
    /// Build and verify the flat-plateau network whose minimum is not
    /// strict
    Counterexample,
    /// Grid-scan a named synthetic surface for strictly isolated minima
    Scan,
    /// Fixed scan of (uv-1)^2 on [-3,3]^2 at resolution 401
    UvDemo,
}

fn load_config(path: Option<&PathBuf>) -> Result<RootConfig, UsageError> {
    let Some(path) = path else {
        return Ok(RootConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("config {} is invalid: {e}", path.display())))
}

fn resolve_seed(flag: Option<u64>, cfg: Option<u64>) -> Result<u64, UsageError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = cfg {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("{SEED_ENV}='{text}' is not a valid seed"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: &Cli) -> Result<bool, UsageError> {
    let root = load_config(cli.config.as_ref())?;
    if let Some(n) = cli.threads.or(root.threads) {
        if n == 0 {
            return Err(UsageError("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(format!("cannot configure {n} threads: {e}")))?;
    }
    fs::create_dir_all(&cli.out)
        .map_err(|e| UsageError(format!("cannot create {}: {e}", cli.out.display())))?;
    let ctx = Ctx {
        seed: resolve_seed(cli.seed, root.seed)?,
        out: cli.out.clone(),
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::CertifyRank => {
            let mut cfg = root.certify_rank.unwrap_or_default();
            if let Some(t) = cli.trials {
                cfg.trials = t;
            }
            if let Some(t) = cli.tol {
                cfg.rel_tol = Some(t);
            }
            commands::run_certify_rank(&cfg, &ctx)
        }
        Command::Descend => {
            let mut cfg = root.descend.unwrap_or_default();
            if let Some(t) = cli.tol {
                cfg.accept_tol = t;
            }
            commands::run_descend(&cfg, &ctx)
        }
        Command::Approximate => {
            let mut cfg = root.approximate.unwrap_or_default();
            if let Some(t) = cli.tol {
                cfg.bound_slack = t;
            }
            commands::run_approximate(&cfg, &ctx)
        }
        Command::Counterexample => {
            let mut cfg = root.counterexample.unwrap_or_default();
            if let Some(t) = cli.trials {
                cfg.samples = t;
            }
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            commands::run_counterexample(&cfg, &ctx)
        }
        Command::Scan => {
            let mut cfg = root.scan.unwrap_or_default();
            if let Some(t) = cli.tol {
                cfg.global_tol = Some(t);
            }
            commands::run_scan(&cfg, &ctx)
        }
        Command::UvDemo => commands::run_uv_demo(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
