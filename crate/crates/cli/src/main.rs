use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irsopt::harness::{Experiment, ScenarioConfig};
use irsopt::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

/// Seeded experiments for IRS-assisted MIMO downlinks.
#[derive(Parser)]
#[command(name = "irsopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum-rate against the number of IRS elements, with baselines.
    Sumrate(RunArgs),
    /// Normalized channel eigenvalues against the number of IRS units.
    Rank(RunArgs),
    /// Two-timescale average sum-rate against the temporal correlation.
    Aasr(RunArgs),
    /// Per-iteration objective of alternating optimization on one slot.
    AoTrace(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the CSV and JSON files.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Overrides the trial count of the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn load_config(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(experiment: Experiment, args: &RunArgs) -> ExitCode {
    let cfg = match load_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {} threads: {e}", args.threads);
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    let result = match pool.install(|| experiment.run(&cfg)) {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };
    match result.write(&args.out, &cfg) {
        Ok((csv, json)) => eprintln!("wrote {} and {}", csv.display(), json.display()),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if result.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        for v in &result.violations {
            eprintln!("violation: {v}");
        }
        ExitCode::from(EXIT_VIOLATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Sumrate(a) => (Experiment::Sumrate, a),
        Command::Rank(a) => (Experiment::Rank, a),
        Command::Aasr(a) => (Experiment::Aasr, a),
        Command::AoTrace(a) => (Experiment::AoTrace, a),
    };
    run(experiment, args)
}
