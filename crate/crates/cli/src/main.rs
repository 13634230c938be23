//! `merit` command-line tool.
//!
//! Exit status: 0 on success, 1 for an infeasible design or a detected
//! violation, 2 for invalid input.

mod commands;
mod config;
mod error;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{parse_looks, RunConfig};
use error::CliError;
use report::Format;

#[derive(Debug, Parser)]
#[command(name = "merit", version, about = "Multiple-dose randomized dose-optimization design engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find the smallest per-arm sample size and its boundaries.
    Design,
    /// Type I error and power of the [boundary] in the config, per scenario.
    Evaluate,
    /// Operating characteristics with and without interim monitoring.
    Simulate,
    /// Check that the least favorable set attains the minimum power.
    VerifyTheorem,
    /// Recompute the published design table.
    Table2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Args)]
struct Opts {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Monte Carlo replicates.
    #[arg(long, global = true, value_name = "N")]
    reps: Option<u64>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,
    /// Interim look fractions, e.g. "1/2" or "1/3,2/3".
    #[arg(long, global = true, value_name = "LOOKS")]
    interim: Option<String>,
    #[arg(long, global = true, value_name = "1|2", value_parser = clap::value_parser!(u8).range(1..=2))]
    power_kind: Option<u8>,
}

fn load_config(opts: &Opts) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(mode) = opts.mode {
        cfg.design.mode = match mode {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
        }
        .into();
    }
    if let Some(reps) = opts.reps {
        cfg.design.replicates = reps;
    }
    if let Some(seed) = opts.seed {
        cfg.design.seed = seed;
    }
    if let Some(k) = opts.power_kind {
        cfg.design.power_kind = k;
    }
    if let Some(looks) = &opts.interim {
        cfg.simulate.looks = parse_looks(looks)?;
    }
    if cfg.design.replicates == 0 {
        return Err(CliError::Usage("replicates must be positive".into()));
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MERIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("MERIT_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let cfg = load_config(&cli.opts)?;
    let outcome = match cli.command {
        Command::Design => commands::design(&cfg, cli.opts.format)?,
        Command::Evaluate => commands::evaluate(&cfg)?,
        Command::Simulate => commands::simulate(&cfg)?,
        Command::VerifyTheorem => commands::verify_theorem(&cfg)?,
        Command::Table2 => commands::table2(&cfg)?,
    };
    let mut sink: Box<dyn Write> = match &cli.opts.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    outcome.report.emit(cli.opts.format, &mut sink)?;
    sink.flush()?;
    Ok(outcome.ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
