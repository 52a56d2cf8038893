//! `hopnet`: train Hopfield networks, probe their recall and run
//! retrieval-capacity experiments from the command line.
//!
//! Exit status is 0 on success, 1 when the computation itself fails and 2
//! for invalid invocations or configurations.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hopnet::harness::Format;
use hopnet::RuleKind;

use settings::{parse_rule, Mode, Settings};

#[derive(Parser, Debug)]
#[command(name = "hopnet", version, about = "Discrete Hopfield network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a network on sampled or supplied patterns and save it as JSON.
    Train(TrainArgs),
    /// Distort a stored pattern, run the dynamics and report the overlap.
    Recall(RecallArgs),
    /// Run a retrieval experiment over a grid of (p, k) and save every trial.
    Grid(GridArgs),
    /// Extract the capacity curve from a saved grid or a fresh run.
    Curve(CurveArgs),
    /// Run the same experiment for several rules and tabulate curve areas.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML file of settings; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// JSON array of ±1 patterns to store instead of random ones.
    #[arg(long)]
    patterns: Option<PathBuf>,
    #[arg(long, default_value = "network.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RecallArgs {
    /// Network file written by `train`.
    #[arg(long)]
    net: PathBuf,
    /// Stored pattern to distort and compare against.
    #[arg(long, default_value_t = 0)]
    pattern: usize,
    /// JSON array of ±1 spins used as the initial state instead of the
    /// stored pattern.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Spins to flip before running the dynamics.
    #[arg(long, default_value_t = 0)]
    flips: usize,
    /// Seed choosing which spins flip.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "async")]
    mode: Mode,
    #[arg(long, default_value_t = hopnet::harness::DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// Print the initial and final states.
    #[arg(long)]
    dump: bool,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the extension of `--out`.
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[command(flatten)]
    common: Common,
    /// Saved grid to read instead of running an experiment.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated rules to compare.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_rule)]
    rules: Vec<RuleKind>,
    /// Directory receiving one curve file per rule and `areas.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files or parameter values; exit status 2.
    Usage(String),
    /// The run itself failed; exit status 1.
    Runtime(String),
}

impl From<hopnet::Error> for CliError {
    fn from(e: hopnet::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Recall(a) => commands::recall(a),
        Command::Grid(a) => commands::grid(a),
        Command::Curve(a) => commands::curve(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
