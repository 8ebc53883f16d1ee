//! `geonas`: scores untrained convolutional architectures by the geometry
//! of their randomly initialized feature spaces.
//!
//! Exit codes: 0 success, 1 a check or every requested measure failed,
//! 2 usage or I/O errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "geonas", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Knobs shared by the commands that run or measure feature clouds.
/// Sources apply in order (file, then --set, then dedicated flags), so
/// later ones win.
#[derive(Args, Debug, Clone, Default)]
pub struct Knobs {
    /// Flat key=value config file.
    #[arg(long, value_name = "FILE", global = false)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set mle_k=15 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Random initializations per architecture (R).
    #[arg(long)]
    inits: Option<usize>,
    /// Image batches per initialization (B).
    #[arg(long)]
    batches: Option<usize>,
    /// Samples per batch.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Start from the full protocol (50 inits, ten batches of 128, five
    /// cells per stage) instead of the fast desk defaults.
    #[arg(long)]
    full: bool,
    /// Measures to compute, comma-separated (default: all).
    #[arg(long, value_name = "LIST")]
    only: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ArchInput {
    /// One architecture string, e.g.
    /// "|nor_conv_3x3~0|+|skip_connect~0|none~1|+|nor_conv_1x1~0|skip_connect~1|nor_conv_3x3~2|".
    #[arg(long, value_name = "ARCH", conflicts_with = "arch_file")]
    arch: Option<String>,
    /// File with one architecture string per line (# comments allowed).
    #[arg(long, value_name = "FILE")]
    arch_file: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DataInput {
    /// Score against seeded uniform-noise images.
    #[arg(long, conflicts_with = "data")]
    synthetic: bool,
    /// CIFAR-10 binary batch files to draw image batches from.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    data: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic point clouds or image sets with known structure.
    Synth(commands::synth::SynthArgs),
    /// Run architectures forward and write one feature file per init.
    Extract(commands::extract::ExtractArgs),
    /// Compute angle statistics and dimension estimates for feature files.
    Measure(commands::measure::MeasureArgs),
    /// Score architectures end to end: extract, measure, aggregate, judge.
    Score(commands::score::ScoreArgs),
    /// Apply threshold rules to existing scores and keep the survivors.
    Filter(commands::rules::FilterArgs),
    /// Sort existing scores by one measure, ascending.
    Rank(commands::rules::RankArgs),
    /// Run the bundled numeric oracle suite.
    Selfcheck,
}

fn init_workers() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("GEONAS_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .map_err(|_| anyhow::anyhow!("GEONAS_WORKERS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        anyhow::bail!("GEONAS_WORKERS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| anyhow::anyhow!("worker pool: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Extract(args) => commands::extract::run(args),
        Command::Measure(args) => commands::measure::run(args),
        Command::Score(args) => commands::score::run(args),
        Command::Filter(args) => commands::rules::run_filter(args),
        Command::Rank(args) => commands::rules::run_rank(args),
        Command::Selfcheck => commands::selfcheck::run(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
