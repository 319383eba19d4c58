//! Command-line surface for the archive-lens toolkit.
//!
//! Exit codes: 0 on success, 1 on input errors (row-level problems are
//! reported to stderr), 2 on internal errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "archive-lens", version, about = "Photo-archive analysis over detector and feature exports")]
struct Cli {
    /// Shared TOML config file (fusion thresholds, framing boundaries).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Abort on the first row-level input error instead of skipping the row.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fuse per-detector detection exports into consensus detections.
    Fuse(FuseArgs),
    /// Per-photographer framing category shares from fused detections.
    Framing(FramingArgs),
    /// Per-photographer content statistics from fused detections.
    Stats(StatsArgs),
    /// Grouped train/validation/test split of the archive.
    Split(SplitArgs),
    /// Inverse-frequency class weights from a label file.
    Weights(WeightsArgs),
    /// Pairwise Earth Mover's Distance matrix between photographers.
    Emd(EmdArgs),
    /// t-SNE embedding of photo features.
    Tsne(TsneArgs),
    /// Histogram-equalize archive images on the HSV value channel.
    Preprocess(PreprocessArgs),
}

#[derive(Debug, Args)]
struct FuseArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// One JSON export per detector.
    #[arg(long, num_args = 1.., required = true)]
    detections: Vec<PathBuf>,
    /// Override the grouping IoU threshold from the config file.
    #[arg(long)]
    theta: Option<f64>,
    /// Override the merge strategy (mean_coordinates | highest_confidence).
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FramingArgs {
    #[arg(long)]
    fused: PathBuf,
    #[arg(long)]
    closeup: Option<f64>,
    #[arg(long)]
    overall: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    fused: PathBuf,
    /// Comma-separated class labels; defaults to the 11 analyzed classes.
    #[arg(
        long,
        default_value = "person,airplane,boat,train,car,bicycle,skis,dog,horse,chair,tie"
    )]
    classes: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated train,validation,test fractions.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    fractions: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EmdArgs {
    #[arg(long)]
    features: PathBuf,
    /// Max feature points per photographer signature (seeded subsample).
    #[arg(long, default_value_t = 256)]
    cap: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TsneArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 200.0)]
    learning_rate: f64,
    #[arg(long, default_value_t = 12.0)]
    exaggeration: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PreprocessArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Input problems exit 1, internal failures exit 2.
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn from_core(err: archive_lens_core::Error) -> Self {
        match err {
            archive_lens_core::Error::SolverStalled { .. } => Failure::Internal(err.into()),
            _ => Failure::Input(err.into()),
        }
    }
}

impl From<archive_lens_core::Error> for Failure {
    fn from(err: archive_lens_core::Error) -> Self {
        Failure::from_core(err)
    }
}

fn init_thread_pool() {
    #[cfg(feature = "parallel")]
    if let Ok(raw) = std::env::var("ARCHIVE_LENS_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not configure thread pool: {e}");
                }
            }
            _ => eprintln!("warning: ignoring invalid ARCHIVE_LENS_THREADS=`{raw}`"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();

    let file_config = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };

    let ctx = commands::Context {
        config: file_config,
        strict: cli.strict,
    };
    let result = match cli.command {
        Command::Fuse(args) => commands::fuse(&ctx, &args),
        Command::Framing(args) => commands::framing(&ctx, &args),
        Command::Stats(args) => commands::stats(&ctx, &args),
        Command::Split(args) => commands::split(&ctx, &args),
        Command::Weights(args) => commands::weights(&ctx, &args),
        Command::Emd(args) => commands::emd(&ctx, &args),
        Command::Tsne(args) => commands::tsne(&ctx, &args),
        Command::Preprocess(args) => commands::preprocess(&ctx, &args),
    };

    match result {
        Ok(clean) if clean => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("completed with input errors (see report above)");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
