//! `rovervision`: stereo ranging from the command line.
//!
//! Exit status is 0 on success, 1 for invalid arguments, configuration or
//! input content, and 2 when a file cannot be read or written.

mod bench;
mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "rovervision",
    version,
    about = "Stereo ranging for planetary rover imagery",
    after_help = config::keys_help()
)]
struct Cli {
    /// `key = value` configuration file; command-line flags take precedence.
    /// Unknown keys are rejected.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Stereo rig selection shared by several subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct RigArgs {
    /// Rig file with [left]/[right] CAHV blocks. Without it a parallel rig
    /// is built from the baseline, field of view and image size.
    #[arg(long)]
    pub rig: Option<PathBuf>,
    /// Stereo baseline in meters [default: 0.24]
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Horizontal field of view in degrees [default: 39]
    #[arg(long)]
    pub fov: Option<f64>,
    /// Image width in pixels [default: 1024]
    #[arg(long)]
    pub width: Option<usize>,
    /// Image height in pixels [default: 1024]
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a noiseless (or noisy) triangulation dataset and its
    /// train/validation/test split.
    Synth(commands::SynthArgs),
    /// Train the triangulation network (MAE loss, NAdam, early stopping).
    Train(commands::TrainArgs),
    /// Distance-error statistics of a model on a held-out CSV.
    Eval(commands::EvalArgs),
    /// Per-object distances from a stereo pair and its detections.
    Range(commands::RangeArgs),
    /// Metric point cloud from a depth map and per-object distances.
    Reconstruct(commands::ReconstructArgs),
    /// Time batched network inference against sequential triangulation.
    Bench(bench::BenchArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => commands::synth(base, a),
        Command::Train(a) => commands::train(base, a),
        Command::Eval(a) => commands::eval(base, a),
        Command::Range(a) => commands::range(base, a),
        Command::Reconstruct(a) => commands::reconstruct(base, a),
        Command::Bench(a) => bench::bench(base, a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
