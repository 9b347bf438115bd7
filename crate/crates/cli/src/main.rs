//! `edgesel` command-line interface: dataset generation, calibration,
//! selection, and Monte Carlo evaluation sweeps.

mod commands;
mod common;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "edgesel",
    version,
    about = "Edge inference model selection with conformal loss guarantees and \
             deadline-violation bounds"
)]
struct Cli {
    /// Worker threads for calibration and frame simulation
    /// (default: EDGESEL_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic score/size dataset tree.
    GenData(commands::gen_data::GenDataArgs),
    /// Calibrate per-combination prediction-set thresholds.
    Calibrate(commands::calibrate::CalibrateArgs),
    /// Run the offline model selection and export bound evaluations.
    Select(commands::select::SelectArgs),
    /// Simulate frames for one or more schemes across an SNR grid.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Repeat an evaluation across seeds and aggregate the reports.
    Sweep(commands::sweep::SweepArgs),
}

fn main() -> Result<()> {
    let cli = Cli::parse();

    let workers = cli.workers.or_else(|| {
        std::env::var("EDGESEL_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()?;
    }

    match cli.command {
        Command::GenData(args) => commands::gen_data::run(args),
        Command::Calibrate(args) => commands::calibrate::run(args),
        Command::Select(args) => commands::select::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
    }
}
