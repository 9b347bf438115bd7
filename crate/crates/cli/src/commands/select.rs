//! `select`: run the offline model selection at one SNR point and export
//! the outcome and the per-combination bound evaluations.

use std::path::PathBuf;

use anyhow::Result;
use serde::Serialize;

use edgesel::bounds::GridMode;
use edgesel::conformal::corrected_risk_level;
use edgesel::report::{write_bounds_csv, BoundRow};
use edgesel::selection::{fixed_select_detailed, CalibrationSet, DynamicSelector};

use crate::common::{
    ensure_out_dir, provenance_comment, write_atomic, write_run_info, ChannelArgs, DataArgs,
    GridArg, RiskArgs, SplitArgs,
};

#[derive(Debug, clap::Args)]
pub struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    risk: RiskArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Average SNR in dB (both directions unless --snr-dl-db is given).
    #[arg(long, default_value_t = 10.0)]
    snr_db: f64,
    /// Downlink SNR in dB when asymmetric.
    #[arg(long)]
    snr_dl_db: Option<f64>,
    /// Average SNR as a linear factor instead of dB.
    #[arg(long, conflicts_with = "snr_db")]
    snr_linear: Option<f64>,
    /// Downlink SNR as a linear factor when asymmetric.
    #[arg(long, conflicts_with = "snr_dl_db")]
    snr_dl_linear: Option<f64>,
    /// Bound minimization grid.
    #[arg(long, value_enum, default_value_t = GridArg::Subgrid)]
    grid: GridArg,
    /// Also evaluate the dynamic selection at these uplink rates (bits/s).
    #[arg(long, value_delimiter = ',')]
    rate_ul: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct SelectConfig {
    alpha: f64,
    beta: f64,
    epsilon: f64,
    snr_ul_db: f64,
    snr_dl_db: f64,
    deadline_ms: f64,
    bandwidth_hz: f64,
    grid: String,
    split_seed: u64,
}

#[derive(Debug, Serialize)]
struct SelectionJson {
    encoder_id: String,
    model_id: String,
    encoder: usize,
    model: usize,
    lambda: f64,
    mean_set_size: f64,
    bound: f64,
    feasible: bool,
}

pub fn run(args: SelectArgs) -> Result<()> {
    let (dataset, bank) = args.data.load()?;
    let (labeled, unlabeled, _eval) = args.split.partitions(&dataset)?;
    let loss = args.risk.loss_function()?;
    let epsilon = corrected_risk_level(args.risk.alpha, args.risk.beta)?;
    let snr_ul_db = args
        .snr_linear
        .map(edgesel::channel::linear_to_db)
        .unwrap_or(args.snr_db);
    let snr_dl_db = args
        .snr_dl_linear
        .map(edgesel::channel::linear_to_db)
        .or(args.snr_dl_db)
        .unwrap_or(snr_ul_db);
    let config = args.channel.config_db(snr_ul_db, snr_dl_db)?;
    let grid: GridMode = args.grid.into();

    let calset = CalibrationSet::build(&bank, &labeled, &unlabeled, &loss, epsilon)?;
    let (outcome, log) = fixed_select_detailed(&calset, &bank, &config, args.risk.beta, grid)?;

    ensure_out_dir(&args.out)?;
    let run_config = SelectConfig {
        alpha: args.risk.alpha,
        beta: args.risk.beta,
        epsilon,
        snr_ul_db,
        snr_dl_db,
        deadline_ms: args.channel.deadline_ms,
        bandwidth_hz: args.channel.bandwidth_hz,
        grid: format!("{:?}", args.grid),
        split_seed: args.split.split_seed,
    };
    let hash = write_run_info(&args.out, &run_config, args.split.split_seed)?;

    let selection = SelectionJson {
        encoder_id: bank.encoders[outcome.encoder_idx].id.clone(),
        model_id: bank.models[outcome.model_idx].id.clone(),
        encoder: outcome.encoder_idx + 1,
        model: outcome.model_idx + 1,
        lambda: outcome.lambda,
        mean_set_size: outcome.mean_set_size,
        bound: outcome.bound,
        feasible: outcome.feasible,
    };
    write_atomic(
        &args.out.join("selection.json"),
        serde_json::to_string_pretty(&selection)?.as_bytes(),
    )?;

    let mut rows: Vec<BoundRow> = log
        .iter()
        .map(|c| BoundRow::from_candidate(c, false, None))
        .collect();
    for &rate in &args.rate_ul {
        let selector = DynamicSelector::new(
            &calset,
            &bank,
            outcome.encoder_idx,
            &config,
            args.risk.beta,
            grid,
        )?;
        let (_, dyn_log) = selector.select_detailed(rate)?;
        rows.extend(
            dyn_log
                .iter()
                .map(|c| BoundRow::from_candidate(c, true, Some(rate))),
        );
    }
    let mut csv = provenance_comment(&hash, args.split.split_seed).into_bytes();
    write_bounds_csv(&mut csv, &rows)?;
    write_atomic(&args.out.join("bounds.csv"), &csv)?;

    println!(
        "selected encoder {} x model {}: bound {:.6}, mean set size {:.3}, feasible {}",
        selection.encoder_id,
        selection.model_id,
        outcome.bound,
        outcome.mean_set_size,
        outcome.feasible
    );
    Ok(())
}
