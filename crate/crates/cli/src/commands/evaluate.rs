//! `evaluate`: Monte Carlo frame simulation of one or more schemes across
//! an SNR grid, emitting report, selection-distribution, and per-frame CSVs.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::Serialize;

use edgesel::bounds::GridMode;
use edgesel::conformal::corrected_risk_level;
use edgesel::evaluator::{aggregate_report, run_frames, MetricsReport, SchemeSpec};
use edgesel::report::{write_frames_csv, write_report_csv, write_selection_csv};
use edgesel::selection::CalibrationSet;

use crate::common::{
    ensure_out_dir, parse_schemes, parse_snr_grid, provenance_comment, sanitize, snr_points,
    write_atomic, write_run_info, ChannelArgs, DataArgs, GridArg, RiskArgs, SplitArgs,
};

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub risk: RiskArgs,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Comma-separated schemes: fixed, dynamic, dynamic_truncated,
    /// baseline_topk:KAPPA[:L,K], baseline_calibrated[:L,K].
    #[arg(long, default_value = "fixed,dynamic")]
    pub schemes: String,
    /// Uplink (and default downlink) SNR grid in dB: start:stop:count or a
    /// comma list.
    #[arg(long, default_value = "0:30:6")]
    pub snr_db: String,
    /// Separate downlink SNR grid in dB (same length as --snr-db).
    #[arg(long)]
    pub snr_dl_db: Option<String>,
    /// SNR grid as linear factors instead of dB (same spec syntax).
    #[arg(long, conflicts_with = "snr_db")]
    pub snr_linear: Option<String>,
    /// Frames per (scheme, SNR) point.
    #[arg(long, default_value_t = 10_000)]
    pub frames: usize,
    /// Master seed for frame randomness.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Bound minimization grid.
    #[arg(long, value_enum, default_value_t = GridArg::Subgrid)]
    pub grid: GridArg,
    /// Skip the per-frame CSV logs.
    #[arg(long)]
    pub no_frame_logs: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct EvaluateConfig {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub schemes: Vec<String>,
    pub snr_ul_db: Vec<f64>,
    pub snr_dl_db: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    pub deadline_ms: f64,
    pub bandwidth_hz: f64,
    pub grid: String,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_eval: usize,
    pub split_seed: u64,
}

/// Everything `evaluate` produced; `sweep` reuses this.
pub struct EvalRun {
    pub reports: Vec<MetricsReport>,
}

pub fn execute(args: &EvaluateArgs, write_outputs: bool) -> Result<EvalRun> {
    let (dataset, bank) = args.data.load()?;
    let (labeled, unlabeled, eval) = args.split.partitions(&dataset)?;
    let loss = args.risk.loss_function()?;
    let epsilon = corrected_risk_level(args.risk.alpha, args.risk.beta)?;
    let schemes = parse_schemes(&args.schemes)?;
    let ul_grid = match &args.snr_linear {
        Some(spec) => parse_snr_grid(spec)?
            .into_iter()
            .map(edgesel::channel::linear_to_db)
            .collect(),
        None => parse_snr_grid(&args.snr_db)?,
    };
    let dl_grid = args.snr_dl_db.as_deref().map(parse_snr_grid).transpose()?;
    let points = snr_points(&ul_grid, dl_grid.as_deref())?;
    let grid: GridMode = args.grid.into();
    let base = args.channel.config_db(10.0, 10.0)?;

    let calset = CalibrationSet::build(&bank, &labeled, &unlabeled, &loss, epsilon)?;

    let config = EvaluateConfig {
        alpha: args.risk.alpha,
        beta: args.risk.beta,
        epsilon,
        gamma: args.risk.gamma,
        schemes: schemes.iter().map(SchemeSpec::label).collect(),
        snr_ul_db: points.iter().map(|p| p.ul_db).collect(),
        snr_dl_db: points.iter().map(|p| p.dl_db).collect(),
        frames: args.frames,
        seed: args.seed,
        deadline_ms: args.channel.deadline_ms,
        bandwidth_hz: args.channel.bandwidth_hz,
        grid: format!("{:?}", args.grid),
        n_labeled: labeled.len(),
        n_unlabeled: unlabeled.len(),
        n_eval: eval.len(),
        split_seed: args.split.split_seed,
    };

    let hash = if write_outputs {
        ensure_out_dir(&args.out)?;
        write_run_info(&args.out, &config, args.seed)?
    } else {
        crate::common::config_hash(&config)
    };

    let mut reports = Vec::new();
    for scheme in &schemes {
        for point in &points {
            let channel = base.with_snr_db(point.ul_db, point.dl_db);
            let (frames, offline_feasible) = run_frames(
                scheme,
                &bank,
                &calset,
                &eval,
                &channel,
                args.risk.beta,
                grid,
                args.frames,
                args.seed,
            )?;
            let report =
                aggregate_report(scheme, point.ul_db, point.dl_db, &frames, offline_feasible);
            if write_outputs && !args.no_frame_logs {
                let name = format!(
                    "frames_{}_snr{}.csv",
                    sanitize(&scheme.label()),
                    sanitize(&format!("{}", point.ul_db))
                );
                let mut buf = provenance_comment(&hash, args.seed).into_bytes();
                write_frames_csv(&mut buf, point.ul_db, &frames)?;
                write_atomic(&args.out.join(name), &buf)?;
            }
            reports.push(report);
        }
    }

    if write_outputs {
        write_reports(&args.out, &hash, args.seed, &reports)?;
        for r in &reports {
            println!(
                "{} @ {} dB: violation {:.5}, cond loss {:.5}, set size {:.3}, feasible {}",
                r.scheme,
                r.snr_ul_db,
                r.violation_rate,
                r.cond_loss,
                r.mean_set_size,
                r.offline_feasible
            );
        }
    }
    Ok(EvalRun { reports })
}

pub fn write_reports(out: &Path, hash: &str, seed: u64, reports: &[MetricsReport]) -> Result<()> {
    let mut buf = provenance_comment(hash, seed).into_bytes();
    write_report_csv(&mut buf, reports)?;
    write_atomic(&out.join("report.csv"), &buf)?;

    let mut buf = provenance_comment(hash, seed).into_bytes();
    write_selection_csv(&mut buf, reports)?;
    write_atomic(&out.join("selection.csv"), &buf)?;
    Ok(())
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    execute(&args, true)?;
    Ok(())
}
