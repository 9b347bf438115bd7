//! `calibrate`: compute per-combination thresholds and write one JSON
//! record per composite model.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;

use edgesel::conformal::corrected_risk_level;
use edgesel::report::{calibration_records, CalibrationRecord};
use edgesel::selection::CalibrationSet;

use crate::common::{ensure_out_dir, write_atomic, write_run_info, DataArgs, RiskArgs, SplitArgs};

#[derive(Debug, clap::Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    risk: RiskArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct CalibrateConfig<'a> {
    alpha: f64,
    beta: f64,
    epsilon: f64,
    gamma: f64,
    n_labeled: usize,
    n_unlabeled: usize,
    split_seed: u64,
    manifest: Option<&'a std::path::Path>,
}

pub fn run(args: CalibrateArgs) -> Result<()> {
    let (dataset, bank) = args.data.load()?;
    let (labeled, unlabeled, _eval) = args.split.partitions(&dataset)?;
    let loss = args.risk.loss_function()?;
    let epsilon = corrected_risk_level(args.risk.alpha, args.risk.beta)?;

    let calset = CalibrationSet::build(&bank, &labeled, &unlabeled, &loss, epsilon)?;

    ensure_out_dir(&args.out)?;
    let config = CalibrateConfig {
        alpha: args.risk.alpha,
        beta: args.risk.beta,
        epsilon,
        gamma: args.risk.gamma,
        n_labeled: labeled.len(),
        n_unlabeled: unlabeled.len(),
        split_seed: args.split.split_seed,
        manifest: args.data.manifest.as_deref(),
    };
    write_run_info(&args.out, &config, args.split.split_seed)?;

    let records: Vec<CalibrationRecord> = calibration_records(&bank, &calset);
    for record in &records {
        let path = args.out.join(format!(
            "calibration_{}_{}.json",
            record.encoder_id, record.model_id
        ));
        write_atomic(&path, serde_json::to_string_pretty(record)?.as_bytes())?;
        println!(
            "{} x {}: lambda = {:.9}, epsilon = {}, n = {}",
            record.encoder_id, record.model_id, record.lambda, record.epsilon, record.n_calibration
        );
    }

    // Diagnose combinations that could not meet the corrected risk level.
    let mut infeasible = Vec::new();
    for l in 0..bank.encoder_count() {
        for k in 0..bank.model_count() {
            if calset.combo(l, k).is_none() {
                let msg = format!(
                    "{} x {}: infeasible at epsilon {epsilon} with {} labeled samples \
                     (needs epsilon >= gamma / (n + 1))",
                    bank.encoders[l].id,
                    bank.models[k].id,
                    labeled.len()
                );
                eprintln!("{msg}");
                infeasible.push(msg);
            }
        }
    }
    if !infeasible.is_empty() {
        bail!(
            "{} of {} combinations failed to calibrate",
            infeasible.len(),
            bank.encoder_count() * bank.model_count()
        );
    }
    Ok(())
}
