//! `sweep`: repeat an evaluation across master seeds and aggregate the
//! per-replication reports into means with standard errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;

use crate::commands::evaluate;
use crate::common::{config_hash, ensure_out_dir, provenance_comment, write_atomic};

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    eval: evaluate::EvaluateArgs,
    /// Number of replications; replication r uses seed `seed + r`.
    #[arg(long, default_value_t = 5)]
    replications: usize,
    /// Explicit seed list instead of consecutive seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
}

#[derive(Debug, Default)]
struct Moments {
    values: Vec<f64>,
}

impl Moments {
    fn push(&mut self, v: f64) {
        if v.is_finite() {
            self.values.push(v);
        }
    }

    fn mean_se(&self) -> (f64, f64) {
        let n = self.values.len();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return (mean, f64::NAN);
        }
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }
}

#[derive(Debug, Serialize)]
struct SweepConfig<'a> {
    seeds: &'a [u64],
    evaluate: String,
}

pub fn run(args: SweepArgs) -> Result<()> {
    if args.replications == 0 && args.seeds.is_empty() {
        bail!("sweep needs at least one replication");
    }
    let seeds: Vec<u64> = if args.seeds.is_empty() {
        (0..args.replications as u64)
            .map(|r| args.eval.seed + r)
            .collect()
    } else {
        args.seeds.clone()
    };
    let out = args.eval.out.clone();
    ensure_out_dir(&out)?;

    // Key: (scheme, snr). Values: per-metric replication series.
    let mut cells: BTreeMap<(String, String), [Moments; 4]> = BTreeMap::new();
    let mut eval_args = args.eval;
    let base_out: PathBuf = out.clone();
    for (r, &seed) in seeds.iter().enumerate() {
        eval_args.seed = seed;
        eval_args.out = base_out.join(format!("rep_{r}"));
        ensure_out_dir(&eval_args.out)?;
        let run = evaluate::execute(&eval_args, true)?;
        for report in &run.reports {
            let key = (report.scheme.clone(), format!("{}", report.snr_ul_db));
            let slot = cells.entry(key).or_default();
            slot[0].push(report.cond_loss);
            slot[1].push(report.violation_rate);
            slot[2].push(report.mean_set_size);
            slot[3].push(report.relaxed_loss_mean);
        }
    }

    let config = SweepConfig {
        seeds: &seeds,
        evaluate: format!("{:?}", eval_args.schemes),
    };
    let hash = config_hash(&config);
    let mut buf = provenance_comment(&hash, seeds[0]).into_bytes();
    writeln!(
        buf,
        "snr_db,scheme,replications,cond_loss,cond_loss_se,violation_rate,violation_rate_se,\
         mean_set_size,mean_set_size_se,relaxed_loss,relaxed_loss_se"
    )?;
    for ((scheme, snr), slot) in &cells {
        let (cl, cl_se) = slot[0].mean_se();
        let (vr, vr_se) = slot[1].mean_se();
        let (ms, ms_se) = slot[2].mean_se();
        let (rl, rl_se) = slot[3].mean_se();
        writeln!(
            buf,
            "{snr},{scheme},{},{cl},{cl_se},{vr},{vr_se},{ms},{ms_se},{rl},{rl_se}",
            seeds.len()
        )?;
    }
    write_atomic(&out.join("aggregate.csv"), &buf)?;
    println!(
        "aggregated {} replications into {}",
        seeds.len(),
        out.join("aggregate.csv").display()
    );
    Ok(())
}
