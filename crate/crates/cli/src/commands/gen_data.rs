//! `gen-data`: write a synthetic dataset tree (manifest + CSV files).

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use edgesel::dataset::{generate_synthetic, write_dataset, ModelBank, SyntheticModelConfig};

use crate::common::{ensure_out_dir, preset_config, write_run_info, PresetArg};

/// Bank + generator settings accepted via `--config`.
#[derive(Debug, Serialize, Deserialize)]
struct GenSpec {
    bank: ModelBank,
    synthetic: SyntheticModelConfig,
}

#[derive(Debug, clap::Args)]
pub struct GenDataArgs {
    /// Output directory (its parent must exist).
    #[arg(long)]
    out: PathBuf,
    /// Generator seed (overrides the config file's seed).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of samples.
    #[arg(long, default_value_t = 6_000)]
    n: usize,
    /// Label count override.
    #[arg(long)]
    labels: Option<usize>,
    /// Model bank preset.
    #[arg(long, value_enum, default_value_t = PresetArg::BenchA, conflicts_with = "config")]
    preset: PresetArg,
    /// JSON file with a full bank + generator spec instead of a preset.
    #[arg(long)]
    config: Option<PathBuf>,
}

pub fn run(args: GenDataArgs) -> Result<()> {
    let (bank, mut synth) = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let spec: GenSpec = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let mut bank = spec.bank;
            if let Some(labels) = args.labels {
                bank.label_count = labels;
            }
            bank.validate()?;
            (bank, spec.synthetic)
        }
        None => preset_config(args.preset, args.labels, args.seed)?,
    };
    synth.seed = args.seed;

    ensure_out_dir(&args.out)?;
    let dataset = generate_synthetic(&synth, args.n, &bank)?;
    let manifest = write_dataset(&args.out, &bank, &dataset)?;

    let spec = GenSpec {
        bank,
        synthetic: synth,
    };
    write_run_info(&args.out, &spec, args.seed)?;
    println!(
        "wrote {} samples for {} encoders x {} models to {}",
        dataset.len(),
        spec.bank.encoder_count(),
        spec.bank.model_count(),
        manifest.display()
    );
    Ok(())
}
