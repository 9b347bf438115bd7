//! Shared argument groups, parsers, and output helpers.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use edgesel::bounds::GridMode;
use edgesel::channel::ChannelConfig;
use edgesel::conformal::{LossFunction, LossKind};
use edgesel::dataset::{
    generate_synthetic, load_dataset, split, ModelBank, ScoreDataset, SyntheticModelConfig,
};
use edgesel::evaluator::{SchemeSpec, SnrPoint};
use edgesel::presets;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    /// 0-1 missed detection.
    Miss01,
    /// False-negative rate (coincides with miss01 for singleton labels).
    Fnr,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GridArg {
    Exact,
    Subgrid,
}

impl From<GridArg> for GridMode {
    fn from(g: GridArg) -> Self {
        match g {
            GridArg::Exact => GridMode::Exact,
            GridArg::Subgrid => GridMode::Subgrid,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    /// 3 encoders x 3 models, 50 labels.
    BenchA,
    /// 4 encoder qualities x 3 classifier scales.
    PaperModels,
}

/// Loss / risk-level arguments shared by calibration-driven commands.
#[derive(Debug, Args)]
pub struct RiskArgs {
    /// Expected-loss requirement conditioned on meeting the deadline.
    #[arg(long, default_value_t = presets::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Deadline-violation probability requirement.
    #[arg(long, default_value_t = presets::DEFAULT_BETA)]
    pub beta: f64,
    /// Loss function.
    #[arg(long, value_enum, default_value_t = LossArg::Miss01)]
    pub loss: LossArg,
    /// Upper bound on the loss.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
}

impl RiskArgs {
    pub fn loss_function(&self) -> Result<LossFunction> {
        let kind = match self.loss {
            LossArg::Miss01 => LossKind::MissDetection01,
            LossArg::Fnr => LossKind::FalseNegativeRate,
        };
        Ok(LossFunction::new(kind, self.gamma)?)
    }
}

/// Dataset input: a manifest on disk or an in-memory synthetic preset.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset manifest (JSON) produced by `gen-data`.
    #[arg(long, conflicts_with = "preset")]
    pub manifest: Option<PathBuf>,
    /// Generate the dataset in memory from a preset instead.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Sample count for `--preset`.
    #[arg(long, default_value_t = 8_000)]
    pub n: usize,
    /// Generator seed for `--preset`.
    #[arg(long, default_value_t = 1)]
    pub data_seed: u64,
    /// Label count override for `--preset`.
    #[arg(long)]
    pub labels: Option<usize>,
}

impl DataArgs {
    pub fn load(&self) -> Result<(ScoreDataset, ModelBank)> {
        match (&self.manifest, self.preset) {
            (Some(path), _) => {
                let (ds, bank) =
                    load_dataset(path).with_context(|| format!("loading {}", path.display()))?;
                Ok((ds, bank))
            }
            (None, Some(preset)) => {
                let (bank, synth) = preset_config(preset, self.labels, self.data_seed)?;
                let ds = generate_synthetic(&synth, self.n, &bank)?;
                Ok((ds, bank))
            }
            (None, None) => bail!("either --manifest or --preset is required"),
        }
    }
}

pub fn preset_config(
    preset: PresetArg,
    labels: Option<usize>,
    seed: u64,
) -> Result<(ModelBank, SyntheticModelConfig)> {
    let (mut bank, synth) = match preset {
        PresetArg::BenchA => (presets::reference_bank(), presets::reference_config(seed)),
        PresetArg::PaperModels => (
            presets::paper_models_bank(50),
            presets::paper_models_config(seed),
        ),
    };
    if let Some(labels) = labels {
        bank.label_count = labels;
        bank.validate()?;
    }
    Ok((bank, synth))
}

/// Calibration split arguments.
#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Labeled calibration samples (default: a quarter of the dataset).
    #[arg(long)]
    pub n_labeled: Option<usize>,
    /// Unlabeled calibration samples (default: a quarter of the dataset).
    #[arg(long)]
    pub n_unlabeled: Option<usize>,
    /// Seed of the three-way split.
    #[arg(long, default_value_t = 7)]
    pub split_seed: u64,
}

impl SplitArgs {
    /// Split into (labeled, unlabeled, evaluation) partitions.
    pub fn partitions(
        &self,
        dataset: &ScoreDataset,
    ) -> Result<(ScoreDataset, ScoreDataset, ScoreDataset)> {
        let n = dataset.len();
        let n_labeled = self.n_labeled.unwrap_or(n / 4);
        let n_unlabeled = self.n_unlabeled.unwrap_or(n / 4);
        let idx = split(dataset, n_labeled, n_unlabeled, self.split_seed)?;
        Ok(idx.materialize(dataset)?)
    }
}

/// Channel timing/bandwidth arguments.
#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Frame deadline in milliseconds.
    #[arg(long, default_value_t = presets::DEFAULT_DEADLINE_S * 1e3)]
    pub deadline_ms: f64,
    /// Bandwidth in Hz.
    #[arg(long, default_value_t = presets::DEFAULT_BANDWIDTH_HZ)]
    pub bandwidth_hz: f64,
}

impl ChannelArgs {
    /// Channel config at the given per-direction SNRs (dB).
    pub fn config_db(&self, snr_ul_db: f64, snr_dl_db: f64) -> Result<ChannelConfig> {
        Ok(
            ChannelConfig::new(self.bandwidth_hz, 1.0, 1.0, self.deadline_ms / 1e3)?
                .with_snr_db(snr_ul_db, snr_dl_db),
        )
    }
}

/// Parse an SNR grid spec: `start:stop:count`, a comma list, or one value.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>> {
    if let Some((start, rest)) = spec.split_once(':') {
        let (stop, count) = rest
            .split_once(':')
            .ok_or_else(|| anyhow!("expected start:stop:count, got {spec:?}"))?;
        let start: f64 = start.trim().parse()?;
        let stop: f64 = stop.trim().parse()?;
        let count: usize = count.trim().parse()?;
        if count < 1 {
            bail!("SNR grid needs at least one point");
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let step = (stop - start) / (count - 1) as f64;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    spec.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

/// Combine uplink and optional downlink grids into SNR points.
pub fn snr_points(ul: &[f64], dl: Option<&[f64]>) -> Result<Vec<SnrPoint>> {
    match dl {
        None => Ok(ul.iter().map(|&d| SnrPoint::symmetric(d)).collect()),
        Some(dl) => {
            if dl.len() != ul.len() {
                bail!(
                    "uplink and downlink SNR grids differ in length ({} vs {})",
                    ul.len(),
                    dl.len()
                );
            }
            Ok(ul
                .iter()
                .zip(dl)
                .map(|(&u, &d)| SnrPoint { ul_db: u, dl_db: d })
                .collect())
        }
    }
}

/// Parse a scheme spec:
/// `fixed`, `dynamic`, `dynamic_truncated`,
/// `baseline_topk:KAPPA[:LxK]`, `baseline_calibrated[:LxK]` (1-based L, K).
pub fn parse_scheme(spec: &str) -> Result<SchemeSpec> {
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or_default();
    let parse_combo = |part: Option<&str>| -> Result<(usize, usize)> {
        match part {
            None => Ok((0, 0)),
            Some(s) => {
                let (l, k) = s
                    .split_once('x')
                    .ok_or_else(|| anyhow!("expected LxK in scheme {spec:?}"))?;
                let l: usize = l.trim().parse()?;
                let k: usize = k.trim().parse()?;
                if l < 1 || k < 1 {
                    bail!("combination indices are 1-based in {spec:?}");
                }
                Ok((l - 1, k - 1))
            }
        }
    };
    let scheme = match head {
        "fixed" => SchemeSpec::Fixed,
        "dynamic" => SchemeSpec::Dynamic,
        "dynamic_truncated" => SchemeSpec::DynamicTruncated,
        "baseline_topk" => {
            let kappa: usize = parts
                .next()
                .ok_or_else(|| anyhow!("baseline_topk needs :KAPPA in {spec:?}"))?
                .trim()
                .parse()?;
            let (encoder_idx, model_idx) = parse_combo(parts.next())?;
            SchemeSpec::BaselineTopk {
                encoder_idx,
                model_idx,
                kappa,
            }
        }
        "baseline_calibrated" => {
            let (encoder_idx, model_idx) = parse_combo(parts.next())?;
            SchemeSpec::BaselineCalibrated {
                encoder_idx,
                model_idx,
            }
        }
        other => bail!("unknown scheme {other:?}"),
    };
    if parts.next().is_some() {
        bail!("trailing fields in scheme {spec:?}");
    }
    Ok(scheme)
}

pub fn parse_schemes(specs: &str) -> Result<Vec<SchemeSpec>> {
    specs.split(',').map(|s| parse_scheme(s.trim())).collect()
}

/// SHA-256 hex of the canonical JSON of a config, for provenance.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Write a file atomically (temp file in the same directory, then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Create the output directory, erroring with the path when its parent is
/// missing.
pub fn ensure_out_dir(out: &Path) -> Result<()> {
    if out.is_dir() {
        return Ok(());
    }
    fs::create_dir(out).with_context(|| format!("creating output directory {}", out.display()))
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunInfo<T: Serialize> {
    pub config_hash: String,
    pub seed: u64,
    pub config: T,
}

pub fn write_run_info<T: Serialize>(out: &Path, config: &T, seed: u64) -> Result<String> {
    let hash = config_hash(config);
    let info = RunInfo {
        config_hash: hash.clone(),
        seed,
        config,
    };
    let json = serde_json::to_string_pretty(&info)?;
    write_atomic(&out.join("run.json"), json.as_bytes())?;
    Ok(hash)
}

/// `# config_hash=... seed=...` comment line prepended to CSV outputs.
pub fn provenance_comment(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash} seed={seed}\n")
}

/// File-name-safe form of a scheme label.
pub fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_grid_specs() {
        assert_eq!(
            parse_snr_grid("0:30:6").unwrap(),
            vec![0.0, 6.0, 12.0, 18.0, 24.0, 30.0]
        );
        assert_eq!(parse_snr_grid("5,15,25").unwrap(), vec![5.0, 15.0, 25.0]);
        assert_eq!(parse_snr_grid("12.5").unwrap(), vec![12.5]);
        assert!(parse_snr_grid("0:30").is_err());
    }

    #[test]
    fn scheme_specs() {
        assert_eq!(parse_scheme("fixed").unwrap(), SchemeSpec::Fixed);
        assert_eq!(
            parse_scheme("baseline_topk:20").unwrap(),
            SchemeSpec::BaselineTopk {
                encoder_idx: 0,
                model_idx: 0,
                kappa: 20
            }
        );
        assert_eq!(
            parse_scheme("baseline_topk:20:4x3").unwrap(),
            SchemeSpec::BaselineTopk {
                encoder_idx: 3,
                model_idx: 2,
                kappa: 20
            }
        );
        assert_eq!(
            parse_scheme("baseline_calibrated:2x1").unwrap(),
            SchemeSpec::BaselineCalibrated {
                encoder_idx: 1,
                model_idx: 0
            }
        );
        assert!(parse_scheme("baseline_topk").is_err());
        assert!(parse_scheme("nope").is_err());
        assert!(parse_scheme("baseline_calibrated:0x1").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        #[derive(Serialize)]
        struct C {
            a: u32,
        }
        let h1 = config_hash(&C { a: 1 });
        let h2 = config_hash(&C { a: 1 });
        let h3 = config_hash(&C { a: 2 });
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
        assert_eq!(h1.len(), 64);
    }
}
