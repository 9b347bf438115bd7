//! Ready-made model banks, synthetic configurations, and channel defaults.

use crate::channel::ChannelConfig;
use crate::dataset::{EncoderSpec, InferenceModelSpec, ModelBank, SyntheticModelConfig};

/// Default frame deadline in seconds.
pub const DEFAULT_DEADLINE_S: f64 = 0.150;
/// Default bandwidth in Hz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 30e6;
/// Default bits per predicted label.
pub const DEFAULT_D_LBL_BITS: u64 = 64;
/// Default expected-loss requirement.
pub const DEFAULT_ALPHA: f64 = 0.01;
/// Default deadline-violation requirement.
pub const DEFAULT_BETA: f64 = 0.01;

/// Channel defaults with the given per-direction SNRs in dB.
pub fn default_channel_db(snr_ul_db: f64, snr_dl_db: f64) -> ChannelConfig {
    ChannelConfig::new(DEFAULT_BANDWIDTH_HZ, 1.0, 1.0, DEFAULT_DEADLINE_S)
        .expect("default channel is valid")
        .with_snr_db(snr_ul_db, snr_dl_db)
}

fn encoders(taus_ms: &[f64]) -> Vec<EncoderSpec> {
    taus_ms
        .iter()
        .enumerate()
        .map(|(i, tau)| EncoderSpec {
            id: format!("e{}", i + 1),
            tau_ul_s: tau / 1e3,
        })
        .collect()
}

fn models(taus_ms: &[f64]) -> Vec<InferenceModelSpec> {
    taus_ms
        .iter()
        .enumerate()
        .map(|(i, tau)| InferenceModelSpec {
            id: format!("f{}", i + 1),
            tau_f_s: tau / 1e3,
        })
        .collect()
}

/// The `paper-models` preset: four encoder qualities (10, 12.5, 15, 17.5 ms)
/// and three classifier scales (24, 57, 98 ms).
pub fn paper_models_bank(label_count: usize) -> ModelBank {
    ModelBank::new(
        encoders(&[10.0, 12.5, 15.0, 17.5]),
        models(&[24.0, 57.0, 98.0]),
        label_count,
        DEFAULT_D_LBL_BITS,
    )
    .expect("preset bank is valid")
}

/// Synthetic generator settings paired with [`paper_models_bank`]: richer
/// encodings cost more uplink bits and raise accuracy, except that the
/// largest classifier underperforms on the crudest encoding.
pub fn paper_models_config(seed: u64) -> SyntheticModelConfig {
    SyntheticModelConfig {
        accuracy: vec![
            vec![0.90, 0.92, 0.85],
            vec![0.94, 0.955, 0.95],
            vec![0.955, 0.975, 0.98],
            vec![0.96, 0.985, 0.99],
        ],
        score_concentration: 0.25,
        size_log_mean: vec![30e3f64.ln(), 100e3f64.ln(), 250e3f64.ln(), 500e3f64.ln()],
        size_log_sd: vec![0.35, 0.30, 0.30, 0.25],
        size_difficulty_corr: 0.0,
        seed,
    }
}

/// The `bench-a` preset bank: a 3 x 3 grid with 50 labels used throughout
/// the test suite.
pub fn reference_bank() -> ModelBank {
    ModelBank::new(
        encoders(&[10.0, 12.5, 15.0]),
        models(&[24.0, 57.0, 98.0]),
        50,
        DEFAULT_D_LBL_BITS,
    )
    .expect("preset bank is valid")
}

/// Synthetic generator settings paired with [`reference_bank`].
pub fn reference_config(seed: u64) -> SyntheticModelConfig {
    SyntheticModelConfig {
        accuracy: vec![
            vec![0.90, 0.92, 0.85],
            vec![0.95, 0.965, 0.96],
            vec![0.97, 0.985, 0.99],
        ],
        score_concentration: 0.25,
        size_log_mean: vec![40e3f64.ln(), 150e3f64.ln(), 400e3f64.ln()],
        size_log_sd: vec![0.35, 0.30, 0.25],
        size_difficulty_corr: 0.0,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_timings() {
        let bank = paper_models_bank(1000);
        let taus: Vec<f64> = bank.encoders.iter().map(|e| e.tau_ul_s).collect();
        assert_eq!(taus, vec![0.010, 0.0125, 0.015, 0.0175]);
        let fs: Vec<f64> = bank.models.iter().map(|m| m.tau_f_s).collect();
        assert_eq!(fs, vec![0.024, 0.057, 0.098]);
        assert_eq!(bank.d_lbl_bits, 64);
    }

    #[test]
    fn reference_preset_is_consistent() {
        let bank = reference_bank();
        let cfg = reference_config(1);
        cfg.validate(&bank).unwrap();
        assert_eq!(bank.label_count, 50);
        assert!(bank.encoders.len() == 3 && bank.models.len() == 3);
        // Every combination leaves a positive transmission window.
        let worst = bank.encoders.last().unwrap().tau_ul_s + bank.models.last().unwrap().tau_f_s;
        assert!(worst < DEFAULT_DEADLINE_S);
    }
}
