//! Helpers shared by unit tests across modules.

use crate::dataset::{
    generate_synthetic, EncoderSpec, InferenceModelSpec, ModelBank, ScoreDataset,
    SyntheticModelConfig,
};

pub(crate) fn small_bank(l: usize, k: usize, labels: usize) -> ModelBank {
    ModelBank::new(
        (0..l)
            .map(|i| EncoderSpec {
                id: format!("e{}", i + 1),
                tau_ul_s: 0.010 + 0.0025 * i as f64,
            })
            .collect(),
        (0..k)
            .map(|i| InferenceModelSpec {
                id: format!("m{}", i + 1),
                tau_f_s: 0.024 + 0.03 * i as f64,
            })
            .collect(),
        labels,
        64,
    )
    .unwrap()
}

pub(crate) fn uniform_config(bank: &ModelBank, accuracy: f64, seed: u64) -> SyntheticModelConfig {
    SyntheticModelConfig {
        accuracy: vec![vec![accuracy; bank.model_count()]; bank.encoder_count()],
        score_concentration: 0.3,
        size_log_mean: vec![10.0; bank.encoder_count()],
        size_log_sd: vec![0.3; bank.encoder_count()],
        size_difficulty_corr: 0.0,
        seed,
    }
}

pub(crate) fn small_dataset(
    l: usize,
    k: usize,
    labels: usize,
    n: usize,
    seed: u64,
) -> ScoreDataset {
    let bank = small_bank(l, k, labels);
    generate_synthetic(&uniform_config(&bank, 0.9, seed), n, &bank).unwrap()
}
