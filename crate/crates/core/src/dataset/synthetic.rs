//! Seeded synthetic score/size generation.
//!
//! The generator stands in for a real encoder/classifier pipeline. Each
//! sample draws a uniform latent difficulty `u`; the composite model
//! (encoder `l`, model `k`) predicts the true label correctly iff
//! `u <= a[l][k]`, so top-1 accuracy equals the configured knob and harder
//! samples defeat every model before easier ones. Per-label scores come from
//! a symmetric Dirichlet draw: the true label receives the largest coordinate
//! when correct and an `u`-dependent lower-ranked coordinate otherwise, which
//! keeps score distributions monotone in difficulty and calibratable by a
//! simple threshold. Uplink sizes are log-normal per encoder, optionally
//! correlated with difficulty.
//!
//! All scores are rounded to the serialized 9-significant-digit precision at
//! generation time, so a generated dataset equals its written-then-loaded
//! form exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::manifest::round_score;
use super::{ModelBank, ScoreDataset, ScoreMatrix};
use crate::error::{Error, Result};

/// Scale of the truncated-exponential rank distribution used when a model is
/// wrong: most wrong predictions still place the true label near the top.
const RANK_SCALE: f64 = 5.0;

/// Knobs of the synthetic score/size generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModelConfig {
    /// Top-1 accuracy per (encoder, model), in (0, 1]. Outer index is the
    /// encoder. Interactions are free-form: a large model may be configured
    /// to do poorly on a low-quality encoder.
    pub accuracy: Vec<Vec<f64>>,
    /// Symmetric Dirichlet concentration of the score vectors; small values
    /// give confident, spiky scores.
    pub score_concentration: f64,
    /// Per-encoder mean of ln(size in bits).
    pub size_log_mean: Vec<f64>,
    /// Per-encoder standard deviation of ln(size in bits).
    pub size_log_sd: Vec<f64>,
    /// Correlation between the normal score of the difficulty and the
    /// log-size, in [-1, 1]. Zero keeps sizes independent of scores.
    #[serde(default)]
    pub size_difficulty_corr: f64,
    pub seed: u64,
}

impl SyntheticModelConfig {
    pub fn validate(&self, bank: &ModelBank) -> Result<()> {
        let l = bank.encoder_count();
        let k = bank.model_count();
        if self.accuracy.len() != l || self.accuracy.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidConfig(format!(
                "accuracy must be a {l} x {k} matrix"
            )));
        }
        if let Some(bad) = self
            .accuracy
            .iter()
            .flatten()
            .find(|a| !(a.is_finite() && **a > 0.0 && **a <= 1.0))
        {
            return Err(Error::InvalidConfig(format!(
                "accuracy values must lie in (0, 1], got {bad}"
            )));
        }
        if !(self.score_concentration.is_finite() && self.score_concentration > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "score_concentration must be positive, got {}",
                self.score_concentration
            )));
        }
        if self.size_log_mean.len() != l || self.size_log_sd.len() != l {
            return Err(Error::InvalidConfig(format!(
                "size_log_mean and size_log_sd must have one entry per encoder ({l})"
            )));
        }
        if self
            .size_log_mean
            .iter()
            .chain(self.size_log_sd.iter())
            .any(|v| !v.is_finite())
            || self.size_log_sd.iter().any(|v| *v < 0.0)
        {
            return Err(Error::InvalidConfig(
                "size distribution parameters must be finite, sd >= 0".into(),
            ));
        }
        if !(self.size_difficulty_corr.is_finite()
            && (-1.0..=1.0).contains(&self.size_difficulty_corr))
        {
            return Err(Error::InvalidConfig(format!(
                "size_difficulty_corr must lie in [-1, 1], got {}",
                self.size_difficulty_corr
            )));
        }
        Ok(())
    }
}

/// Generate `n` samples for every composite model in `bank`.
///
/// Deterministic given `config.seed`: the same call produces bit-identical
/// datasets across runs and platforms.
pub fn generate_synthetic(
    config: &SyntheticModelConfig,
    n: usize,
    bank: &ModelBank,
) -> Result<ScoreDataset> {
    config.validate(bank)?;
    if n < 1 {
        return Err(Error::InvalidConfig("sample count must be >= 1".into()));
    }
    let l_count = bank.encoder_count();
    let k_count = bank.model_count();
    let y_count = bank.label_count;
    let corr = config.size_difficulty_corr;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let gamma = Gamma::new(config.score_concentration, 1.0)
        .map_err(|e| Error::InvalidConfig(format!("invalid concentration: {e}")))?;
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");

    let mut labels = Vec::with_capacity(n);
    let mut ul_sizes = vec![Vec::with_capacity(n); l_count];
    let mut score_data: Vec<Vec<f64>> = vec![Vec::with_capacity(n * y_count); l_count * k_count];
    let mut coords = vec![0.0f64; y_count];
    let mut order: Vec<usize> = (0..y_count).collect();

    for _ in 0..n {
        let label = rng.gen_range(0..y_count as u32);
        labels.push(label);
        let mut difficulty: f64 = rng.gen();
        if difficulty == 0.0 {
            difficulty = f64::MIN_POSITIVE;
        }
        // Normal score of the difficulty, used only for size coupling.
        let difficulty_z = if corr != 0.0 {
            std_normal.inverse_cdf(difficulty)
        } else {
            0.0
        };

        for (l, sizes) in ul_sizes.iter_mut().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            let z = corr * difficulty_z + (1.0 - corr * corr).sqrt() * noise;
            let ln_bits = config.size_log_mean[l] + config.size_log_sd[l] * z;
            let bits = ln_bits.exp().round().max(1.0);
            sizes.push(bits as u64);
        }

        for l in 0..l_count {
            for k in 0..k_count {
                let mut total = 0.0;
                for c in coords.iter_mut() {
                    let g: f64 = gamma.sample(&mut rng);
                    *c = g;
                    total += g;
                }
                for c in coords.iter_mut() {
                    *c /= total;
                }
                // Indices sorted by score, best first.
                order.sort_unstable_by(|&a, &b| {
                    coords[b].partial_cmp(&coords[a]).unwrap().then(a.cmp(&b))
                });
                let accuracy = config.accuracy[l][k];
                let rank = if difficulty <= accuracy {
                    0
                } else {
                    let v = (difficulty - accuracy) / (1.0 - accuracy);
                    wrong_rank(v, y_count)
                };
                coords.swap(label as usize, order[rank]);

                let dest = &mut score_data[l * k_count + k];
                dest.extend(coords.iter().map(|c| round_score(*c)));
            }
        }
    }

    let scores = score_data
        .into_iter()
        .map(|data| ScoreMatrix::new(n, y_count, data))
        .collect::<Result<Vec<_>>>()?;
    ScoreDataset::new(l_count, k_count, y_count, Some(labels), scores, ul_sizes)
}

/// 0-based rank of the true label's coordinate when the model is wrong.
///
/// `v` in (0, 1] is the relative difficulty within the wrong region; the
/// rank follows a truncated exponential over ranks 1..label_count-1, so
/// near-misses dominate.
fn wrong_rank(v: f64, label_count: usize) -> usize {
    let deepest = (label_count - 2) as f64;
    let span = 1.0 - (-(deepest + 1.0) / RANK_SCALE).exp();
    let t = -RANK_SCALE * (1.0 - v * span).ln();
    1 + (t.floor() as usize).min(label_count - 2)
}
