//! Score/size datasets that stand in for the encoder–classifier pipeline.
//!
//! A [`ScoreDataset`] stores, for every composite model (encoder `l`, edge
//! model `k`), the per-sample, per-label confidence scores together with the
//! per-encoder uplink message sizes. Datasets are immutable after load or
//! generation and safe to share across worker threads.

mod manifest;
mod split;
mod synthetic;

pub use manifest::{load_dataset, write_dataset};
pub use split::{split, SplitIndices};
pub use synthetic::{generate_synthetic, SyntheticModelConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One encoder/decoder pair: identity plus its fixed computation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub id: String,
    /// Combined encode + decode computation time in seconds.
    pub tau_ul_s: f64,
}

/// One edge inference model: identity plus its fixed computation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceModelSpec {
    pub id: String,
    /// Inference computation time in seconds.
    pub tau_f_s: f64,
}

/// The available encoders and inference models, defining the L x K grid of
/// composite models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBank {
    pub encoders: Vec<EncoderSpec>,
    pub models: Vec<InferenceModelSpec>,
    /// Cardinality of the label set.
    pub label_count: usize,
    /// Bits per predicted label on the downlink.
    pub d_lbl_bits: u64,
}

impl ModelBank {
    pub fn new(
        encoders: Vec<EncoderSpec>,
        models: Vec<InferenceModelSpec>,
        label_count: usize,
        d_lbl_bits: u64,
    ) -> Result<Self> {
        let bank = Self {
            encoders,
            models,
            label_count,
            d_lbl_bits,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoders.is_empty() || self.models.is_empty() {
            return Err(Error::InvalidConfig(
                "model bank needs at least one encoder and one model".into(),
            ));
        }
        if self.label_count < 2 {
            return Err(Error::InvalidConfig(format!(
                "label_count must be >= 2, got {}",
                self.label_count
            )));
        }
        if self.d_lbl_bits < 1 {
            return Err(Error::InvalidConfig("d_lbl_bits must be >= 1".into()));
        }
        for e in &self.encoders {
            if !(e.tau_ul_s.is_finite() && e.tau_ul_s >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "encoder {}: tau_ul must be finite and >= 0",
                    e.id
                )));
            }
        }
        for pair in self.models.windows(2) {
            if pair[1].tau_f_s < pair[0].tau_f_s {
                return Err(Error::InvalidConfig(format!(
                    "model computation times must be non-decreasing: {} after {}",
                    pair[1].tau_f_s, pair[0].tau_f_s
                )));
            }
        }
        for m in &self.models {
            if !(m.tau_f_s.is_finite() && m.tau_f_s >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "model {}: tau_f must be finite and >= 0",
                    m.id
                )));
            }
        }
        Ok(())
    }

    pub fn encoder_count(&self) -> usize {
        self.encoders.len()
    }

    pub fn model_count(&self) -> usize {
        self.models.len()
    }

    pub fn encoder_index(&self, id: &str) -> Result<usize> {
        self.encoders
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| Error::UnknownId(format!("encoder {id}")))
    }

    pub fn model_index(&self, id: &str) -> Result<usize> {
        self.models
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::UnknownId(format!("model {id}")))
    }
}

/// Row-major matrix of confidence scores: one row per sample, one column per
/// label.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "score matrix expects {} values ({} x {}), got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Per-sample confidence scores and uplink sizes for every composite model.
///
/// `true_labels` is `None` for unlabeled partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDataset {
    n: usize,
    encoder_count: usize,
    model_count: usize,
    label_count: usize,
    true_labels: Option<Vec<u32>>,
    /// Indexed by `l * model_count + k`.
    scores: Vec<ScoreMatrix>,
    /// Indexed by encoder; each inner vec has one size per sample, in bits.
    ul_sizes: Vec<Vec<u64>>,
}

impl ScoreDataset {
    pub fn new(
        encoder_count: usize,
        model_count: usize,
        label_count: usize,
        true_labels: Option<Vec<u32>>,
        scores: Vec<ScoreMatrix>,
        ul_sizes: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if scores.len() != encoder_count * model_count {
            return Err(Error::DimensionMismatch(format!(
                "expected {} score matrices, got {}",
                encoder_count * model_count,
                scores.len()
            )));
        }
        let n = scores.first().map_or(0, ScoreMatrix::rows);
        for (i, m) in scores.iter().enumerate() {
            if m.rows() != n || m.cols() != label_count {
                return Err(Error::DimensionMismatch(format!(
                    "score matrix {} has shape {}x{}, expected {}x{}",
                    i,
                    m.rows(),
                    m.cols(),
                    n,
                    label_count
                )));
            }
            if let Some(bad) = m.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::DimensionMismatch(format!(
                    "score matrix {i} contains out-of-range value {bad}"
                )));
            }
        }
        if ul_sizes.len() != encoder_count {
            return Err(Error::DimensionMismatch(format!(
                "expected {} uplink size vectors, got {}",
                encoder_count,
                ul_sizes.len()
            )));
        }
        for (l, sizes) in ul_sizes.iter().enumerate() {
            if sizes.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "uplink sizes for encoder {} have {} entries, expected {}",
                    l,
                    sizes.len(),
                    n
                )));
            }
            if sizes.contains(&0) {
                return Err(Error::DimensionMismatch(format!(
                    "uplink sizes for encoder {l} contain a zero"
                )));
            }
        }
        if let Some(labels) = &true_labels {
            if labels.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    n
                )));
            }
            if let Some(bad) = labels.iter().find(|&&y| y as usize >= label_count) {
                return Err(Error::DimensionMismatch(format!(
                    "label {bad} outside 0..{label_count}"
                )));
            }
        }
        Ok(Self {
            n,
            encoder_count,
            model_count,
            label_count,
            true_labels,
            scores,
            ul_sizes,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn encoder_count(&self) -> usize {
        self.encoder_count
    }

    pub fn model_count(&self) -> usize {
        self.model_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    /// Score matrix of the composite model (encoder `l`, model `k`).
    pub fn scores(&self, l: usize, k: usize) -> &ScoreMatrix {
        &self.scores[l * self.model_count + k]
    }

    /// Uplink sizes in bits for encoder `l`, one per sample.
    pub fn ul_sizes(&self, l: usize) -> &[u64] {
        &self.ul_sizes[l]
    }

    pub fn true_labels(&self) -> Option<&[u32]> {
        self.true_labels.as_deref()
    }

    /// Check shape consistency against a model bank.
    pub fn matches_bank(&self, bank: &ModelBank) -> Result<()> {
        if self.encoder_count != bank.encoder_count()
            || self.model_count != bank.model_count()
            || self.label_count != bank.label_count
        {
            return Err(Error::DimensionMismatch(format!(
                "dataset shape ({} encoders, {} models, {} labels) does not match bank \
                 ({}, {}, {})",
                self.encoder_count,
                self.model_count,
                self.label_count,
                bank.encoder_count(),
                bank.model_count(),
                bank.label_count
            )));
        }
        Ok(())
    }

    /// Extract the samples at `indices`, optionally dropping labels (for
    /// unlabeled calibration partitions).
    pub fn subset(&self, indices: &[usize], keep_labels: bool) -> Result<ScoreDataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n,
            });
        }
        let scores = self
            .scores
            .iter()
            .map(|m| {
                let mut data = Vec::with_capacity(indices.len() * self.label_count);
                for &i in indices {
                    data.extend_from_slice(m.row(i));
                }
                ScoreMatrix::new(indices.len(), self.label_count, data)
            })
            .collect::<Result<Vec<_>>>()?;
        let ul_sizes = self
            .ul_sizes
            .iter()
            .map(|sizes| indices.iter().map(|&i| sizes[i]).collect())
            .collect();
        let true_labels = if keep_labels {
            self.true_labels
                .as_ref()
                .map(|labels| indices.iter().map(|&i| labels[i]).collect())
        } else {
            None
        };
        ScoreDataset::new(
            self.encoder_count,
            self.model_count,
            self.label_count,
            true_labels,
            scores,
            ul_sizes,
        )
    }
}
