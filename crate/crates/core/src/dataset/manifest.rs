//! Load and write datasets through a JSON manifest plus CSV data files.
//!
//! Manifest layout:
//!
//! ```json
//! {
//!   "label_count": 10,
//!   "d_lbl_bits": 64,
//!   "encoders": [{"id": "e1", "tau_ul_s": 0.010, "ul_sizes_file": "e1_sizes.csv"}],
//!   "models": [{"id": "m1", "tau_f_s": 0.024}],
//!   "scores": [{"encoder_id": "e1", "model_id": "m1", "file": "scores_e1_m1.csv"}],
//!   "labels_file": "labels.csv"
//! }
//! ```
//!
//! Score files are headerless CSV with one row per sample and one column per
//! label; size files hold one positive integer (bits) per row; the labels
//! file holds one 0-based label index per row. All paths are relative to the
//! manifest. Scores are serialized with 9 significant digits so that files
//! round-trip identically across platforms.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EncoderSpec, InferenceModelSpec, ModelBank, ScoreDataset, ScoreMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    label_count: usize,
    d_lbl_bits: u64,
    encoders: Vec<ManifestEncoder>,
    models: Vec<ManifestModel>,
    scores: Vec<ManifestScores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels_file: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEncoder {
    id: String,
    tau_ul_s: f64,
    ul_sizes_file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestModel {
    id: String,
    tau_f_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestScores {
    encoder_id: String,
    model_id: String,
    file: String,
}

/// Load and validate a dataset and its model bank from a manifest file.
pub fn load_dataset(manifest_path: &Path) -> Result<(ScoreDataset, ModelBank)> {
    let text = fs::read_to_string(manifest_path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile {
                path: manifest_path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: manifest_path.to_path_buf(),
                source,
            }
        }
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|source| Error::ManifestParse {
            path: manifest_path.to_path_buf(),
            source,
        })?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let bank = ModelBank::new(
        manifest
            .encoders
            .iter()
            .map(|e| EncoderSpec {
                id: e.id.clone(),
                tau_ul_s: e.tau_ul_s,
            })
            .collect(),
        manifest
            .models
            .iter()
            .map(|m| InferenceModelSpec {
                id: m.id.clone(),
                tau_f_s: m.tau_f_s,
            })
            .collect(),
        manifest.label_count,
        manifest.d_lbl_bits,
    )?;

    let labels = manifest
        .labels_file
        .as_ref()
        .map(|f| read_labels(&dir.join(f), manifest.label_count))
        .transpose()?;

    let mut ul_sizes = Vec::with_capacity(bank.encoder_count());
    for e in &manifest.encoders {
        ul_sizes.push(read_sizes(&dir.join(&e.ul_sizes_file))?);
    }

    // Score matrices must cover the full L x K grid, in any manifest order.
    let mut matrices: Vec<Option<ScoreMatrix>> = (0..bank.encoder_count() * bank.model_count())
        .map(|_| None)
        .collect();
    for entry in &manifest.scores {
        let l = bank.encoder_index(&entry.encoder_id)?;
        let k = bank.model_index(&entry.model_id)?;
        let m = read_scores(&dir.join(&entry.file), manifest.label_count)?;
        matrices[l * bank.model_count() + k] = Some(m);
    }
    let scores = matrices
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            m.ok_or_else(|| {
                let l = i / bank.model_count();
                let k = i % bank.model_count();
                Error::DimensionMismatch(format!(
                    "manifest has no score file for encoder {} / model {}",
                    bank.encoders[l].id, bank.models[k].id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dataset = ScoreDataset::new(
        bank.encoder_count(),
        bank.model_count(),
        bank.label_count,
        labels,
        scores,
        ul_sizes,
    )?;
    Ok((dataset, bank))
}

/// Write a dataset plus bank under `dir`, returning the manifest path.
///
/// Inverse of [`load_dataset`]: loading the written tree reproduces the
/// dataset exactly (scores at the serialized 9-digit precision).
pub fn write_dataset(dir: &Path, bank: &ModelBank, dataset: &ScoreDataset) -> Result<PathBuf> {
    dataset.matches_bank(bank)?;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut encoders = Vec::with_capacity(bank.encoder_count());
    for (l, e) in bank.encoders.iter().enumerate() {
        let file = format!("sizes_{}.csv", e.id);
        write_rows(
            &dir.join(&file),
            dataset.ul_sizes(l).iter().map(|s| s.to_string()),
        )?;
        encoders.push(ManifestEncoder {
            id: e.id.clone(),
            tau_ul_s: e.tau_ul_s,
            ul_sizes_file: file,
        });
    }

    let mut score_entries = Vec::new();
    for (l, e) in bank.encoders.iter().enumerate() {
        for (k, m) in bank.models.iter().enumerate() {
            let file = format!("scores_{}_{}.csv", e.id, m.id);
            let matrix = dataset.scores(l, k);
            write_rows(
                &dir.join(&file),
                (0..matrix.rows()).map(|i| {
                    matrix
                        .row(i)
                        .iter()
                        .map(|v| format_score(*v))
                        .collect::<Vec<_>>()
                        .join(",")
                }),
            )?;
            score_entries.push(ManifestScores {
                encoder_id: e.id.clone(),
                model_id: m.id.clone(),
                file,
            });
        }
    }

    let labels_file = match dataset.true_labels() {
        Some(labels) => {
            let file = "labels.csv".to_string();
            write_rows(&dir.join(&file), labels.iter().map(|y| y.to_string()))?;
            Some(file)
        }
        None => None,
    };

    let manifest = Manifest {
        label_count: bank.label_count,
        d_lbl_bits: bank.d_lbl_bits,
        encoders,
        models: bank
            .models
            .iter()
            .map(|m| ManifestModel {
                id: m.id.clone(),
                tau_f_s: m.tau_f_s,
            })
            .collect(),
        scores: score_entries,
        labels_file,
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&manifest_path, json.as_bytes()).map_err(|source| Error::Io {
        path: manifest_path.clone(),
        source,
    })?;
    Ok(manifest_path)
}

/// Scores travel as decimal with 9 significant digits.
pub(crate) fn format_score(v: f64) -> String {
    format!("{v:.8e}")
}

/// Round a score to the serialized precision, so generated datasets equal
/// their written-then-loaded form bit for bit.
pub(crate) fn round_score(v: f64) -> f64 {
    format_score(v).parse().expect("formatted float reparses")
}

fn open_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn read_scores(path: &Path, label_count: usize) -> Result<ScoreMatrix> {
    let lines = open_lines(path)?;
    let mut data = Vec::with_capacity(lines.len() * label_count);
    for (row, line) in lines.iter().enumerate() {
        let mut count = 0;
        for (column, field) in line.split(',').enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::CsvField {
                path: path.to_path_buf(),
                row,
                column,
                message: format!("expected a score, got {field:?}"),
            })?;
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ScoreOutOfRange {
                    path: path.to_path_buf(),
                    row,
                    column,
                    value,
                });
            }
            data.push(value);
            count += 1;
        }
        if count != label_count {
            return Err(Error::CsvField {
                path: path.to_path_buf(),
                row,
                column: count,
                message: format!("expected {label_count} columns, got {count}"),
            });
        }
    }
    ScoreMatrix::new(lines.len(), label_count, data)
}

fn read_sizes(path: &Path) -> Result<Vec<u64>> {
    let lines = open_lines(path)?;
    let mut sizes = Vec::with_capacity(lines.len());
    for (row, line) in lines.iter().enumerate() {
        let value: i64 = line.trim().parse().map_err(|_| Error::CsvField {
            path: path.to_path_buf(),
            row,
            column: 0,
            message: format!("expected an integer bit count, got {line:?}"),
        })?;
        if value <= 0 {
            return Err(Error::NonPositiveSize {
                path: path.to_path_buf(),
                row,
                value,
            });
        }
        sizes.push(value as u64);
    }
    Ok(sizes)
}

fn read_labels(path: &Path, label_count: usize) -> Result<Vec<u32>> {
    let lines = open_lines(path)?;
    let mut labels = Vec::with_capacity(lines.len());
    for (row, line) in lines.iter().enumerate() {
        let value: u32 = line.trim().parse().map_err(|_| Error::CsvField {
            path: path.to_path_buf(),
            row,
            column: 0,
            message: format!("expected a label index, got {line:?}"),
        })?;
        if value as usize >= label_count {
            return Err(Error::CsvField {
                path: path.to_path_buf(),
                row,
                column: 0,
                message: format!("label {value} outside 0..{label_count}"),
            });
        }
        labels.push(value);
    }
    Ok(labels)
}

fn write_rows(path: &Path, rows: impl Iterator<Item = String>) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for row in rows {
        writeln!(w, "{row}").map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
