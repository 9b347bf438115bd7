//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file: {path}")]
    MissingFile { path: PathBuf },

    #[error("failed to parse manifest {path}: {source}")]
    ManifestParse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    CsvField {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: row {row}, column {column}: score {value} outside [0, 1]")]
    ScoreOutOfRange {
        path: PathBuf,
        row: usize,
        column: usize,
        value: f64,
    },

    #[error("{path}: row {row}: uplink size {value} is not a positive bit count")]
    NonPositiveSize {
        path: PathBuf,
        row: usize,
        value: i64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("split requests {requested} samples but only {available} are available")]
    SplitCounts { requested: usize, available: usize },

    #[error("empty {0} partition")]
    EmptyPartition(&'static str),

    #[error(
        "calibration infeasible: even the full prediction set fails the corrected \
         risk condition (epsilon {epsilon}, gamma {gamma}, {n_calibration} calibration samples)"
    )]
    CalibrationInfeasible {
        epsilon: f64,
        gamma: f64,
        n_calibration: usize,
    },

    #[error(
        "computation times alone exceed the deadline: tau_ul {tau_ul_s} s + tau_f {tau_f_s} s \
         >= {deadline_s} s"
    )]
    TimingInfeasible {
        tau_ul_s: f64,
        tau_f_s: f64,
        deadline_s: f64,
    },

    #[error("no model combination can be calibrated and scheduled within the deadline")]
    NoValidCombination,

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("uplink rate must be positive, got {rate}")]
    InvalidRate { rate: f64 },

    #[error("unknown id: {0}")]
    UnknownId(String),
}
