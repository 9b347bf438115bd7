//! Deterministic CSV/JSON serialization of reports, frame logs, calibration
//! records, and bound evaluations.
//!
//! Floats are written with Rust's shortest round-trip formatting, which is
//! platform-independent, so identical runs produce byte-identical files.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundResult;
use crate::dataset::ModelBank;
use crate::evaluator::{FrameResult, MetricsReport};
use crate::selection::{CalibrationSet, CandidateEval, CandidateStatus};

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

/// Header of the per-(scheme, SNR) report CSV.
pub const REPORT_HEADER: &str = "snr_db,scheme,cond_loss,cond_loss_se,violation_rate,\
violation_rate_se,mean_set_size,mean_set_size_se,relaxed_loss,relaxed_loss_se,\
n_frames,n_met,offline_feasible,snr_dl_db";

/// Write report rows (one per scheme and SNR point).
pub fn write_report_csv<W: Write>(mut w: W, reports: &[MetricsReport]) -> io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.snr_ul_db),
            r.scheme,
            fmt(r.cond_loss),
            fmt(r.cond_loss_se),
            fmt(r.violation_rate),
            fmt(r.violation_rate_se),
            fmt(r.mean_set_size),
            fmt(r.mean_set_size_se),
            fmt(r.relaxed_loss_mean),
            fmt(r.relaxed_loss_se),
            r.n_frames,
            r.n_met,
            r.offline_feasible as u8,
            fmt(r.snr_dl_db),
        )?;
    }
    Ok(())
}

/// Header of the per-frame log CSV.
pub const FRAMES_HEADER: &str =
    "frame_id,snr_db,l,k,rate_ul,rate_dl,d_ul,set_size,t_total_s,met_deadline,loss,relaxed_loss";

/// Write a per-frame log; `l` and `k` are 1-based in the file.
pub fn write_frames_csv<W: Write>(mut w: W, snr_db: f64, frames: &[FrameResult]) -> io::Result<()> {
    writeln!(w, "{FRAMES_HEADER}")?;
    for (i, f) in frames.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            i,
            fmt(snr_db),
            f.encoder_idx + 1,
            f.model_idx + 1,
            fmt(f.rate_ul),
            fmt(f.rate_dl),
            f.d_ul_bits,
            f.set_size,
            fmt(f.t_total_s),
            f.met_deadline as u8,
            fmt(f.loss),
            fmt(f.relaxed_loss),
        )?;
    }
    Ok(())
}

/// Selection distribution rows: one per (scheme, SNR, combination).
pub const SELECTION_HEADER: &str = "snr_db,scheme,l,k,share";

pub fn write_selection_csv<W: Write>(mut w: W, reports: &[MetricsReport]) -> io::Result<()> {
    writeln!(w, "{SELECTION_HEADER}")?;
    for r in reports {
        for s in &r.selection {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt(r.snr_ul_db),
                r.scheme,
                s.encoder_idx + 1,
                s.model_idx + 1,
                fmt(s.share),
            )?;
        }
    }
    Ok(())
}

/// One calibration result in the exchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub encoder_id: String,
    pub model_id: String,
    pub lambda: f64,
    pub epsilon: f64,
    pub n_calibration: usize,
}

/// Records for every calibrated combination, encoder-major order.
pub fn calibration_records(bank: &ModelBank, calset: &CalibrationSet) -> Vec<CalibrationRecord> {
    calset
        .calibrated()
        .map(|combo| CalibrationRecord {
            encoder_id: bank.encoders[combo.model.encoder_idx].id.clone(),
            model_id: bank.models[combo.model.model_idx].id.clone(),
            lambda: combo.model.lambda,
            epsilon: combo.model.epsilon,
            n_calibration: combo.model.n_calibration,
        })
        .collect()
}

/// Header of the bound-evaluation CSV.
pub const BOUNDS_HEADER: &str = "l,k,bound,n_star,m_star,mode,rate_ul";

/// One bound evaluation row; `rate_ul` is empty for marginal bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub encoder_idx: usize,
    pub model_idx: usize,
    pub bound: f64,
    pub detail: Option<BoundResult>,
    pub conditional: bool,
    pub rate_ul: Option<f64>,
}

impl BoundRow {
    pub fn from_candidate(c: &CandidateEval, conditional: bool, rate_ul: Option<f64>) -> Self {
        Self {
            encoder_idx: c.encoder_idx,
            model_idx: c.model_idx,
            bound: c.bound,
            detail: match c.status {
                CandidateStatus::Evaluated => c.detail,
                _ => None,
            },
            conditional,
            rate_ul,
        }
    }
}

pub fn write_bounds_csv<W: Write>(mut w: W, rows: &[BoundRow]) -> io::Result<()> {
    writeln!(w, "{BOUNDS_HEADER}")?;
    for r in rows {
        let (n_star, m_star) = r
            .detail
            .map(|d| (d.n_star.to_string(), d.m_star.to_string()))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.encoder_idx + 1,
            r.model_idx + 1,
            fmt(r.bound),
            n_star,
            m_star,
            if r.conditional {
                "conditional"
            } else {
                "marginal"
            },
            r.rate_ul.map(fmt).unwrap_or_default(),
        )?;
    }
    Ok(())
}
