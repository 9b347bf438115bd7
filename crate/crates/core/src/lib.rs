#![forbid(unsafe_code)]

//! Black-box edge inference model selection with statistical guarantees.
//!
//! This crate simulates a deadline-constrained sensor that offloads
//! inference to an edge server over Rayleigh-fading links. Recorded or
//! synthetic confidence-score datasets stand in for the real
//! encoder/classifier pipeline; conformal risk control calibrates per-model
//! prediction-set thresholds so the expected loss stays below a target, and
//! order-statistic bounds certify the deadline-violation probability of each
//! composite model. On top of those primitives sit a fixed (channel
//! statistics only) and a dynamic (instantaneous uplink rate) model
//! selection scheme, a truncation policy for a relaxed loss, and a Monte
//! Carlo evaluation harness.
//!
//! ```
//! # fn main() -> Result<(), edgesel::Error> {
//! use edgesel::dataset::{generate_synthetic, split};
//! use edgesel::presets;
//! use edgesel::selection::fixed_select;
//! use edgesel::LossFunction;
//!
//! let bank = presets::reference_bank();
//! let data = generate_synthetic(&presets::reference_config(7), 900, &bank)?;
//! let (labeled, unlabeled, _eval) = split(&data, 300, 300, 1)?.materialize(&data)?;
//!
//! let channel = presets::default_channel_db(20.0, 20.0);
//! let outcome = fixed_select(
//!     &bank,
//!     &labeled,
//!     &unlabeled,
//!     &LossFunction::miss_detection(),
//!     0.01, // expected-loss target
//!     0.01, // deadline-violation target
//!     &channel,
//! )?;
//! assert!(outcome.bound <= 1.0);
//! # Ok(())
//! # }
//! ```
//!
//! The guide under `book/` walks through each subsystem; its snippets run as
//! doc-tests of this crate.

pub mod bounds;
pub mod channel;
pub mod conformal;
pub mod dataset;
pub mod error;
pub mod evaluator;
pub mod presets;
pub mod report;
pub mod selection;

#[cfg(doctest)]
mod book;

#[cfg(test)]
pub(crate) mod testutil;

pub use bounds::{
    joint_size_lb, order_stats, success_lb_conditional, success_lb_marginal,
    violation_bound_conditional, violation_bound_marginal, BoundResult, GridMode, SizeOrderStats,
};
pub use channel::{
    db_to_linear, downlink_time, linear_to_db, meets_deadline, sample_link, shannon_rate,
    uplink_time, ChannelConfig, LinkDraw,
};
pub use conformal::{
    calibrate, corrected_risk_level, empirical_risk, prediction_set, CalibratedModel, LossFunction,
    LossKind,
};
pub use dataset::{
    generate_synthetic, load_dataset, split, write_dataset, EncoderSpec, InferenceModelSpec,
    ModelBank, ScoreDataset, ScoreMatrix, SplitIndices, SyntheticModelConfig,
};
pub use error::{Error, Result};
pub use evaluator::{
    aggregate_report, baseline_topk_set, evaluate, run_frames, FrameResult, MetricsReport,
    SchemeSpec, SelectionShare, SnrPoint,
};
pub use selection::{
    dynamic_select, fixed_select, fixed_select_detailed, relaxed_loss, relaxed_risk_level,
    truncated_set, truncation_cap, CalibrationSet, CandidateEval, CandidateStatus,
    ComboCalibration, DynamicSelector, SelectionOutcome,
};
