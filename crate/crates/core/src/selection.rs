//! Fixed and dynamic model selection, plus the truncation policy for the
//! relaxed loss.
//!
//! Both schemes calibrate every composite model at the corrected risk level,
//! bound its deadline-violation probability on the unlabeled calibration
//! set, and then keep the candidate with the smallest estimated prediction
//! set among those meeting the violation target — falling back to the
//! smallest bound when nothing qualifies. The fixed scheme uses the marginal
//! bound and commits offline; the dynamic scheme fixes the encoder offline
//! and re-picks the edge model per frame from the bound conditioned on the
//! observed uplink rate. Calibrations, order statistics, and set-size
//! estimates never depend on the channel, so they are computed once and
//! shared.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    order_stats, violation_bound_conditional, violation_bound_marginal, BoundResult, GridMode,
    SizeOrderStats,
};
use crate::channel::ChannelConfig;
use crate::conformal::{
    calibrate, corrected_risk_level, prediction_set, set_size_at, CalibratedModel, LossFunction,
};
use crate::dataset::{ModelBank, ScoreDataset};
use crate::error::{Error, Result};

/// The model combination a selection scheme committed to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub encoder_idx: usize,
    pub model_idx: usize,
    /// Calibrated threshold of the chosen combination.
    pub lambda: f64,
    /// Mean prediction-set size of the chosen combination on the unlabeled
    /// calibration set.
    pub mean_set_size: f64,
    /// Deadline-violation bound of the chosen combination.
    pub bound: f64,
    /// Whether the bound meets the violation target.
    pub feasible: bool,
}

/// Why a combination was or was not comparable during selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Evaluated,
    CalibrationInfeasible,
    TimingInfeasible,
}

/// Per-combination record of one selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEval {
    pub encoder_idx: usize,
    pub model_idx: usize,
    pub lambda: Option<f64>,
    /// Bound value; skipped combinations are recorded with bound 1.
    pub bound: f64,
    /// Mean set size on the unlabeled set; infinite for skipped combinations.
    pub mean_set_size: f64,
    pub detail: Option<BoundResult>,
    pub status: CandidateStatus,
}

/// One calibrated composite model with its channel-independent statistics.
#[derive(Debug, Clone)]
pub struct ComboCalibration {
    pub model: CalibratedModel,
    pub order_stats: SizeOrderStats,
    /// Mean prediction-set size over the unlabeled calibration set.
    pub mean_set_size: f64,
}

/// Calibration results for the full encoder x model grid.
///
/// Combinations whose calibration is infeasible at the requested risk level
/// are kept as `None`: selection skips them, and they can only surface when
/// every combination is infeasible (an error).
#[derive(Debug, Clone)]
pub struct CalibrationSet {
    pub epsilon: f64,
    pub loss: LossFunction,
    encoder_count: usize,
    model_count: usize,
    combos: Vec<Option<ComboCalibration>>,
}

impl CalibrationSet {
    /// Calibrate every composite model on the labeled set and pre-compute
    /// its order statistics and set-size estimate on the unlabeled set.
    ///
    /// Combinations run in parallel; the result does not depend on the
    /// worker count.
    pub fn build(
        bank: &ModelBank,
        labeled: &ScoreDataset,
        unlabeled: &ScoreDataset,
        loss: &LossFunction,
        epsilon: f64,
    ) -> Result<Self> {
        labeled.matches_bank(bank)?;
        unlabeled.matches_bank(bank)?;
        if labeled.is_empty() {
            return Err(Error::EmptyPartition("labeled calibration"));
        }
        if unlabeled.is_empty() {
            return Err(Error::EmptyPartition("unlabeled calibration"));
        }
        let labels = labeled
            .true_labels()
            .ok_or(Error::EmptyPartition("labeled calibration (labels)"))?;

        let pairs: Vec<(usize, usize)> = (0..bank.encoder_count())
            .flat_map(|l| (0..bank.model_count()).map(move |k| (l, k)))
            .collect();
        let combos = pairs
            .par_iter()
            .map(|&(l, k)| -> Result<Option<ComboCalibration>> {
                let cal = match calibrate(labeled.scores(l, k), labels, loss, epsilon, l, k) {
                    Ok(cal) => cal,
                    Err(Error::CalibrationInfeasible { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let stats = order_stats(unlabeled, &cal, bank)?;
                let scores = unlabeled.scores(l, k);
                let total: f64 = (0..unlabeled.len())
                    .map(|i| set_size_at(scores.row(i), cal.lambda) as f64)
                    .sum();
                Ok(Some(ComboCalibration {
                    model: cal,
                    order_stats: stats,
                    mean_set_size: total / unlabeled.len() as f64,
                }))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            epsilon,
            loss: *loss,
            encoder_count: bank.encoder_count(),
            model_count: bank.model_count(),
            combos,
        })
    }

    pub fn combo(&self, encoder_idx: usize, model_idx: usize) -> Option<&ComboCalibration> {
        self.combos[encoder_idx * self.model_count + model_idx].as_ref()
    }

    pub fn encoder_count(&self) -> usize {
        self.encoder_count
    }

    pub fn model_count(&self) -> usize {
        self.model_count
    }

    /// All successfully calibrated combinations, in encoder-major order.
    pub fn calibrated(&self) -> impl Iterator<Item = &ComboCalibration> {
        self.combos.iter().filter_map(Option::as_ref)
    }
}

/// The selection acceptance test shared by the fixed and dynamic schemes.
///
/// A candidate replaces the incumbent when it is feasible with a strictly
/// smaller estimated set size, or when the incumbent misses the violation
/// target and the candidate's bound is strictly smaller. Strict comparisons
/// keep the earliest candidate on exact ties.
pub fn selection_improves(
    best_bound: f64,
    best_size: f64,
    cand_bound: f64,
    cand_size: f64,
    beta: f64,
) -> bool {
    (cand_bound <= beta && cand_size < best_size) || (best_bound >= beta && cand_bound < best_bound)
}

fn timing_feasible(bank: &ModelBank, l: usize, k: usize, config: &ChannelConfig) -> bool {
    bank.encoders[l].tau_ul_s + bank.models[k].tau_f_s < config.deadline_s
}

/// Offline selection of one composite model from channel statistics alone.
///
/// Iterates the grid in encoder-major, model-minor order, bounding each
/// calibrated combination's violation probability with the marginal bound.
/// Returns the per-combination log alongside the outcome.
pub fn fixed_select_detailed(
    calset: &CalibrationSet,
    bank: &ModelBank,
    config: &ChannelConfig,
    beta: f64,
    grid: GridMode,
) -> Result<(SelectionOutcome, Vec<CandidateEval>)> {
    config.validate()?;
    let mut candidates = Vec::with_capacity(bank.encoder_count() * bank.model_count());
    let mut best: Option<SelectionOutcome> = None;
    let (mut best_bound, mut best_size) = (f64::INFINITY, f64::INFINITY);

    for l in 0..bank.encoder_count() {
        for k in 0..bank.model_count() {
            if !timing_feasible(bank, l, k, config) {
                candidates.push(CandidateEval {
                    encoder_idx: l,
                    model_idx: k,
                    lambda: None,
                    bound: 1.0,
                    mean_set_size: f64::INFINITY,
                    detail: None,
                    status: CandidateStatus::TimingInfeasible,
                });
                continue;
            }
            let Some(combo) = calset.combo(l, k) else {
                candidates.push(CandidateEval {
                    encoder_idx: l,
                    model_idx: k,
                    lambda: None,
                    bound: 1.0,
                    mean_set_size: f64::INFINITY,
                    detail: None,
                    status: CandidateStatus::CalibrationInfeasible,
                });
                continue;
            };
            let bound = violation_bound_marginal(
                &combo.order_stats,
                bank.encoders[l].tau_ul_s,
                bank.models[k].tau_f_s,
                config,
                grid,
            )?;
            candidates.push(CandidateEval {
                encoder_idx: l,
                model_idx: k,
                lambda: Some(combo.model.lambda),
                bound: bound.value,
                mean_set_size: combo.mean_set_size,
                detail: Some(bound),
                status: CandidateStatus::Evaluated,
            });
            if selection_improves(
                best_bound,
                best_size,
                bound.value,
                combo.mean_set_size,
                beta,
            ) {
                best_bound = bound.value;
                best_size = combo.mean_set_size;
                best = Some(SelectionOutcome {
                    encoder_idx: l,
                    model_idx: k,
                    lambda: combo.model.lambda,
                    mean_set_size: combo.mean_set_size,
                    bound: bound.value,
                    feasible: bound.value <= beta,
                });
            }
        }
    }
    match best {
        Some(outcome) => Ok((outcome, candidates)),
        None => Err(Error::NoValidCombination),
    }
}

/// Convenience wrapper that calibrates and selects in one call.
pub fn fixed_select(
    bank: &ModelBank,
    labeled: &ScoreDataset,
    unlabeled: &ScoreDataset,
    loss: &LossFunction,
    alpha: f64,
    beta: f64,
    config: &ChannelConfig,
) -> Result<SelectionOutcome> {
    let epsilon = corrected_risk_level(alpha, beta)?;
    let calset = CalibrationSet::build(bank, labeled, unlabeled, loss, epsilon)?;
    fixed_select_detailed(&calset, bank, config, beta, GridMode::default()).map(|(o, _)| o)
}

struct DynCandidate {
    tau_ul_s: f64,
    tau_f_s: f64,
    lambda: f64,
    mean_set_size: f64,
    stats: SizeOrderStats,
    status: CandidateStatus,
}

/// Per-frame edge-model selection for one fixed encoder.
///
/// Thresholds, order statistics, and set-size estimates are fixed at
/// construction; only the conditional bound minimization depends on the
/// observed uplink rate, so `select` is cheap enough to call every frame.
pub struct DynamicSelector {
    encoder_idx: usize,
    beta: f64,
    grid: GridMode,
    config: ChannelConfig,
    models: Vec<DynCandidate>,
}

impl DynamicSelector {
    pub fn new(
        calset: &CalibrationSet,
        bank: &ModelBank,
        encoder_idx: usize,
        config: &ChannelConfig,
        beta: f64,
        grid: GridMode,
    ) -> Result<Self> {
        config.validate()?;
        if encoder_idx >= bank.encoder_count() {
            return Err(Error::IndexOutOfRange {
                index: encoder_idx,
                len: bank.encoder_count(),
            });
        }
        let mut models = Vec::with_capacity(bank.model_count());
        let mut any_valid = false;
        for k in 0..bank.model_count() {
            let tau_ul_s = bank.encoders[encoder_idx].tau_ul_s;
            let tau_f_s = bank.models[k].tau_f_s;
            let status = if !timing_feasible(bank, encoder_idx, k, config) {
                CandidateStatus::TimingInfeasible
            } else if calset.combo(encoder_idx, k).is_none() {
                CandidateStatus::CalibrationInfeasible
            } else {
                any_valid = true;
                CandidateStatus::Evaluated
            };
            let (lambda, mean_set_size, stats) = match calset.combo(encoder_idx, k) {
                Some(combo) if status == CandidateStatus::Evaluated => (
                    combo.model.lambda,
                    combo.mean_set_size,
                    combo.order_stats.clone(),
                ),
                _ => (
                    0.0,
                    f64::INFINITY,
                    SizeOrderStats::new(vec![1], vec![0]).expect("placeholder stats"),
                ),
            };
            models.push(DynCandidate {
                tau_ul_s,
                tau_f_s,
                lambda,
                mean_set_size,
                stats,
                status,
            });
        }
        if !any_valid {
            return Err(Error::NoValidCombination);
        }
        Ok(Self {
            encoder_idx,
            beta,
            grid,
            config: *config,
            models,
        })
    }

    pub fn encoder_idx(&self) -> usize {
        self.encoder_idx
    }

    /// Pick the edge model for one frame given the observed uplink rate.
    pub fn select(&self, rate_ul: f64) -> Result<SelectionOutcome> {
        self.select_detailed(rate_ul).map(|(outcome, _)| outcome)
    }

    pub fn select_detailed(&self, rate_ul: f64) -> Result<(SelectionOutcome, Vec<CandidateEval>)> {
        if !(rate_ul > 0.0 && rate_ul.is_finite()) {
            return Err(Error::InvalidRate { rate: rate_ul });
        }
        let mut candidates = Vec::with_capacity(self.models.len());
        let mut best: Option<SelectionOutcome> = None;
        let (mut best_bound, mut best_size) = (f64::INFINITY, f64::INFINITY);
        for (k, cand) in self.models.iter().enumerate() {
            if cand.status != CandidateStatus::Evaluated {
                candidates.push(CandidateEval {
                    encoder_idx: self.encoder_idx,
                    model_idx: k,
                    lambda: None,
                    bound: 1.0,
                    mean_set_size: f64::INFINITY,
                    detail: None,
                    status: cand.status,
                });
                continue;
            }
            let bound = violation_bound_conditional(
                &cand.stats,
                cand.tau_ul_s,
                cand.tau_f_s,
                rate_ul,
                &self.config,
                self.grid,
            )?;
            candidates.push(CandidateEval {
                encoder_idx: self.encoder_idx,
                model_idx: k,
                lambda: Some(cand.lambda),
                bound: bound.value,
                mean_set_size: cand.mean_set_size,
                detail: Some(bound),
                status: cand.status,
            });
            if selection_improves(
                best_bound,
                best_size,
                bound.value,
                cand.mean_set_size,
                self.beta,
            ) {
                best_bound = bound.value;
                best_size = cand.mean_set_size;
                best = Some(SelectionOutcome {
                    encoder_idx: self.encoder_idx,
                    model_idx: k,
                    lambda: cand.lambda,
                    mean_set_size: cand.mean_set_size,
                    bound: bound.value,
                    feasible: bound.value <= self.beta,
                });
            }
        }
        match best {
            Some(outcome) => Ok((outcome, candidates)),
            None => Err(Error::NoValidCombination),
        }
    }
}

/// One-shot dynamic selection; prefer [`DynamicSelector`] when calling per
/// frame.
pub fn dynamic_select(
    calset: &CalibrationSet,
    bank: &ModelBank,
    encoder_idx: usize,
    config: &ChannelConfig,
    beta: f64,
    grid: GridMode,
    rate_ul: f64,
) -> Result<SelectionOutcome> {
    DynamicSelector::new(calset, bank, encoder_idx, config, beta, grid)?.select(rate_ul)
}

/// Largest prediction-set size still transmittable before the deadline at
/// the observed downlink rate, never below one label.
pub fn truncation_cap(
    rate_dl: f64,
    deadline_s: f64,
    tau_ul_s: f64,
    tau_f_s: f64,
    t_ul_actual_s: f64,
    d_lbl_bits: u64,
) -> usize {
    let budget_bits = rate_dl * (deadline_s - tau_ul_s - tau_f_s - t_ul_actual_s);
    let cap = (budget_bits / d_lbl_bits as f64).floor();
    if cap.is_nan() || cap < 1.0 {
        1
    } else if cap >= usize::MAX as f64 {
        usize::MAX
    } else {
        cap as usize
    }
}

/// Threshold prediction set intersected with the `cap` highest-scoring
/// labels (score ties broken toward the lower label index).
pub fn truncated_set(scores: &[f64], lambda: f64, cap: usize) -> Vec<usize> {
    let mut set = prediction_set(scores, lambda);
    if set.len() <= cap {
        return set;
    }
    set.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    set.truncate(cap);
    set.sort_unstable();
    set
}

/// Loss under the relaxed objective: the base loss when the deadline was
/// met, the worst-case loss otherwise.
pub fn relaxed_loss(base_loss: f64, met_deadline: bool, gamma: f64) -> f64 {
    if met_deadline {
        base_loss
    } else {
        gamma
    }
}

/// Target level `(1 - beta) * alpha + beta * gamma` for the relaxed loss.
pub fn relaxed_risk_level(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    corrected_risk_level(alpha, beta)?;
    Ok((1.0 - beta) * alpha + beta * gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, split};
    use crate::testutil::{small_bank, uniform_config};
    use approx::assert_relative_eq;

    fn build_calset(
        l: usize,
        k: usize,
        labels: usize,
        n: usize,
        epsilon: f64,
    ) -> (ModelBank, CalibrationSet) {
        let bank = small_bank(l, k, labels);
        let ds = generate_synthetic(&uniform_config(&bank, 0.9, 5), n, &bank).unwrap();
        let idx = split(&ds, n / 3, n / 3, 1).unwrap();
        let (lab, unl, _) = idx.materialize(&ds).unwrap();
        let loss = LossFunction::miss_detection();
        let calset = CalibrationSet::build(&bank, &lab, &unl, &loss, epsilon).unwrap();
        (bank, calset)
    }

    #[test]
    fn acceptance_rule_prefers_only_feasible_candidate() {
        // Bounds {0.005, 0.02}, sizes {3.0, 1.0}, beta = 0.01: the first is
        // the only feasible candidate and wins despite its larger set.
        let beta = 0.01;
        let (mut bb, mut bs) = (f64::INFINITY, f64::INFINITY);
        assert!(selection_improves(bb, bs, 0.005, 3.0, beta));
        bb = 0.005;
        bs = 3.0;
        assert!(!selection_improves(bb, bs, 0.02, 1.0, beta));
    }

    #[test]
    fn acceptance_rule_falls_back_to_smallest_bound() {
        // Bounds {0.05, 0.03}, beta = 0.01: none feasible, the smaller bound
        // wins.
        let beta = 0.01;
        let (mut bb, mut bs) = (f64::INFINITY, f64::INFINITY);
        assert!(selection_improves(bb, bs, 0.05, 1.0, beta));
        bb = 0.05;
        bs = 1.0;
        assert!(selection_improves(bb, bs, 0.03, 5.0, beta));
    }

    #[test]
    fn acceptance_rule_keeps_feasible_small_bound_candidate() {
        // Two models with conditional bounds {0.004, 0.012} and sizes
        // {2.5, 1.2} at beta = 0.01: only the first is feasible and stays
        // selected even though the second has a smaller set estimate.
        let beta = 0.01;
        let (mut bb, mut bs) = (f64::INFINITY, f64::INFINITY);
        assert!(selection_improves(bb, bs, 0.004, 2.5, beta));
        bb = 0.004;
        bs = 2.5;
        assert!(!selection_improves(bb, bs, 0.012, 1.2, beta));
    }

    #[test]
    fn acceptance_rule_keeps_earlier_on_exact_tie() {
        let beta = 0.01;
        assert!(!selection_improves(0.03, 5.0, 0.03, 5.0, beta));
        assert!(!selection_improves(0.005, 2.0, 0.004, 2.0, beta));
    }

    #[test]
    fn single_candidate_is_returned_with_feasibility_flag() {
        let (bank, calset) = build_calset(1, 1, 6, 120, 0.2);
        let good = ChannelConfig::new(30e6, 1e4, 1e4, 0.150).unwrap();
        let (outcome, log) =
            fixed_select_detailed(&calset, &bank, &good, 0.05, GridMode::Exact).unwrap();
        assert_eq!((outcome.encoder_idx, outcome.model_idx), (0, 0));
        assert_eq!(log.len(), 1);

        let bad = ChannelConfig::new(30e6, 1e-6, 1e-6, 0.150).unwrap();
        let (outcome, _) =
            fixed_select_detailed(&calset, &bank, &bad, 0.05, GridMode::Exact).unwrap();
        assert!(!outcome.feasible);
    }

    #[test]
    fn timing_infeasible_combinations_are_recorded_not_selected() {
        let (bank, calset) = build_calset(1, 2, 6, 120, 0.2);
        // Deadline below tau_ul + tau_f of the second model only.
        let cfg = ChannelConfig::new(30e6, 1e4, 1e4, 0.050).unwrap();
        let (outcome, log) =
            fixed_select_detailed(&calset, &bank, &cfg, 0.05, GridMode::Exact).unwrap();
        assert_eq!(outcome.model_idx, 0);
        assert_eq!(log[1].status, CandidateStatus::TimingInfeasible);
        assert_eq!(log[1].bound, 1.0);
        assert!(log[1].mean_set_size.is_infinite());
    }

    #[test]
    fn all_infeasible_is_an_error() {
        let (bank, calset) = build_calset(1, 1, 6, 120, 0.2);
        let cfg = ChannelConfig::new(30e6, 1e4, 1e4, 0.020).unwrap();
        assert!(matches!(
            fixed_select_detailed(&calset, &bank, &cfg, 0.05, GridMode::Exact),
            Err(Error::NoValidCombination)
        ));
    }

    #[test]
    fn dynamic_huge_rate_picks_smallest_estimated_set() {
        let (bank, calset) = build_calset(1, 3, 8, 300, 0.2);
        let cfg = ChannelConfig::new(30e6, 10.0, 1e4, 0.150).unwrap();
        let selector =
            DynamicSelector::new(&calset, &bank, 0, &cfg, 0.05, GridMode::Exact).unwrap();
        let outcome = selector.select(1e12).unwrap();
        let min_size = (0..3)
            .filter_map(|k| calset.combo(0, k))
            .map(|c| c.mean_set_size)
            .fold(f64::INFINITY, f64::min);
        assert!(outcome.feasible);
        assert_relative_eq!(outcome.mean_set_size, min_size);
    }

    #[test]
    fn dynamic_tiny_rate_returns_first_model_infeasible() {
        let (bank, calset) = build_calset(1, 2, 8, 300, 0.2);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let selector =
            DynamicSelector::new(&calset, &bank, 0, &cfg, 0.01, GridMode::Exact).unwrap();
        let (outcome, log) = selector.select_detailed(1e-3).unwrap();
        assert!(!outcome.feasible);
        assert_eq!(outcome.model_idx, 0);
        assert!(log.iter().all(|c| c.bound == 1.0));
    }

    #[test]
    fn dynamic_rejects_invalid_rate() {
        let (bank, calset) = build_calset(1, 2, 8, 300, 0.2);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let selector =
            DynamicSelector::new(&calset, &bank, 0, &cfg, 0.01, GridMode::Exact).unwrap();
        assert!(selector.select(0.0).is_err());
        assert!(selector.select(f64::NAN).is_err());
    }

    #[test]
    fn dynamic_monotone_dominance_in_rate() {
        let (bank, calset) = build_calset(1, 3, 8, 300, 0.2);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let selector =
            DynamicSelector::new(&calset, &bank, 0, &cfg, 0.01, GridMode::Exact).unwrap();
        let rates = [1e5, 1e6, 5e6, 1e7, 5e7, 1e8, 1e9];
        for pair in rates.windows(2) {
            let low = selector.select(pair[0]).unwrap();
            let high = selector.select(pair[1]).unwrap();
            assert!(
                high.mean_set_size <= low.mean_set_size || high.bound <= low.bound,
                "dominance violated between rates {} and {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn selection_is_deterministic() {
        let (bank, calset) = build_calset(2, 2, 8, 300, 0.2);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let a = fixed_select_detailed(&calset, &bank, &cfg, 0.01, GridMode::Subgrid).unwrap();
        let b = fixed_select_detailed(&calset, &bank, &cfg, 0.01, GridMode::Subgrid).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn truncation_cap_examples() {
        // 200 transmittable bits at 64 bits per label.
        assert_eq!(truncation_cap(2000.0, 0.150, 0.0, 0.0, 0.050, 64), 3);
        // No remaining time.
        assert_eq!(truncation_cap(2000.0, 0.150, 0.010, 0.024, 0.200, 64), 1);
        // Exactly one label fits.
        assert_eq!(truncation_cap(640.0, 0.150, 0.0, 0.0, 0.050, 64), 1);
        // Infinite uplink time floors at one label.
        assert_eq!(
            truncation_cap(2000.0, 0.150, 0.0, 0.0, f64::INFINITY, 64),
            1
        );
    }

    #[test]
    fn truncated_set_respects_cap_and_nesting() {
        let scores = [0.9, 0.8, 0.7, 0.1];
        // Threshold set {0, 1, 2}; top-2 keeps {0, 1}.
        assert_eq!(truncated_set(&scores, 0.5, 2), vec![0, 1]);
        // Cap not binding.
        assert_eq!(truncated_set(&scores, 0.25, 5), vec![0, 1]);
        // Cap one yields a singleton; empty threshold set stays empty.
        assert_eq!(truncated_set(&scores, 0.5, 1), vec![0]);
        assert!(truncated_set(&scores, 0.0, 1).is_empty());
        // Ties resolve toward the lower index.
        assert_eq!(truncated_set(&[0.5, 0.9, 0.9], 0.6, 1), vec![1]);
        assert_eq!(truncated_set(&[0.9, 0.5, 0.9], 0.6, 1), vec![0]);
    }

    #[test]
    fn truncated_set_is_subset_of_threshold_set() {
        let scores = [0.31, 0.94, 0.27, 0.66, 0.5, 0.88];
        for lambda in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let full = prediction_set(&scores, lambda);
            for cap in 1..=scores.len() {
                let trunc = truncated_set(&scores, lambda, cap);
                assert!(trunc.len() <= cap);
                assert!(trunc.iter().all(|y| full.contains(y)));
                if full.len() <= cap {
                    assert_eq!(trunc, full);
                }
            }
        }
    }

    #[test]
    fn relaxed_loss_values() {
        assert_eq!(relaxed_loss(0.0, true, 1.0), 0.0);
        assert_eq!(relaxed_loss(0.0, false, 1.0), 1.0);
        assert_eq!(relaxed_loss(0.3, true, 2.0), 0.3);
        assert_relative_eq!(relaxed_risk_level(0.01, 0.01, 1.0).unwrap(), 0.0199);
    }

    /// Brute-force argmin oracle over the candidate log.
    fn oracle_pick(cands: &[CandidateEval], beta: f64) -> (usize, usize) {
        let valid: Vec<&CandidateEval> = cands
            .iter()
            .filter(|c| c.status == CandidateStatus::Evaluated)
            .collect();
        let feasible: Vec<&&CandidateEval> = valid.iter().filter(|c| c.bound <= beta).collect();
        let best = if !feasible.is_empty() {
            feasible
                .iter()
                .fold(None::<&&&CandidateEval>, |acc, c| match acc {
                    Some(b) if c.mean_set_size < b.mean_set_size => Some(c),
                    None => Some(c),
                    other => other,
                })
                .unwrap()
        } else {
            &valid
                .iter()
                .fold(None::<&&CandidateEval>, |acc, c| match acc {
                    Some(b) if c.bound < b.bound => Some(c),
                    None => Some(c),
                    other => other,
                })
                .unwrap()
        };
        (best.encoder_idx, best.model_idx)
    }

    #[test]
    fn fixed_selection_matches_argmin_oracle() {
        for seed in 0..20 {
            let bank = small_bank(2, 2, 6);
            let ds = generate_synthetic(&uniform_config(&bank, 0.85, seed), 45, &bank).unwrap();
            let idx = split(&ds, 15, 15, seed).unwrap();
            let (lab, unl, _) = idx.materialize(&ds).unwrap();
            let loss = LossFunction::miss_detection();
            let calset = CalibrationSet::build(&bank, &lab, &unl, &loss, 0.3).unwrap();
            let cfg = ChannelConfig::new(30e6, 2.0 + seed as f64, 8.0, 0.150).unwrap();
            let beta = 0.05;
            let (outcome, log) =
                fixed_select_detailed(&calset, &bank, &cfg, beta, GridMode::Exact).unwrap();
            assert_eq!(
                (outcome.encoder_idx, outcome.model_idx),
                oracle_pick(&log, beta),
                "seed {seed}"
            );
        }
    }
}
