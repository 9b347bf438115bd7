//! Conformal risk control: monotone losses, threshold prediction sets, and
//! the finite-sample-corrected threshold search.
//!
//! A prediction set at threshold `lambda` contains every label whose score is
//! at least `1 - lambda`, so sets are nested in `lambda` and any monotone
//! loss is non-increasing in it. Calibration picks the smallest `lambda`
//! whose empirical risk on a labeled calibration set stays below
//! `epsilon - (gamma - epsilon) / N`; the correction term is what turns the
//! empirical condition into a guarantee on unseen samples. Because the
//! empirical risk only changes when `1 - lambda` crosses an observed score,
//! the infimum is attained on the finite candidate grid
//! `{0} ∪ {1 - s : s observed} ∪ {1}` and can be located by bisection over
//! the sorted candidates.

use serde::{Deserialize, Serialize};

use crate::dataset::ScoreMatrix;
use crate::error::{Error, Result};

/// The supported monotone loss kinds.
///
/// With singleton ground truth the two coincide; `FalseNegativeRate` is kept
/// distinct for label-set ground truths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    MissDetection01,
    FalseNegativeRate,
}

/// A monotone, bounded set-valued loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossFunction {
    pub kind: LossKind,
    /// A priori upper bound on the loss; enters the finite-sample correction.
    pub gamma: f64,
}

impl LossFunction {
    pub fn new(kind: LossKind, gamma: f64) -> Result<Self> {
        // Both kinds take values in [0, 1]; gamma must dominate them.
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be finite and >= 1 for this loss, got {gamma}"
            )));
        }
        Ok(Self { kind, gamma })
    }

    /// 0-1 missed detection with the tight bound `gamma = 1`.
    pub fn miss_detection() -> Self {
        Self {
            kind: LossKind::MissDetection01,
            gamma: 1.0,
        }
    }

    /// Loss of a prediction set against a singleton true label.
    pub fn eval(&self, set: &[usize], true_label: usize) -> f64 {
        self.eval_membership(set.contains(&true_label))
    }

    /// Fast path: both kinds depend only on whether the true label is in the
    /// set when the ground truth is a single label.
    pub fn eval_membership(&self, contains_true: bool) -> f64 {
        match self.kind {
            LossKind::MissDetection01 | LossKind::FalseNegativeRate => {
                if contains_true {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// A composite model together with its calibrated threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedModel {
    pub encoder_idx: usize,
    pub model_idx: usize,
    /// Calibrated threshold in [0, 1].
    pub lambda: f64,
    /// Target risk the calibration aimed at.
    pub epsilon: f64,
    /// Size of the labeled calibration set used.
    pub n_calibration: usize,
}

/// Labels whose score reaches `1 - lambda`, in ascending index order.
pub fn prediction_set(scores: &[f64], lambda: f64) -> Vec<usize> {
    let threshold = 1.0 - lambda;
    scores
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= threshold)
        .map(|(y, _)| y)
        .collect()
}

/// Size of the threshold set without materializing it.
pub fn set_size_at(scores: &[f64], lambda: f64) -> usize {
    let threshold = 1.0 - lambda;
    scores.iter().filter(|s| **s >= threshold).count()
}

/// Whether `label` belongs to the threshold set.
pub fn contains_at(scores: &[f64], lambda: f64, label: usize) -> bool {
    scores[label] >= 1.0 - lambda
}

/// Risk level to calibrate at so that the loss requirement `alpha` holds
/// conditioned on meeting the deadline with violation probability `beta`.
pub fn corrected_risk_level(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
        return Err(Error::InvalidConfig(format!(
            "beta must lie in [0, 1), got {beta}"
        )));
    }
    Ok(alpha * (1.0 - beta))
}

/// Mean loss over the calibration samples at threshold `lambda`.
///
/// Non-increasing in `lambda` for any monotone loss.
pub fn empirical_risk(
    scores: &ScoreMatrix,
    labels: &[u32],
    loss: &LossFunction,
    lambda: f64,
) -> f64 {
    debug_assert_eq!(scores.rows(), labels.len());
    let n = scores.rows();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (i, label) in labels.iter().enumerate() {
        let contains = contains_at(scores.row(i), lambda, *label as usize);
        total += loss.eval_membership(contains);
    }
    total / n as f64
}

/// Calibrate the threshold of one composite model.
///
/// Returns the smallest candidate `lambda` whose empirical risk satisfies
/// the corrected condition `risk <= epsilon - (gamma - epsilon) / N`, or
/// [`Error::CalibrationInfeasible`] when even the full prediction set at
/// `lambda = 1` fails it (epsilon too small for the calibration size).
pub fn calibrate(
    scores: &ScoreMatrix,
    labels: &[u32],
    loss: &LossFunction,
    epsilon: f64,
    encoder_idx: usize,
    model_idx: usize,
) -> Result<CalibratedModel> {
    let n = scores.rows();
    if n == 0 || labels.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "calibration needs matching scores and labels, got {} rows and {} labels",
            n,
            labels.len()
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if epsilon >= loss.gamma {
        // Signals misconfiguration rather than silently clamping.
        return Err(Error::InvalidConfig(format!(
            "epsilon {epsilon} must be below gamma {}",
            loss.gamma
        )));
    }
    let corrected = epsilon - (loss.gamma - epsilon) / n as f64;

    let mut candidates: Vec<f64> = Vec::with_capacity(n * scores.cols() + 2);
    candidates.push(0.0);
    candidates.push(1.0);
    candidates.extend(scores.values().iter().map(|s| 1.0 - s));
    candidates.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let feasible = |lambda: f64| empirical_risk(scores, labels, loss, lambda) <= corrected;
    if !feasible(1.0) {
        return Err(Error::CalibrationInfeasible {
            epsilon,
            gamma: loss.gamma,
            n_calibration: n,
        });
    }
    // The risk is a non-increasing step function of lambda that only jumps at
    // candidate points, so the feasible region is a suffix of the sorted
    // candidate list.
    let first_ok = candidates.partition_point(|&lambda| !feasible(lambda));
    Ok(CalibratedModel {
        encoder_idx,
        model_idx,
        lambda: candidates[first_ok],
        epsilon,
        n_calibration: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn matrix_from_rows(rows: &[Vec<f64>]) -> ScoreMatrix {
        let cols = rows[0].len();
        ScoreMatrix::new(rows.len(), cols, rows.concat()).unwrap()
    }

    /// Independent oracle: scan every candidate in ascending order and take
    /// the first that satisfies the corrected condition, evaluating the risk
    /// straight from the set definition.
    fn calibrate_oracle(
        rows: &[Vec<f64>],
        labels: &[u32],
        loss: &LossFunction,
        epsilon: f64,
    ) -> Option<f64> {
        let n = rows.len() as f64;
        let corrected = epsilon - (loss.gamma - epsilon) / n;
        let mut candidates: Vec<f64> = vec![0.0, 1.0];
        candidates.extend(rows.iter().flatten().map(|s| 1.0 - s));
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        candidates.dedup();
        for &lambda in &candidates {
            let risk: f64 = rows
                .iter()
                .zip(labels)
                .map(|(row, y)| loss.eval(&prediction_set(row, lambda), *y as usize))
                .sum::<f64>()
                / n;
            if risk <= corrected {
                return Some(lambda);
            }
        }
        None
    }

    #[test]
    fn lambda_zero_requires_score_one() {
        assert!(prediction_set(&[0.9, 0.2, 0.05], 0.0).is_empty());
        assert_eq!(prediction_set(&[1.0, 0.2], 0.0), vec![0]);
    }

    #[test]
    fn lambda_one_includes_everything() {
        assert_eq!(prediction_set(&[0.9, 0.2, 0.05], 1.0), vec![0, 1, 2]);
    }

    #[test]
    fn threshold_set_example() {
        // Only 0.9 >= 0.7.
        assert_eq!(prediction_set(&[0.9, 0.2, 0.05], 0.3), vec![0]);
        assert_eq!(set_size_at(&[0.9, 0.2, 0.05], 0.3), 1);
        assert!(contains_at(&[0.9, 0.2, 0.05], 0.3, 0));
        assert!(!contains_at(&[0.9, 0.2, 0.05], 0.3, 1));
    }

    #[test]
    fn corrected_risk_level_values() {
        assert_relative_eq!(corrected_risk_level(0.01, 0.01).unwrap(), 0.0099);
        assert_relative_eq!(corrected_risk_level(0.37, 0.0).unwrap(), 0.37);
        assert_relative_eq!(corrected_risk_level(0.05, 0.5).unwrap(), 0.025);
        assert!(corrected_risk_level(0.0, 0.1).is_err());
        assert!(corrected_risk_level(1.0, 0.1).is_err());
        assert!(corrected_risk_level(0.1, 1.0).is_err());
    }

    #[test]
    fn four_sample_calibration() {
        // True-label scores 0.9, 0.8, 0.6, 0.3; epsilon 0.4 allows one miss
        // after the correction, attained at lambda = 0.4.
        let rows = vec![
            vec![0.9, 0.05],
            vec![0.8, 0.1],
            vec![0.6, 0.2],
            vec![0.3, 0.25],
        ];
        let labels = vec![0, 0, 0, 0];
        let loss = LossFunction::miss_detection();
        let cal = calibrate(&matrix_from_rows(&rows), &labels, &loss, 0.4, 0, 0).unwrap();
        assert_relative_eq!(cal.lambda, 0.4, epsilon = 1e-15);
        assert_eq!(
            cal.lambda,
            calibrate_oracle(&rows, &labels, &loss, 0.4).unwrap()
        );
    }

    #[test]
    fn perfect_scores_calibrate_to_zero() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.3], vec![1.0, 0.2]];
        let labels = vec![0, 0, 0];
        let loss = LossFunction::miss_detection();
        let cal = calibrate(&matrix_from_rows(&rows), &labels, &loss, 0.5, 0, 0).unwrap();
        assert_eq!(cal.lambda, 0.0);
    }

    #[test]
    fn negative_corrected_level_is_infeasible() {
        // N = 4, epsilon = 0.1, gamma = 1: corrected level 0.1 - 0.9/4 < 0.
        let rows = vec![vec![0.9], vec![0.8], vec![0.7], vec![0.6]];
        let labels = vec![0, 0, 0, 0];
        let loss = LossFunction::miss_detection();
        let err = calibrate(&matrix_from_rows(&rows), &labels, &loss, 0.1, 0, 0).unwrap_err();
        assert!(matches!(err, Error::CalibrationInfeasible { .. }));
    }

    #[test]
    fn epsilon_at_or_above_gamma_is_rejected() {
        let rows = vec![vec![0.9]];
        let labels = vec![0];
        let loss = LossFunction::miss_detection();
        assert!(calibrate(&matrix_from_rows(&rows), &labels, &loss, 1.0, 0, 0).is_err());
    }

    #[test]
    fn empirical_risk_examples() {
        let rows = vec![
            vec![0.9, 0.05],
            vec![0.8, 0.1],
            vec![0.6, 0.2],
            vec![0.3, 0.25],
        ];
        let m = matrix_from_rows(&rows);
        let labels = vec![0, 0, 0, 0];
        let loss = LossFunction::miss_detection();
        assert_eq!(empirical_risk(&m, &labels, &loss, 1.0), 0.0);
        assert_eq!(empirical_risk(&m, &labels, &loss, 0.0), 1.0);
        assert_relative_eq!(empirical_risk(&m, &labels, &loss, 0.4), 0.25);
    }

    #[test]
    fn calibrated_threshold_monotone_in_epsilon() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64) / 40.0, 1.0 - (i as f64) / 40.0])
            .collect();
        let labels = vec![0u32; 40];
        let m = matrix_from_rows(&rows);
        let loss = LossFunction::miss_detection();
        let mut prev = f64::INFINITY;
        for eps in [0.2, 0.3, 0.5, 0.7, 0.9] {
            let cal = calibrate(&m, &labels, &loss, eps, 0, 0).unwrap();
            assert!(cal.lambda <= prev, "lambda not monotone at eps {eps}");
            prev = cal.lambda;
        }
    }

    #[test]
    fn recalibrated_risk_satisfies_corrected_condition() {
        let rows: Vec<Vec<f64>> = (0..25).map(|i| vec![0.3 + 0.027 * i as f64, 0.1]).collect();
        let labels = vec![0u32; 25];
        let m = matrix_from_rows(&rows);
        let loss = LossFunction::miss_detection();
        let eps = 0.3;
        let cal = calibrate(&m, &labels, &loss, eps, 0, 0).unwrap();
        let corrected = eps - (loss.gamma - eps) / 25.0;
        assert!(empirical_risk(&m, &labels, &loss, cal.lambda) <= corrected);
    }

    #[test]
    fn false_negative_rate_matches_miss_loss_for_singletons() {
        let fnr = LossFunction::new(LossKind::FalseNegativeRate, 1.0).unwrap();
        let miss = LossFunction::miss_detection();
        assert_eq!(fnr.eval(&[1, 3], 3), miss.eval(&[1, 3], 3));
        assert_eq!(fnr.eval(&[1, 3], 2), miss.eval(&[1, 3], 2));
    }

    proptest! {
        #[test]
        fn sets_nested_in_lambda(
            scores in proptest::collection::vec(0.0f64..=1.0, 1..20),
            l1 in 0.0f64..=1.0,
            l2 in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
            let small = prediction_set(&scores, lo);
            let large = prediction_set(&scores, hi);
            prop_assert!(small.iter().all(|y| large.contains(y)));
        }

        #[test]
        fn risk_non_increasing_in_lambda(
            rows in proptest::collection::vec(
                proptest::collection::vec(0.0f64..=1.0, 4), 1..16),
            lambdas in proptest::collection::vec(0.0f64..=1.0, 2),
        ) {
            let labels: Vec<u32> = (0..rows.len()).map(|i| (i % 4) as u32).collect();
            let m = matrix_from_rows(&rows);
            for loss in [
                LossFunction::miss_detection(),
                LossFunction::new(LossKind::FalseNegativeRate, 1.0).unwrap(),
            ] {
                let (lo, hi) = if lambdas[0] <= lambdas[1] {
                    (lambdas[0], lambdas[1])
                } else {
                    (lambdas[1], lambdas[0])
                };
                prop_assert!(
                    empirical_risk(&m, &labels, &loss, hi)
                        <= empirical_risk(&m, &labels, &loss, lo)
                );
            }
        }

        #[test]
        fn calibrate_matches_exhaustive_oracle(
            rows in proptest::collection::vec(
                proptest::collection::vec(0.0f64..=1.0, 3), 2..30),
            eps in 0.05f64..0.95,
        ) {
            let labels: Vec<u32> = (0..rows.len()).map(|i| (i % 3) as u32).collect();
            let m = matrix_from_rows(&rows);
            let loss = LossFunction::miss_detection();
            let got = calibrate(&m, &labels, &loss, eps, 0, 0).ok().map(|c| c.lambda);
            let want = calibrate_oracle(&rows, &labels, &loss, eps);
            prop_assert_eq!(got, want);
        }
    }
}
