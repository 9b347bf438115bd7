//! Monte Carlo evaluation of selection schemes over frames.
//!
//! A frame draws an evaluation sample (with replacement) and one fading
//! realization per direction, runs the scheme's selection, builds the
//! prediction set, and times the two transmissions against the deadline.
//! Frame RNG streams are derived from the master seed and the frame index
//! alone, so frames parallelize deterministically and different SNR points
//! and schemes see common random numbers. Per-frame results are the source
//! of truth; reports are aggregations of them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    downlink_time, meets_deadline, sample_link, uplink_time, ChannelConfig, LinkDraw,
};
use crate::dataset::{ModelBank, ScoreDataset};
use crate::error::{Error, Result};
use crate::selection::{
    fixed_select_detailed, relaxed_loss, truncation_cap, CalibrationSet, DynamicSelector,
};
use crate::{GridMode, LossFunction};

/// What to run in each frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SchemeSpec {
    /// One composite model committed offline per SNR point.
    Fixed,
    /// Encoder fixed offline, edge model re-picked per frame.
    Dynamic,
    /// Dynamic selection plus prediction-set truncation to the remaining
    /// downlink budget.
    DynamicTruncated,
    /// A fixed combination emitting the kappa highest-scoring labels.
    BaselineTopk {
        encoder_idx: usize,
        model_idx: usize,
        kappa: usize,
    },
    /// A fixed combination emitting its calibrated threshold set.
    BaselineCalibrated {
        encoder_idx: usize,
        model_idx: usize,
    },
}

impl SchemeSpec {
    /// Stable label used in report rows (encoder/model shown 1-based).
    pub fn label(&self) -> String {
        match self {
            SchemeSpec::Fixed => "fixed".into(),
            SchemeSpec::Dynamic => "dynamic".into(),
            SchemeSpec::DynamicTruncated => "dynamic_truncated".into(),
            SchemeSpec::BaselineTopk {
                encoder_idx,
                model_idx,
                kappa,
            } => format!(
                "baseline_topk:{}:{}x{}",
                kappa,
                encoder_idx + 1,
                model_idx + 1
            ),
            SchemeSpec::BaselineCalibrated {
                encoder_idx,
                model_idx,
            } => format!("baseline_calibrated:{}x{}", encoder_idx + 1, model_idx + 1),
        }
    }
}

/// Everything observed about one simulated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub encoder_idx: usize,
    pub model_idx: usize,
    pub rate_ul: f64,
    pub rate_dl: f64,
    pub d_ul_bits: u64,
    pub set_size: usize,
    pub t_total_s: f64,
    pub met_deadline: bool,
    pub loss: f64,
    pub relaxed_loss: f64,
}

/// Fraction of frames that picked one combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionShare {
    pub encoder_idx: usize,
    pub model_idx: usize,
    pub share: f64,
}

/// Aggregated metrics for one (scheme, SNR) point.
///
/// Conditional quantities (loss and set size) average only over frames that
/// met the deadline; the relaxed loss averages over all frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheme: String,
    pub snr_ul_db: f64,
    pub snr_dl_db: f64,
    pub n_frames: usize,
    pub n_met: usize,
    pub cond_loss: f64,
    pub cond_loss_se: f64,
    pub violation_rate: f64,
    pub violation_rate_se: f64,
    pub mean_set_size: f64,
    pub mean_set_size_se: f64,
    pub relaxed_loss_mean: f64,
    pub relaxed_loss_se: f64,
    pub selection: Vec<SelectionShare>,
    /// Whether the offline selection behind this point met the violation
    /// target (always true for baselines).
    pub offline_feasible: bool,
}

/// The per-frame decision procedure, resolved once per (scheme, SNR) point.
enum FramePolicy {
    Static {
        encoder_idx: usize,
        model_idx: usize,
        rule: SetRule,
    },
    Dynamic {
        selector: DynamicSelector,
        /// Offline choice (model index, lambda) recorded when the uplink
        /// rate degenerates to zero.
        fallback: (usize, f64),
        truncate: bool,
    },
}

#[derive(Debug, Clone, Copy)]
enum SetRule {
    Threshold(f64),
    TopK(usize),
}

/// The `kappa` highest-scoring labels, ties broken toward lower indices.
pub fn baseline_topk_set(scores: &[f64], kappa: usize) -> Result<Vec<usize>> {
    if kappa < 1 || kappa > scores.len() {
        return Err(Error::InvalidConfig(format!(
            "kappa must lie in 1..={}, got {kappa}",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut set = order[..kappa].to_vec();
    set.sort_unstable();
    Ok(set)
}

/// 1-based rank of `label` under (score desc, index asc) ordering.
fn rank_of(scores: &[f64], label: usize) -> usize {
    let s = scores[label];
    let mut rank = 1;
    for (y, v) in scores.iter().enumerate() {
        if *v > s || (*v == s && y < label) {
            rank += 1;
        }
    }
    rank
}

/// Size of the emitted set and whether it contains the true label, without
/// materializing the set.
fn emitted_set(
    scores: &[f64],
    rule: SetRule,
    cap: Option<usize>,
    true_label: usize,
) -> (usize, bool) {
    match rule {
        SetRule::Threshold(lambda) => {
            let threshold = 1.0 - lambda;
            let count = scores.iter().filter(|s| **s >= threshold).count();
            let mut contains = scores[true_label] >= threshold;
            let mut size = count;
            if let Some(cap) = cap {
                if count > cap {
                    size = cap;
                    // Labels above the threshold occupy the top ranks, so the
                    // truncated set is exactly the cap best-ranked of them.
                    contains = contains && rank_of(scores, true_label) <= cap;
                }
            }
            (size, contains)
        }
        SetRule::TopK(kappa) => {
            let kappa = kappa.min(scores.len());
            (kappa, rank_of(scores, true_label) <= kappa)
        }
    }
}

/// Simulate one frame end to end.
fn run_frame_policy(
    policy: &FramePolicy,
    dataset: &ScoreDataset,
    sample_idx: usize,
    bank: &ModelBank,
    link: &LinkDraw,
    config: &ChannelConfig,
    loss: &LossFunction,
) -> Result<FrameResult> {
    let true_label = dataset
        .true_labels()
        .ok_or(Error::EmptyPartition("evaluation (labels)"))?[sample_idx]
        as usize;

    let (encoder_idx, model_idx, rule, truncate) = match policy {
        FramePolicy::Static {
            encoder_idx,
            model_idx,
            rule,
        } => (*encoder_idx, *model_idx, *rule, false),
        FramePolicy::Dynamic {
            selector,
            fallback,
            truncate,
        } => {
            if link.rate_ul > 0.0 {
                let outcome = selector.select(link.rate_ul)?;
                (
                    outcome.encoder_idx,
                    outcome.model_idx,
                    SetRule::Threshold(outcome.lambda),
                    *truncate,
                )
            } else {
                // A zero-rate uplink violates the deadline no matter the
                // model; record the offline choice.
                (
                    selector.encoder_idx(),
                    fallback.0,
                    SetRule::Threshold(fallback.1),
                    *truncate,
                )
            }
        }
    };

    let tau_ul = bank.encoders[encoder_idx].tau_ul_s;
    let tau_f = bank.models[model_idx].tau_f_s;
    let d_ul = dataset.ul_sizes(encoder_idx)[sample_idx];
    let t_ul = uplink_time(tau_ul, d_ul as f64, link.rate_ul);

    let cap = truncate.then(|| {
        truncation_cap(
            link.rate_dl,
            config.deadline_s,
            tau_ul,
            tau_f,
            t_ul,
            bank.d_lbl_bits,
        )
    });
    let scores = dataset.scores(encoder_idx, model_idx).row(sample_idx);
    let (set_size, contains) = emitted_set(scores, rule, cap, true_label);

    let t_dl = downlink_time(tau_f, set_size, bank.d_lbl_bits, link.rate_dl);
    let t_total = t_ul + t_dl;
    let met = meets_deadline(t_total, config.deadline_s);
    let loss_value = loss.eval_membership(contains);
    Ok(FrameResult {
        encoder_idx,
        model_idx,
        rate_ul: link.rate_ul,
        rate_dl: link.rate_dl,
        d_ul_bits: d_ul,
        set_size,
        t_total_s: t_total,
        met_deadline: met,
        loss: loss_value,
        relaxed_loss: relaxed_loss(loss_value, met, loss.gamma),
    })
}

fn resolve_policy(
    scheme: &SchemeSpec,
    bank: &ModelBank,
    calset: &CalibrationSet,
    config: &ChannelConfig,
    beta: f64,
    grid: GridMode,
) -> Result<(FramePolicy, bool)> {
    match scheme {
        SchemeSpec::Fixed => {
            let (outcome, _) = fixed_select_detailed(calset, bank, config, beta, grid)?;
            Ok((
                FramePolicy::Static {
                    encoder_idx: outcome.encoder_idx,
                    model_idx: outcome.model_idx,
                    rule: SetRule::Threshold(outcome.lambda),
                },
                outcome.feasible,
            ))
        }
        SchemeSpec::Dynamic | SchemeSpec::DynamicTruncated => {
            let (outcome, _) = fixed_select_detailed(calset, bank, config, beta, grid)?;
            let selector =
                DynamicSelector::new(calset, bank, outcome.encoder_idx, config, beta, grid)?;
            Ok((
                FramePolicy::Dynamic {
                    selector,
                    fallback: (outcome.model_idx, outcome.lambda),
                    truncate: matches!(scheme, SchemeSpec::DynamicTruncated),
                },
                outcome.feasible,
            ))
        }
        SchemeSpec::BaselineTopk {
            encoder_idx,
            model_idx,
            kappa,
        } => {
            if *encoder_idx >= bank.encoder_count() || *model_idx >= bank.model_count() {
                return Err(Error::InvalidConfig(format!(
                    "baseline references combination ({}, {}) outside the bank",
                    encoder_idx + 1,
                    model_idx + 1
                )));
            }
            if *kappa < 1 || *kappa > bank.label_count {
                return Err(Error::InvalidConfig(format!(
                    "kappa must lie in 1..={}, got {kappa}",
                    bank.label_count
                )));
            }
            Ok((
                FramePolicy::Static {
                    encoder_idx: *encoder_idx,
                    model_idx: *model_idx,
                    rule: SetRule::TopK(*kappa),
                },
                true,
            ))
        }
        SchemeSpec::BaselineCalibrated {
            encoder_idx,
            model_idx,
        } => {
            let combo = calset.combo(*encoder_idx, *model_idx).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "baseline combination ({}, {}) is not calibratable at this risk level",
                    encoder_idx + 1,
                    model_idx + 1
                ))
            })?;
            Ok((
                FramePolicy::Static {
                    encoder_idx: *encoder_idx,
                    model_idx: *model_idx,
                    rule: SetRule::Threshold(combo.model.lambda),
                },
                true,
            ))
        }
    }
}

/// Simulate `n_frames` i.i.d. frames of one scheme at one SNR point.
///
/// Frame `i` derives its RNG stream from `(seed, i)`, so results are
/// reproducible for any worker count and different schemes or SNR points
/// share random numbers.
#[allow(clippy::too_many_arguments)]
pub fn run_frames(
    scheme: &SchemeSpec,
    bank: &ModelBank,
    calset: &CalibrationSet,
    eval: &ScoreDataset,
    config: &ChannelConfig,
    beta: f64,
    grid: GridMode,
    n_frames: usize,
    seed: u64,
) -> Result<(Vec<FrameResult>, bool)> {
    if eval.is_empty() {
        return Err(Error::EmptyPartition("evaluation"));
    }
    eval.matches_bank(bank)?;
    if n_frames < 1 {
        return Err(Error::InvalidConfig("n_frames must be >= 1".into()));
    }
    let (policy, offline_feasible) = resolve_policy(scheme, bank, calset, config, beta, grid)?;
    let n_eval = eval.len();
    let loss = calset.loss;
    let frames = (0..n_frames)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let sample_idx = rng.gen_range(0..n_eval);
            let link = sample_link(config, &mut rng);
            run_frame_policy(&policy, eval, sample_idx, bank, &link, config, &loss)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((frames, offline_feasible))
}

/// Kahan-compensated accumulator for order-independent means.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

fn mean_and_se(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut sum = Kahan::default();
    for v in values.clone() {
        sum.add(v);
    }
    let mean = sum.sum / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let mut sq = Kahan::default();
    for v in values {
        let d = v - mean;
        sq.add(d * d);
    }
    let var = sq.sum / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregate per-frame results into a report.
pub fn aggregate_report(
    scheme: &SchemeSpec,
    snr_ul_db: f64,
    snr_dl_db: f64,
    frames: &[FrameResult],
    offline_feasible: bool,
) -> MetricsReport {
    let n = frames.len();
    let met: Vec<&FrameResult> = frames.iter().filter(|f| f.met_deadline).collect();
    let n_met = met.len();

    let violations = n - n_met;
    let violation_rate = violations as f64 / n as f64;
    let violation_rate_se = (violation_rate * (1.0 - violation_rate) / n as f64).sqrt();

    let (cond_loss, cond_loss_se) = mean_and_se(met.iter().map(|f| f.loss), n_met);
    let (mean_set_size, mean_set_size_se) =
        mean_and_se(met.iter().map(|f| f.set_size as f64), n_met);
    let (relaxed_loss_mean, relaxed_loss_se) =
        mean_and_se(frames.iter().map(|f| f.relaxed_loss), n);

    let mut counts: std::collections::BTreeMap<(usize, usize), usize> = Default::default();
    for f in frames {
        *counts.entry((f.encoder_idx, f.model_idx)).or_default() += 1;
    }
    let selection = counts
        .into_iter()
        .map(|((l, k), c)| SelectionShare {
            encoder_idx: l,
            model_idx: k,
            share: c as f64 / n as f64,
        })
        .collect();

    MetricsReport {
        scheme: scheme.label(),
        snr_ul_db,
        snr_dl_db,
        n_frames: n,
        n_met,
        cond_loss,
        cond_loss_se,
        violation_rate,
        violation_rate_se,
        mean_set_size,
        mean_set_size_se,
        relaxed_loss_mean,
        relaxed_loss_se,
        selection,
        offline_feasible,
    }
}

/// One SNR grid point in dB, possibly asymmetric between directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub ul_db: f64,
    pub dl_db: f64,
}

impl SnrPoint {
    pub fn symmetric(db: f64) -> Self {
        Self {
            ul_db: db,
            dl_db: db,
        }
    }
}

/// Evaluate one scheme across an SNR grid.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    scheme: &SchemeSpec,
    bank: &ModelBank,
    calset: &CalibrationSet,
    eval: &ScoreDataset,
    base_config: &ChannelConfig,
    snr_grid: &[SnrPoint],
    beta: f64,
    grid: GridMode,
    n_frames: usize,
    seed: u64,
) -> Result<Vec<MetricsReport>> {
    if snr_grid.is_empty() {
        return Err(Error::InvalidConfig("SNR grid must be non-empty".into()));
    }
    snr_grid
        .iter()
        .map(|point| {
            let config = base_config.with_snr_db(point.ul_db, point.dl_db);
            let (frames, offline_feasible) = run_frames(
                scheme, bank, calset, eval, &config, beta, grid, n_frames, seed,
            )?;
            Ok(aggregate_report(
                scheme,
                point.ul_db,
                point.dl_db,
                &frames,
                offline_feasible,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::corrected_risk_level;
    use crate::dataset::{generate_synthetic, split};
    use crate::testutil::{small_bank, uniform_config};
    use approx::assert_relative_eq;

    fn setup(
        l: usize,
        k: usize,
        labels: usize,
        n: usize,
    ) -> (ModelBank, CalibrationSet, ScoreDataset) {
        let bank = small_bank(l, k, labels);
        let ds = generate_synthetic(&uniform_config(&bank, 0.9, 21), n, &bank).unwrap();
        let idx = split(&ds, n / 3, n / 3, 2).unwrap();
        let (lab, unl, eval) = idx.materialize(&ds).unwrap();
        let loss = LossFunction::miss_detection();
        let eps = corrected_risk_level(0.1, 0.05).unwrap();
        let calset = CalibrationSet::build(&bank, &lab, &unl, &loss, eps).unwrap();
        (bank, calset, eval)
    }

    #[test]
    fn topk_examples() {
        assert_eq!(baseline_topk_set(&[0.2, 0.9, 0.9], 1).unwrap(), vec![1]);
        assert_eq!(
            baseline_topk_set(&[0.2, 0.9, 0.9], 3).unwrap(),
            vec![0, 1, 2]
        );
        let big: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(baseline_topk_set(&big, 20).unwrap().len(), 20);
        assert!(baseline_topk_set(&big, 0).is_err());
        assert!(baseline_topk_set(&big, 101).is_err());
    }

    #[test]
    fn zero_gain_uplink_is_a_violation_with_worst_relaxed_loss() {
        let (bank, calset, eval) = setup(1, 1, 6, 150);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let combo = calset.combo(0, 0).unwrap();
        let policy = FramePolicy::Static {
            encoder_idx: 0,
            model_idx: 0,
            rule: SetRule::Threshold(combo.model.lambda),
        };
        let link = LinkDraw {
            gain_ul: 0.0,
            gain_dl: 1.0,
            rate_ul: 0.0,
            rate_dl: 30e6,
        };
        let frame = run_frame_policy(&policy, &eval, 0, &bank, &link, &cfg, &calset.loss).unwrap();
        assert!(!frame.met_deadline);
        assert!(frame.t_total_s.is_infinite());
        assert_eq!(frame.relaxed_loss, 1.0);
    }

    #[test]
    fn huge_snr_frame_loss_is_pure_calibration_loss() {
        let (bank, calset, eval) = setup(1, 1, 6, 150);
        let cfg = ChannelConfig::new(30e6, 1e9, 1e9, 0.150).unwrap();
        let combo = calset.combo(0, 0).unwrap();
        let lambda = combo.model.lambda;
        let policy = FramePolicy::Static {
            encoder_idx: 0,
            model_idx: 0,
            rule: SetRule::Threshold(lambda),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..20 {
            let link = sample_link(&cfg, &mut rng);
            let frame =
                run_frame_policy(&policy, &eval, i, &bank, &link, &cfg, &calset.loss).unwrap();
            assert!(frame.met_deadline);
            let truth = eval.true_labels().unwrap()[i] as usize;
            let contains = crate::conformal::contains_at(eval.scores(0, 0).row(i), lambda, truth);
            assert_eq!(frame.loss, calset.loss.eval_membership(contains));
        }
    }

    #[test]
    fn hand_traced_frame() {
        // One sample, hand-built dataset: scores place labels {0, 2} in the
        // set at lambda = 0.4; sizes and rates are round numbers.
        use crate::dataset::{ScoreDataset, ScoreMatrix};
        let bank = small_bank(1, 1, 3);
        let scores = ScoreMatrix::new(1, 3, vec![0.9, 0.1, 0.7]).unwrap();
        let ds =
            ScoreDataset::new(1, 1, 3, Some(vec![2]), vec![scores], vec![vec![300_000]]).unwrap();
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let policy = FramePolicy::Static {
            encoder_idx: 0,
            model_idx: 0,
            rule: SetRule::Threshold(0.4),
        };
        let link = LinkDraw {
            gain_ul: 1.0,
            gain_dl: 1.0,
            rate_ul: 30e6,
            rate_dl: 10e6,
        };
        let loss = LossFunction::miss_detection();
        let frame = run_frame_policy(&policy, &ds, 0, &bank, &link, &cfg, &loss).unwrap();
        // t_ul = 0.010 + 3e5/3e7 = 0.020; set {0, 2} -> 2 labels, 128 bits;
        // t_dl = 0.024 + 128/1e7 = 0.0240128; total 0.0440128 < 0.150.
        assert_eq!(frame.set_size, 2);
        assert_relative_eq!(
            frame.t_total_s,
            0.020 + 0.024 + 128.0 / 10e6,
            epsilon = 1e-12
        );
        assert!(frame.met_deadline);
        assert_eq!(frame.loss, 0.0); // true label 2 is in the set
        assert_eq!(frame.d_ul_bits, 300_000);
    }

    #[test]
    fn single_frame_report_equals_its_frame() {
        let (bank, calset, eval) = setup(1, 1, 6, 150);
        let cfg = ChannelConfig::new(30e6, 100.0, 100.0, 0.150).unwrap();
        let scheme = SchemeSpec::Fixed;
        let (frames, feasible) = run_frames(
            &scheme,
            &bank,
            &calset,
            &eval,
            &cfg,
            0.05,
            GridMode::Exact,
            1,
            9,
        )
        .unwrap();
        assert_eq!(frames.len(), 1);
        let report = aggregate_report(&scheme, 20.0, 20.0, &frames, feasible);
        let f = &frames[0];
        if f.met_deadline {
            assert_eq!(report.cond_loss, f.loss);
            assert_eq!(report.mean_set_size, f.set_size as f64);
            assert_eq!(report.violation_rate, 0.0);
        } else {
            assert_eq!(report.violation_rate, 1.0);
        }
        assert_eq!(report.relaxed_loss_mean, f.relaxed_loss);
        assert_eq!(report.n_frames, 1);
    }

    #[test]
    fn same_seed_same_report() {
        let (bank, calset, eval) = setup(2, 2, 8, 240);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        let grid = [SnrPoint::symmetric(10.0), SnrPoint::symmetric(20.0)];
        let run = |seed| {
            evaluate(
                &SchemeSpec::Dynamic,
                &bank,
                &calset,
                &eval,
                &cfg,
                &grid,
                0.05,
                GridMode::Subgrid,
                200,
                seed,
            )
            .unwrap()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn report_recomputable_from_frames() {
        let (bank, calset, eval) = setup(1, 2, 8, 240);
        let cfg = ChannelConfig::new(30e6, 8.0, 8.0, 0.150).unwrap();
        let scheme = SchemeSpec::BaselineCalibrated {
            encoder_idx: 0,
            model_idx: 1,
        };
        let (frames, feasible) = run_frames(
            &scheme,
            &bank,
            &calset,
            &eval,
            &cfg,
            0.05,
            GridMode::Exact,
            500,
            4,
        )
        .unwrap();
        let report = aggregate_report(&scheme, 9.0, 9.0, &frames, feasible);

        // Conditional quantities recomputed independently from the frame log.
        let met: Vec<_> = frames.iter().filter(|f| f.met_deadline).collect();
        let cond_loss = met.iter().map(|f| f.loss).sum::<f64>() / met.len() as f64;
        let mean_size = met.iter().map(|f| f.set_size as f64).sum::<f64>() / met.len() as f64;
        assert_relative_eq!(report.cond_loss, cond_loss, epsilon = 1e-12);
        assert_relative_eq!(report.mean_set_size, mean_size, epsilon = 1e-12);
        assert_eq!(report.n_met, met.len());
        assert_relative_eq!(
            report.violation_rate,
            (frames.len() - met.len()) as f64 / frames.len() as f64,
            epsilon = 1e-15
        );
        let share_sum: f64 = report.selection.iter().map(|s| s.share).sum();
        assert_relative_eq!(share_sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncated_dynamic_never_relaxed_worse_than_dynamic() {
        let (bank, calset, eval) = setup(2, 2, 10, 300);
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.150).unwrap();
        for snr in [3.0, 10.0, 20.0] {
            let point = [SnrPoint::symmetric(snr)];
            let run = |scheme: &SchemeSpec| {
                evaluate(
                    scheme,
                    &bank,
                    &calset,
                    &eval,
                    &cfg,
                    &point,
                    0.05,
                    GridMode::Subgrid,
                    400,
                    11,
                )
                .unwrap()
                .remove(0)
            };
            let dynamic = run(&SchemeSpec::Dynamic);
            let truncated = run(&SchemeSpec::DynamicTruncated);
            let slack =
                2.0 * (dynamic.relaxed_loss_se.powi(2) + truncated.relaxed_loss_se.powi(2)).sqrt();
            assert!(
                truncated.relaxed_loss_mean <= dynamic.relaxed_loss_mean + slack.max(1e-12),
                "snr {snr}: truncated {} vs dynamic {}",
                truncated.relaxed_loss_mean,
                dynamic.relaxed_loss_mean
            );
        }
    }

    #[test]
    fn scheme_labels_are_stable() {
        assert_eq!(SchemeSpec::Fixed.label(), "fixed");
        assert_eq!(
            SchemeSpec::BaselineTopk {
                encoder_idx: 0,
                model_idx: 0,
                kappa: 20
            }
            .label(),
            "baseline_topk:20:1x1"
        );
        assert_eq!(
            SchemeSpec::BaselineCalibrated {
                encoder_idx: 2,
                model_idx: 1
            }
            .label(),
            "baseline_calibrated:3x2"
        );
    }
}
