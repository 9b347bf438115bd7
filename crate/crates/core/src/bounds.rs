//! Distribution-free deadline-violation bounds.
//!
//! The bounds combine two ingredients: a closed-form lower bound on the
//! probability that the fading channels deliver given payloads within the
//! remaining frame time, and an order-statistic lower bound on the
//! probability that a fresh sample's payloads stay below the n-th and m-th
//! smallest payloads observed on the unlabeled calibration set. Minimizing
//! `1 - success(n, m) * coverage(n, m)` over the (n, m) grid yields an upper
//! bound on the deadline-violation probability — marginally over the channel,
//! or conditioned on the instantaneous uplink rate.
//!
//! Every scanned (n, m) pair yields a valid bound, so restricting the scan to
//! a subgrid only loosens the result, never invalidates it. The default
//! subgrid covers a geometric ladder plus the full top block, where the
//! minimizer empirically lives; `GridMode::Exact` forces the full scan.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::conformal::{set_size_at, CalibratedModel};
use crate::dataset::{ModelBank, ScoreDataset};
use crate::error::{Error, Result};

/// How much of the (n, m) grid the bound minimization scans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Full grid; O(N^2) pairs.
    Exact,
    /// Geometric ladder plus the full top block per axis.
    #[default]
    Subgrid,
}

impl GridMode {
    /// Ascending 1-based axis indices scanned under this mode.
    pub fn indices(self, n_u: usize) -> Vec<usize> {
        match self {
            GridMode::Exact => (1..=n_u).collect(),
            GridMode::Subgrid => subgrid_indices(n_u),
        }
    }
}

const SUBGRID_GEOMETRIC_POINTS: usize = 200;
const SUBGRID_TOP_BLOCK: usize = 200;

/// Axis indices of the default subgrid: a ~200-point geometric ladder over
/// `1..=n_u` plus the dense top 200 indices. Equals the full grid whenever
/// `n_u` does not exceed the top block.
pub fn subgrid_indices(n_u: usize) -> Vec<usize> {
    if n_u <= SUBGRID_TOP_BLOCK {
        return (1..=n_u).collect();
    }
    let mut picked = std::collections::BTreeSet::new();
    picked.insert(1);
    let step = (n_u as f64).ln() / (SUBGRID_GEOMETRIC_POINTS - 1) as f64;
    for i in 0..SUBGRID_GEOMETRIC_POINTS {
        let idx = (step * i as f64).exp().round() as usize;
        picked.insert(idx.clamp(1, n_u));
    }
    picked.extend(n_u - SUBGRID_TOP_BLOCK + 1..=n_u);
    picked.into_iter().collect()
}

/// Sorted uplink and downlink payload sizes over the unlabeled calibration
/// set for one calibrated composite model.
///
/// The two vectors are sorted independently; in general different samples
/// occupy the same rank on the two axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeOrderStats {
    sorted_ul: Vec<u64>,
    sorted_dl: Vec<u64>,
}

impl SizeOrderStats {
    /// Build from per-sample sizes in any order; both vectors are sorted.
    pub fn new(mut ul_bits: Vec<u64>, mut dl_bits: Vec<u64>) -> Result<Self> {
        if ul_bits.is_empty() {
            return Err(Error::EmptyPartition("unlabeled calibration"));
        }
        if ul_bits.len() != dl_bits.len() {
            return Err(Error::DimensionMismatch(format!(
                "uplink and downlink size vectors differ: {} vs {}",
                ul_bits.len(),
                dl_bits.len()
            )));
        }
        ul_bits.sort_unstable();
        dl_bits.sort_unstable();
        Ok(Self {
            sorted_ul: ul_bits,
            sorted_dl: dl_bits,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted_ul.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_ul.is_empty()
    }

    /// n-th order statistic (1-based) of the uplink sizes.
    pub fn ul(&self, n: usize) -> u64 {
        self.sorted_ul[n - 1]
    }

    /// m-th order statistic (1-based) of the downlink sizes.
    pub fn dl(&self, m: usize) -> u64 {
        self.sorted_dl[m - 1]
    }

    pub fn sorted_ul(&self) -> &[u64] {
        &self.sorted_ul
    }

    pub fn sorted_dl(&self) -> &[u64] {
        &self.sorted_dl
    }
}

/// A minimized bound value and the grid point attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Upper bound on the deadline-violation probability, clamped to [0, 1].
    pub value: f64,
    /// 1-based uplink order-statistic index of the minimizer.
    pub n_star: usize,
    /// 1-based downlink order-statistic index of the minimizer.
    pub m_star: usize,
}

/// Compute the size order statistics for one calibrated composite model.
///
/// Downlink sizes are the prediction-set sizes at the calibrated threshold
/// times the per-label payload.
pub fn order_stats(
    unlabeled: &ScoreDataset,
    calibrated: &CalibratedModel,
    bank: &ModelBank,
) -> Result<SizeOrderStats> {
    unlabeled.matches_bank(bank)?;
    if unlabeled.is_empty() {
        return Err(Error::EmptyPartition("unlabeled calibration"));
    }
    let l = calibrated.encoder_idx;
    let k = calibrated.model_idx;
    if l >= bank.encoder_count() || k >= bank.model_count() {
        return Err(Error::DimensionMismatch(format!(
            "calibrated model ({l}, {k}) outside bank"
        )));
    }
    let scores = unlabeled.scores(l, k);
    let dl = (0..unlabeled.len())
        .map(|i| set_size_at(scores.row(i), calibrated.lambda) as u64 * bank.d_lbl_bits)
        .collect();
    SizeOrderStats::new(unlabeled.ul_sizes(l).to_vec(), dl)
}

/// Transmission window left after both computation phases, or an error when
/// the computations alone reach the deadline.
fn time_budget(tau_ul_s: f64, tau_f_s: f64, config: &ChannelConfig) -> Result<f64> {
    let window = config.deadline_s - tau_ul_s - tau_f_s;
    if window <= 0.0 {
        return Err(Error::TimingInfeasible {
            tau_ul_s,
            tau_f_s,
            deadline_s: config.deadline_s,
        });
    }
    Ok(window)
}

/// Lower bound on the probability that both transmissions of the given
/// payloads finish inside the frame, marginal over both fading channels.
pub fn success_lb_marginal(
    d_ul_bits: f64,
    d_dl_bits: f64,
    tau_ul_s: f64,
    tau_f_s: f64,
    config: &ChannelConfig,
) -> Result<f64> {
    let window = time_budget(tau_ul_s, tau_f_s, config)?;
    let snr_term = config.snr_ul.recip() + config.snr_dl.recip();
    let exponent =
        snr_term * (1.0 - ((d_ul_bits + d_dl_bits) / (config.bandwidth_hz * window)).exp2());
    Ok(exponent.exp())
}

/// Lower bound on the deadline-success probability given the instantaneous
/// uplink rate; only the downlink fading stays random.
///
/// Returns 0 when the uplink alone already exceeds the deadline.
pub fn success_lb_conditional(
    d_ul_bits: f64,
    d_dl_bits: f64,
    tau_ul_s: f64,
    tau_f_s: f64,
    rate_ul: f64,
    config: &ChannelConfig,
) -> Result<f64> {
    // Negated comparison so NaN rates are rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(rate_ul > 0.0) {
        return Err(Error::InvalidRate { rate: rate_ul });
    }
    let window = time_budget(tau_ul_s, tau_f_s, config)?;
    let remaining = window - d_ul_bits / rate_ul;
    if remaining <= 0.0 {
        return Ok(0.0);
    }
    let exponent =
        config.snr_dl.recip() * (1.0 - (d_dl_bits / (config.bandwidth_hz * remaining)).exp2());
    Ok(exponent.exp())
}

/// Order-statistic coverage term `(n + m) / (N + 1) - 1`.
///
/// May be negative; callers treat non-positive values as vacuous.
pub fn joint_size_lb(n: usize, m: usize, n_u: usize) -> Result<f64> {
    for idx in [n, m] {
        if idx < 1 || idx > n_u {
            return Err(Error::IndexOutOfRange {
                index: idx,
                len: n_u,
            });
        }
    }
    Ok((n + m) as f64 / (n_u + 1) as f64 - 1.0)
}

/// Upper bound on the marginal deadline-violation probability of one
/// calibrated composite model.
pub fn violation_bound_marginal(
    stats: &SizeOrderStats,
    tau_ul_s: f64,
    tau_f_s: f64,
    config: &ChannelConfig,
    grid: GridMode,
) -> Result<BoundResult> {
    let window = time_budget(tau_ul_s, tau_f_s, config)?;
    let denom = config.bandwidth_hz * window;
    let snr_term = config.snr_ul.recip() + config.snr_dl.recip();
    Ok(minimize(stats, grid, |d_ul, _| MarginalRow {
        d_ul,
        denom,
        snr_term,
    }))
}

struct MarginalRow {
    d_ul: f64,
    denom: f64,
    snr_term: f64,
}

impl SuccessRow for MarginalRow {
    fn success(&self, d_dl: f64) -> f64 {
        (self.snr_term * (1.0 - ((self.d_ul + d_dl) / self.denom).exp2())).exp()
    }
}

/// Upper bound on the deadline-violation probability conditioned on the
/// instantaneous uplink rate.
///
/// Grid rows whose uplink order statistic cannot be delivered in time
/// contribute a zero success factor; when that holds everywhere the bound
/// is 1.
pub fn violation_bound_conditional(
    stats: &SizeOrderStats,
    tau_ul_s: f64,
    tau_f_s: f64,
    rate_ul: f64,
    config: &ChannelConfig,
    grid: GridMode,
) -> Result<BoundResult> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(rate_ul > 0.0) {
        return Err(Error::InvalidRate { rate: rate_ul });
    }
    let window = time_budget(tau_ul_s, tau_f_s, config)?;
    let bandwidth = config.bandwidth_hz;
    let inv_snr_dl = config.snr_dl.recip();
    Ok(minimize(stats, grid, |d_ul, _| {
        let remaining = window - d_ul / rate_ul;
        ConditionalRow {
            denom: bandwidth * remaining,
            feasible: remaining > 0.0,
            inv_snr_dl,
        }
    }))
}

struct ConditionalRow {
    denom: f64,
    feasible: bool,
    inv_snr_dl: f64,
}

impl SuccessRow for ConditionalRow {
    fn success(&self, d_dl: f64) -> f64 {
        if !self.feasible {
            return 0.0;
        }
        (self.inv_snr_dl * (1.0 - (d_dl / self.denom).exp2())).exp()
    }

    fn vacuous(&self) -> bool {
        !self.feasible
    }
}

/// Per-row success factor of the bound product; `vacuous` rows contribute a
/// zero factor for every m.
trait SuccessRow {
    fn success(&self, d_dl: f64) -> f64;

    fn vacuous(&self) -> bool {
        false
    }
}

/// Maximize `success(n, m) * coverage(n, m)` over the scan axes, visiting
/// (n, m) in descending order exactly like a naive double loop.
///
/// Because the success factor never exceeds 1, any pair whose coverage term
/// cannot beat the running best is pruned without changing the result.
fn minimize<R, F>(stats: &SizeOrderStats, grid: GridMode, row: F) -> BoundResult
where
    R: SuccessRow,
    F: Fn(f64, usize) -> R,
{
    let n_u = stats.len();
    let axes = grid.indices(n_u);
    let cov_scale = (n_u + 1) as f64;
    let coverage = |n: usize, m: usize| (n + m) as f64 / cov_scale - 1.0;
    let m_max = *axes.last().expect("axes are never empty");

    let mut best_f = f64::NEG_INFINITY;
    let mut best = (0usize, 0usize);
    for &n in axes.iter().rev() {
        if coverage(n, m_max) <= best_f {
            break;
        }
        let r = row(stats.ul(n) as f64, n);
        if r.vacuous() {
            // All m give success 0; equivalent to evaluating the first m.
            let f = 0.0 * coverage(n, m_max);
            if f > best_f {
                best_f = f;
                best = (n, m_max);
            }
            continue;
        }
        for &m in axes.iter().rev() {
            let cov = coverage(n, m);
            if cov <= best_f {
                break;
            }
            let f = r.success(stats.dl(m) as f64) * cov;
            if f > best_f {
                best_f = f;
                best = (n, m);
            }
        }
    }
    BoundResult {
        value: (1.0 - best_f).clamp(0.0, 1.0),
        n_star: best.0,
        m_star: best.1,
    }
}
