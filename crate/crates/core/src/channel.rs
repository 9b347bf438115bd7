//! Quasi-static Rayleigh-fading uplink/downlink model.
//!
//! Each frame sees one independent fading realization per direction. The
//! squared channel magnitude of a Rayleigh-faded link is unit-mean
//! exponential, which is sampled directly; rates follow the Shannon capacity
//! of the faded AWGN channel. Delays compose a fixed computation term with a
//! payload transmission term and propagate `+inf` when the channel rate is
//! zero, which downstream code counts as a deadline violation.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link parameters shared by every rate and delay computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Average uplink SNR (linear, not dB).
    pub snr_ul: f64,
    /// Average downlink SNR (linear, not dB).
    pub snr_dl: f64,
    /// Frame deadline in seconds.
    pub deadline_s: f64,
}

impl ChannelConfig {
    pub fn new(bandwidth_hz: f64, snr_ul: f64, snr_dl: f64, deadline_s: f64) -> Result<Self> {
        let cfg = Self {
            bandwidth_hz,
            snr_ul,
            snr_dl,
            deadline_s,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same average SNR on both directions, given in dB.
    pub fn symmetric_db(bandwidth_hz: f64, snr_db: f64, deadline_s: f64) -> Result<Self> {
        let snr = db_to_linear(snr_db);
        Self::new(bandwidth_hz, snr, snr, deadline_s)
    }

    /// Copy of `self` with new per-direction SNRs in dB.
    pub fn with_snr_db(&self, snr_ul_db: f64, snr_dl_db: f64) -> Self {
        Self {
            snr_ul: db_to_linear(snr_ul_db),
            snr_dl: db_to_linear(snr_dl_db),
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        if !(self.snr_ul.is_finite() && self.snr_ul > 0.0)
            || !(self.snr_dl.is_finite() && self.snr_dl > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "SNRs must be positive, got ul {} dl {}",
                self.snr_ul, self.snr_dl
            )));
        }
        if !(self.deadline_s.is_finite() && self.deadline_s > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "deadline must be positive, got {}",
                self.deadline_s
            )));
        }
        Ok(())
    }
}

/// One frame's fading realization and the rates it supports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDraw {
    /// Squared uplink channel magnitude (unit-mean exponential).
    pub gain_ul: f64,
    /// Squared downlink channel magnitude.
    pub gain_dl: f64,
    /// Uplink rate in bits/s.
    pub rate_ul: f64,
    /// Downlink rate in bits/s.
    pub rate_dl: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Shannon rate `B * log2(1 + gain * SNR)` in bits/s.
pub fn shannon_rate(bandwidth_hz: f64, gain: f64, snr: f64) -> f64 {
    bandwidth_hz * (1.0 + gain * snr).log2()
}

/// Draw one frame's fading gains and the resulting rates.
///
/// Gains are i.i.d. unit-mean exponential (uplink drawn first), so the
/// sequence is fully determined by the RNG state.
pub fn sample_link<R: Rng + ?Sized>(config: &ChannelConfig, rng: &mut R) -> LinkDraw {
    let gain_ul: f64 = rng.sample(Exp1);
    let gain_dl: f64 = rng.sample(Exp1);
    LinkDraw {
        gain_ul,
        gain_dl,
        rate_ul: shannon_rate(config.bandwidth_hz, gain_ul, config.snr_ul),
        rate_dl: shannon_rate(config.bandwidth_hz, gain_dl, config.snr_dl),
    }
}

/// Uplink duration: encode/decode time plus payload transmission.
///
/// A zero rate with a non-empty payload yields `+inf`, a legal delay that
/// can never meet a deadline.
pub fn uplink_time(tau_ul_s: f64, d_ul_bits: f64, rate_ul: f64) -> f64 {
    if d_ul_bits == 0.0 {
        tau_ul_s
    } else {
        tau_ul_s + d_ul_bits / rate_ul
    }
}

/// Downlink duration: inference time plus prediction-set transmission at
/// `d_lbl_bits` per label.
pub fn downlink_time(tau_f_s: f64, set_size: usize, d_lbl_bits: u64, rate_dl: f64) -> f64 {
    let payload = (set_size as f64) * (d_lbl_bits as f64);
    if payload == 0.0 {
        tau_f_s
    } else {
        tau_f_s + payload / rate_dl
    }
}

/// The deadline is met when the total time does not exceed it.
pub fn meets_deadline(t_total_s: f64, deadline_s: f64) -> bool {
    t_total_s <= deadline_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_gain_gives_zero_rate() {
        assert_eq!(shannon_rate(30e6, 0.0, 100.0), 0.0);
    }

    #[test]
    fn unit_gain_snr_product_gives_bandwidth() {
        // gain * SNR = 1 => log2(2) = 1 => rate = B
        assert_relative_eq!(shannon_rate(30e6, 0.5, 2.0), 30e6, max_relative = 1e-12);
    }

    #[test]
    fn gain_mean_matches_unit_exponential() {
        let cfg = ChannelConfig::new(30e6, 10.0, 10.0, 0.15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_link(&cfg, &mut rng).gain_ul)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn uplink_time_example() {
        // 10 ms + 300000 bits / 30 Mbit/s = 20 ms
        assert_relative_eq!(uplink_time(0.010, 300_000.0, 30e6), 0.020, epsilon = 1e-12);
    }

    #[test]
    fn uplink_time_zero_payload_is_computation_only() {
        assert_eq!(uplink_time(0.012, 0.0, 0.0), 0.012);
    }

    #[test]
    fn uplink_time_zero_rate_is_infinite() {
        assert_eq!(uplink_time(0.012, 10.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn downlink_time_example() {
        // 24 ms + 20 * 64 / 30e6 s
        assert_relative_eq!(
            downlink_time(0.024, 20, 64, 30e6),
            0.024042666666666667,
            epsilon = 1e-15
        );
    }

    #[test]
    fn downlink_time_empty_set() {
        assert_eq!(downlink_time(0.098, 0, 64, 0.0), 0.098);
    }

    #[test]
    fn downlink_keeps_computation_term() {
        let t = downlink_time(0.098, 1, 64, 30e6);
        assert!(t > 0.098 && t < 0.0981);
    }

    #[test]
    fn deadline_boundary_is_inclusive() {
        assert!(meets_deadline(0.150, 0.150));
        assert!(meets_deadline(0.1499, 0.150));
        assert!(!meets_deadline(f64::INFINITY, 0.150));
        assert!(!meets_deadline(0.1501, 0.150));
    }

    #[test]
    fn rate_monotone_in_gain_and_snr() {
        let mut prev = 0.0;
        for i in 1..100 {
            let r = shannon_rate(30e6, i as f64 * 0.1, 5.0);
            assert!(r > prev);
            prev = r;
        }
        let mut prev = 0.0;
        for i in 1..100 {
            let r = shannon_rate(30e6, 0.7, i as f64 * 0.5);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn delay_monotone_in_rate_and_payload() {
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let t = uplink_time(0.01, 1e5, i as f64 * 1e6);
            assert!(t <= prev);
            prev = t;
        }
        let mut prev = 0.0;
        for i in 1..50 {
            let t = uplink_time(0.01, i as f64 * 1e4, 30e6);
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn identical_seeds_reproduce_draws() {
        let cfg = ChannelConfig::new(30e6, 10.0, 20.0, 0.15).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..32)
                .map(|_| sample_link(&cfg, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn db_conversions_round_trip() {
        assert_relative_eq!(db_to_linear(10.0), 10.0, epsilon = 1e-12);
        assert_relative_eq!(db_to_linear(0.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(linear_to_db(db_to_linear(17.3)), 17.3, epsilon = 1e-12);
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(ChannelConfig::new(0.0, 1.0, 1.0, 0.1).is_err());
        assert!(ChannelConfig::new(30e6, -1.0, 1.0, 0.1).is_err());
        assert!(ChannelConfig::new(30e6, 1.0, 1.0, 0.0).is_err());
        assert!(ChannelConfig::new(30e6, 1.0, 1.0, f64::NAN).is_err());
    }
}
