//! Achievable-rate model and the time-diversity error bound.
//!
//! Rates follow the SNR-gap approximation
//! `Ω_n · log2(1 + h²·P_kn / (N_t·Ω_n·Γ))` with `Γ = −ln(5·BER)/1.6`.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::channel::GainMatrix;
use crate::config::Allocation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("target BER must lie in (0, 0.2), got {0}")]
    BerOutOfRange(f64),
    #[error("channel gain must be nonnegative and finite, got {0}")]
    NegativeGain(f64),
    #[error("diversity branch count must be at least 1")]
    BadBranchCount,
    #[error("SNR must be positive and finite, got {0}")]
    NonPositiveSnr(f64),
    #[error("rate model field `{0}` must be positive and finite")]
    NonPositiveField(&'static str),
}

/// SNR gap Γ for a target bit error rate.
pub fn snr_gap(target_ber: f64) -> Result<f64, RateError> {
    if !(target_ber > 0.0 && target_ber < 0.2) {
        return Err(RateError::BerOutOfRange(target_ber));
    }
    Ok(-(5.0 * target_ber).ln() / 1.6)
}

/// Per-subcarrier link budget under equal power allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    subcarrier_bw_hz: f64,
    per_subcarrier_power_w: f64,
    noise_density_w_per_hz: f64,
    snr_gap: f64,
    /// P_kn / (N_t·Ω_n·Γ), the effective SNR per unit h².
    snr_scale: f64,
}

impl RateModel {
    pub fn new(
        subcarrier_bw_hz: f64,
        per_subcarrier_power_w: f64,
        noise_density_w_per_hz: f64,
        snr_gap: f64,
    ) -> Result<Self, RateError> {
        for (name, v) in [
            ("subcarrier_bw_hz", subcarrier_bw_hz),
            ("per_subcarrier_power_w", per_subcarrier_power_w),
            ("noise_density_w_per_hz", noise_density_w_per_hz),
            ("snr_gap", snr_gap),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RateError::NonPositiveField(name));
            }
        }
        let snr_scale =
            per_subcarrier_power_w / (noise_density_w_per_hz * subcarrier_bw_hz * snr_gap);
        Ok(RateModel {
            subcarrier_bw_hz,
            per_subcarrier_power_w,
            noise_density_w_per_hz,
            snr_gap,
            snr_scale,
        })
    }

    pub fn subcarrier_bw_hz(&self) -> f64 {
        self.subcarrier_bw_hz
    }

    pub fn per_subcarrier_power_w(&self) -> f64 {
        self.per_subcarrier_power_w
    }

    pub fn noise_density_w_per_hz(&self) -> f64 {
        self.noise_density_w_per_hz
    }

    pub fn snr_gap(&self) -> f64 {
        self.snr_gap
    }

    /// Mean SNR per subcarrier before the gap, for a unit mean square gain.
    pub fn mean_snr(&self) -> f64 {
        self.per_subcarrier_power_w / (self.noise_density_w_per_hz * self.subcarrier_bw_hz)
    }

    /// Rate in bit/s of one subcarrier with amplitude gain `gain`.
    pub fn subcarrier_rate(&self, gain: f64) -> Result<f64, RateError> {
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(RateError::NegativeGain(gain));
        }
        Ok(self.rate_unchecked(gain))
    }

    #[inline]
    pub(crate) fn rate_unchecked(&self, gain: f64) -> f64 {
        self.subcarrier_bw_hz * (gain * gain * self.snr_scale).ln_1p() / LN_2
    }

    /// Per-(user, subcarrier) rates for a whole frame. `GainMatrix` entries
    /// are nonnegative and finite by construction.
    pub fn rate_matrix(&self, gains: &GainMatrix) -> RateMatrix {
        RateMatrix {
            num_users: gains.num_users(),
            num_subcarriers: gains.num_subcarriers(),
            rates: gains
                .as_slice()
                .iter()
                .map(|&h| self.rate_unchecked(h))
                .collect(),
        }
    }
}

/// K×N matrix of instantaneous subcarrier rates ω_knt, bit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    num_users: usize,
    num_subcarriers: usize,
    rates: Vec<f64>,
}

impl RateMatrix {
    /// Row-major `rates[k * num_subcarriers + n]`.
    pub fn from_rows(num_users: usize, num_subcarriers: usize, rates: Vec<f64>) -> Self {
        assert_eq!(rates.len(), num_users * num_subcarriers);
        RateMatrix {
            num_users,
            num_subcarriers,
            rates,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    #[inline]
    pub fn get(&self, user: usize, subcarrier: usize) -> f64 {
        self.rates[user * self.num_subcarriers + subcarrier]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.rates[user * self.num_subcarriers..(user + 1) * self.num_subcarriers]
    }

    /// ω_kt for every user under `alloc`.
    pub fn user_rates(&self, alloc: &Allocation) -> Vec<f64> {
        let mut out = vec![0.0; self.num_users];
        for (n, &k) in alloc.owners().iter().enumerate() {
            out[k] += self.get(k, n);
        }
        out
    }
}

/// Rate of `user` in one frame: the sum of its subcarrier rates over the
/// subcarriers it owns under `alloc`.
pub fn user_frame_rate(gains: &[f64], alloc: &Allocation, model: &RateModel, user: usize) -> f64 {
    alloc
        .subcarriers_of(user)
        .map(|n| model.rate_unchecked(gains[n]))
        .sum()
}

/// `C(2M−1, M) / (4·snr)^M`. This is an asymptotic approximation and can
/// exceed 1 at low SNR.
pub fn diversity_error_bound(branches: u32, snr: f64) -> Result<f64, RateError> {
    if branches < 1 {
        return Err(RateError::BadBranchCount);
    }
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(RateError::NonPositiveSnr(snr));
    }
    let m = branches as i32;
    Ok(binomial(2 * branches - 1, branches) / (4.0 * snr).powi(m))
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
