//! Simulation configuration, QoS profiles and the flat `key = value` config
//! file format.
//!
//! Everything here is plain data. [`SimConfig`] is what a user writes;
//! [`ValidatedConfig`] is what the rest of the crate consumes, with the
//! derived per-subcarrier quantities already computed.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::temporal_correlation;
use crate::rate::{snr_gap, RateModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("dimension `{name}` must be at least 1 (got {value})")]
    BadDimension { name: &'static str, value: usize },
    #[error("physical quantity `{name}` must be positive and finite (got {value})")]
    NonPositivePhysical { name: &'static str, value: f64 },
    #[error("target BER must lie in (0, 0.2), got {0}")]
    BerOutOfRange(f64),
    #[error("QoS profile has {got} entries but the system has {expected} users")]
    QoSLengthMismatch { expected: usize, got: usize },
    #[error("QoS rate for user {user} must be positive and finite (got {value})")]
    BadQoSRate { user: usize, value: f64 },
    #[error("mean square gain list has {got} entries but the system has {expected} users")]
    GainLengthMismatch { expected: usize, got: usize },
    #[error("frequency correlation must lie in [0, 1), got {0}")]
    BadFrequencyCorrelation(f64),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
}

/// What to do with the subcarriers of a frame in which every user already
/// meets its QoS target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FallbackPolicy {
    /// Give each subcarrier to the user with the highest instantaneous rate.
    #[default]
    MaxRate,
    /// Ignore the QoS gate and pick by instantaneous PFI.
    GreedyPf,
}

impl FromStr for FallbackPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max-rate" => Ok(FallbackPolicy::MaxRate),
            "greedy-pf" => Ok(FallbackPolicy::GreedyPf),
            other => Err(format!(
                "unknown fallback policy `{other}` (expected max-rate or greedy-pf)"
            )),
        }
    }
}

impl fmt::Display for FallbackPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FallbackPolicy::MaxRate => "max-rate",
            FallbackPolicy::GreedyPf => "greedy-pf",
        })
    }
}

/// Per-user mean square channel gain E[h²].
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSquareGain {
    Uniform(f64),
    PerUser(Vec<f64>),
}

impl MeanSquareGain {
    pub fn for_user(&self, user: usize) -> f64 {
        match self {
            MeanSquareGain::Uniform(g) => *g,
            MeanSquareGain::PerUser(g) => g[user],
        }
    }
}

/// Raw simulation parameters. Power is held in watts; the config file
/// carries it in dBm.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub bandwidth_hz: f64,
    pub total_power_w: f64,
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub target_ber: f64,
    pub frame_duration_s: f64,
    /// Frames per allocation duration (M).
    pub window_frames: usize,
    pub noise_density_w_per_hz: f64,
    pub doppler_hz: f64,
    /// EWMA window of the instantaneous PF average, in frames.
    pub pf_window: usize,
    /// Initial running mean and permanent floor, bit/s.
    pub psi_init: f64,
    pub rng_seed: u64,
    pub num_windows: usize,
    pub fallback: FallbackPolicy,
    /// Correlation between adjacent subcarriers; 0 means independent.
    pub freq_correlation: f64,
    pub mean_square_gain: MeanSquareGain,
    /// Relative tolerance for the per-user convergence predicate.
    pub convergence_epsilon: f64,
    /// Recorded only; rates come from the gap formula.
    pub modulation: String,
    /// Recorded only; the simulator samples the channel once per frame.
    pub channel_sampling_hz: f64,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

impl Default for SimConfig {
    /// Mobile-WiMAX-like defaults: 1.25 MHz, 20 dBm, 20 users, 72
    /// subcarriers, BER 1e-3, 5 ms frames, 100 Hz Doppler. The noise density
    /// puts the mean per-subcarrier SNR at 20 dB.
    fn default() -> Self {
        SimConfig {
            bandwidth_hz: 1.25e6,
            total_power_w: dbm_to_watts(20.0),
            num_users: 20,
            num_subcarriers: 72,
            target_ber: 1e-3,
            frame_duration_s: 5e-3,
            window_frames: 10,
            noise_density_w_per_hz: 8e-10,
            doppler_hz: 100.0,
            pf_window: 20,
            psi_init: 1.0,
            rng_seed: 1,
            num_windows: 20,
            fallback: FallbackPolicy::MaxRate,
            freq_correlation: 0.0,
            mean_square_gain: MeanSquareGain::Uniform(1.0),
            convergence_epsilon: 0.05,
            modulation: "16QAM".to_string(),
            channel_sampling_hz: 1.5e6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<ValidatedConfig, ConfigError> {
        for (name, value) in [
            ("num_users", self.num_users),
            ("num_subcarriers", self.num_subcarriers),
            ("window_frames", self.window_frames),
            ("pf_window", self.pf_window),
            ("num_windows", self.num_windows),
        ] {
            if value < 1 {
                return Err(ConfigError::BadDimension { name, value });
            }
        }
        for (name, value) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("total_power_w", self.total_power_w),
            ("noise_density_w_per_hz", self.noise_density_w_per_hz),
            ("frame_duration_s", self.frame_duration_s),
            ("psi_init", self.psi_init),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::NonPositivePhysical { name, value });
            }
        }
        if !(self.doppler_hz >= 0.0 && self.doppler_hz.is_finite()) {
            return Err(ConfigError::NonPositivePhysical {
                name: "doppler_hz",
                value: self.doppler_hz,
            });
        }
        if self.convergence_epsilon.is_nan() || self.convergence_epsilon < 0.0 {
            return Err(ConfigError::NonPositivePhysical {
                name: "convergence_epsilon",
                value: self.convergence_epsilon,
            });
        }
        if !(0.0..1.0).contains(&self.freq_correlation) {
            return Err(ConfigError::BadFrequencyCorrelation(self.freq_correlation));
        }
        match &self.mean_square_gain {
            MeanSquareGain::Uniform(g) => check_positive("mean_square_gain", *g)?,
            MeanSquareGain::PerUser(gs) => {
                if gs.len() != self.num_users {
                    return Err(ConfigError::GainLengthMismatch {
                        expected: self.num_users,
                        got: gs.len(),
                    });
                }
                for g in gs {
                    check_positive("mean_square_gain", *g)?;
                }
            }
        }
        let gap =
            snr_gap(self.target_ber).map_err(|_| ConfigError::BerOutOfRange(self.target_ber))?;

        let n = self.num_subcarriers as f64;
        let subcarrier_bw_hz = self.bandwidth_hz / n;
        let per_subcarrier_power_w = self.total_power_w / n;
        check_positive("subcarrier_bw_hz", subcarrier_bw_hz)?;
        check_positive("per_subcarrier_power_w", per_subcarrier_power_w)?;

        let rate_model = RateModel::new(
            subcarrier_bw_hz,
            per_subcarrier_power_w,
            self.noise_density_w_per_hz,
            gap,
        )
        .expect("fields checked positive above");
        let ar_coeff = temporal_correlation(self.doppler_hz, self.frame_duration_s);

        Ok(ValidatedConfig {
            raw: self.clone(),
            rate_model,
            ar_coeff,
        })
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NonPositivePhysical { name, value })
    }
}

/// A [`SimConfig`] that passed validation, plus its derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    raw: SimConfig,
    rate_model: RateModel,
    ar_coeff: f64,
}

impl ValidatedConfig {
    pub fn raw(&self) -> &SimConfig {
        &self.raw
    }

    pub fn num_users(&self) -> usize {
        self.raw.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.raw.num_subcarriers
    }

    pub fn window_frames(&self) -> usize {
        self.raw.window_frames
    }

    pub fn psi(&self) -> f64 {
        self.raw.psi_init
    }

    pub fn rate_model(&self) -> &RateModel {
        &self.rate_model
    }

    /// Ω_n = B / N.
    pub fn subcarrier_bw_hz(&self) -> f64 {
        self.rate_model.subcarrier_bw_hz()
    }

    /// P_kn = P_T / N.
    pub fn per_subcarrier_power_w(&self) -> f64 {
        self.rate_model.per_subcarrier_power_w()
    }

    pub fn snr_gap(&self) -> f64 {
        self.rate_model.snr_gap()
    }

    /// AR(1) coefficient of the fading process between consecutive frames.
    pub fn ar_coeff(&self) -> f64 {
        self.ar_coeff
    }

    /// Length of one allocation duration, M·T_f, in seconds.
    pub fn allocation_duration_s(&self) -> f64 {
        self.raw.window_frames as f64 * self.raw.frame_duration_s
    }

    pub fn total_frames(&self) -> usize {
        self.raw.window_frames * self.raw.num_windows
    }

    /// Returns a copy with a different M and number of windows.
    pub fn with_windows(
        &self,
        window_frames: usize,
        num_windows: usize,
    ) -> Result<Self, ConfigError> {
        let mut raw = self.raw.clone();
        raw.window_frames = window_frames;
        raw.num_windows = num_windows;
        raw.validate()
    }
}

/// Minimum mean rate per user, γ_k, in bit/s.
#[derive(Debug, Clone, PartialEq)]
pub struct QoSProfile {
    min_rates_bps: Vec<f64>,
}

impl QoSProfile {
    pub fn new(min_rates_bps: Vec<f64>) -> Result<Self, ConfigError> {
        for (user, &value) in min_rates_bps.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::BadQoSRate { user, value });
            }
        }
        Ok(QoSProfile { min_rates_bps })
    }

    /// `num_users` targets spaced linearly from `low` to `high`.
    pub fn linear(num_users: usize, low: f64, high: f64) -> Result<Self, ConfigError> {
        let rates = if num_users == 1 {
            vec![(low + high) / 2.0]
        } else {
            (0..num_users)
                .map(|k| low + (high - low) * k as f64 / (num_users - 1) as f64)
                .collect()
        };
        QoSProfile::new(rates)
    }

    pub fn rates(&self) -> &[f64] {
        &self.min_rates_bps
    }

    pub fn len(&self) -> usize {
        self.min_rates_bps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min_rates_bps.is_empty()
    }

    pub fn gamma(&self, user: usize) -> f64 {
        self.min_rates_bps[user]
    }
}

/// A validated configuration paired with a QoS profile of matching length.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ValidatedConfig,
    pub qos: QoSProfile,
}

/// Checks `cfg` and `qos` against each other and precomputes everything
/// derived from them.
pub fn validate_config(cfg: &SimConfig, qos: &QoSProfile) -> Result<Scenario, ConfigError> {
    let config = cfg.validate()?;
    if qos.len() != cfg.num_users {
        return Err(ConfigError::QoSLengthMismatch {
            expected: cfg.num_users,
            got: qos.len(),
        });
    }
    Ok(Scenario {
        config,
        qos: qos.clone(),
    })
}

/// One frame's subcarrier assignment: `owner[n]` is the user holding
/// subcarrier `n`. Each subcarrier has exactly one owner by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Allocation {
    owner: Vec<usize>,
}

impl Allocation {
    /// Panics if any owner is not a valid user index.
    pub fn new(owner: Vec<usize>, num_users: usize) -> Self {
        assert!(
            owner.iter().all(|&k| k < num_users),
            "allocation references a user outside 0..{num_users}"
        );
        Allocation { owner }
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn owner(&self, subcarrier: usize) -> usize {
        self.owner[subcarrier]
    }

    pub fn num_subcarriers(&self) -> usize {
        self.owner.len()
    }

    /// Subcarriers held by `user`, in increasing order.
    pub fn subcarriers_of(&self, user: usize) -> impl Iterator<Item = usize> + '_ {
        self.owner
            .iter()
            .enumerate()
            .filter(move |(_, &k)| k == user)
            .map(|(n, _)| n)
    }

    /// Number of subcarriers per user.
    pub fn counts(&self, num_users: usize) -> Vec<usize> {
        let mut counts = vec![0; num_users];
        for &k in &self.owner {
            counts[k] += 1;
        }
        counts
    }
}

/// How the QoS profile is given in a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum QoSSpec {
    Explicit(Vec<f64>),
    /// Linearly spaced from 0.5x to 2x the equal-share rate, calibrated by a
    /// max-rate pre-run.
    Auto,
}

/// Contents of a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub sim: SimConfig,
    pub qos: QoSSpec,
}

const KNOWN_KEYS: &[&str] = &[
    "bandwidth_hz",
    "total_power_dbm",
    "num_users",
    "num_subcarriers",
    "target_ber",
    "frame_duration_s",
    "window_frames",
    "noise_density_w_per_hz",
    "doppler_hz",
    "pf_window",
    "psi_init",
    "rng_seed",
    "num_windows",
    "fallback",
    "freq_correlation",
    "mean_square_gain",
    "convergence_epsilon",
    "modulation",
    "channel_sampling_hz",
    "qos_profile",
];

impl ConfigFile {
    /// Parses `key = value` lines. `#` starts a comment; blank lines are
    /// skipped. Keys not present keep their [`SimConfig::default`] value and
    /// a missing `qos_profile` means `auto`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sim = SimConfig::default();
        let mut qos = QoSSpec::Auto;
        let mut seen: Vec<&str> = Vec::new();

        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let Some(&known) = KNOWN_KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                });
            };
            if seen.contains(&known) {
                return Err(ConfigError::DuplicateKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
            seen.push(known);

            let p = Field {
                line: line_no,
                key,
                value,
            };
            match known {
                "bandwidth_hz" => sim.bandwidth_hz = p.num()?,
                "total_power_dbm" => sim.total_power_w = dbm_to_watts(p.num()?),
                "num_users" => sim.num_users = p.num()?,
                "num_subcarriers" => sim.num_subcarriers = p.num()?,
                "target_ber" => sim.target_ber = p.num()?,
                "frame_duration_s" => sim.frame_duration_s = p.num()?,
                "window_frames" => sim.window_frames = p.num()?,
                "noise_density_w_per_hz" => sim.noise_density_w_per_hz = p.num()?,
                "doppler_hz" => sim.doppler_hz = p.num()?,
                "pf_window" => sim.pf_window = p.num()?,
                "psi_init" => sim.psi_init = p.num()?,
                "rng_seed" => sim.rng_seed = p.num()?,
                "num_windows" => sim.num_windows = p.num()?,
                "fallback" => sim.fallback = p.num()?,
                "freq_correlation" => sim.freq_correlation = p.num()?,
                "convergence_epsilon" => sim.convergence_epsilon = p.num()?,
                "channel_sampling_hz" => sim.channel_sampling_hz = p.num()?,
                "modulation" => sim.modulation = value.to_string(),
                "mean_square_gain" => {
                    let gains = p.list()?;
                    sim.mean_square_gain = if gains.len() == 1 {
                        MeanSquareGain::Uniform(gains[0])
                    } else {
                        MeanSquareGain::PerUser(gains)
                    };
                }
                "qos_profile" => {
                    qos = if value == "auto" {
                        QoSSpec::Auto
                    } else {
                        QoSSpec::Explicit(p.list()?)
                    };
                }
                _ => unreachable!("every known key is handled"),
            }
        }
        Ok(ConfigFile { sim, qos })
    }
}

struct Field<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

impl Field<'_> {
    fn num<T: FromStr>(&self) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.value.parse().map_err(|e| ConfigError::Parse {
            line: self.line,
            msg: format!("bad value `{}` for `{}`: {e}", self.value, self.key),
        })
    }

    fn list(&self) -> Result<Vec<f64>, ConfigError> {
        self.value
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|e| ConfigError::Parse {
                    line: self.line,
                    msg: format!("bad list entry `{}` for `{}`: {e}", s.trim(), self.key),
                })
            })
            .collect()
    }
}
