//! Block-fading Rayleigh channel.
//!
//! Each (user, subcarrier) pair carries a circular complex Gaussian
//! coefficient that evolves once per frame as a first-order Gauss-Markov
//! process, `c ← a·c + √(1−a²)·w`, with `a = J0(2π·f_D·T_f)`. The amplitude
//! `|c|` is Rayleigh at every step.

use std::f64::consts::PI;
use std::hash::Hasher;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::config::ValidatedConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("maximum Doppler must be positive to define a coherence time, got {0}")]
    NonPositiveDoppler(f64),
}

/// Coherence time `0.423 / f_D`, in seconds.
pub fn coherence_time(doppler_hz: f64) -> Result<f64, ChannelError> {
    if !(doppler_hz > 0.0 && doppler_hz.is_finite()) {
        return Err(ChannelError::NonPositiveDoppler(doppler_hz));
    }
    Ok(0.423 / doppler_hz)
}

/// Frame-to-frame correlation of the fading coefficient under Clarke's
/// model: `J0(2π·f_D·T_f)`.
pub fn temporal_correlation(doppler_hz: f64, frame_duration_s: f64) -> f64 {
    bessel_j0(2.0 * PI * doppler_hz * frame_duration_s)
}

/// Bessel function of the first kind, order zero.
///
/// Uses `J0(x) = (1/π) ∫_0^π cos(x·sin θ) dθ`. The integrand is smooth and
/// periodic, so the trapezoidal rule converges geometrically once the node
/// count exceeds |x|.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return 1.0;
    }
    let nodes = 64 + x.ceil() as usize;
    let step = PI / nodes as f64;
    // Endpoints both contribute cos(0) = 1 with weight 1/2.
    let interior: f64 = (1..nodes)
        .map(|i| (x * (i as f64 * step).sin()).cos())
        .sum();
    (interior + 1.0) / nodes as f64
}

/// K×N matrix of nonnegative amplitude gains h_knt for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    num_users: usize,
    num_subcarriers: usize,
    gains: Vec<f64>,
}

impl GainMatrix {
    /// Row-major `gains[k * num_subcarriers + n]`. Panics on negative or
    /// non-finite entries or a length mismatch.
    pub fn from_rows(num_users: usize, num_subcarriers: usize, gains: Vec<f64>) -> Self {
        assert_eq!(
            gains.len(),
            num_users * num_subcarriers,
            "gain matrix shape"
        );
        assert!(
            gains.iter().all(|g| *g >= 0.0 && g.is_finite()),
            "gains must be nonnegative and finite"
        );
        GainMatrix {
            num_users,
            num_subcarriers,
            gains,
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn get(&self, user: usize, subcarrier: usize) -> f64 {
        self.gains[user * self.num_subcarriers + subcarrier]
    }

    pub fn row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.num_subcarriers..(user + 1) * self.num_subcarriers]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gains
    }

    /// Feeds the exact bit patterns of every gain into `hasher`.
    pub fn hash_bits<H: Hasher>(&self, hasher: &mut H) {
        for g in &self.gains {
            hasher.write_u64(g.to_bits());
        }
    }
}

/// Seeded fading process for all users and subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProcess {
    num_users: usize,
    num_subcarriers: usize,
    /// Interleaved (re, im) per entry, unit mean power.
    state: Vec<(f64, f64)>,
    ar_coeff: f64,
    innovation_scale: f64,
    freq_correlation: f64,
    amplitude_scale: Vec<f64>,
    rng: ChaCha8Rng,
}

impl ChannelProcess {
    /// Starts the process from its stationary distribution.
    pub fn new(cfg: &ValidatedConfig, seed: u64) -> Self {
        let raw = cfg.raw();
        let amplitude_scale = (0..raw.num_users)
            .map(|k| raw.mean_square_gain.for_user(k).sqrt())
            .collect();
        Self::with_params(
            raw.num_users,
            raw.num_subcarriers,
            cfg.ar_coeff(),
            raw.freq_correlation,
            amplitude_scale,
            seed,
        )
    }

    /// Builds a process directly from its parameters. `amplitude_scale[k]`
    /// is √E[h²] for user `k`.
    pub fn with_params(
        num_users: usize,
        num_subcarriers: usize,
        ar_coeff: f64,
        freq_correlation: f64,
        amplitude_scale: Vec<f64>,
        seed: u64,
    ) -> Self {
        assert!(
            ar_coeff.abs() <= 1.0,
            "AR coefficient must satisfy |a| <= 1"
        );
        assert!((0.0..1.0).contains(&freq_correlation));
        assert_eq!(amplitude_scale.len(), num_users);
        assert!(amplitude_scale.iter().all(|s| *s > 0.0));
        let mut proc = ChannelProcess {
            num_users,
            num_subcarriers,
            state: Vec::with_capacity(num_users * num_subcarriers),
            ar_coeff,
            innovation_scale: (1.0 - ar_coeff * ar_coeff).max(0.0).sqrt(),
            freq_correlation,
            amplitude_scale,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        proc.state = proc.draw_field();
        proc
    }

    pub fn ar_coeff(&self) -> f64 {
        self.ar_coeff
    }

    /// One unit-power complex Gaussian field over all (user, subcarrier)
    /// entries, AR(1)-correlated across adjacent subcarriers when
    /// `freq_correlation > 0`.
    fn draw_field(&mut self) -> Vec<(f64, f64)> {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let rho = self.freq_correlation;
        let tail = (1.0 - rho * rho).sqrt();
        let mut out = Vec::with_capacity(self.num_users * self.num_subcarriers);
        for _ in 0..self.num_users {
            let mut prev = (0.0, 0.0);
            for n in 0..self.num_subcarriers {
                let re: f64 = StandardNormal.sample(&mut self.rng);
                let im: f64 = StandardNormal.sample(&mut self.rng);
                let z = (re * half, im * half);
                let w = if n == 0 || rho == 0.0 {
                    z
                } else {
                    (rho * prev.0 + tail * z.0, rho * prev.1 + tail * z.1)
                };
                prev = w;
                out.push(w);
            }
        }
        out
    }

    /// Advances one frame and returns the new amplitudes.
    pub fn step(&mut self) -> GainMatrix {
        let a = self.ar_coeff;
        if a.abs() == 1.0 {
            // Static channel: the innovation has zero weight.
            for c in &mut self.state {
                c.0 *= a;
                c.1 *= a;
            }
        } else {
            let w = self.draw_field();
            let s = self.innovation_scale;
            for (c, w) in self.state.iter_mut().zip(w) {
                c.0 = a * c.0 + s * w.0;
                c.1 = a * c.1 + s * w.1;
            }
        }
        self.amplitudes()
    }

    /// Amplitudes of the current state without advancing.
    pub fn amplitudes(&self) -> GainMatrix {
        let n = self.num_subcarriers;
        let gains = self
            .state
            .iter()
            .enumerate()
            .map(|(i, c)| self.amplitude_scale[i / n] * c.0.hypot(c.1))
            .collect();
        GainMatrix {
            num_users: self.num_users,
            num_subcarriers: n,
            gains,
        }
    }
}
