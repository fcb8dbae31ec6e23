//! Reporting metrics: QoS-profile deviation, fairness, CDFs and the
//! window-size scaling of mean-rate fluctuations.

use thiserror::Error;

use crate::config::QoSProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("rate {value} of user {user} is not positive")]
    NonPositiveRate { user: usize, value: f64 },
    #[error("all rates are zero")]
    AllZero,
    #[error("input is empty")]
    EmptyInput,
    #[error("series of {frames} frames cannot be split into windows of {window}")]
    BadPartition { frames: usize, window: usize },
}

fn same_len(a: usize, b: usize) -> Result<(), MetricsError> {
    if a == b {
        Ok(())
    } else {
        Err(MetricsError::LengthMismatch { left: a, right: b })
    }
}

/// Mean-rate summary of one allocation window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub window_index: usize,
    pub mean_rate_bps: Vec<f64>,
    /// γ_k − ω̄_k; nonpositive when satisfied.
    pub qos_gap_bps: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub fallback_events: usize,
}

impl WindowReport {
    pub fn new(
        window_index: usize,
        mean_rate_bps: Vec<f64>,
        qos: &QoSProfile,
        fallback_events: usize,
    ) -> Self {
        assert_eq!(mean_rate_bps.len(), qos.len());
        let qos_gap_bps: Vec<f64> = mean_rate_bps
            .iter()
            .zip(qos.rates())
            .map(|(m, g)| g - m)
            .collect();
        let satisfied = qos_gap_bps.iter().map(|gap| *gap <= 0.0).collect();
        WindowReport {
            window_index,
            mean_rate_bps,
            qos_gap_bps,
            satisfied,
            fallback_events,
        }
    }

    pub fn num_satisfied(&self) -> usize {
        self.satisfied.iter().filter(|s| **s).count()
    }
}

/// Mean over users of `|γ_k − ω̄_k| / γ_k`.
pub fn qos_deviation(mean_rates: &[f64], qos: &QoSProfile) -> Result<f64, MetricsError> {
    same_len(mean_rates.len(), qos.len())?;
    if mean_rates.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let total: f64 = mean_rates
        .iter()
        .zip(qos.rates())
        .map(|(m, g)| (g - m).abs() / g)
        .sum();
    Ok(total / mean_rates.len() as f64)
}

/// `Σ_k ln ω̄_k`, the proportional fair utility.
pub fn log_pf_objective(mean_rates: &[f64]) -> Result<f64, MetricsError> {
    mean_rates
        .iter()
        .enumerate()
        .map(|(user, &value)| {
            if value > 0.0 {
                Ok(value.ln())
            } else {
                Err(MetricsError::NonPositiveRate { user, value })
            }
        })
        .sum()
}

/// Jain's fairness index `(Σx)² / (K·Σx²)`.
pub fn jain_index(mean_rates: &[f64]) -> Result<f64, MetricsError> {
    if mean_rates.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let sum: f64 = mean_rates.iter().sum();
    let sum_sq: f64 = mean_rates.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return Err(MetricsError::AllZero);
    }
    Ok(sum * sum / (mean_rates.len() as f64 * sum_sq))
}

/// Pearson correlation between achieved means and the QoS targets. `None`
/// when either side has zero variance.
pub fn profile_correlation(
    mean_rates: &[f64],
    qos: &QoSProfile,
) -> Result<Option<f64>, MetricsError> {
    same_len(mean_rates.len(), qos.len())?;
    if mean_rates.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    Ok(pearson(mean_rates, qos.rates()))
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Empirical CDF as `(value, fraction ≤ value)` at each distinct value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / total;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = fraction,
            _ => out.push((*v, fraction)),
        }
    }
    Ok(out)
}

/// Per-user flag: did the final window land within `epsilon` (relative) of
/// the target?
pub fn convergence_check(
    window_means: &[Vec<f64>],
    qos: &QoSProfile,
    epsilon: f64,
) -> Result<Vec<bool>, MetricsError> {
    let last = window_means.last().ok_or(MetricsError::EmptyInput)?;
    same_len(last.len(), qos.len())?;
    Ok(last
        .iter()
        .zip(qos.rates())
        .map(|(m, g)| (g - m).abs() / g <= epsilon)
        .collect())
}

/// For each window size M, splits every user's per-frame series into
/// consecutive windows of M frames and returns the sample standard
/// deviation of the window means, indexed `[m_index][user]`. A single
/// window reports 0.
pub fn windowed_variance_scaling(
    per_frame_rates: &[Vec<f64>],
    window_sizes: &[usize],
) -> Result<Vec<Vec<f64>>, MetricsError> {
    let frames = per_frame_rates.first().map_or(0, Vec::len);
    for series in per_frame_rates {
        same_len(series.len(), frames)?;
    }
    let mut out = Vec::with_capacity(window_sizes.len());
    for &m in window_sizes {
        if m == 0 || frames == 0 || !frames.is_multiple_of(m) {
            return Err(MetricsError::BadPartition { frames, window: m });
        }
        let stds = per_frame_rates
            .iter()
            .map(|series| {
                let means: Vec<f64> = series
                    .chunks(m)
                    .map(|c| c.iter().sum::<f64>() / m as f64)
                    .collect();
                sample_std(&means)
            })
            .collect();
        out.push(stds);
    }
    Ok(out)
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}
