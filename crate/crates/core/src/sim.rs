//! Experiment driver: steps the channel frame by frame, runs the selected
//! allocator, updates its state and aggregates per-window reports.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use rayon::prelude::*;
use thiserror::Error;

use crate::alloc::{
    allocate_max_rate, allocate_pf_greedy, allocate_pf_optimal_bruteforce, allocate_round_robin,
    ltpf_allocate_frame, ltpf_initial_allocation, AllocError, AllocatorState, FrameOutcome, Policy,
};
use crate::channel::{ChannelProcess, GainMatrix};
use crate::config::{Allocation, ConfigError, QoSProfile, Scenario, ValidatedConfig};
use crate::metrics::{self, WindowReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error("frame budget {budget} is not a multiple of M = {window_frames}")]
    FrameBudget { budget: usize, window_frames: usize },
    #[error("sweep needs at least one {0}")]
    EmptySweep(&'static str),
}

/// Frames of max-rate operation used to estimate the equal-share rate.
pub const CALIBRATION_FRAMES: usize = 500;

/// Lower and upper multiples of the equal-share rate spanned by the
/// default QoS profile.
pub const DEFAULT_QOS_SPAN: (f64, f64) = (0.5, 2.0);

/// Everything recorded by one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub policy: Policy,
    pub seed: u64,
    pub config: ValidatedConfig,
    pub qos: QoSProfile,
    /// `per_frame_rates[user][frame]`, bit/s.
    pub per_frame_rates: Vec<Vec<f64>>,
    pub allocations: Vec<Allocation>,
    pub window_reports: Vec<WindowReport>,
    pub fallback_frames: usize,
    /// Hash of the exact gain sequence consumed by the run.
    pub gain_digest: u64,
}

/// Scalar digest of a run, for tables and `summary` files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub policy: Policy,
    pub window_frames: usize,
    pub num_windows: usize,
    pub seed: u64,
    /// Window-averaged mean relative deviation from the QoS profile.
    pub qos_deviation: f64,
    pub final_qos_deviation: f64,
    /// Window-averaged Pearson correlation of means against targets.
    pub profile_correlation: Option<f64>,
    pub jain_index: Option<f64>,
    /// Over the whole-run per-user means, floored at ψ.
    pub log_pf_objective: f64,
    pub satisfied_final: usize,
    pub converged_final: usize,
    pub fallback_events: usize,
    pub mean_system_rate_bps: f64,
}

impl ExperimentResult {
    pub fn num_users(&self) -> usize {
        self.per_frame_rates.len()
    }

    pub fn num_frames(&self) -> usize {
        self.allocations.len()
    }

    pub fn window_frames(&self) -> usize {
        self.config.window_frames()
    }

    pub fn window_means(&self) -> Vec<Vec<f64>> {
        self.window_reports
            .iter()
            .map(|w| w.mean_rate_bps.clone())
            .collect()
    }

    pub fn final_window_means(&self) -> &[f64] {
        &self
            .window_reports
            .last()
            .expect("at least one window")
            .mean_rate_bps
    }

    /// Per-user mean rate over the whole run.
    pub fn overall_means(&self) -> Vec<f64> {
        let t = self.num_frames() as f64;
        self.per_frame_rates
            .iter()
            .map(|r| r.iter().sum::<f64>() / t)
            .collect()
    }

    /// Mean over windows of the per-window QoS deviation.
    pub fn mean_qos_deviation(&self) -> f64 {
        let total: f64 = self
            .window_reports
            .iter()
            .map(|w| metrics::qos_deviation(&w.mean_rate_bps, &self.qos).expect("lengths match"))
            .sum();
        total / self.window_reports.len() as f64
    }

    /// Mean over windows of the Pearson correlation between window means and
    /// targets. Windows with zero variance are skipped.
    pub fn mean_profile_correlation(&self) -> Option<f64> {
        let rs: Vec<f64> = self
            .window_reports
            .iter()
            .filter_map(|w| {
                metrics::profile_correlation(&w.mean_rate_bps, &self.qos).expect("lengths match")
            })
            .collect();
        (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64)
    }

    pub fn summary(&self) -> RunSummary {
        let last = self.window_reports.last().expect("at least one window");
        let psi = self.config.psi();
        let floored: Vec<f64> = self
            .overall_means()
            .into_iter()
            .map(|m| m.max(psi))
            .collect();
        let converged = metrics::convergence_check(
            &self.window_means(),
            &self.qos,
            self.config.raw().convergence_epsilon,
        )
        .expect("lengths match");
        let total: f64 = self.per_frame_rates.iter().flatten().sum();
        RunSummary {
            policy: self.policy,
            window_frames: self.window_frames(),
            num_windows: self.window_reports.len(),
            seed: self.seed,
            qos_deviation: self.mean_qos_deviation(),
            final_qos_deviation: metrics::qos_deviation(&last.mean_rate_bps, &self.qos)
                .expect("lengths match"),
            profile_correlation: self.mean_profile_correlation(),
            jain_index: metrics::jain_index(&last.mean_rate_bps).ok(),
            log_pf_objective: metrics::log_pf_objective(&floored).expect("floored at psi"),
            satisfied_final: last.num_satisfied(),
            converged_final: converged.iter().filter(|c| **c).count(),
            fallback_events: self.fallback_frames,
            mean_system_rate_bps: total / self.num_frames() as f64,
        }
    }
}

/// Runs one experiment of `num_windows` allocation windows of M frames.
pub fn run_experiment(
    scenario: &Scenario,
    policy: Policy,
    seed: u64,
) -> Result<ExperimentResult, SimError> {
    run_experiment_observed(scenario, policy, seed, |_, _| {})
}

/// Like [`run_experiment`], calling `observer(frame, gains)` on every frame
/// before allocation.
pub fn run_experiment_observed<F>(
    scenario: &Scenario,
    policy: Policy,
    seed: u64,
    mut observer: F,
) -> Result<ExperimentResult, SimError>
where
    F: FnMut(usize, &GainMatrix),
{
    let cfg = &scenario.config;
    let qos = &scenario.qos;
    let raw = cfg.raw();
    let (k_users, n_sub, m) = (cfg.num_users(), cfg.num_subcarriers(), cfg.window_frames());
    let psi = cfg.psi();
    let model = cfg.rate_model();

    if policy == Policy::PfOptimal {
        // Fail before simulating anything.
        let probe = crate::rate::RateMatrix::from_rows(k_users, n_sub, vec![0.0; k_users * n_sub]);
        allocate_pf_optimal_bruteforce(&probe, &AllocatorState::new(k_users, psi), raw.pf_window)?;
    }

    let total_frames = cfg.total_frames();
    let mut channel = ChannelProcess::new(cfg, seed);
    let mut hasher = DefaultHasher::new();
    let mut state = AllocatorState::new(k_users, psi);

    let mut per_frame_rates = vec![Vec::with_capacity(total_frames); k_users];
    let mut allocations = Vec::with_capacity(total_frames);
    let mut window_reports = Vec::with_capacity(raw.num_windows);
    let mut window_sum = vec![0.0; k_users];
    let mut window_fallbacks = 0;
    let mut fallback_frames = 0;

    for t in 0..total_frames {
        let gains = channel.step();
        gains.hash_bits(&mut hasher);
        observer(t, &gains);
        let rates = model.rate_matrix(&gains);

        let outcome = match policy {
            Policy::Ltpf if t == 0 => {
                let (outcome, seeded) = ltpf_initial_allocation(&rates, psi);
                state = seeded;
                outcome
            }
            Policy::Ltpf => ltpf_allocate_frame(&rates, &state, qos, raw.fallback),
            Policy::PfGreedy => allocate_pf_greedy(&rates, &state),
            Policy::PfOptimal => {
                let alloc = allocate_pf_optimal_bruteforce(&rates, &state, raw.pf_window)?;
                FrameOutcome::new(alloc, &rates, state.running_mean_bps(), false)
            }
            Policy::MaxRate => FrameOutcome::new(
                allocate_max_rate(&rates),
                &rates,
                state.running_mean_bps(),
                false,
            ),
            Policy::RoundRobin => FrameOutcome::new(
                allocate_round_robin(t, k_users, n_sub),
                &rates,
                state.running_mean_bps(),
                false,
            ),
        };
        debug_assert_eq!(outcome.allocation.num_subcarriers(), n_sub);

        match policy {
            Policy::Ltpf => {
                state.apply_ltpf(&outcome, m);
            }
            _ => state.update_pf_mean(&outcome.per_user_rate_bps, raw.pf_window),
        }

        for (k, &r) in outcome.per_user_rate_bps.iter().enumerate() {
            per_frame_rates[k].push(r);
            window_sum[k] += r;
        }
        if outcome.fallback {
            window_fallbacks += 1;
            fallback_frames += 1;
        }
        allocations.push(outcome.allocation);

        if (t + 1) % m == 0 {
            let means = window_sum.iter().map(|s| s / m as f64).collect();
            window_reports.push(WindowReport::new(
                window_reports.len(),
                means,
                qos,
                window_fallbacks,
            ));
            window_sum.iter_mut().for_each(|s| *s = 0.0);
            window_fallbacks = 0;
        }
    }

    Ok(ExperimentResult {
        policy,
        seed,
        config: cfg.clone(),
        qos: qos.clone(),
        per_frame_rates,
        allocations,
        window_reports,
        fallback_frames,
        gain_digest: hasher.finish(),
    })
}

/// Grid of runs for a sweep. Every M gets `frame_budget / M` windows, so
/// all cells simulate the same frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub policies: Vec<Policy>,
    pub m_values: Vec<usize>,
    pub seeds: Vec<u64>,
    pub frame_budget: usize,
}

impl SweepPlan {
    /// Cells in result order: policy-major, then M, then seed.
    pub fn cells(&self) -> Vec<(Policy, usize, u64)> {
        let mut cells = Vec::new();
        for &p in &self.policies {
            for &m in &self.m_values {
                for &s in &self.seeds {
                    cells.push((p, m, s));
                }
            }
        }
        cells
    }
}

/// Runs every (policy, M, seed) cell, in parallel, and returns the results
/// in [`SweepPlan::cells`] order.
pub fn run_sweep(scenario: &Scenario, plan: &SweepPlan) -> Result<Vec<ExperimentResult>, SimError> {
    if plan.policies.is_empty() {
        return Err(SimError::EmptySweep("policy"));
    }
    if plan.m_values.is_empty() {
        return Err(SimError::EmptySweep("M value"));
    }
    if plan.seeds.is_empty() {
        return Err(SimError::EmptySweep("seed"));
    }
    let mut per_m = Vec::with_capacity(plan.m_values.len());
    for &m in &plan.m_values {
        if m == 0 || !plan.frame_budget.is_multiple_of(m) || plan.frame_budget == 0 {
            return Err(SimError::FrameBudget {
                budget: plan.frame_budget,
                window_frames: m,
            });
        }
        let config = scenario.config.with_windows(m, plan.frame_budget / m)?;
        per_m.push((
            m,
            Scenario {
                config,
                qos: scenario.qos.clone(),
            },
        ));
    }
    plan.cells()
        .into_par_iter()
        .map(|(policy, m, seed)| {
            let sc = &per_m
                .iter()
                .find(|(mm, _)| *mm == m)
                .expect("validated above")
                .1;
            run_experiment(sc, policy, seed)
        })
        .collect()
}

/// Default heterogeneous QoS profile: targets spaced linearly from 0.5x to
/// 2x the equal-share rate, where the equal-share rate is the mean system
/// rate of max-rate scheduling over [`CALIBRATION_FRAMES`] frames divided by
/// K. The calibration channel uses the config's own `rng_seed`.
pub fn default_qos_profile(cfg: &ValidatedConfig) -> Result<QoSProfile, ConfigError> {
    let share = equal_share_rate(cfg);
    QoSProfile::linear(
        cfg.num_users(),
        DEFAULT_QOS_SPAN.0 * share,
        DEFAULT_QOS_SPAN.1 * share,
    )
}

/// Mean max-rate system throughput divided by K, bit/s.
pub fn equal_share_rate(cfg: &ValidatedConfig) -> f64 {
    let mut channel = ChannelProcess::new(cfg, cfg.raw().rng_seed);
    let model = cfg.rate_model();
    let mut total = 0.0;
    for _ in 0..CALIBRATION_FRAMES {
        let rates = model.rate_matrix(&channel.step());
        let alloc = allocate_max_rate(&rates);
        total += rates.user_rates(&alloc).iter().sum::<f64>();
    }
    total / CALIBRATION_FRAMES as f64 / cfg.num_users() as f64
}
