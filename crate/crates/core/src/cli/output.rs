//! CSV and `key=value` writers for run results and figure data.
//!
//! Schemas:
//!
//! - `frames.csv`: `frame,user,rate_bps`
//! - `windows.csv`: `window,user,mean_rate_bps,gamma_bps,gap_bps,satisfied`
//! - `cdf.csv`: `rate_bps,fraction` over final-window user means
//! - `gains.csv`: `frame,user,subcarrier,gain`
//! - `fig_<policy>_m<M>_profile.csv`: `user,gamma_bps,achieved_mean_bps`
//! - `fig_<policy>_m<M>_cdf.csv`: `rate_bps,fraction`
//!
//! Every numeric field is written in plain decimal with 9 significant
//! digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::alloc::Policy;
use crate::channel::{coherence_time, GainMatrix};
use crate::cli::CliError;
use crate::metrics::{empirical_cdf, windowed_variance_scaling};
use crate::rate::diversity_error_bound;
use crate::sim::{ExperimentResult, RunSummary, SweepPlan};

/// Plain decimal with 9 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = format!("{mantissa}e{exp}").parse().expect("round trip");
    let decimals = (8 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

pub fn frames_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("frame,user,rate_bps\n");
    for t in 0..result.num_frames() {
        for (k, row) in result.per_frame_rates.iter().enumerate() {
            writeln!(s, "{t},{k},{}", fmt_num(row[t])).unwrap();
        }
    }
    s
}

pub fn windows_csv(result: &ExperimentResult) -> String {
    let mut s = String::from("window,user,mean_rate_bps,gamma_bps,gap_bps,satisfied\n");
    for w in &result.window_reports {
        for k in 0..result.num_users() {
            writeln!(
                s,
                "{},{k},{},{},{},{}",
                w.window_index,
                fmt_num(w.mean_rate_bps[k]),
                fmt_num(result.qos.gamma(k)),
                fmt_num(w.qos_gap_bps[k]),
                u8::from(w.satisfied[k])
            )
            .unwrap();
        }
    }
    s
}

fn cdf_body(values: &[f64]) -> String {
    let mut s = String::from("rate_bps,fraction\n");
    for (v, f) in empirical_cdf(values).expect("nonempty") {
        writeln!(s, "{},{}", fmt_num(v), fmt_num(f)).unwrap();
    }
    s
}

pub fn cdf_csv(result: &ExperimentResult) -> String {
    cdf_body(result.final_window_means())
}

pub fn gains_csv_header() -> &'static str {
    "frame,user,subcarrier,gain\n"
}

pub fn gains_csv_rows(frame: usize, gains: &GainMatrix, out: &mut String) {
    for k in 0..gains.num_users() {
        for (n, g) in gains.row(k).iter().enumerate() {
            writeln!(out, "{frame},{k},{n},{}", fmt_num(*g)).unwrap();
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), fmt_num)
}

/// `key=value` lines describing one run. `wall_clock_s` is the only field
/// that varies between identical invocations.
pub fn summary_text(result: &ExperimentResult, wall_clock_s: f64) -> String {
    let RunSummary {
        policy,
        window_frames,
        num_windows,
        seed,
        qos_deviation,
        final_qos_deviation,
        profile_correlation,
        jain_index,
        log_pf_objective,
        satisfied_final,
        converged_final,
        fallback_events,
        mean_system_rate_bps,
    } = result.summary();
    let cfg = &result.config;
    let raw = cfg.raw();
    let effective_snr = cfg.rate_model().mean_snr() / cfg.snr_gap();
    let bound = diversity_error_bound(window_frames as u32, effective_snr).ok();
    let spread = windowed_variance_scaling(&result.per_frame_rates, &[window_frames])
        .ok()
        .map(|s| rms(&s[0]));

    let mut s = String::new();
    let mut kv = |k: &str, v: String| writeln!(s, "{k}={v}").unwrap();
    kv("policy", policy.to_string());
    kv("window_frames", window_frames.to_string());
    kv("num_windows", num_windows.to_string());
    kv("frames", result.num_frames().to_string());
    kv("seed", seed.to_string());
    kv("num_users", cfg.num_users().to_string());
    kv("num_subcarriers", cfg.num_subcarriers().to_string());
    kv("fallback_policy", raw.fallback.to_string());
    kv("modulation", raw.modulation.clone());
    kv("snr_gap", fmt_num(cfg.snr_gap()));
    kv("ar_coeff", fmt_num(cfg.ar_coeff()));
    kv("coherence_time_s", opt(coherence_time(raw.doppler_hz).ok()));
    kv(
        "allocation_duration_s",
        fmt_num(cfg.allocation_duration_s()),
    );
    kv("qos_deviation", fmt_num(qos_deviation));
    kv("final_qos_deviation", fmt_num(final_qos_deviation));
    kv("profile_correlation", opt(profile_correlation));
    kv("jain_index", opt(jain_index));
    kv("log_pf_objective", fmt_num(log_pf_objective));
    kv("satisfied_final", satisfied_final.to_string());
    kv("converged_final", converged_final.to_string());
    kv("convergence_epsilon", fmt_num(raw.convergence_epsilon));
    kv("fallback_events", fallback_events.to_string());
    kv("mean_system_rate_bps", fmt_num(mean_system_rate_bps));
    kv("window_mean_std_bps", opt(spread));
    kv("mean_effective_snr", fmt_num(effective_snr));
    kv("diversity_error_bound", opt(bound));
    kv("wall_clock_s", format!("{wall_clock_s:.3}"));
    s
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes frames.csv, windows.csv, cdf.csv and summary.txt into `dir`.
pub fn write_run(dir: &Path, result: &ExperimentResult, wall_clock_s: f64) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join("frames.csv"), &frames_csv(result))?;
    write_file(&dir.join("windows.csv"), &windows_csv(result))?;
    write_file(&dir.join("cdf.csv"), &cdf_csv(result))?;
    write_file(
        &dir.join("summary.txt"),
        &summary_text(result, wall_clock_s),
    )?;
    Ok(())
}

/// Profile and CDF files for one (policy, M) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FigCell {
    pub policy: Policy,
    pub window_frames: usize,
    /// γ_k, verbatim from the QoS profile.
    pub gamma_bps: Vec<f64>,
    /// Final-window mean per user, averaged over seeds.
    pub achieved_mean_bps: Vec<f64>,
    /// Final-window means of every user in every seed.
    pub pooled_final_means: Vec<f64>,
}

impl FigCell {
    pub fn profile_csv(&self) -> String {
        let mut s = String::from("user,gamma_bps,achieved_mean_bps\n");
        for (k, (g, a)) in self
            .gamma_bps
            .iter()
            .zip(&self.achieved_mean_bps)
            .enumerate()
        {
            writeln!(s, "{k},{},{}", fmt_num(*g), fmt_num(*a)).unwrap();
        }
        s
    }

    pub fn cdf_csv(&self) -> String {
        cdf_body(&self.pooled_final_means)
    }

    pub fn file_stem(&self) -> String {
        format!("fig_{}_m{}", self.policy, self.window_frames)
    }
}

/// Groups sweep results into one [`FigCell`] per (policy, M). Every seed of
/// the plan must be present for every cell.
pub fn fig_cells(results: &[ExperimentResult], plan: &SweepPlan) -> Result<Vec<FigCell>, CliError> {
    let mut cells = Vec::new();
    for &policy in &plan.policies {
        for &m in &plan.m_values {
            let mut runs = Vec::with_capacity(plan.seeds.len());
            for &seed in &plan.seeds {
                let run = results
                    .iter()
                    .find(|r| r.policy == policy && r.window_frames() == m && r.seed == seed)
                    .ok_or(CliError::MissingSweepCell {
                        policy,
                        window_frames: m,
                        seed,
                    })?;
                runs.push(run);
            }
            let k_users = runs[0].num_users();
            let mut achieved = vec![0.0; k_users];
            let mut pooled = Vec::with_capacity(k_users * runs.len());
            for run in &runs {
                for (a, v) in achieved.iter_mut().zip(run.final_window_means()) {
                    *a += v;
                }
                pooled.extend_from_slice(run.final_window_means());
            }
            achieved.iter_mut().for_each(|a| *a /= runs.len() as f64);
            cells.push(FigCell {
                policy,
                window_frames: m,
                gamma_bps: runs[0].qos.rates().to_vec(),
                achieved_mean_bps: achieved,
                pooled_final_means: pooled,
            });
        }
    }
    Ok(cells)
}

/// Writes one profile CSV and one CDF CSV per (policy, M) into `dir` and
/// returns their paths.
pub fn emit_fig_bundle(
    results: &[ExperimentResult],
    plan: &SweepPlan,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    create_dir(dir)?;
    let mut written = Vec::new();
    for cell in fig_cells(results, plan)? {
        let stem = cell.file_stem();
        let profile = dir.join(format!("{stem}_profile.csv"));
        let cdf = dir.join(format!("{stem}_cdf.csv"));
        write_file(&profile, &cell.profile_csv())?;
        write_file(&cdf, &cell.cdf_csv())?;
        written.push(profile);
        written.push(cdf);
    }
    Ok(written)
}

/// One row per sweep cell.
pub fn sweep_summary_csv(results: &[ExperimentResult]) -> String {
    let mut s = String::from(
        "policy,window_frames,seed,qos_deviation,final_qos_deviation,profile_correlation,jain_index,fallback_events,mean_system_rate_bps\n",
    );
    for r in results {
        let sum = r.summary();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            sum.policy,
            sum.window_frames,
            sum.seed,
            fmt_num(sum.qos_deviation),
            fmt_num(sum.final_qos_deviation),
            opt(sum.profile_correlation),
            opt(sum.jain_index),
            sum.fallback_events,
            fmt_num(sum.mean_system_rate_bps)
        )
        .unwrap();
    }
    s
}
