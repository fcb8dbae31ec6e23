//! `ltpf` command-line front end.
//!
//! A single run writes `frames.csv`, `windows.csv`, `cdf.csv` and
//! `summary.txt` to `--out`. With `--sweep`, every (policy, M, seed) cell
//! gets its own directory under `--out/runs/`, and per-(policy, M) figure
//! files plus `sweep_summary.csv` land in `--out` itself.

pub mod output;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use crate::alloc::Policy;
use crate::config::{validate_config, ConfigError, ConfigFile, QoSProfile, QoSSpec, Scenario};
use crate::sim::{self, run_experiment_observed, run_sweep, ExperimentResult, SimError, SweepPlan};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error in {path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("sweep has no result for policy {policy}, M = {window_frames}, seed {seed}")]
    MissingSweepCell {
        policy: Policy,
        window_frames: usize,
        seed: u64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Long-term proportional fair OFDMA allocation simulator.
#[derive(Debug, Parser)]
#[command(name = "ltpf", version, about)]
pub struct Args {
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: PathBuf,
    /// Allocation policy: ltpf, pf-greedy, pf-optimal, max-rate, round-robin.
    /// Repeatable with --sweep.
    #[arg(long = "policy")]
    pub policies: Vec<Policy>,
    /// Frames per allocation window (M). Repeatable with --sweep.
    #[arg(long = "m")]
    pub m_values: Vec<usize>,
    /// Number of allocation windows to simulate.
    #[arg(long)]
    pub windows: Option<usize>,
    /// RNG seed for the channel. Repeatable with --sweep.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Run every combination of the given policies, M values and seeds.
    #[arg(long)]
    pub sweep: bool,
    /// Total frames per sweep cell (defaults to M x windows from the config).
    #[arg(long)]
    pub frames: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Also write the per-frame channel gains to gains.csv.
    #[arg(long)]
    pub dump_gains: bool,
}

/// Parses `argv`, runs, prints a summary and maps errors to exit codes.
pub fn main_from<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&args) {
        Ok(table) => {
            print!("{table}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Loads the config, applies flag overrides and resolves the QoS profile.
pub fn load_scenario(args: &Args) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.clone(),
        source,
    })?;
    let config_err = |source| CliError::Config {
        path: args.config.clone(),
        source,
    };
    let file = ConfigFile::parse(&text).map_err(config_err)?;
    let mut sim_cfg = file.sim;
    if let Some(&m) = args.m_values.first() {
        sim_cfg.window_frames = m;
    }
    if let Some(w) = args.windows {
        sim_cfg.num_windows = w;
    }
    let validated = sim_cfg.validate().map_err(config_err)?;
    let qos = match file.qos {
        QoSSpec::Explicit(rates) => QoSProfile::new(rates).map_err(config_err)?,
        QoSSpec::Auto => sim::default_qos_profile(&validated).map_err(config_err)?,
    };
    validate_config(&sim_cfg, &qos).map_err(config_err)
}

/// Executes the command and returns the text table to print.
pub fn run(args: &Args) -> Result<String, CliError> {
    if !args.sweep {
        for (name, len) in [
            ("--policy", args.policies.len()),
            ("--m", args.m_values.len()),
            ("--seed", args.seeds.len()),
        ] {
            if len > 1 {
                return Err(CliError::Usage(format!(
                    "{name} given {len} times; repeat it only with --sweep"
                )));
            }
        }
        if args.frames.is_some() {
            return Err(CliError::Usage("--frames only applies with --sweep".into()));
        }
    }
    let scenario = load_scenario(args)?;
    if args.sweep {
        run_sweep_command(args, &scenario)
    } else {
        run_single(args, &scenario)
    }
}

fn run_single(args: &Args, scenario: &Scenario) -> Result<String, CliError> {
    let policy = args.policies.first().copied().unwrap_or(Policy::Ltpf);
    let seed = args
        .seeds
        .first()
        .copied()
        .unwrap_or(scenario.config.raw().rng_seed);
    output::create_dir(&args.out)?;

    let started = Instant::now();
    let mut gains = args
        .dump_gains
        .then(|| String::from(output::gains_csv_header()));
    let result = run_experiment_observed(scenario, policy, seed, |t, g| {
        if let Some(buf) = gains.as_mut() {
            output::gains_csv_rows(t, g, buf);
        }
    })?;
    let elapsed = started.elapsed().as_secs_f64();

    output::write_run(&args.out, &result, elapsed)?;
    if let Some(buf) = gains {
        output::write_file(&args.out.join("gains.csv"), &buf)?;
    }
    Ok(summary_table(std::slice::from_ref(&result), &args.out))
}

fn run_sweep_command(args: &Args, scenario: &Scenario) -> Result<String, CliError> {
    let policies = if args.policies.is_empty() {
        vec![Policy::Ltpf]
    } else {
        args.policies.clone()
    };
    let m_values = if args.m_values.is_empty() {
        vec![1, 4, 10]
    } else {
        args.m_values.clone()
    };
    let seeds = if args.seeds.is_empty() {
        vec![scenario.config.raw().rng_seed]
    } else {
        args.seeds.clone()
    };
    let frame_budget = args
        .frames
        .unwrap_or_else(|| scenario.config.total_frames());
    let plan = SweepPlan {
        policies,
        m_values,
        seeds,
        frame_budget,
    };

    let started = Instant::now();
    let results = run_sweep(scenario, &plan)?;
    let elapsed = started.elapsed().as_secs_f64();

    let runs_dir = args.out.join("runs");
    for r in &results {
        let dir = runs_dir.join(format!(
            "{}_m{}_seed{}",
            r.policy,
            r.window_frames(),
            r.seed
        ));
        output::write_run(&dir, r, elapsed / results.len() as f64)?;
        if args.dump_gains {
            dump_gains_for(scenario, r, &dir)?;
        }
    }
    output::emit_fig_bundle(&results, &plan, &args.out)?;
    output::write_file(
        &args.out.join("sweep_summary.csv"),
        &output::sweep_summary_csv(&results),
    )?;
    Ok(summary_table(&results, &args.out))
}

/// Replays the channel of a finished run to write its gain trace.
fn dump_gains_for(
    scenario: &Scenario,
    result: &ExperimentResult,
    dir: &Path,
) -> Result<(), CliError> {
    let config = result.config.clone();
    let sc = Scenario {
        config,
        qos: scenario.qos.clone(),
    };
    let mut buf = String::from(output::gains_csv_header());
    let mut channel = crate::channel::ChannelProcess::new(&sc.config, result.seed);
    for t in 0..result.num_frames() {
        output::gains_csv_rows(t, &channel.step(), &mut buf);
    }
    output::write_file(&dir.join("gains.csv"), &buf)
}

fn summary_table(results: &[ExperimentResult], out: &Path) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<12} {:>4} {:>6} {:>8} {:>8} {:>8} {:>6} {:>9} {:>12}",
        "policy", "M", "seed", "qos_dev", "corr", "jain", "sat", "fallback", "sys_Mbps"
    )
    .unwrap();
    for r in results {
        let sum = r.summary();
        let corr = sum
            .profile_correlation
            .map_or("-".to_string(), |c| format!("{c:.3}"));
        let jain = sum
            .jain_index
            .map_or("-".to_string(), |j| format!("{j:.3}"));
        writeln!(
            s,
            "{:<12} {:>4} {:>6} {:>8.3} {:>8} {:>8} {:>3}/{:<2} {:>9} {:>12.3}",
            sum.policy.name(),
            sum.window_frames,
            sum.seed,
            sum.qos_deviation,
            corr,
            jain,
            sum.satisfied_final,
            r.num_users(),
            sum.fallback_events,
            sum.mean_system_rate_bps / 1e6
        )
        .unwrap();
    }
    writeln!(s, "results written to {}", out.display()).unwrap();
    s
}
