//! Multi-user OFDMA downlink simulator with long-term proportional fair
//! (LTPF) subcarrier allocation.
//!
//! The crate is organised bottom-up:
//!
//! - [`config`]: parameters, QoS profiles, the [`Allocation`](config::Allocation) type and the config file format.
//! - [`channel`]: seeded block-fading Rayleigh channel with Doppler-driven frame correlation.
//! - [`rate`]: SNR-gap rate model and the time-diversity error bound.
//! - [`alloc`]: LTPF, instantaneous PF (greedy and exhaustive), max-rate and round-robin.
//! - [`metrics`]: QoS deviation, fairness, CDFs and window-size scaling.
//! - [`sim`]: experiment and sweep drivers.
//! - [`cli`]: the `ltpf` command-line front end and its CSV outputs.

pub mod alloc;
pub mod channel;
pub mod cli;
pub mod config;
pub mod metrics;
pub mod rate;
pub mod sim;

pub use alloc::Policy;
pub use config::{validate_config, Allocation, QoSProfile, Scenario, SimConfig, ValidatedConfig};
pub use sim::{run_experiment, run_sweep, ExperimentResult, SweepPlan};
