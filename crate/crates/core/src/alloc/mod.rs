//! Subcarrier allocation policies.
//!
//! Every allocator works on a [`RateMatrix`] of instantaneous per-subcarrier
//! rates and returns an [`Allocation`] in which each subcarrier has exactly
//! one owner. Ties always go to the lowest user index, then the lowest
//! subcarrier index.

mod baseline;
mod ltpf;
mod pf;
mod state;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use baseline::{allocate_max_rate, allocate_round_robin};
pub use ltpf::{ltpf_allocate_frame, ltpf_initial_allocation};
pub use pf::{
    allocate_pf_greedy, allocate_pf_optimal_bruteforce, pf_product_metric, BRUTEFORCE_LIMIT,
};
pub use state::AllocatorState;

use crate::config::Allocation;
use crate::rate::RateMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("the product PF metric needs an averaging window of at least 2 frames, got {0}")]
    BadWindow(usize),
    #[error("exhaustive search over {num_users}^{num_subcarriers} allocations exceeds the limit of {limit}")]
    InstanceTooLarge {
        num_users: usize,
        num_subcarriers: usize,
        limit: u64,
    },
}

/// Result of allocating one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub allocation: Allocation,
    /// ω_kt, bit/s.
    pub per_user_rate_bps: Vec<f64>,
    /// ω_kt divided by the running mean at the start of the frame.
    pub per_user_pfi: Vec<f64>,
    /// Every user was already satisfied, so the fallback rule chose owners.
    pub fallback: bool,
}

impl FrameOutcome {
    pub(crate) fn new(
        allocation: Allocation,
        rates: &RateMatrix,
        running_mean_bps: &[f64],
        fallback: bool,
    ) -> Self {
        let per_user_rate_bps = rates.user_rates(&allocation);
        let per_user_pfi = per_user_rate_bps
            .iter()
            .zip(running_mean_bps)
            .map(|(r, m)| r / m)
            .collect();
        FrameOutcome {
            allocation,
            per_user_rate_bps,
            per_user_pfi,
            fallback,
        }
    }
}

/// Allocator selection for a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Ltpf,
    PfGreedy,
    PfOptimal,
    MaxRate,
    RoundRobin,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Ltpf,
        Policy::PfGreedy,
        Policy::PfOptimal,
        Policy::MaxRate,
        Policy::RoundRobin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Ltpf => "ltpf",
            Policy::PfGreedy => "pf-greedy",
            Policy::PfOptimal => "pf-optimal",
            Policy::MaxRate => "max-rate",
            Policy::RoundRobin => "round-robin",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Policy::ALL.iter().map(|p| p.name()).collect();
                format!(
                    "unknown policy `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Index of the largest value, first one on ties. `None` for an empty
/// iterator.
pub(crate) fn argmax<I: IntoIterator<Item = (usize, f64)>>(items: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in items {
        match best {
            Some((_, b)) if v.partial_cmp(&b) != Some(std::cmp::Ordering::Greater) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
