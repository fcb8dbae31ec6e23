//! Instantaneous proportional fair allocation: the per-subcarrier greedy
//! rule and the exhaustive maximizer of the product metric.

use crate::alloc::{argmax, AllocError, AllocatorState, FrameOutcome};
use crate::config::Allocation;
use crate::rate::RateMatrix;

/// Largest K^N the exhaustive search will enumerate.
pub const BRUTEFORCE_LIMIT: u64 = 1_000_000;

/// Gives subcarrier `n` to `argmax_k ω_knt / ω̄_k`, with ω̄ fixed for the
/// whole frame. The state is not modified.
pub fn allocate_pf_greedy(rates: &RateMatrix, state: &AllocatorState) -> FrameOutcome {
    let means = state.running_mean_bps();
    let owner = (0..rates.num_subcarriers())
        .map(|n| {
            argmax((0..rates.num_users()).map(|k| (k, rates.get(k, n) / means[k]))).unwrap_or(0)
        })
        .collect();
    let alloc = Allocation::new(owner, rates.num_users());
    FrameOutcome::new(alloc, rates, means, false)
}

/// `Π_k (1 + ω_kt / ((Δτ − 1)·ω̄_k))`, always ≥ 1.
pub fn pf_product_metric(
    alloc: &Allocation,
    rates: &RateMatrix,
    state: &AllocatorState,
    pf_window: usize,
) -> Result<f64, AllocError> {
    if pf_window < 2 {
        return Err(AllocError::BadWindow(pf_window));
    }
    Ok(product_metric(
        &rates.user_rates(alloc),
        state.running_mean_bps(),
        pf_window,
    ))
}

fn product_metric(user_rates: &[f64], means: &[f64], pf_window: usize) -> f64 {
    let denom = (pf_window - 1) as f64;
    user_rates
        .iter()
        .zip(means)
        .map(|(r, m)| 1.0 + r / (denom * m))
        .product()
}

/// Enumerates all K^N owner vectors and returns the first, in
/// lexicographic order, that maximizes [`pf_product_metric`].
pub fn allocate_pf_optimal_bruteforce(
    rates: &RateMatrix,
    state: &AllocatorState,
    pf_window: usize,
) -> Result<Allocation, AllocError> {
    if pf_window < 2 {
        return Err(AllocError::BadWindow(pf_window));
    }
    let k = rates.num_users();
    let n = rates.num_subcarriers();
    check_bruteforce_size(k, n)?;

    let means = state.running_mean_bps();
    let mut owner = vec![0usize; n];
    let mut user_rates = vec![0.0; k];
    let mut best_owner = owner.clone();
    let mut best = f64::NEG_INFINITY;
    loop {
        user_rates.iter_mut().for_each(|r| *r = 0.0);
        for (sc, &u) in owner.iter().enumerate() {
            user_rates[u] += rates.get(u, sc);
        }
        let metric = product_metric(&user_rates, means, pf_window);
        if metric > best {
            best = metric;
            best_owner.copy_from_slice(&owner);
        }
        // Odometer increment, last subcarrier fastest, so candidates come
        // in lexicographic order.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(Allocation::new(best_owner, k));
            }
            pos -= 1;
            owner[pos] += 1;
            if owner[pos] < k {
                break;
            }
            owner[pos] = 0;
        }
    }
}

pub(crate) fn check_bruteforce_size(
    num_users: usize,
    num_subcarriers: usize,
) -> Result<(), AllocError> {
    let too_large = AllocError::InstanceTooLarge {
        num_users,
        num_subcarriers,
        limit: BRUTEFORCE_LIMIT,
    };
    let exp = u32::try_from(num_subcarriers).map_err(|_| too_large.clone())?;
    match (num_users as u64).checked_pow(exp) {
        Some(count) if count <= BRUTEFORCE_LIMIT => Ok(()),
        _ => Err(too_large),
    }
}
