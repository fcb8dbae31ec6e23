use crate::alloc::argmax;
use crate::config::Allocation;
use crate::rate::RateMatrix;

/// Gives every subcarrier to the user with the highest instantaneous rate.
pub fn allocate_max_rate(rates: &RateMatrix) -> Allocation {
    let owner = (0..rates.num_subcarriers())
        .map(|n| argmax((0..rates.num_users()).map(|k| (k, rates.get(k, n)))).unwrap_or(0))
        .collect();
    Allocation::new(owner, rates.num_users())
}

/// Channel-oblivious cyclic assignment, `owner[n] = (n + t·N) mod K`.
pub fn allocate_round_robin(
    frame_index: usize,
    num_users: usize,
    num_subcarriers: usize,
) -> Allocation {
    assert!(num_users >= 1);
    let offset = (frame_index % num_users) * (num_subcarriers % num_users);
    let owner = (0..num_subcarriers)
        .map(|n| (n + offset) % num_users)
        .collect();
    Allocation::new(owner, num_users)
}
