use alloc::vec::Vec;

use crate::error::Result;

use super::{random_sl_sequence, rate_brute_force};

/// One `τ^k` estimate of a decay run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    pub trial: u32,
    pub seed: u64,
    pub k: usize,
    pub tau_estimate: f64,
    pub radius: u64,
    pub convergence_gap: f64,
}

/// Seed of trial `t` in a run seeded with `seed`.
pub fn trial_seed(seed: u64, trial: u32) -> u64 {
    seed.wrapping_add(trial as u64)
}

/// Draws the sequence of trial `trial` and estimates `τ^k` of every prefix
/// `k = 1..=k_max` by brute force.
pub fn decay_trial(
    dim: usize,
    k_max: usize,
    norm_bound: f64,
    seed: u64,
    trial: u32,
    radius: u64,
    max_points: u64,
) -> Result<Vec<DecayRow>> {
    let s = trial_seed(seed, trial);
    let seq = random_sl_sequence(dim, k_max, norm_bound, s)?;
    (1..=k_max)
        .map(|k| {
            let est = rate_brute_force(&seq.prefix(k)?, radius, max_points)?;
            Ok(DecayRow { trial, seed: s, k, tau_estimate: est.value, radius, convergence_gap: est.convergence_gap })
        })
        .collect()
}

/// [`decay_trial`] for trials `0..trials`, concatenated in trial order.
pub fn decay_experiment(
    dim: usize,
    k_max: usize,
    norm_bound: f64,
    trials: u32,
    seed: u64,
    radius: u64,
    max_points: u64,
) -> Result<Vec<DecayRow>> {
    let mut rows = Vec::with_capacity(trials as usize * k_max);
    for trial in 0..trials {
        rows.extend(decay_trial(dim, k_max, norm_bound, seed, trial, radius, max_points)?);
    }
    Ok(rows)
}
