//! Multi-threaded versions of the core computations. Each splits the work
//! into pieces whose results do not depend on how they are scheduled, so
//! the output is identical to the single-threaded core for any thread count.

use ergodisc_core::linear::{brute_force_counts, check_ball, decay_trial, finish_brute_force, McPlan, MIN_RADIUS};
use ergodisc_core::{Budget, DecayRow, DiscretizedMap, Error, MatrixSequence, RateEstimate, Result, SuccessorTable};
use ergodisc_core::grid::Successor;
use rayon::prelude::*;

const FILL_CHUNK: usize = 1 << 14;

/// Same table as [`DiscretizedMap::materialize`].
pub fn materialize(map: &DiscretizedMap, budget: &Budget) -> Result<SuccessorTable> {
    let grid = *map.grid();
    let cells = grid.check_table_budget(1, budget)?;
    let mut next = vec![0u64; cells];
    next.par_chunks_mut(FILL_CHUNK).enumerate().for_each(|(i, chunk)| map.fill((i * FILL_CHUNK) as u64, chunk));
    SuccessorTable::from_vec(grid, next)
}

/// Same estimate as the core `rate_brute_force`, one task per slab of the
/// first coordinate.
pub fn rate_brute_force(seq: &MatrixSequence, radius: u64, max_points: u64) -> Result<RateEstimate> {
    if radius < MIN_RADIUS {
        return Err(Error::Invalid("brute-force radius must be at least 10".into()));
    }
    check_ball(seq.dim(), radius, max_points)?;
    let r = radius as i64;
    let (full, inner) = (-r..=r)
        .into_par_iter()
        .map(|x0| brute_force_counts(seq, radius, x0..x0 + 1))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(finish_brute_force(seq.dim(), radius, (full, inner)))
}

/// Same estimate as the core `mean_rate_mc`, one task per sample block.
pub fn mean_rate_mc(seq: &MatrixSequence, samples: u64, seed: u64) -> Result<RateEstimate> {
    let plan = McPlan::new(seq, samples, seed)?;
    let counts = (0..plan.block_count()).into_par_iter().map(|b| plan.count_block(b)).collect::<Result<Vec<_>>>()?;
    Ok(plan.finish(&counts))
}

/// Same rows as the core `decay_experiment`, one task per trial.
pub fn decay_experiment(
    dim: usize,
    k_max: usize,
    norm_bound: f64,
    trials: u32,
    seed: u64,
    radius: u64,
    max_points: u64,
) -> Result<Vec<DecayRow>> {
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|t| decay_trial(dim, k_max, norm_bound, seed, t, radius, max_points))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}
