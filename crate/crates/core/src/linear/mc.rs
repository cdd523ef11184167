use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::torus::MAX_DIM;

use super::lattice::{build_m_tilde, LatticeBasis};
use super::{MatrixSequence, RateEstimate, RateMethod};

/// Samples per independently seeded block.
pub const MC_BLOCK: u64 = 4096;

pub const MIN_MC_SAMPLES: u64 = 10_000;

/// Candidate lattice points a single sample may visit before the input is
/// declared ill-conditioned.
pub const MAX_CANDIDATES_PER_SAMPLE: u64 = 1_000_000;

/// Generator used for sampling: block `b` reads stream `b` of a ChaCha8
/// generator seeded with the user seed.
pub const MC_GENERATOR: &str = "ChaCha8Rng(seed_from_u64(seed), stream = block index)";

/// A Monte Carlo estimate of the covered fraction of `W^k + M̃ Z^{nk}`,
/// split into blocks that can be evaluated in any order.
#[derive(Clone, Debug)]
pub struct McPlan {
    dim: usize,
    len: usize,
    samples: u64,
    seed: u64,
    lattice: LatticeBasis,
    blocks: Vec<Matrix>,
    block_inverses: Vec<Matrix>,
    halfwidths: Vec<Vec<f64>>,
}

impl McPlan {
    pub fn new(seq: &MatrixSequence, samples: u64, seed: u64) -> Result<Self> {
        if samples < MIN_MC_SAMPLES {
            return Err(Error::invalid("Monte Carlo needs at least 10^4 samples"));
        }
        let lattice = build_m_tilde(seq)?;
        let block_inverses = lattice.diagonal_block_inverses().expect("block bidiagonal basis").to_vec();
        let halfwidths = block_inverses
            .iter()
            .map(|inv| (0..inv.dim()).map(|r| 0.5 * inv.row(r).iter().map(|v| v.abs()).sum::<f64>()).collect())
            .collect();
        Ok(McPlan {
            dim: seq.dim(),
            len: seq.len(),
            samples,
            seed,
            lattice,
            blocks: seq.matrices().cloned().collect(),
            block_inverses,
            halfwidths,
        })
    }

    pub fn block_count(&self) -> u64 {
        self.samples.div_ceil(MC_BLOCK)
    }

    fn block_len(&self, block: u64) -> u64 {
        MC_BLOCK.min(self.samples - block * MC_BLOCK)
    }

    /// Number of covered samples in `block`.
    pub fn count_block(&self, block: u64) -> Result<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        let m = self.dim * self.len;
        let mut t = vec![0.0f64; m];
        let mut u = vec![0.0f64; m];
        let mut covered = 0u64;
        for _ in 0..self.block_len(block) {
            for ti in t.iter_mut() {
                *ti = rng.random::<f64>();
            }
            self.lattice.basis().mul_vec_into(&t, &mut u);
            let mut budget = MAX_CANDIDATES_PER_SAMPLE;
            if self.covered(&u, self.len, None, &mut budget)? {
                covered += 1;
            }
        }
        Ok(covered)
    }

    /// Searches `z_level-1, …, z_0` with `u - M̃ z ∈ (-1/2, 1/2]^{nk}`.
    ///
    /// Block row `i` of `M̃ z` is `A_i z_i - z_{i+1}`, so the blocks are
    /// solved from the last one up, each confined to the box bounding
    /// `A_i^{-1}(u_i + z_{i+1} + [-1/2, 1/2)^n)`.
    fn covered(&self, u: &[f64], level: usize, next: Option<&[i64]>, budget: &mut u64) -> Result<bool> {
        if level == 0 {
            return Ok(true);
        }
        let i = level - 1;
        let n = self.dim;
        let mut v = [0.0f64; MAX_DIM];
        for r in 0..n {
            v[r] = u[i * n + r] + next.map_or(0.0, |z| z[r] as f64);
        }
        let inv = &self.block_inverses[i];
        let a = &self.blocks[i];
        let mut lo = [0i64; MAX_DIM];
        let mut hi = [0i64; MAX_DIM];
        let mut size = 1u64;
        for r in 0..n {
            let c: f64 = inv.row(r).iter().zip(&v[..n]).map(|(x, y)| x * y).sum();
            let h = self.halfwidths[i][r];
            let slack = 1e-9 * (1.0 + c.abs());
            lo[r] = libm::ceil(c - h - slack) as i64;
            hi[r] = libm::floor(c + h + slack) as i64;
            size = size.saturating_mul((hi[r] - lo[r] + 1).max(0) as u64);
        }
        if size > *budget {
            return Err(Error::Capacity {
                what: "lattice candidates for one Monte Carlo sample",
                requested: MAX_CANDIDATES_PER_SAMPLE - *budget + size,
                limit: MAX_CANDIDATES_PER_SAMPLE,
            });
        }
        *budget -= size;
        if size == 0 {
            return Ok(false);
        }
        let mut z = [0i64; MAX_DIM];
        z[..n].copy_from_slice(&lo[..n]);
        loop {
            let inside = (0..n).all(|r| {
                let e: f64 = a.row(r).iter().zip(&z[..n]).map(|(x, &y)| x * y as f64).sum::<f64>() - v[r];
                (-0.5..0.5).contains(&e)
            });
            if inside && self.covered(u, i, Some(&z[..n]), budget)? {
                return Ok(true);
            }
            let mut d = n;
            loop {
                if d == 0 {
                    return Ok(false);
                }
                d -= 1;
                if z[d] < hi[d] {
                    z[d] += 1;
                    break;
                }
                z[d] = lo[d];
            }
        }
    }

    /// Combines per-block counts (in block order) into an estimate; the gap
    /// compares the first and second halves of the blocks.
    pub fn finish(&self, counts: &[u64]) -> RateEstimate {
        assert_eq!(counts.len() as u64, self.block_count());
        let total: u64 = counts.iter().sum();
        let mid = counts.len() / 2;
        let split = |range: core::ops::Range<usize>| {
            let c: u64 = counts[range.clone()].iter().sum();
            let s: u64 = range.map(|b| self.block_len(b as u64)).sum();
            c as f64 / s as f64
        };
        RateEstimate {
            value: total as f64 / self.samples as f64,
            method: RateMethod::MonteCarlo,
            radius_or_samples: self.samples,
            convergence_gap: (split(0..mid) - split(mid..counts.len())).abs(),
        }
    }
}

/// Mean rate of injectivity: the density of the union of unit cubes
/// `W^k + M̃ Z^{nk}`, estimated from uniform samples `u = M̃ t`,
/// `t ∈ [0,1)^{nk}`, over a fundamental domain (covolume one).
///
/// Translations, if any, do not change this density and are ignored.
pub fn mean_rate_mc(seq: &MatrixSequence, samples: u64, seed: u64) -> Result<RateEstimate> {
    let plan = McPlan::new(seq, samples, seed)?;
    let counts = (0..plan.block_count()).map(|b| plan.count_block(b)).collect::<Result<Vec<_>>>()?;
    Ok(plan.finish(&counts))
}
