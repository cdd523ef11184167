//! Probability measures on grids and the dyadic-cube distance between them.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Successor};
use crate::Budget;

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A probability measure with finitely many atoms on a grid.
///
/// Atoms are kept sorted by linear address with strictly positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    grid: GridSpec,
    atoms: Vec<(u64, f64)>,
}

impl DiscreteMeasure {
    /// Builds a measure from `(address, weight)` pairs. Repeated addresses are
    /// merged, zero weights dropped; the total must be 1.
    pub fn from_atoms(grid: GridSpec, atoms: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let mut atoms: Vec<(u64, f64)> = atoms.into_iter().collect();
        for &(a, w) in &atoms {
            if a >= grid.cells() {
                return Err(Error::invalid("atom address out of range"));
            }
            if !w.is_finite() {
                return Err(Error::NonFinite);
            }
            if w < 0.0 {
                return Err(Error::invalid("negative atom weight"));
            }
        }
        atoms.sort_by_key(|&(a, _)| a);
        let atoms = merge_sorted(atoms);
        let total = compensated_sum(atoms.iter().map(|&(_, w)| w));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid("measure weights must sum to 1"));
        }
        Ok(DiscreteMeasure { grid, atoms })
    }

    pub fn dirac(grid: GridSpec, address: u64) -> Result<Self> {
        DiscreteMeasure::from_atoms(grid, [(address, 1.0)])
    }

    /// Uniform measure on a set of distinct addresses.
    pub fn uniform_on(grid: GridSpec, addresses: &[u64]) -> Result<Self> {
        if addresses.is_empty() {
            return Err(Error::invalid("uniform measure needs at least one point"));
        }
        let w = 1.0 / addresses.len() as f64;
        DiscreteMeasure::from_atoms(grid, addresses.iter().map(|&a| (a, w)))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn atoms(&self) -> &[(u64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self, address: u64) -> f64 {
        match self.atoms.binary_search_by_key(&address, |&(a, _)| a) {
            Ok(i) => self.atoms[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|&(_, w)| w))
    }

    /// Total variation `Σ |μ(p) - ν(p)|` over grid points (same grid only).
    pub fn l1_distance(&self, other: &DiscreteMeasure) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("measures live on different grids"));
        }
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.atoms, &other.atoms);
        let mut diffs = Vec::with_capacity(a.len() + b.len());
        while i < a.len() || j < b.len() {
            let d = if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                i += 1;
                a[i - 1].1
            } else if i == a.len() || b[j].0 < a[i].0 {
                j += 1;
                b[j - 1].1
            } else {
                i += 1;
                j += 1;
                a[i - 1].1 - b[j - 1].1
            };
            diffs.push(d.abs());
        }
        Ok(compensated_sum(diffs.into_iter()))
    }
}

fn merge_sorted(atoms: Vec<(u64, f64)>) -> Vec<(u64, f64)> {
    let mut out: Vec<(u64, f64)> = Vec::with_capacity(atoms.len());
    for (a, w) in atoms {
        match out.last_mut() {
            Some((last, acc)) if *last == a => *acc += w,
            _ => out.push((a, w)),
        }
    }
    out.retain(|&(_, w)| w > 0.0);
    out
}

/// `Leb_N`: weight `N^-n` on every grid point.
pub fn lebesgue(grid: GridSpec, budget: &Budget) -> Result<DiscreteMeasure> {
    let cells = grid.check_table_budget(2, budget)?;
    let w = 1.0 / grid.cells() as f64;
    Ok(DiscreteMeasure { grid, atoms: (0..cells as u64).map(|a| (a, w)).collect() })
}

/// `f_*μ`: the weight of `p` is the total weight of its preimages.
pub fn pushforward<S: Successor>(mu: &DiscreteMeasure, map: &S) -> Result<DiscreteMeasure> {
    if mu.grid != *map.grid() {
        return Err(Error::invalid("measure and map live on different grids"));
    }
    let mut moved: Vec<(u64, f64)> = mu.atoms.iter().map(|&(a, w)| (map.successor(a), w)).collect();
    moved.sort_by_key(|&(a, _)| a);
    Ok(DiscreteMeasure { grid: mu.grid, atoms: merge_sorted(moved) })
}

/// Masses of the dyadic cubes `Π [i_d/2^k, (i_d+1)/2^k)` for `k = 0..=K`.
///
/// Level `k` holds `2^(nk)` masses, cube indices linearized row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicHistogram {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl DyadicHistogram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The deepest level `K`.
    pub fn max_level(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn level(&self, k: u32) -> &[f64] {
        &self.levels[k as usize]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }
}

/// Largest supported `n·K` for a histogram (2^24 cubes at the deepest level).
pub const MAX_HISTOGRAM_BITS: u32 = 24;

pub fn to_histogram(mu: &DiscreteMeasure, max_level: u32) -> Result<DyadicHistogram> {
    let dim = mu.grid.dim();
    let bits = check_histogram_bits(dim, max_level)?;
    let order = mu.grid.order() as u128;
    let side = 1u128 << max_level;
    let mut deepest = vec![0.0f64; 1usize << bits];
    let mut comps = [0u64; crate::torus::MAX_DIM];
    for &(a, w) in &mu.atoms {
        mu.grid.decompose(a, &mut comps);
        // i/N lies in [c/2^K, (c+1)/2^K) exactly when c = floor(i·2^K / N).
        let cube = comps[..dim]
            .iter()
            .fold(0usize, |acc, &i| (acc << max_level) | ((i as u128 * side / order) as usize));
        deepest[cube] += w;
    }
    Ok(build_levels(dim, max_level, deepest))
}

/// Histogram of `Leb_N` computed axis by axis, without listing the `N^n`
/// atoms: the deepest cube `(c_d)` holds `Π_d #{i : floor(i·2^K/N) = c_d} / N^n`.
pub fn lebesgue_histogram(grid: &GridSpec, max_level: u32) -> Result<DyadicHistogram> {
    let dim = grid.dim();
    let bits = check_histogram_bits(dim, max_level)?;
    let order = grid.order() as u128;
    let side = 1u128 << max_level;
    let mut counts = vec![0u64; side as usize];
    for i in 0..grid.order() {
        counts[(i as u128 * side / order) as usize] += 1;
    }
    let cells = grid.cells() as f64;
    let mask = (1usize << max_level) - 1;
    let deepest = (0..1usize << bits)
        .map(|cube| {
            let prod = (0..dim).fold(1u128, |acc, d| acc * counts[(cube >> (d as u32 * max_level)) & mask] as u128);
            prod as f64 / cells
        })
        .collect();
    Ok(build_levels(dim, max_level, deepest))
}

fn check_histogram_bits(dim: usize, max_level: u32) -> Result<u32> {
    let bits = dim as u32 * max_level;
    if bits > MAX_HISTOGRAM_BITS {
        return Err(Error::Capacity {
            what: "dyadic histogram cubes (log2)",
            requested: bits as u64,
            limit: MAX_HISTOGRAM_BITS as u64,
        });
    }
    Ok(bits)
}

/// Sums the deepest level up into all coarser ones.
fn build_levels(dim: usize, max_level: u32, deepest: Vec<f64>) -> DyadicHistogram {
    let mut levels = vec![deepest];
    for k in (0..max_level).rev() {
        let child = levels.last().expect("non-empty");
        let mut parent = vec![0.0f64; 1usize << (dim as u32 * k)];
        for (c, &m) in child.iter().enumerate() {
            parent[parent_cube(c, dim, k + 1)] += m;
        }
        levels.push(parent);
    }
    levels.reverse();
    DyadicHistogram { dim, levels }
}

/// Index at level `child_level - 1` of the cube containing child cube `c`.
pub(crate) fn parent_cube(c: usize, dim: usize, child_level: u32) -> usize {
    let mask = (1usize << child_level) - 1;
    let mut p = 0usize;
    for d in (0..dim).rev() {
        let comp = (c >> (d as u32 * child_level)) & mask;
        p = (p << (child_level - 1)) | (comp >> 1);
    }
    p
}

/// `Σ_{k=0}^{K} 2^-k Σ_cubes |h1(C) - h2(C)|` between two histograms.
pub fn histogram_distance(h1: &DyadicHistogram, h2: &DyadicHistogram) -> Result<f64> {
    if h1.dim != h2.dim {
        return Err(Error::DimensionMismatch { expected: h1.dim, found: h2.dim });
    }
    if h1.levels.len() != h2.levels.len() {
        return Err(Error::invalid("histograms have different depths"));
    }
    let mut total = 0.0;
    for (k, (l1, l2)) in h1.levels.iter().zip(&h2.levels).enumerate() {
        let level: f64 = compensated_sum(l1.iter().zip(l2).map(|(a, b)| (a - b).abs()));
        total += level / (1u64 << k) as f64;
    }
    Ok(total)
}

/// Dyadic distance truncated at level `K` (7 in the standard setting).
///
/// The two measures may live on grids of different orders.
pub fn dyadic_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure, max_level: u32) -> Result<f64> {
    if mu.grid.dim() != nu.grid.dim() {
        return Err(Error::DimensionMismatch { expected: mu.grid.dim(), found: nu.grid.dim() });
    }
    histogram_distance(&to_histogram(mu, max_level)?, &to_histogram(nu, max_level)?)
}

/// Default truncation level of the dyadic distance.
pub const DEFAULT_LEVEL: u32 = 7;
