//! Uniform grids `E_N`, the rounding projection onto them, and the finite
//! self-maps they induce.
//!
//! Grid indices are 0-based (`i` stands for the coordinate `i/N`) and are
//! linearized row-major: `address = Σ index_d · N^(n-d-1)`. Every dense table
//! in this crate and every exported file uses that order.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::torus::{TorusMapExpr, TorusPoint, MAX_DIM};
use crate::Budget;

/// The unique integer `k` with `k - 1/2 < x ≤ k + 1/2`, i.e. `ceil(x - 1/2)`.
pub fn project_scalar(x: f64) -> Result<i64> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if x.abs() >= 9.0e18 {
        return Err(Error::invalid("value too large to round to a 64-bit integer"));
    }
    Ok(round_half_down(x))
}

/// `ceil(x - 1/2)` without the range checks.
#[inline]
pub(crate) fn round_half_down(x: f64) -> i64 {
    libm::ceil(x - 0.5) as i64
}

/// Dimension and order of a uniform grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridSpec {
    dim: usize,
    order: u64,
    cells: u64,
}

impl GridSpec {
    pub fn new(dim: usize, order: u64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("grid dimension must be in 1..=8"));
        }
        if order == 0 {
            return Err(Error::invalid("grid order must be positive"));
        }
        let mut cells = 1u64;
        for _ in 0..dim {
            cells = cells
                .checked_mul(order)
                .ok_or_else(|| Error::invalid("N^n does not fit in 64 bits"))?;
        }
        Ok(GridSpec { dim, order, cells })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N`.
    pub fn order(&self) -> u64 {
        self.order
    }

    /// `N^n`.
    pub fn cells(&self) -> u64 {
        self.cells
    }

    pub fn contains(&self, index: &GridIndex) -> bool {
        index.0.len() == self.dim && index.0.iter().all(|&i| i < self.order)
    }

    pub fn address(&self, index: &GridIndex) -> Result<u64> {
        if index.0.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: index.0.len() });
        }
        if !self.contains(index) {
            return Err(Error::invalid("grid index out of range"));
        }
        Ok(index.0.iter().fold(0u64, |acc, &i| acc * self.order + i))
    }

    pub fn index(&self, address: u64) -> GridIndex {
        let mut out = vec![0u64; self.dim];
        self.decompose(address, &mut out);
        GridIndex(out)
    }

    /// Writes the components of `address` into `out[..dim]`.
    #[inline]
    pub fn decompose(&self, mut address: u64, out: &mut [u64]) {
        for slot in out[..self.dim].iter_mut().rev() {
            *slot = address % self.order;
            address /= self.order;
        }
    }

    /// Coordinates `i_d / N` of the grid point at `address`.
    #[inline]
    pub fn embed_address(&self, address: u64, out: &mut [f64]) {
        let mut idx = [0u64; MAX_DIM];
        self.decompose(address, &mut idx);
        let n = self.order as f64;
        for (o, &i) in out[..self.dim].iter_mut().zip(idx.iter()) {
            *o = i as f64 / n;
        }
    }

    pub fn embed(&self, index: &GridIndex) -> Result<TorusPoint> {
        self.address(index)?;
        let n = self.order as f64;
        TorusPoint::new(index.0.iter().map(|&i| i as f64 / n).collect())
    }

    /// Nearest grid point of a coordinate slice, as an address.
    #[inline]
    pub fn project_address(&self, coords: &[f64]) -> u64 {
        let n = self.order as f64;
        let modulus = self.order as i64;
        coords[..self.dim].iter().fold(0u64, |acc, &c| {
            let k = round_half_down(n * c).rem_euclid(modulus);
            acc * self.order + k as u64
        })
    }

    /// Bytes needed for one 64-bit word per grid point.
    pub fn table_bytes(&self) -> u64 {
        self.cells.saturating_mul(8)
    }

    /// Checks that `words_per_cell` 64-bit words per grid point fit in the
    /// byte budget and returns the number of cells.
    pub fn check_table_budget(&self, words_per_cell: u64, budget: &Budget) -> Result<usize> {
        let bytes = self.cells.saturating_mul(8 * words_per_cell);
        if bytes > budget.bytes || usize::try_from(self.cells).is_err() {
            return Err(Error::Capacity { what: "dense grid table (bytes)", requested: bytes, limit: budget.bytes });
        }
        Ok(self.cells as usize)
    }
}

/// Integer grid coordinates, each in `0..N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex(pub Vec<u64>);

impl GridIndex {
    pub fn components(&self) -> &[u64] {
        &self.0
    }
}

/// Componentwise `project_scalar(N · x) mod N`.
pub fn grid_project(grid: &GridSpec, x: &TorusPoint) -> Result<GridIndex> {
    if x.dim() != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim, found: x.dim() });
    }
    Ok(grid.index(grid.project_address(x.coords())))
}

/// A deterministic self-map of a grid, addressed by linear index.
pub trait Successor {
    fn grid(&self) -> &GridSpec;
    fn successor(&self, address: u64) -> u64;
}

impl<S: Successor + ?Sized> Successor for &S {
    fn grid(&self) -> &GridSpec {
        (**self).grid()
    }

    fn successor(&self, address: u64) -> u64 {
        (**self).successor(address)
    }
}

/// `f_N = P_N ∘ f` restricted to `E_N`, evaluated on demand.
#[derive(Clone, Debug)]
pub struct DiscretizedMap {
    map: TorusMapExpr,
    grid: GridSpec,
}

impl DiscretizedMap {
    pub fn new(map: TorusMapExpr, grid: GridSpec) -> Result<Self> {
        if map.dim() != grid.dim {
            return Err(Error::DimensionMismatch { expected: grid.dim, found: map.dim() });
        }
        Ok(DiscretizedMap { map, grid })
    }

    pub fn map(&self) -> &TorusMapExpr {
        &self.map
    }

    pub fn successor_of(&self, index: &GridIndex) -> Result<GridIndex> {
        let a = self.grid.address(index)?;
        Ok(self.grid.index(self.successor(a)))
    }

    /// Fills `out[j]` with the successor of address `first + j`.
    pub fn fill(&self, first: u64, out: &mut [u64]) {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.successor(first + j as u64);
        }
    }

    /// Dense successor table, single pass.
    pub fn materialize(&self, budget: &Budget) -> Result<SuccessorTable> {
        let cells = self.grid.check_table_budget(1, budget)?;
        let mut next = vec![0u64; cells];
        self.fill(0, &mut next);
        Ok(SuccessorTable { grid: self.grid, next })
    }
}

impl Successor for DiscretizedMap {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn successor(&self, address: u64) -> u64 {
        let mut x = [0.0f64; MAX_DIM];
        let x = &mut x[..self.grid.dim];
        self.grid.embed_address(address, x);
        self.map.apply(x);
        self.grid.project_address(x)
    }
}

/// A materialized successor table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessorTable {
    grid: GridSpec,
    next: Vec<u64>,
}

impl SuccessorTable {
    pub fn from_vec(grid: GridSpec, next: Vec<u64>) -> Result<Self> {
        if next.len() as u64 != grid.cells {
            return Err(Error::invalid("successor table length must equal N^n"));
        }
        if next.iter().any(|&s| s >= grid.cells) {
            return Err(Error::invalid("successor address out of range"));
        }
        Ok(SuccessorTable { grid, next })
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.next
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.next
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.next.len()];
        for &s in &self.next {
            if core::mem::replace(&mut seen[s as usize], true) {
                return false;
            }
        }
        true
    }
}

impl Successor for SuccessorTable {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    fn successor(&self, address: u64) -> u64 {
        self.next[address as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::builtin;

    #[test]
    fn scalar_projection_boundaries() {
        assert_eq!(project_scalar(0.5), Ok(0));
        assert_eq!(project_scalar(1.2), Ok(1));
        assert_eq!(project_scalar(-0.5), Ok(-1));
        assert_eq!(project_scalar(1.5), Ok(1));
        assert_eq!(project_scalar(-1e-300), Ok(0));
        assert_eq!(project_scalar(f64::NAN), Err(Error::NonFinite));
        assert_eq!(project_scalar(f64::INFINITY), Err(Error::NonFinite));
    }

    #[test]
    fn grid_projection_examples() {
        let g = GridSpec::new(2, 10).unwrap();
        let x = TorusPoint::new(vec![0.55, 0.249]).unwrap();
        assert_eq!(grid_project(&g, &x).unwrap(), GridIndex(vec![5, 2]));

        let g3 = GridSpec::new(2, 3).unwrap();
        let x = TorusPoint::new(vec![0.999, 0.0]).unwrap();
        assert_eq!(grid_project(&g3, &x).unwrap(), GridIndex(vec![0, 0]));

        let on_grid = g.embed(&GridIndex(vec![7, 3])).unwrap();
        assert_eq!(grid_project(&g, &on_grid).unwrap(), GridIndex(vec![7, 3]));
    }

    #[test]
    fn row_major_addresses() {
        let g = GridSpec::new(3, 5).unwrap();
        let idx = GridIndex(vec![1, 2, 3]);
        assert_eq!(g.address(&idx).unwrap(), 25 + 10 + 3);
        assert_eq!(g.index(38), idx);
        assert!(g.address(&GridIndex(vec![5, 0, 0])).is_err());
    }

    #[test]
    fn oversized_grid_rejected() {
        assert!(GridSpec::new(2, 1 << 32).is_err());
        assert!(GridSpec::new(2, (1 << 32) - 1).is_ok());
        assert!(GridSpec::new(0, 4).is_err());
    }

    #[test]
    fn anosov_discretization_is_exact() {
        for n in [5u64, 64, 101] {
            let g = GridSpec::new(2, n).unwrap();
            let d = DiscretizedMap::new(builtin("anosov").unwrap(), g).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let s = d.successor_of(&GridIndex(vec![i, j])).unwrap();
                    assert_eq!(s, GridIndex(vec![(2 * i + j) % n, (i + j) % n]));
                }
            }
        }
    }

    #[test]
    fn f1_regression_at_centre() {
        // Index fixed by a 50-digit evaluation: N·f1(1/2,1/2) = (2036.9188.., 2034.2283..).
        let g = GridSpec::new(2, 4096).unwrap();
        let d = DiscretizedMap::new(builtin("f1").unwrap(), g).unwrap();
        assert_eq!(d.successor_of(&GridIndex(vec![2048, 2048])).unwrap(), GridIndex(vec![2037, 2034]));
        let d2 = DiscretizedMap::new(builtin("f2").unwrap(), g).unwrap();
        assert_eq!(d2.successor_of(&GridIndex(vec![2048, 2048])).unwrap(), GridIndex(vec![2059, 4082]));
    }

    #[test]
    fn materialize_respects_budget() {
        let g = GridSpec::new(2, 100).unwrap();
        let d = DiscretizedMap::new(builtin("g1").unwrap(), g).unwrap();
        let small = Budget { bytes: 1000, ..Budget::default() };
        assert!(matches!(d.materialize(&small), Err(Error::Capacity { .. })));
        let table = d.materialize(&Budget::default()).unwrap();
        for a in 0..g.cells() {
            assert_eq!(table.successor(a), d.successor(a));
        }
    }
}
