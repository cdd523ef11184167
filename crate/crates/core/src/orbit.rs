//! Periodic orbits of discretized maps.
//!
//! A discretized map is a functional graph: every point has exactly one
//! successor, so each forward orbit falls into a cycle after a finite
//! transient. [`floyd_orbit`] finds the cycle reached from one point in
//! constant memory; [`analyze_full_grid`] labels every point of a
//! materialized table with its terminal cycle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{GridIndex, GridSpec, Successor, SuccessorTable};
use crate::measure::DiscreteMeasure;
use crate::Budget;

/// The eventual periodic orbit of one starting point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitResult {
    grid: GridSpec,
    start: u64,
    tail_length: u64,
    cycle: Vec<u64>,
}

impl OrbitResult {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Steps taken before the orbit first lands on the cycle.
    pub fn tail_length(&self) -> u64 {
        self.tail_length
    }

    pub fn cycle_length(&self) -> u64 {
        self.cycle.len() as u64
    }

    /// Cycle addresses in orbit order, starting with the first point reached.
    pub fn cycle(&self) -> &[u64] {
        &self.cycle
    }

    pub fn cycle_points(&self) -> Vec<GridIndex> {
        self.cycle.iter().map(|&a| self.grid.index(a)).collect()
    }
}

struct Stepper<'a, S> {
    map: &'a S,
    steps: u64,
    limit: u64,
}

impl<S: Successor> Stepper<'_, S> {
    #[inline]
    fn next(&mut self, x: u64) -> Result<u64> {
        if self.steps >= self.limit {
            return Err(Error::StepBudget { steps: self.steps });
        }
        self.steps += 1;
        Ok(self.map.successor(x))
    }
}

/// Tortoise and hare from `start`, then the usual recovery of the tail
/// length; the cycle is collected while measuring its length.
pub fn floyd_orbit<S: Successor>(map: &S, start: &GridIndex, budget: &Budget) -> Result<OrbitResult> {
    let start = map.grid().address(start)?;
    floyd_orbit_address(map, start, budget)
}

pub fn floyd_orbit_address<S: Successor>(map: &S, start: u64, budget: &Budget) -> Result<OrbitResult> {
    let grid = *map.grid();
    if start >= grid.cells() {
        return Err(Error::invalid("start address out of range"));
    }
    let mut f = Stepper { map, steps: 0, limit: budget.steps };

    let mut tortoise = f.next(start)?;
    let mut hare = f.next(tortoise)?;
    while tortoise != hare {
        tortoise = f.next(tortoise)?;
        let h = f.next(hare)?;
        hare = f.next(h)?;
    }

    let mut tail_length = 0u64;
    tortoise = start;
    while tortoise != hare {
        tortoise = f.next(tortoise)?;
        hare = f.next(hare)?;
        tail_length += 1;
    }

    let mut cycle = vec![tortoise];
    let mut x = f.next(tortoise)?;
    while x != tortoise {
        cycle.push(x);
        x = f.next(x)?;
    }
    Ok(OrbitResult { grid, start, tail_length, cycle })
}

/// `μ_x`: weight `1/c` on each of the `c` cycle points.
pub fn orbit_measure(result: &OrbitResult) -> Result<DiscreteMeasure> {
    DiscreteMeasure::uniform_on(result.grid, &result.cycle)
}

/// A nonnegative rational number in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Fraction { num: num / g, den: den / g }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl core::fmt::Display for Fraction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Cycles of a whole functional graph with their basin sizes.
///
/// Cycles are ordered by their smallest member address and each cycle is
/// listed starting from that member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridAnalysis {
    grid: GridSpec,
    cycles: Vec<Vec<u64>>,
    basin_sizes: Vec<u64>,
}

impl GridAnalysis {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn cycles(&self) -> &[Vec<u64>] {
        &self.cycles
    }

    /// Number of points (cycle included) whose orbit reaches each cycle.
    pub fn basin_sizes(&self) -> &[u64] {
        &self.basin_sizes
    }

    pub fn periodic_points(&self) -> u64 {
        self.cycles.iter().map(|c| c.len() as u64).sum()
    }

    pub fn recurrence_degree(&self) -> Fraction {
        Fraction::new(self.periodic_points(), self.grid.cells())
    }
}

const UNVISITED: u64 = u64::MAX;
const ON_PATH: u64 = u64::MAX - 1;

/// Labels every point with the cycle its orbit ends on.
///
/// Each unvisited point starts a walk that is pushed on an explicit stack
/// until it meets either a point of the current walk (a new cycle) or an
/// already labelled point; the whole stack then inherits that label. Time is
/// linear in `N^n` with one 64-bit label per point.
pub fn analyze_full_grid(table: &SuccessorTable, budget: &Budget) -> Result<GridAnalysis> {
    let grid = *table.grid();
    let cells = grid.check_table_budget(2, budget)?;
    let next = table.as_slice();
    let mut label = vec![UNVISITED; cells];
    let mut cycles: Vec<Vec<u64>> = Vec::new();
    let mut stack: Vec<u64> = Vec::new();

    for s in 0..cells as u64 {
        if label[s as usize] != UNVISITED {
            continue;
        }
        let mut x = s;
        while label[x as usize] == UNVISITED {
            label[x as usize] = ON_PATH;
            stack.push(x);
            x = next[x as usize];
        }
        let id = if label[x as usize] == ON_PATH {
            let id = cycles.len() as u64;
            let pos = stack.iter().rposition(|&p| p == x).expect("x is on the current path");
            let cycle = stack.split_off(pos);
            for &p in &cycle {
                label[p as usize] = id;
            }
            cycles.push(cycle);
            id
        } else {
            label[x as usize]
        };
        for p in stack.drain(..) {
            label[p as usize] = id;
        }
    }

    let mut basin = vec![0u64; cycles.len()];
    for &l in &label {
        basin[l as usize] += 1;
    }

    for c in cycles.iter_mut() {
        let min_pos = c.iter().enumerate().min_by_key(|&(_, &a)| a).map(|(i, _)| i).unwrap_or(0);
        c.rotate_left(min_pos);
    }
    let mut order: Vec<usize> = (0..cycles.len()).collect();
    order.sort_by_key(|&i| cycles[i][0]);
    let basin_sizes = order.iter().map(|&i| basin[i]).collect();
    let mut slots: Vec<Option<Vec<u64>>> = cycles.into_iter().map(Some).collect();
    let cycles = order.iter().map(|&i| slots[i].take().expect("each cycle taken once")).collect();

    Ok(GridAnalysis { grid, cycles, basin_sizes })
}

/// `μ_{T^n}`: a point on a cycle of length `c` with basin size `b` gets
/// weight `b / (c · N^n)`.
pub fn global_measure(analysis: &GridAnalysis) -> Result<DiscreteMeasure> {
    let cells = analysis.grid.cells() as f64;
    let atoms = analysis.cycles.iter().zip(&analysis.basin_sizes).flat_map(|(cycle, &b)| {
        let w = b as f64 / (cycle.len() as f64 * cells);
        cycle.iter().map(move |&a| (a, w))
    });
    DiscreteMeasure::from_atoms(analysis.grid, atoms)
}

/// Fraction of grid points that are periodic.
pub fn recurrence_degree(analysis: &GridAnalysis) -> Fraction {
    analysis.recurrence_degree()
}
