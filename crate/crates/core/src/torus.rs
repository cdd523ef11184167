//! Analytic torus maps built from trigonometric shears and unimodular
//! integer matrices.
//!
//! A [`TorusMapExpr`] is a list of stages applied left to right: the
//! composition written `Q∘P` is stored as `[P, Q]`.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::error::{Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIM: usize = 8;

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Reduces `x` modulo 1 into `[0, 1)`.
///
/// `x - floor(x)` can round up to exactly `1.0` for tiny negative `x`; that
/// case is clamped to the largest double below one.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - libm::floor(x);
    if r >= 1.0 {
        BELOW_ONE
    } else {
        r
    }
}

/// A point of the continuous torus `[0,1)^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Accepts coordinates already in `[0, 1)`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::invalid("torus dimension must be in 1..=8"));
        }
        for &c in &coords {
            if !c.is_finite() {
                return Err(Error::NonFinite);
            }
            if !(0.0..1.0).contains(&c) {
                return Err(Error::invalid("torus coordinate outside [0,1)"));
            }
        }
        Ok(TorusPoint { coords })
    }

    /// Reduces arbitrary finite coordinates modulo 1.
    pub fn wrapped(coords: &[f64]) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        TorusPoint::new(coords.iter().map(|&c| wrap_unit(c)).collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Cos,
    Sin,
}

/// One term `amplitude · phase(2π · frequency · t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShearTerm {
    pub amplitude: f64,
    pub frequency: u32,
    pub phase: Phase,
}

impl ShearTerm {
    pub const fn cos(amplitude: f64, frequency: u32) -> Self {
        ShearTerm { amplitude, frequency, phase: Phase::Cos }
    }

    pub const fn sin(amplitude: f64, frequency: u32) -> Self {
        ShearTerm { amplitude, frequency, phase: Phase::Sin }
    }
}

/// `x[modify] += p(x[read])` with `p` a 1-periodic trigonometric polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigShearSpec {
    axis_modified: usize,
    axis_read: usize,
    terms: Vec<ShearTerm>,
}

impl TrigShearSpec {
    pub fn new(axis_modified: usize, axis_read: usize, terms: Vec<ShearTerm>) -> Result<Self> {
        if axis_modified == axis_read {
            return Err(Error::invalid("shear must read and modify different axes"));
        }
        for t in &terms {
            if t.frequency == 0 {
                return Err(Error::invalid("shear frequency must be positive"));
            }
            if !t.amplitude.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(TrigShearSpec { axis_modified, axis_read, terms })
    }

    pub fn axis_modified(&self) -> usize {
        self.axis_modified
    }

    pub fn axis_read(&self) -> usize {
        self.axis_read
    }

    pub fn terms(&self) -> &[ShearTerm] {
        &self.terms
    }

    /// The displacement `p(t)`.
    pub fn displacement(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let arg = TAU * term.frequency as f64 * t;
                let v = match term.phase {
                    Phase::Cos => libm::cos(arg),
                    Phase::Sin => libm::sin(arg),
                };
                term.amplitude * v
            })
            .sum()
    }

    /// Sum of absolute amplitudes, a bound on the displacement.
    pub fn max_displacement(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    /// The shear subtracting `p` instead of adding it.
    pub fn inverse(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| ShearTerm { amplitude: -t.amplitude, ..*t })
            .collect();
        TrigShearSpec { terms, ..self.clone() }
    }

    fn apply(&self, x: &mut [f64]) {
        let p = self.displacement(x[self.axis_read]);
        x[self.axis_modified] = wrap_unit(x[self.axis_modified] + p);
    }
}

/// A unimodular integer matrix acting on the torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLinearSpec {
    dim: usize,
    entries: Vec<i64>,
}

impl IntegerLinearSpec {
    pub fn new(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("matrix dimension must be in 1..=8"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("matrix must be square"));
        }
        let entries: Vec<i64> = rows.iter().flatten().copied().collect();
        let det = integer_det(dim, &entries);
        if det != 1 && det != -1 {
            return Err(Error::invalid("integer matrix must have determinant ±1"));
        }
        Ok(IntegerLinearSpec { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(<[i64]>::to_vec).collect()
    }

    fn apply(&self, x: &mut [f64]) {
        let n = self.dim;
        let mut out = [0.0f64; MAX_DIM];
        for (r, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.entries[r * n..(r + 1) * n];
            *o = row.iter().zip(x.iter()).map(|(&a, &b)| a as f64 * b).sum();
        }
        for (xi, &o) in x.iter_mut().zip(out.iter()) {
            *xi = wrap_unit(o);
        }
    }
}

/// Fraction-free (Bareiss) elimination; exact for small integer matrices.
fn integer_det(n: usize, entries: &[i64]) -> i128 {
    let mut m: Vec<i128> = entries.iter().map(|&e| e as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
            }
        }
        prev = m[k * n + k];
    }
    sign * m[n * n - 1]
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    Shear(TrigShearSpec),
    Linear(IntegerLinearSpec),
}

/// A composition of stages, applied in list order.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusMapExpr {
    dim: usize,
    stages: Vec<Stage>,
}

impl TorusMapExpr {
    pub fn new(dim: usize, stages: Vec<Stage>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("torus dimension must be in 1..=8"));
        }
        for stage in &stages {
            match stage {
                Stage::Shear(s) => {
                    if s.axis_modified >= dim || s.axis_read >= dim {
                        return Err(Error::invalid("shear axis out of range"));
                    }
                }
                Stage::Linear(l) => {
                    if l.dim != dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: l.dim });
                    }
                }
            }
        }
        Ok(TorusMapExpr { dim, stages })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        TorusMapExpr::new(dim, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// `other` applied after `self`.
    pub fn then(mut self, other: TorusMapExpr) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        self.stages.extend(other.stages);
        Ok(self)
    }

    pub fn eval(&self, x: &TorusPoint) -> Result<TorusPoint> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        let mut coords = x.coords.clone();
        self.apply(&mut coords);
        Ok(TorusPoint { coords })
    }

    /// In-place evaluation on a coordinate slice of length `dim()` whose
    /// entries lie in `[0, 1)`.
    #[inline]
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        for stage in &self.stages {
            match stage {
                Stage::Shear(s) => s.apply(x),
                Stage::Linear(l) => l.apply(x),
            }
        }
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = ["f1", "f2", "g1", "g2", "anosov", "identity"];

fn anosov() -> IntegerLinearSpec {
    IntegerLinearSpec { dim: 2, entries: vec![2, 1, 1, 1] }
}

fn shear_pair(p: [ShearTerm; 3], q: [ShearTerm; 3]) -> Vec<Stage> {
    // P(x, y) = (x, y + p(x)), then Q(x, y) = (x + q(y), y).
    vec![
        Stage::Shear(TrigShearSpec { axis_modified: 1, axis_read: 0, terms: p.to_vec() }),
        Stage::Shear(TrigShearSpec { axis_modified: 0, axis_read: 1, terms: q.to_vec() }),
    ]
}

fn f_family() -> Vec<Stage> {
    shear_pair(
        [
            ShearTerm::cos(1.0 / 209.0, 17),
            ShearTerm::sin(1.0 / 471.0, 29),
            ShearTerm::cos(-1.0 / 703.0, 39),
        ],
        [
            ShearTerm::cos(1.0 / 287.0, 15),
            ShearTerm::sin(1.0 / 403.0, 31),
            ShearTerm::sin(-1.0 / 841.0, 41),
        ],
    )
}

fn g_family() -> Vec<Stage> {
    shear_pair(
        [
            ShearTerm::cos(1.0 / 209.0, 17),
            ShearTerm::sin(1.0 / 271.0, 27),
            ShearTerm::cos(-1.0 / 703.0, 35),
        ],
        [
            ShearTerm::cos(1.0 / 287.0, 15),
            ShearTerm::sin(1.0 / 203.0, 27),
            ShearTerm::sin(-1.0 / 841.0, 38),
        ],
    )
}

/// The named example maps on `T²`.
///
/// `f1 = Q∘P` and `g1 = Q∘P` with their respective coefficient sets;
/// `f2 = f1∘A` and `g2 = g1∘A` apply the Anosov matrix `A = [[2,1],[1,1]]`
/// first.
pub fn builtin(name: &str) -> Result<TorusMapExpr> {
    let stages = match name {
        "f1" => f_family(),
        "g1" => g_family(),
        "f2" => {
            let mut s = vec![Stage::Linear(anosov())];
            s.extend(f_family());
            s
        }
        "g2" => {
            let mut s = vec![Stage::Linear(anosov())];
            s.extend(g_family());
            s
        }
        "anosov" => vec![Stage::Linear(anosov())],
        "identity" => Vec::new(),
        other => return Err(Error::UnknownMap(other.to_string())),
    };
    Ok(TorusMapExpr { dim: 2, stages })
}
