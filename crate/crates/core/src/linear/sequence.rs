use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::round_half_down;
use crate::linalg::Matrix;
use crate::torus::MAX_DIM;

/// Allowed deviation of `det A_i` from 1.
pub const DET_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct LinearStage {
    pub matrix: Matrix,
    pub inverse: Matrix,
    pub translation: Vec<f64>,
    /// Half the absolute row sums of `inverse`: the half-widths of the box
    /// bounding `A^{-1}(v + (-1/2, 1/2]^n)`.
    pub inverse_halfwidth: Vec<f64>,
}

impl LinearStage {
    fn new(matrix: Matrix, translation: Vec<f64>) -> Result<Self> {
        let inverse = matrix.inverse()?;
        let inverse_halfwidth =
            (0..matrix.dim()).map(|r| 0.5 * inverse.row(r).iter().map(|v| v.abs()).sum::<f64>()).collect();
        Ok(LinearStage { matrix, inverse, translation, inverse_halfwidth })
    }

    /// `round(A x + w)` on small fixed-size buffers.
    #[inline]
    pub fn apply(&self, x: &[i64], out: &mut [i64]) {
        let n = self.matrix.dim();
        for (r, o) in out.iter_mut().enumerate().take(n) {
            let row = self.matrix.row(r);
            let v: f64 = row.iter().zip(x).map(|(&a, &xi)| a * xi as f64).sum::<f64>() + self.translation[r];
            *o = round_half_down(v);
        }
    }
}

/// A finite sequence `A_1, …, A_k` of determinant-one matrices with optional
/// translations `w_i ∈ [-1/2, 1/2]^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSequence {
    dim: usize,
    stages: Vec<LinearStage>,
}

impl MatrixSequence {
    pub fn new(matrices: Vec<Matrix>, translations: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::invalid("a matrix sequence needs at least one matrix"));
        };
        let dim = first.dim();
        if dim > MAX_DIM {
            return Err(Error::invalid("dimension must be at most 8"));
        }
        let translations = match translations {
            Some(t) => {
                if t.len() != matrices.len() {
                    return Err(Error::invalid("one translation per matrix is required"));
                }
                t
            }
            None => vec![vec![0.0; dim]; matrices.len()],
        };
        let mut stages = Vec::with_capacity(matrices.len());
        for (m, w) in matrices.into_iter().zip(translations) {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim() });
            }
            if w.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: w.len() });
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            if w.iter().any(|v| v.abs() > 0.5) {
                return Err(Error::invalid("translations must lie in [-1/2, 1/2]^n"));
            }
            if (m.det() - 1.0).abs() > DET_TOLERANCE {
                return Err(Error::invalid("matrices must have determinant 1"));
            }
            stages.push(LinearStage::new(m, w)?);
        }
        Ok(MatrixSequence { dim, stages })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of matrices `k`.
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn matrix(&self, i: usize) -> &Matrix {
        &self.stages[i].matrix
    }

    pub fn translation(&self, i: usize) -> &[f64] {
        &self.stages[i].translation
    }

    pub fn has_translations(&self) -> bool {
        self.stages.iter().any(|s| s.translation.iter().any(|&v| v != 0.0))
    }

    pub fn matrices(&self) -> impl Iterator<Item = &Matrix> {
        self.stages.iter().map(|s| &s.matrix)
    }

    /// The first `k` stages.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.stages.len() {
            return Err(Error::invalid("prefix length out of range"));
        }
        Ok(MatrixSequence { dim: self.dim, stages: self.stages[..k].to_vec() })
    }

    pub(crate) fn stages(&self) -> &[LinearStage] {
        &self.stages
    }

    /// `Π ‖A_i^{-1}‖_∞`.
    pub fn inverse_norm_product(&self) -> f64 {
        self.stages.iter().map(|s| s.inverse.norm_inf()).product()
    }
}

/// `Â(x) = round(Ax + w)` componentwise.
pub fn hat_apply(a: &Matrix, w: Option<&[f64]>, x: &[i64]) -> Result<Vec<i64>> {
    let n = a.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    if let Some(w) = w {
        if w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: w.len() });
        }
    }
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let mut y = a.mul_vec(&xf);
    if let Some(w) = w {
        for (yi, wi) in y.iter_mut().zip(w) {
            *yi += wi;
        }
    }
    y.iter().map(|&v| crate::project_scalar(v)).collect()
}

/// `(Â_k ∘ ⋯ ∘ Â_1)(x)`.
pub fn compose_discretized(seq: &MatrixSequence, x: &[i64]) -> Result<Vec<i64>> {
    if x.len() != seq.dim {
        return Err(Error::DimensionMismatch { expected: seq.dim, found: x.len() });
    }
    let mut cur = x.to_vec();
    for s in &seq.stages {
        cur = hat_apply(&s.matrix, Some(&s.translation), &cur)?;
    }
    Ok(cur)
}

/// Draws per matrix before giving up on the norm constraint.
pub const MAX_REJECTIONS: u32 = 100_000;

/// Random sequence of products of elementary shears `Id + s·E_ij`.
///
/// Every factor has determinant exactly one; products are redrawn until both
/// `‖A‖_∞` and `‖A^{-1}‖_∞` are at most `norm_bound`. Shear parameters are
/// uniform in `[-(norm_bound - 1), norm_bound - 1]`, so a single factor always
/// satisfies the bound.
pub fn random_sl_sequence(dim: usize, len: usize, norm_bound: f64, seed: u64) -> Result<MatrixSequence> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::invalid("dimension must be in 1..=8"));
    }
    if len == 0 {
        return Err(Error::invalid("sequence length must be positive"));
    }
    if norm_bound.is_nan() || norm_bound < 1.0 || !norm_bound.is_finite() {
        return Err(Error::invalid("norm bound must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors = if dim == 1 { 0 } else { 3 * (dim - 1) };
    let amplitude = norm_bound - 1.0;
    let mut matrices = Vec::with_capacity(len);
    for _ in 0..len {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let mut m = Matrix::identity(dim);
            let mut inv = Matrix::identity(dim);
            for f in 0..factors {
                // Alternate lower and upper shears so that n = 2 gives L·U·L.
                let (i, j) = loop {
                    let i = rng.random_range(0..dim);
                    let j = rng.random_range(0..dim);
                    if i != j && ((i > j) == (f % 2 == 0) || dim > 2) {
                        break (i, j);
                    }
                };
                let s = amplitude * (2.0 * rng.random::<f64>() - 1.0);
                let mut e = Matrix::identity(dim);
                e[(i, j)] = s;
                let mut e_inv = Matrix::identity(dim);
                e_inv[(i, j)] = -s;
                m = m.mul(&e);
                inv = e_inv.mul(&inv);
            }
            if m.norm_inf() <= norm_bound && inv.norm_inf() <= norm_bound {
                accepted = Some(m);
                break;
            }
        }
        matrices.push(accepted.ok_or_else(|| Error::invalid("norm bound rejected every draw"))?);
    }
    MatrixSequence::new(matrices, None)
}
