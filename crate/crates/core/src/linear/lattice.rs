use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::MatrixSequence;

/// A lattice `B·Z^m` together with `B^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeBasis {
    basis: Matrix,
    inverse: Matrix,
    /// Side length `n` of the diagonal blocks when the basis is block
    /// bidiagonal, with the inverses of those blocks.
    block: Option<(usize, Vec<Matrix>)>,
}

impl LatticeBasis {
    /// Inverts `basis` numerically.
    pub fn new(basis: Matrix) -> Result<Self> {
        let inverse = basis.inverse()?;
        Ok(LatticeBasis { basis, inverse, block: None })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn covolume(&self) -> f64 {
        self.basis.det().abs()
    }

    /// Inverses of the diagonal blocks of a block-bidiagonal basis.
    pub(crate) fn diagonal_block_inverses(&self) -> Option<&[Matrix]> {
        self.block.as_ref().map(|(_, b)| b.as_slice())
    }
}

/// The block matrix with `diag` on the diagonal and `-Id` just above it.
///
/// Its inverse is block upper triangular with block `(i, j)` equal to
/// `D_i^{-1} D_{i+1}^{-1} ⋯ D_j^{-1}` for `j ≥ i`.
fn block_bidiagonal(diag: &[&Matrix]) -> Result<LatticeBasis> {
    let n = diag[0].dim();
    let k = diag.len();
    let mut basis = Matrix::zeros(n * k);
    let mut inverse = Matrix::zeros(n * k);
    let inverses = diag.iter().map(|d| d.inverse()).collect::<Result<Vec<_>>>()?;
    for (b, d) in diag.iter().enumerate() {
        if d.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: d.dim() });
        }
        for r in 0..n {
            for c in 0..n {
                basis[(b * n + r, b * n + c)] = d[(r, c)];
            }
            if b + 1 < k {
                basis[(b * n + r, (b + 1) * n + r)] = -1.0;
            }
        }
    }
    for i in 0..k {
        let mut acc = inverses[i].clone();
        for j in i..k {
            if j > i {
                acc = acc.mul(&inverses[j]);
            }
            for r in 0..n {
                for c in 0..n {
                    inverse[(i * n + r, j * n + c)] = acc[(r, c)];
                }
            }
        }
    }
    Ok(LatticeBasis { basis, inverse, block: Some((n, inverses)) })
}

/// `M_{A_1…A_k}` of size `n(k+1)`: `A_1, …, A_k, Id` on the diagonal and
/// `-Id` on the superdiagonal.
pub fn build_m(seq: &MatrixSequence) -> Result<LatticeBasis> {
    let id = Matrix::identity(seq.dim());
    let mut diag: Vec<&Matrix> = seq.matrices().collect();
    diag.push(&id);
    block_bidiagonal(&diag)
}

/// `M̃_{A_1…A_k}` of size `nk`: `A_1, …, A_k` on the diagonal and `-Id` on
/// the superdiagonal.
pub fn build_m_tilde(seq: &MatrixSequence) -> Result<LatticeBasis> {
    let diag: Vec<&Matrix> = seq.matrices().collect();
    block_bidiagonal(&diag)
}
