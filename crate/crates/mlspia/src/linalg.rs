//! Small dense matrices and a symmetric eigensolver.
//!
//! The fitting iterations themselves never touch dense algebra; this module
//! only serves the spectral side: Gram matrices of collocation matrices
//! (`n x n` with `n` much smaller than the data count), the pseudo-inverse
//! behind the direct least-squares reference, and the densified iteration
//! matrix used for eigenvalue diagnostics.

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    /// Identity matrix of side `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from explicit rows. Panics on ragged input; this is a
    /// construction aid for tests and diagnostics, not a parser.
    /// Wraps an existing row-major buffer of length `nrows * ncols`.
    pub(crate) fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "buffer does not match the given shape");
        Self { nrows, ncols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            assert_eq!(row.len(), ncols, "ragged rows in DenseMatrix::from_rows");
            data.extend_from_slice(row);
        }
        Self { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    /// Flat row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Frobenius norm of the whole matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Plain `self * rhs` product; shapes must agree.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, rhs.nrows, "shape mismatch in matmul");
        let mut out = DenseMatrix::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = rhs.row(k);
                let dst = &mut out.data[i * rhs.ncols..(i + 1) * rhs.ncols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// Eigendecomposition of a symmetric matrix: `a * vectors = vectors * diag(values)`,
/// values ascending, eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub(crate) struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Hard cap on Jacobi sweeps; cyclic Jacobi settles in well under twenty
/// sweeps for anything this crate produces, so hitting the cap means the
/// input was not symmetric or not finite.
const MAX_JACOBI_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition for symmetric matrices.
///
/// Chosen over tridiagonalization because the matrices here are small Gram
/// matrices (a few hundred rows at the very most), and Jacobi is simple,
/// deterministic and accurate on them.
pub(crate) fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    assert_eq!(a.nrows, a.ncols, "symmetric_eigen needs a square matrix");
    let n = a.nrows;
    let mut work = a.clone();
    let mut vectors = DenseMatrix::identity(n);

    if n <= 1 {
        return Ok(SymmetricEigen { values: work.data, vectors });
    }

    let scale = work.frobenius_norm();
    if scale == 0.0 {
        return Ok(SymmetricEigen { values: vec![0.0; n], vectors });
    }
    if !scale.is_finite() {
        return Err(Error::Numerical("non-finite entries in symmetric eigensolve".into()));
    }
    let tol = 1e-15 * scale;

    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let off = off_diagonal_norm(&work);
        if off <= tol {
            let mut values: Vec<f64> = (0..n).map(|i| work[(i, i)]).collect();
            sort_eigenpairs(&mut values, &mut vectors);
            return Ok(SymmetricEigen { values, vectors });
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut work, &mut vectors, p, q);
            }
        }
    }

    Err(Error::Numerical(format!(
        "Jacobi eigensolve did not converge after {MAX_JACOBI_SWEEPS} sweeps \
         (off-diagonal norm {:.3e}, target {:.3e})",
        off_diagonal_norm(&work),
        tol
    )))
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.nrows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// One Jacobi rotation zeroing `work[(p, q)]`, accumulated into `vectors`.
fn rotate(work: &mut DenseMatrix, vectors: &mut DenseMatrix, p: usize, q: usize) {
    let apq = work[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = work[(p, p)];
    let aqq = work[(q, q)];
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    work[(p, p)] = app - t * apq;
    work[(q, q)] = aqq + t * apq;
    work[(p, q)] = 0.0;
    work[(q, p)] = 0.0;

    let n = work.nrows;
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = work[(i, p)];
        let aiq = work[(i, q)];
        work[(i, p)] = c * aip - s * aiq;
        work[(p, i)] = work[(i, p)];
        work[(i, q)] = s * aip + c * aiq;
        work[(q, i)] = work[(i, q)];
    }
    for i in 0..n {
        let vip = vectors[(i, p)];
        let viq = vectors[(i, q)];
        vectors[(i, p)] = c * vip - s * viq;
        vectors[(i, q)] = s * vip + c * viq;
    }
}

fn sort_eigenpairs(values: &mut [f64], vectors: &mut DenseMatrix) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let old_values = values.to_vec();
    let old_vectors = vectors.clone();
    for (new, &old) in order.iter().enumerate() {
        values[new] = old_values[old];
        for i in 0..n {
            vectors[(i, new)] = old_vectors[(i, old)];
        }
    }
}

/// `V * diag(f(values)) * V^T` with `f(v) = 1/v` for eigenvalues above
/// `cutoff` and `0` otherwise: the pseudo-inverse built from an
/// eigendecomposition of a symmetric positive semi-definite matrix.
pub(crate) fn pseudo_inverse_from_eigen(eigen: &SymmetricEigen, cutoff: f64) -> DenseMatrix {
    let n = eigen.values.len();
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &value) in eigen.values.iter().enumerate() {
        if value <= cutoff {
            continue;
        }
        let inv = 1.0 / value;
        for i in 0..n {
            let vik = eigen.vectors[(i, k)];
            if vik == 0.0 {
                continue;
            }
            let w = inv * vik;
            for j in 0..n {
                out[(i, j)] += w * eigen.vectors[(j, k)];
            }
        }
    }
    out
}
