use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use mlspia::{iteration_matrix, CollocationMatrix, DenseMatrix, SpectralSummary, WeightSet};

use crate::error::Result;

/// Result of checking the claimed eigenvalues against the assembled
/// iteration matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    /// Side length of the dense iteration matrix (data count + basis count).
    pub matrix_size: usize,
    /// How many claimed eigenvalues were tested.
    pub eigenvalues_checked: usize,
    /// Largest `|det(H - lambda I)|` over the claims, after scaling each row
    /// of the matrix to unit max magnitude. Near zero when the closed-form
    /// eigenvalues are genuine.
    pub max_scaled_residual: f64,
}

/// The closed-form eigenvalue claims for the two-weight iteration matrix.
///
/// Per positive singular value `sigma` of the collocation matrix, the two
/// roots of
///
/// ```text
/// lambda^2 + (gamma upsilon sigma^2 - (2 - omega)) lambda
///          + sigma^2 upsilon (omega - gamma) + 1 - omega = 0,
/// ```
///
/// plus `1 - omega` for the left null space (when the data count exceeds the
/// rank) and `1` for the right null space (when the basis count exceeds the
/// rank).
pub fn claimed_eigenvalues(
    w: &WeightSet,
    spectrum: &SpectralSummary,
    data_count: usize,
    basis_count: usize,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(2 * spectrum.singular_values.len() + 2);
    for &sigma in &spectrum.singular_values {
        let s2 = sigma * sigma;
        let b = Complex64::new(w.gamma * w.upsilon * s2 - (2.0 - w.omega), 0.0);
        let c = Complex64::new(s2 * w.upsilon * (w.omega - w.gamma) + 1.0 - w.omega, 0.0);
        let root = (b * b - 4.0 * c).sqrt();
        out.push((-b + root) / 2.0);
        out.push((-b - root) / 2.0);
    }
    if data_count > spectrum.rank {
        out.push(Complex64::new(1.0 - w.omega, 0.0));
    }
    if basis_count > spectrum.rank {
        out.push(Complex64::new(1.0, 0.0));
    }
    out
}

/// `|det(H - lambda I)|` with every row of the shifted matrix scaled to unit
/// max magnitude first, so the result is comparable across sizes.
pub fn scaled_eigen_residual(h: &DenseMatrix, lambda: Complex64) -> f64 {
    let n = h.nrows();
    let mut a: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            h.row(i)
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    let shift = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
                    Complex64::new(v, 0.0) - shift
                })
                .collect()
        })
        .collect();
    for row in a.iter_mut() {
        let max = row.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if max > 0.0 {
            for z in row.iter_mut() {
                *z /= max;
            }
        }
    }
    complex_det_magnitude(a)
}

/// Determinant magnitude by LU elimination with partial pivoting.
fn complex_det_magnitude(mut a: Vec<Vec<Complex64>>) -> f64 {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = a[k][k].norm();
        for i in k + 1..n {
            let mag = a[i][k].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag == 0.0 {
            return 0.0;
        }
        if pivot_row != k {
            a.swap(pivot_row, k);
        }
        let pivot = a[k][k];
        det *= pivot;
        for i in k + 1..n {
            let factor = a[i][k] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in k..n {
                let upper = a[k][j];
                a[i][j] -= factor * upper;
            }
        }
    }
    det.norm()
}

/// Assembles the dense iteration matrix and checks every closed-form
/// eigenvalue claim against it.
///
/// Fails with a size-cap error when the dense matrix would be too large;
/// callers should then report the check as skipped.
pub fn verify_iteration_matrix(
    basis: &CollocationMatrix,
    w: &WeightSet,
    spectrum: &SpectralSummary,
) -> Result<EigenCheck> {
    let h = iteration_matrix(basis, w)?;
    let claims = claimed_eigenvalues(w, spectrum, basis.nrows(), basis.ncols());
    let mut max_residual = 0.0_f64;
    for &lambda in &claims {
        max_residual = max_residual.max(scaled_eigen_residual(&h, lambda));
    }
    Ok(EigenCheck {
        matrix_size: h.nrows(),
        eigenvalues_checked: claims.len(),
        max_scaled_residual: max_residual,
    })
}
