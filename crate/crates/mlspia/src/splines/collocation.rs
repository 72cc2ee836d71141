//! Sparse collocation matrices.
//!
//! A collocation matrix `B` holds one row per data parameter; row `j` carries
//! the basis values at `t_j`. Local support keeps every row down to at most
//! `degree + 1` contiguous nonzeros, so rows are stored as a first-column
//! index plus a short value band. Products with `B` and `B^T` run in
//! `O(nnz)`; nothing here ever forms a dense data-sized matrix.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Sparse matrix with one contiguous band of nonzeros per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationMatrix {
    nrows: usize,
    ncols: usize,
    /// First occupied column of each row.
    first: Vec<usize>,
    /// Row band boundaries into `values`; row `i` is `values[offsets[i]..offsets[i+1]]`.
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl CollocationMatrix {
    /// Builds a matrix from per-row bands `(first_column, values)`.
    pub fn from_rows(
        ncols: usize,
        rows: impl IntoIterator<Item = (usize, Vec<f64>)>,
    ) -> Result<Self> {
        let mut first = Vec::new();
        let mut offsets = vec![0];
        let mut values = Vec::new();
        for (i, (start, band)) in rows.into_iter().enumerate() {
            if band.is_empty() {
                return Err(Error::Degenerate(format!("row {i} has no nonzero entries")));
            }
            if start + band.len() > ncols {
                return Err(Error::Dimension(format!(
                    "row {i} spans columns {start}..{} but the matrix has {ncols} columns",
                    start + band.len()
                )));
            }
            if band.iter().any(|v| !v.is_finite()) {
                return Err(Error::Degenerate(format!("non-finite entry in row {i}")));
            }
            first.push(start);
            values.extend_from_slice(&band);
            offsets.push(values.len());
        }
        if first.is_empty() {
            return Err(Error::Degenerate("collocation matrix has no rows".into()));
        }
        Ok(Self { nrows: first.len(), ncols, first, offsets, values })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row `i` as `(first_column, band)`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        (self.first[i], &self.values[self.offsets[i]..self.offsets[i + 1]])
    }

    /// Widest row band; for a collocation matrix of degree `p` this is at
    /// most `p + 1`.
    pub fn max_row_width(&self) -> usize {
        (0..self.nrows)
            .map(|i| self.offsets[i + 1] - self.offsets[i])
            .max()
            .unwrap_or(0)
    }

    /// Sums of every row; a collocation matrix built over a clamped basis has
    /// rows summing to one.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// `y = B x` with `x` of length `ncols`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let (start, band) = self.row(i);
            let mut acc = 0.0;
            for (k, v) in band.iter().enumerate() {
                acc += v * x[start + k];
            }
            y[i] = acc;
        }
    }

    /// `y = B^T x` with `x` of length `nrows`.
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        y.fill(0.0);
        for i in 0..self.nrows {
            let (start, band) = self.row(i);
            let xi = x[i];
            for (k, v) in band.iter().enumerate() {
                y[start + k] += v * xi;
            }
        }
    }

    /// `out = B * X` where `X` is row-major `ncols x c`.
    pub fn lmul(&self, x: &[f64], c: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols * c);
        debug_assert_eq!(out.len(), self.nrows * c);
        out.fill(0.0);
        for i in 0..self.nrows {
            let (start, band) = self.row(i);
            let dst = &mut out[i * c..(i + 1) * c];
            for (k, v) in band.iter().enumerate() {
                let src = &x[(start + k) * c..(start + k + 1) * c];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
    }

    /// `out = B^T * X` where `X` is row-major `nrows x c`.
    pub fn lmul_t(&self, x: &[f64], c: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows * c);
        debug_assert_eq!(out.len(), self.ncols * c);
        out.fill(0.0);
        for i in 0..self.nrows {
            let (start, band) = self.row(i);
            let src = &x[i * c..(i + 1) * c];
            for (k, v) in band.iter().enumerate() {
                let dst = &mut out[(start + k) * c..(start + k + 1) * c];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
    }

    /// `out = X * B` where `X` is row-major `r x nrows`.
    pub fn rmul(&self, x: &[f64], r: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), r * self.nrows);
        debug_assert_eq!(out.len(), r * self.ncols);
        out.fill(0.0);
        for rr in 0..r {
            let src = &x[rr * self.nrows..(rr + 1) * self.nrows];
            let dst = &mut out[rr * self.ncols..(rr + 1) * self.ncols];
            for i in 0..self.nrows {
                let (start, band) = self.row(i);
                let s = src[i];
                for (k, v) in band.iter().enumerate() {
                    dst[start + k] += v * s;
                }
            }
        }
    }

    /// `out = X * B^T` where `X` is row-major `r x ncols`.
    pub fn rmul_t(&self, x: &[f64], r: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), r * self.ncols);
        debug_assert_eq!(out.len(), r * self.nrows);
        for rr in 0..r {
            let src = &x[rr * self.ncols..(rr + 1) * self.ncols];
            let dst = &mut out[rr * self.nrows..(rr + 1) * self.nrows];
            for i in 0..self.nrows {
                let (start, band) = self.row(i);
                let mut acc = 0.0;
                for (k, v) in band.iter().enumerate() {
                    acc += v * src[start + k];
                }
                dst[i] = acc;
            }
        }
    }

    /// Gram matrix `B^T B` as a dense `ncols x ncols` matrix, assembled row
    /// by row in `O(nnz * band_width)`.
    pub fn gram(&self) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(self.ncols, self.ncols);
        for i in 0..self.nrows {
            let (start, band) = self.row(i);
            for (a, va) in band.iter().enumerate() {
                for (b, vb) in band.iter().enumerate() {
                    g[(start + a, start + b)] += va * vb;
                }
            }
        }
        g
    }

    /// Dense copy, for diagnostics and tests on small instances.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (start, band) = self.row(i);
            for (k, v) in band.iter().enumerate() {
                d[(i, start + k)] = *v;
            }
        }
        d
    }

    /// Copy with column `col` duplicated (the copy inserted right after it).
    /// Produces an exactly rank-deficient matrix from a full-rank one, which
    /// is how the rank-deficient fitting tests build their instances.
    pub fn duplicate_column(&self, col: usize) -> Result<CollocationMatrix> {
        if col >= self.ncols {
            return Err(Error::Dimension(format!(
                "column {col} out of range for a matrix with {} columns",
                self.ncols
            )));
        }
        let rows = (0..self.nrows).map(|i| {
            let (start, band) = self.row(i);
            let end = start + band.len();
            if col < start {
                (start + 1, band.to_vec())
            } else if col >= end {
                (start, band.to_vec())
            } else {
                let mut widened = Vec::with_capacity(band.len() + 1);
                widened.extend_from_slice(&band[..=col - start]);
                widened.extend_from_slice(&band[col - start..]);
                (start, widened)
            }
        });
        CollocationMatrix::from_rows(self.ncols + 1, rows.collect::<Vec<_>>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn hat_matrix() -> CollocationMatrix {
        // Degree-1 basis on knots {0,0,1,1} collocated at {0, 1/2, 1}.
        CollocationMatrix::from_rows(
            2,
            vec![(0, vec![1.0]), (0, vec![0.5, 0.5]), (1, vec![1.0])],
        )
        .unwrap()
    }

    #[test]
    fn apply_and_transpose_match_dense_arithmetic() {
        let b = hat_matrix();
        let mut y = vec![0.0; 3];
        b.apply(&[1.0, 3.0], &mut y);
        assert_eq!(y, vec![1.0, 2.0, 3.0]);

        let mut z = vec![0.0; 2];
        b.apply_transpose(&[0.0, 1.0, 2.0], &mut z);
        assert_eq!(z, vec![0.5, 2.5]);
    }

    #[test]
    fn gram_of_hat_matrix_is_the_textbook_value() {
        let g = hat_matrix().gram();
        assert_abs_diff_eq!(g[(0, 0)], 1.25);
        assert_abs_diff_eq!(g[(0, 1)], 0.25);
        assert_abs_diff_eq!(g[(1, 0)], 0.25);
        assert_abs_diff_eq!(g[(1, 1)], 1.25);
    }

    #[test]
    fn block_products_match_vector_products() {
        let b = hat_matrix();
        // X with two columns; lmul must equal two independent applies.
        let x = vec![1.0, -1.0, 3.0, 0.5];
        let mut out = vec![0.0; 6];
        b.lmul(&x, 2, &mut out);
        let mut y0 = vec![0.0; 3];
        let mut y1 = vec![0.0; 3];
        b.apply(&[1.0, 3.0], &mut y0);
        b.apply(&[-1.0, 0.5], &mut y1);
        for i in 0..3 {
            assert_eq!(out[2 * i], y0[i]);
            assert_eq!(out[2 * i + 1], y1[i]);
        }
    }

    #[test]
    fn right_products_are_transposes_of_left_products() {
        let b = hat_matrix();
        // X: 1 x 3 row vector. X * B == (B^T X^T)^T.
        let x = vec![2.0, -1.0, 4.0];
        let mut out = vec![0.0; 2];
        b.rmul(&x, 1, &mut out);
        let mut expect = vec![0.0; 2];
        b.apply_transpose(&x, &mut expect);
        assert_eq!(out, expect);

        let x2 = vec![1.0, 5.0];
        let mut out2 = vec![0.0; 3];
        b.rmul_t(&x2, 1, &mut out2);
        let mut expect2 = vec![0.0; 3];
        b.apply(&x2, &mut expect2);
        assert_eq!(out2, expect2);
    }

    #[test]
    fn duplicate_column_widens_touching_rows() {
        let b = hat_matrix();
        let d = b.duplicate_column(0).unwrap();
        assert_eq!(d.ncols(), 3);
        assert_eq!(d.row(0), (0, &[1.0, 1.0][..]));
        assert_eq!(d.row(1), (0, &[0.5, 0.5, 0.5][..]));
        assert_eq!(d.row(2), (2, &[1.0][..]));

        // The dense images agree with duplicating the dense column.
        let dense = d.to_dense();
        assert_eq!(dense.row(1), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn from_rows_rejects_out_of_range_bands() {
        assert!(CollocationMatrix::from_rows(2, vec![(1, vec![1.0, 1.0])]).is_err());
        assert!(CollocationMatrix::from_rows(2, vec![(0, vec![])]).is_err());
    }
}
