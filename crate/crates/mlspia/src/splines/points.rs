//! Point containers for curve and surface data.
//!
//! Coordinates are stored column-wise (one contiguous slice per coordinate)
//! because every linear-algebra step in the fitting iterations acts on one
//! coordinate at a time.

use crate::error::{Error, Result};

/// An ordered list of 2D or 3D points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    len: usize,
    coords: Vec<Vec<f64>>,
}

impl PointSet {
    /// All-zero point set.
    pub fn zeros(dim: usize, len: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, len, coords: vec![vec![0.0; len]; dim] })
    }

    /// Builds a point set from row-wise points; every row must have the same
    /// dimension (2 or 3) and finite coordinates.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Degenerate("empty point list".into()));
        };
        let dim = first.len();
        check_dim(dim)?;
        let mut coords = vec![Vec::with_capacity(rows.len()); dim];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Degenerate(format!("non-finite coordinate in point {i}")));
                }
                coords[c].push(v);
            }
        }
        Ok(Self { dim, len: rows.len(), coords })
    }

    /// Builds a planar point set from x/y columns.
    pub fn from_xy(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Dimension("x and y columns differ in length".into()));
        }
        if xs.is_empty() {
            return Err(Error::Degenerate("empty point list".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite coordinate".into()));
        }
        Ok(Self { dim: 2, len: xs.len(), coords: vec![xs, ys] })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Coordinate column `c` (x = 0, y = 1, z = 2).
    pub fn coord(&self, c: usize) -> &[f64] {
        &self.coords[c]
    }

    pub(crate) fn coord_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.coords[c]
    }

    /// Point `i` as an owned row.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords.iter().map(|col| col[i]).collect()
    }

    /// Rows in order, for serialization.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.coords
            .iter()
            .map(|col| {
                let d = col[i] - col[j];
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest Euclidean distance between corresponding points of two
    /// equally-shaped sets.
    pub fn max_pointwise_distance(&self, other: &PointSet) -> Result<f64> {
        if self.dim != other.dim || self.len != other.len {
            return Err(Error::Dimension("point sets differ in shape".into()));
        }
        let mut max = 0.0f64;
        for i in 0..self.len {
            let mut sq = 0.0;
            for c in 0..self.dim {
                let d = self.coords[c][i] - other.coords[c][i];
                sq += d * d;
            }
            max = max.max(sq.sqrt());
        }
        Ok(max)
    }

    /// Whether every coordinate is a finite number.
    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|col| col.iter().all(|v| v.is_finite()))
    }
}

/// A rectangular grid of 2D or 3D points, row-major per coordinate channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGrid {
    dim: usize,
    nrows: usize,
    ncols: usize,
    channels: Vec<Vec<f64>>,
}

impl PointGrid {
    /// All-zero grid.
    pub fn zeros(dim: usize, nrows: usize, ncols: usize) -> Result<Self> {
        check_dim(dim)?;
        if nrows == 0 || ncols == 0 {
            return Err(Error::Degenerate("empty point grid".into()));
        }
        Ok(Self { dim, nrows, ncols, channels: vec![vec![0.0; nrows * ncols]; dim] })
    }

    /// Builds a grid from `nrows * ncols` row-major points.
    pub fn from_rows(nrows: usize, ncols: usize, points: &[Vec<f64>]) -> Result<Self> {
        if points.len() != nrows * ncols {
            return Err(Error::Dimension(format!(
                "grid of {nrows} x {ncols} needs {} points, got {}",
                nrows * ncols,
                points.len()
            )));
        }
        let flat = PointSet::from_rows(points)?;
        Ok(Self {
            dim: flat.dim,
            nrows,
            ncols,
            channels: flat.coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Coordinate channel `c` as a row-major `nrows x ncols` slice.
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub(crate) fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.channels[c]
    }

    /// Point at grid position `(i, j)` as an owned row.
    pub fn point(&self, i: usize, j: usize) -> Vec<f64> {
        self.channels.iter().map(|ch| ch[i * self.ncols + j]).collect()
    }

    /// Row-major list of all points, for serialization.
    pub fn points_row_major(&self) -> Vec<Vec<f64>> {
        (0..self.nrows)
            .flat_map(|i| (0..self.ncols).map(move |j| (i, j)))
            .map(|(i, j)| self.point(i, j))
            .collect()
    }

    /// Largest Euclidean distance between corresponding points of two
    /// equally-shaped grids.
    pub fn max_pointwise_distance(&self, other: &PointGrid) -> Result<f64> {
        if self.dim != other.dim || self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("point grids differ in shape".into()));
        }
        let mut max = 0.0f64;
        for k in 0..self.nrows * self.ncols {
            let mut sq = 0.0;
            for c in 0..self.dim {
                let d = self.channels[c][k] - other.channels[c][k];
                sq += d * d;
            }
            max = max.max(sq.sqrt());
        }
        Ok(max)
    }

    /// Whether every coordinate is a finite number.
    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(|ch| ch.iter().all(|v| v.is_finite()))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("points must be 2D or 3D, got dimension {dim}")))
    }
}
