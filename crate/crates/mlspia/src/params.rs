//! Data parameterization.
//!
//! Fitting assigns every data point a parameter before any basis is built.
//! Curves use normalized accumulated chord length; grids run chord
//! parameterization along each grid line and average across lines, one
//! direction at a time.

use crate::error::{Error, Result};
use crate::splines::{ParameterList, PointGrid, PointSet};

/// Parameter lists for the two directions of a data grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceParams {
    /// Parameters along the grid rows (first index).
    pub u: ParameterList,
    /// Parameters along the grid columns (second index).
    pub v: ParameterList,
}

/// Normalized accumulated chord-length parameters: `t_1 = 0`, `t_m = 1`,
/// interior values proportional to the accumulated polyline length.
///
/// Two identical consecutive points make a zero chord and are rejected,
/// since they would collapse two parameters onto one value.
pub fn chord_params(points: &PointSet) -> Result<ParameterList> {
    let m = points.len();
    if m < 2 {
        return Err(Error::Degenerate("chord parameterization needs at least 2 points".into()));
    }
    let mut accumulated = Vec::with_capacity(m);
    accumulated.push(0.0);
    let mut total = 0.0;
    for j in 1..m {
        let chord = points.distance(j, j - 1);
        if chord == 0.0 {
            return Err(Error::Degenerate(format!(
                "duplicate consecutive points at indices {} and {j}",
                j - 1
            )));
        }
        total += chord;
        accumulated.push(total);
    }
    let mut values: Vec<f64> = accumulated.iter().map(|a| a / total).collect();
    // Pin the ends exactly; accumulation rounding must not move them.
    values[0] = 0.0;
    values[m - 1] = 1.0;
    ParameterList::new(values)
}

/// Chord parameters for one grid line handed over as coordinate accessors.
fn line_chord_params(
    dim: usize,
    len: usize,
    coord_at: impl Fn(usize, usize) -> f64, // (coordinate, position) -> value
) -> Option<Vec<f64>> {
    let mut values = Vec::with_capacity(len);
    values.push(0.0);
    let mut total = 0.0;
    for k in 1..len {
        let mut sq = 0.0;
        for c in 0..dim {
            let d = coord_at(c, k) - coord_at(c, k - 1);
            sq += d * d;
        }
        let chord = sq.sqrt();
        if chord == 0.0 {
            return None;
        }
        total += chord;
        values.push(total);
    }
    for v in values.iter_mut() {
        *v /= total;
    }
    values[0] = 0.0;
    values[len - 1] = 1.0;
    Some(values)
}

/// Grid parameters by averaged chord lengths.
///
/// For the row direction, every grid column (fixed second index) gets its
/// own chord parameterization along the rows; `u_i` is the mean of the
/// `i`-th value across all columns. The column direction is symmetric. Both
/// lists inherit `0` and `1` at the ends and stay strictly increasing as
/// means of strictly increasing lists.
pub fn grid_params(grid: &PointGrid) -> Result<SurfaceParams> {
    let (m1, m2, dim) = (grid.nrows(), grid.ncols(), grid.dim());
    if m1 < 2 || m2 < 2 {
        return Err(Error::Degenerate("grid parameterization needs at least 2 x 2 points".into()));
    }

    let mut u = vec![0.0; m1];
    for j in 0..m2 {
        let line =
            line_chord_params(dim, m1, |c, i| grid.channel(c)[i * m2 + j]).ok_or_else(|| {
                Error::Degenerate(format!("duplicate consecutive points along grid column {j}"))
            })?;
        for (acc, v) in u.iter_mut().zip(&line) {
            *acc += v;
        }
    }
    for v in u.iter_mut() {
        *v /= m2 as f64;
    }
    u[0] = 0.0;
    u[m1 - 1] = 1.0;

    let mut v = vec![0.0; m2];
    for i in 0..m1 {
        let line =
            line_chord_params(dim, m2, |c, j| grid.channel(c)[i * m2 + j]).ok_or_else(|| {
                Error::Degenerate(format!("duplicate consecutive points along grid row {i}"))
            })?;
        for (acc, w) in v.iter_mut().zip(&line) {
            *acc += w;
        }
    }
    for w in v.iter_mut() {
        *w /= m1 as f64;
    }
    v[0] = 0.0;
    v[m2 - 1] = 1.0;

    Ok(SurfaceParams { u: ParameterList::new(u)?, v: ParameterList::new(v)? })
}
