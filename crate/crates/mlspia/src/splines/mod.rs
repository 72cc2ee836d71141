//! Clamped B-spline curves and tensor-product surfaces.
//!
//! The pieces here are the geometric substrate of the fitting iterations:
//! knot vectors over the domain `[0, 1]`, basis evaluation, data-driven knot
//! placement, sparse collocation matrices and point-wise curve/surface
//! evaluation with derivatives.

mod basis;
mod collocation;
mod points;

pub use collocation::CollocationMatrix;
pub use points::{PointGrid, PointSet};

use crate::error::{Error, Result};

/// A clamped knot vector over `[0, 1]`.
///
/// The first and last `degree + 1` knots sit on the domain ends, so the
/// spline interpolates its end control points and the basis forms a
/// partition of unity over the whole domain.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Validates and wraps an explicit knot list.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Config("degree must be at least 1".into()));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::Config(format!(
                "degree {degree} needs at least {} knots, got {}",
                2 * (degree + 1),
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Config("knots must be non-decreasing".into()));
        }
        if knots[..=degree].iter().any(|&u| u != 0.0)
            || knots[knots.len() - degree - 1..].iter().any(|&u| u != 1.0)
        {
            return Err(Error::Config(
                "knot vector must be clamped: degree + 1 zeros, then degree + 1 ones".into(),
            ));
        }
        Ok(Self { degree, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions over this knot vector.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// The `degree + 1` window of basis values at `t`, trimmed of exact
    /// zeros at its edges (they appear when `t` coincides with a knot).
    /// Returns the first basis index of the trimmed window plus the values.
    fn eval_window(&self, t: f64) -> Result<(usize, Vec<f64>)> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::ParameterOutOfDomain(t));
        }
        let n = self.basis_count();
        let span = basis::find_span(&self.knots, self.degree, n, t);
        let mut window = vec![0.0; self.degree + 1];
        basis::basis_values(&self.knots, self.degree, span, t, &mut window);
        let mut first = span - self.degree;
        let mut lo = 0;
        let mut hi = window.len();
        while hi > lo + 1 && window[hi - 1] == 0.0 {
            hi -= 1;
        }
        while lo + 1 < hi && window[lo] == 0.0 {
            lo += 1;
            first += 1;
        }
        window.truncate(hi);
        window.drain(..lo);
        Ok((first, window))
    }
}

/// Strictly increasing parameter values in `[0, 1]`, one per data point.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterList {
    values: Vec<f64>,
}

impl ParameterList {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Degenerate("empty parameter list".into()));
        }
        for &t in &values {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::ParameterOutOfDomain(t));
            }
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Degenerate("parameters must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The non-zero basis values at `t` as `(basis index, value)` pairs.
///
/// Local support bounds the result by `degree + 1` entries with contiguous
/// indices.
pub fn eval_basis(kv: &KnotVector, t: f64) -> Result<Vec<(usize, f64)>> {
    let (first, window) = kv.eval_window(t)?;
    Ok(window.into_iter().enumerate().map(|(k, v)| (first + k, v)).collect())
}

/// Places a clamped knot vector for `n` basis functions of the given degree
/// over the data parameters, spreading interior knots by parameter averaging.
///
/// With `m` parameters and `d = m / (n - degree)`, interior knot `j` sits at
/// the fractional parameter position `j * d`, linearly interpolated between
/// the two neighbouring parameter values. This keeps every basis function's
/// support populated with parameters, so the resulting collocation matrix
/// has no zero column.
pub fn make_knots(params: &ParameterList, n: usize, degree: usize) -> Result<KnotVector> {
    let m = params.len();
    if degree == 0 {
        return Err(Error::Config("degree must be at least 1".into()));
    }
    if n <= degree {
        return Err(Error::Config(format!(
            "need more control points than the degree: n = {n}, degree = {degree}"
        )));
    }
    if m < n {
        return Err(Error::Config(format!(
            "need at least as many data points as control points: m = {m}, n = {n}"
        )));
    }
    let t = params.values();
    let mut knots = vec![0.0; degree + 1];
    let d = m as f64 / (n - degree) as f64;
    for j in 1..=(n - degree - 1) {
        let jd = j as f64 * d;
        let i = jd.floor() as usize; // 1-based parameter index
        let alpha = jd - i as f64;
        knots.push((1.0 - alpha) * t[i - 1] + alpha * t[i]);
    }
    knots.extend(std::iter::repeat(1.0).take(degree + 1));
    KnotVector::new(degree, knots)
}

/// Collocation matrix of the basis at the given parameters: row `j` holds
/// the basis values at `t_j`, stored sparsely.
pub fn collocate(kv: &KnotVector, params: &ParameterList) -> Result<CollocationMatrix> {
    let mut rows = Vec::with_capacity(params.len());
    for &t in params.values() {
        rows.push(kv.eval_window(t)?);
    }
    CollocationMatrix::from_rows(kv.basis_count(), rows)
}

/// A B-spline curve: control points over a knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCurve {
    pub control: PointSet,
    pub knots: KnotVector,
}

/// A tensor-product B-spline surface: a control net over two knot vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSurface {
    pub control: PointGrid,
    pub knots_u: KnotVector,
    pub knots_v: KnotVector,
}

/// Evaluates the curve with the given control points at `t`.
pub fn eval_curve(control: &PointSet, kv: &KnotVector, t: f64) -> Result<Vec<f64>> {
    check_curve_shape(control, kv)?;
    let (first, window) = kv.eval_window(t)?;
    let mut point = vec![0.0; control.dim()];
    accumulate_curve_point(control, first, &window, &mut point);
    Ok(point)
}

fn check_curve_shape(control: &PointSet, kv: &KnotVector) -> Result<()> {
    if control.len() != kv.basis_count() {
        return Err(Error::Dimension(format!(
            "{} control points over a basis of {} functions",
            control.len(),
            kv.basis_count()
        )));
    }
    Ok(())
}

fn accumulate_curve_point(control: &PointSet, first: usize, window: &[f64], out: &mut [f64]) {
    for (c, value) in out.iter_mut().enumerate() {
        let col = control.coord(c);
        *value = window.iter().enumerate().map(|(k, w)| w * col[first + k]).sum();
    }
}

/// Evaluates the tensor-product surface with the given control net at
/// `(t, s)`; `t` runs along the grid rows, `s` along the columns.
pub fn eval_surface(
    control: &PointGrid,
    kv_u: &KnotVector,
    kv_v: &KnotVector,
    t: f64,
    s: f64,
) -> Result<Vec<f64>> {
    check_surface_shape(control, kv_u, kv_v)?;
    let (fu, wu) = kv_u.eval_window(t)?;
    let (fv, wv) = kv_v.eval_window(s)?;
    let mut point = vec![0.0; control.dim()];
    let ncols = control.ncols();
    for (c, value) in point.iter_mut().enumerate() {
        let ch = control.channel(c);
        let mut acc = 0.0;
        for (a, wa) in wu.iter().enumerate() {
            let row = &ch[(fu + a) * ncols..(fu + a + 1) * ncols];
            let mut inner = 0.0;
            for (b, wb) in wv.iter().enumerate() {
                inner += wb * row[fv + b];
            }
            acc += wa * inner;
        }
        *value = acc;
    }
    Ok(point)
}

fn check_surface_shape(control: &PointGrid, kv_u: &KnotVector, kv_v: &KnotVector) -> Result<()> {
    if control.nrows() != kv_u.basis_count() || control.ncols() != kv_v.basis_count() {
        return Err(Error::Dimension(format!(
            "control net {} x {} over bases of {} x {} functions",
            control.nrows(),
            control.ncols(),
            kv_u.basis_count(),
            kv_v.basis_count()
        )));
    }
    Ok(())
}

/// One curvature sample along a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub t: f64,
    pub position: Vec<f64>,
    /// `None` where the first derivative vanishes and curvature is undefined.
    pub curvature: Option<f64>,
}

/// Speed threshold below which curvature is reported as absent rather than
/// amplified into meaningless huge values.
const CURVATURE_SPEED_FLOOR: f64 = 1e-12;

/// Samples position and curvature at `count` uniformly spaced parameters.
///
/// Curvature is `|C' x C''| / |C'|^3` (for planar curves the scalar cross
/// product `x'y'' - y'x''` in the numerator).
pub fn curvature_samples(
    control: &PointSet,
    kv: &KnotVector,
    count: usize,
) -> Result<Vec<CurvatureSample>> {
    check_curve_shape(control, kv)?;
    if kv.degree() < 2 {
        return Err(Error::Config(format!(
            "curvature needs degree at least 2, got {}",
            kv.degree()
        )));
    }
    if count < 2 {
        return Err(Error::Config("curvature sampling needs at least 2 samples".into()));
    }
    let n = kv.basis_count();
    let dim = control.dim();
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / (count - 1) as f64;
        let span = basis::find_span(kv.knots(), kv.degree(), n, t);
        let ders = basis::basis_derivatives(kv.knots(), kv.degree(), span, t, 2);
        let first = span - kv.degree();
        let mut position = vec![0.0; dim];
        let mut d1 = vec![0.0; dim];
        let mut d2 = vec![0.0; dim];
        for c in 0..dim {
            let col = control.coord(c);
            for (k, (&w0, (&w1, &w2))) in
                ders[0].iter().zip(ders[1].iter().zip(&ders[2])).enumerate()
            {
                let p = col[first + k];
                position[c] += w0 * p;
                d1[c] += w1 * p;
                d2[c] += w2 * p;
            }
        }
        let speed_sq: f64 = d1.iter().map(|v| v * v).sum();
        let speed = speed_sq.sqrt();
        let curvature = if speed < CURVATURE_SPEED_FLOOR {
            None
        } else {
            let cross = if dim == 2 {
                (d1[0] * d2[1] - d1[1] * d2[0]).abs()
            } else {
                let cx = d1[1] * d2[2] - d1[2] * d2[1];
                let cy = d1[2] * d2[0] - d1[0] * d2[2];
                let cz = d1[0] * d2[1] - d1[1] * d2[0];
                (cx * cx + cy * cy + cz * cz).sqrt()
            };
            Some(cross / (speed * speed_sq))
        };
        samples.push(CurvatureSample { t, position, curvature });
    }
    Ok(samples)
}
