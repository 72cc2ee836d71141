//! Tensor-product surface fitting. The collocation matrix of a surface
//! problem is the Kronecker product of two per-direction matrices; every
//! operation here works on the grid forms (`B1 P B2^T` and friends) so that
//! the product is never materialized.

use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse_from_eigen, symmetric_eigen, DenseMatrix};
use crate::params::SurfaceParams;
use crate::spectral::{validate_weights, SpectralSummary, WeightSet};
use crate::splines::{collocate, CollocationMatrix, FittedSurface, KnotVector, PointGrid};

use super::curve::subsample_indices;
use super::{run_loop, FitOptions, InitStrategy, RunResult};

/// A least-squares surface fitting problem: a data grid `Q`, per-direction
/// collocation matrices `B1` (rows) and `B2` (columns), and iteration
/// weights validated against the product of the per-direction largest
/// singular values.
#[derive(Debug, Clone)]
pub struct SurfaceProblem {
    data: PointGrid,
    basis_u: CollocationMatrix,
    basis_v: CollocationMatrix,
    weights: WeightSet,
    options: FitOptions,
    geometry: Option<SurfaceGeometry>,
}

#[derive(Debug, Clone)]
struct SurfaceGeometry {
    params: SurfaceParams,
    knots_u: KnotVector,
    knots_v: KnotVector,
}

/// Iteration state: control net `P_k` and auxiliary grid `Lambda_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceState {
    /// Control net `P_k` (`n1 x n2`).
    pub control: PointGrid,
    /// Auxiliary points `Lambda_k` (`m1 x m2`).
    pub aux: PointGrid,
    /// Step counter `k`.
    pub step: usize,
}

impl SurfaceProblem {
    /// Builds a problem from fitting geometry; collocation matrices are
    /// assembled from the knot vectors and parameter lists, and the weights
    /// are validated against `spectrum_u.sigma_max * spectrum_v.sigma_max`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        data: PointGrid,
        params: SurfaceParams,
        knots_u: KnotVector,
        knots_v: KnotVector,
        weights: WeightSet,
        spectrum_u: &SpectralSummary,
        spectrum_v: &SpectralSummary,
        options: FitOptions,
    ) -> Result<Self> {
        if data.nrows() != params.u.len() || data.ncols() != params.v.len() {
            return Err(Error::Dimension(format!(
                "{} x {} data grid but {} x {} parameters",
                data.nrows(),
                data.ncols(),
                params.u.len(),
                params.v.len()
            )));
        }
        let basis_u = collocate(&knots_u, &params.u)?;
        let basis_v = collocate(&knots_v, &params.v)?;
        Self::build(
            data,
            basis_u,
            basis_v,
            weights,
            spectrum_u,
            spectrum_v,
            options,
            Some(SurfaceGeometry { params, knots_u, knots_v }),
        )
    }

    /// Builds a problem from explicit collocation matrices, without surface
    /// geometry. [`SurfaceProblem::fitted`] is unavailable on such problems.
    pub fn from_collocation(
        data: PointGrid,
        basis_u: CollocationMatrix,
        basis_v: CollocationMatrix,
        weights: WeightSet,
        spectrum_u: &SpectralSummary,
        spectrum_v: &SpectralSummary,
        options: FitOptions,
    ) -> Result<Self> {
        Self::build(data, basis_u, basis_v, weights, spectrum_u, spectrum_v, options, None)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        data: PointGrid,
        basis_u: CollocationMatrix,
        basis_v: CollocationMatrix,
        weights: WeightSet,
        spectrum_u: &SpectralSummary,
        spectrum_v: &SpectralSummary,
        options: FitOptions,
        geometry: Option<SurfaceGeometry>,
    ) -> Result<Self> {
        if data.nrows() != basis_u.nrows() || data.ncols() != basis_v.nrows() {
            return Err(Error::Dimension(format!(
                "{} x {} data grid but collocation matrices with {} and {} rows",
                data.nrows(),
                data.ncols(),
                basis_u.nrows(),
                basis_v.nrows()
            )));
        }
        options.validate()?;
        validate_weights(&weights, spectrum_u.sigma_max * spectrum_v.sigma_max)?;
        Ok(Self { data, basis_u, basis_v, weights, options, geometry })
    }

    pub fn data(&self) -> &PointGrid {
        &self.data
    }

    pub fn basis_u(&self) -> &CollocationMatrix {
        &self.basis_u
    }

    pub fn basis_v(&self) -> &CollocationMatrix {
        &self.basis_v
    }

    pub fn weights(&self) -> &WeightSet {
        &self.weights
    }

    pub fn options(&self) -> &FitOptions {
        &self.options
    }

    pub fn knots_u(&self) -> Option<&KnotVector> {
        self.geometry.as_ref().map(|g| &g.knots_u)
    }

    pub fn knots_v(&self) -> Option<&KnotVector> {
        self.geometry.as_ref().map(|g| &g.knots_v)
    }

    pub fn params(&self) -> Option<&SurfaceParams> {
        self.geometry.as_ref().map(|g| &g.params)
    }

    /// Control net shape `(n1, n2)`.
    pub fn control_shape(&self) -> (usize, usize) {
        (self.basis_u.ncols(), self.basis_v.ncols())
    }

    /// Builds the initial state; both non-custom strategies set
    /// `Lambda_0 = omega (Q - B1 P_0 B2^T)`.
    pub fn init_state(&self, strategy: InitStrategy<PointGrid>) -> Result<SurfaceState> {
        let (m1, m2) = (self.basis_u.nrows(), self.basis_v.nrows());
        let (n1, n2) = self.control_shape();
        let dim = self.data.dim();
        let control = match strategy {
            InitStrategy::I => PointGrid::zeros(dim, n1, n2)?,
            InitStrategy::II => {
                if n1 > m1 || n2 > m2 {
                    return Err(Error::Dimension(format!(
                        "subsampled start needs at least as many data points as control \
                         points per direction ({m1} x {m2} data, {n1} x {n2} control)"
                    )));
                }
                let rows = subsample_indices(m1, n1);
                let cols = subsample_indices(m2, n2);
                let mut control = PointGrid::zeros(dim, n1, n2)?;
                for c in 0..dim {
                    let q = self.data.channel(c);
                    let p = control.channel_mut(c);
                    for (i, &qi) in rows.iter().enumerate() {
                        for (j, &qj) in cols.iter().enumerate() {
                            p[i * n2 + j] = q[qi * m2 + qj];
                        }
                    }
                }
                control
            }
            InitStrategy::Custom { control, aux } => {
                self.check_control(&control)?;
                if aux.nrows() != m1 || aux.ncols() != m2 || aux.dim() != dim {
                    return Err(Error::Dimension(format!(
                        "custom auxiliary grid must be {m1} x {m2} in {dim}D, got {} x {} \
                         in {}D",
                        aux.nrows(),
                        aux.ncols(),
                        aux.dim()
                    )));
                }
                return Ok(SurfaceState { control, aux, step: 0 });
            }
        };
        let mut aux = PointGrid::zeros(dim, m1, m2)?;
        let mut fit = vec![0.0; m1 * m2];
        let mut mid = vec![0.0; m1 * n2];
        for c in 0..dim {
            self.fit_channel(control.channel(c), &mut mid, &mut fit);
            let q = self.data.channel(c);
            let a = aux.channel_mut(c);
            for i in 0..m1 * m2 {
                a[i] = self.weights.omega * (q[i] - fit[i]);
            }
        }
        Ok(SurfaceState { control, aux, step: 0 })
    }

    /// `fit = B1 P B2^T` for one coordinate channel; `mid` is scratch of
    /// size `m1 * n2`.
    fn fit_channel(&self, control: &[f64], mid: &mut [f64], fit: &mut [f64]) {
        let n2 = self.basis_v.ncols();
        self.basis_u.lmul(control, n2, mid);
        self.basis_v.rmul_t(mid, self.basis_u.nrows(), fit);
    }

    /// `pulled = B1^T X B2` for one channel of an `m1 x m2` grid; `mid` is
    /// scratch of size `n1 * m2`.
    fn pull_channel(&self, grid: &[f64], mid: &mut [f64], pulled: &mut [f64]) {
        let m2 = self.basis_v.nrows();
        self.basis_u.lmul_t(grid, m2, mid);
        self.basis_v.rmul(mid, self.basis_u.ncols(), pulled);
    }

    /// One plain-iteration step: `P + mu B1^T (Q - B1 P B2^T) B2`.
    pub fn lspia_step(&self, control: &PointGrid) -> Result<PointGrid> {
        self.check_control(control)?;
        let mu = self.lspia_mu()?;
        let (m1, m2) = (self.basis_u.nrows(), self.basis_v.nrows());
        let (n1, n2) = self.control_shape();
        let mut next = control.clone();
        let mut mid_fit = vec![0.0; m1 * n2];
        let mut residual = vec![0.0; m1 * m2];
        let mut mid_pull = vec![0.0; n1 * m2];
        let mut gradient = vec![0.0; n1 * n2];
        for c in 0..self.data.dim() {
            self.fit_channel(control.channel(c), &mut mid_fit, &mut residual);
            for (r, q) in residual.iter_mut().zip(self.data.channel(c)) {
                *r = q - *r;
            }
            self.pull_channel(&residual, &mut mid_pull, &mut gradient);
            for (p, g) in next.channel_mut(c).iter_mut().zip(&gradient) {
                *p += mu * g;
            }
        }
        Ok(next)
    }

    fn lspia_mu(&self) -> Result<f64> {
        match self.weights.mu {
            Some(mu) if mu.is_finite() && mu > 0.0 => Ok(mu),
            Some(mu) => {
                Err(Error::Config(format!("plain-iteration step size must be positive, got {mu}")))
            }
            None => Err(Error::Config("no plain-iteration step size was configured".into())),
        }
    }

    /// One memory-augmented step on the grid forms. Both updates read the
    /// old state:
    /// `T = B1^T Lambda B2`, `P' = P + upsilon T`, and
    /// `Lambda' = (1 - omega) Lambda - gamma upsilon B1 T B2^T + omega (Q - B1 P B2^T)`.
    pub fn mlspia_step(&self, state: &SurfaceState) -> Result<SurfaceState> {
        self.check_state(state)?;
        let WeightSet { omega, gamma, upsilon, .. } = self.weights;
        let (m1, m2) = (self.basis_u.nrows(), self.basis_v.nrows());
        let (n1, n2) = self.control_shape();
        let mut control = state.control.clone();
        let mut aux = state.aux.clone();
        let mut mid_fit = vec![0.0; m1 * n2];
        let mut residual = vec![0.0; m1 * m2];
        let mut mid_pull = vec![0.0; n1 * m2];
        let mut pulled = vec![0.0; n1 * n2];
        let mut spread = vec![0.0; m1 * m2];
        for c in 0..self.data.dim() {
            self.fit_channel(state.control.channel(c), &mut mid_fit, &mut residual);
            for (r, q) in residual.iter_mut().zip(self.data.channel(c)) {
                *r = q - *r;
            }
            self.pull_channel(state.aux.channel(c), &mut mid_pull, &mut pulled);
            self.fit_channel(&pulled, &mut mid_fit, &mut spread);
            for (p, t) in control.channel_mut(c).iter_mut().zip(&pulled) {
                *p += upsilon * t;
            }
            let old = state.aux.channel(c);
            let a = aux.channel_mut(c);
            for i in 0..m1 * m2 {
                a[i] = (1.0 - omega) * old[i] - gamma * upsilon * spread[i]
                    + omega * residual[i];
            }
        }
        if !(control.is_finite() && aux.is_finite()) {
            return Err(Error::NonFinite { step: state.step + 1 });
        }
        Ok(SurfaceState { control, aux, step: state.step + 1 })
    }

    /// The stopping functional `E = ||B1^T (B1 P B2^T - Q) B2||_F` over all
    /// coordinate channels.
    pub fn error_metric(&self, control: &PointGrid) -> Result<f64> {
        self.check_control(control)?;
        Ok(self.error_unchecked(control))
    }

    fn error_unchecked(&self, control: &PointGrid) -> f64 {
        let (m1, m2) = (self.basis_u.nrows(), self.basis_v.nrows());
        let (n1, n2) = self.control_shape();
        let mut mid_fit = vec![0.0; m1 * n2];
        let mut residual = vec![0.0; m1 * m2];
        let mut mid_pull = vec![0.0; n1 * m2];
        let mut gradient = vec![0.0; n1 * n2];
        let mut sum = 0.0;
        for c in 0..self.data.dim() {
            self.fit_channel(control.channel(c), &mut mid_fit, &mut residual);
            for (r, q) in residual.iter_mut().zip(self.data.channel(c)) {
                *r -= q;
            }
            self.pull_channel(&residual, &mut mid_pull, &mut gradient);
            sum += gradient.iter().map(|g| g * g).sum::<f64>();
        }
        sum.sqrt()
    }

    /// Runs the memory-augmented iteration to a stop condition.
    pub fn run(&self, strategy: InitStrategy<PointGrid>) -> Result<RunResult<PointGrid>> {
        let initial = self.init_state(strategy)?;
        run_loop(
            initial,
            &self.options,
            |s| self.error_unchecked(&s.control),
            |s| self.mlspia_step(s),
            |a, b| {
                a.control.max_pointwise_distance(&b.control).expect("states share one shape")
            },
            |s| s.control,
        )
    }

    /// Runs the plain iteration to a stop condition using the configured
    /// step size `mu`.
    pub fn run_lspia(&self, strategy: InitStrategy<PointGrid>) -> Result<RunResult<PointGrid>> {
        self.lspia_mu()?;
        let initial = self.init_state(strategy)?.control;
        run_loop(
            initial,
            &self.options,
            |control| self.error_unchecked(control),
            |control| self.lspia_step(control),
            |a, b| a.max_pointwise_distance(b).expect("states share one shape"),
            |control| control,
        )
    }

    /// Solves the normal equations directly: `X = G1^+ (B1^T Q B2) G2^+`
    /// per channel, with the per-direction Gram matrices pseudo-inverted at
    /// the numerical noise floor (minimum-norm when rank-deficient).
    pub fn direct_ls(&self) -> Result<PointGrid> {
        let (n1, n2) = self.control_shape();
        let inverse_u = gram_pseudo_inverse(&self.basis_u)?;
        let inverse_v = gram_pseudo_inverse(&self.basis_v)?;
        let mut out = PointGrid::zeros(self.data.dim(), n1, n2)?;
        let m2 = self.basis_v.nrows();
        let mut mid = vec![0.0; n1 * m2];
        let mut pulled = vec![0.0; n1 * n2];
        for c in 0..self.data.dim() {
            self.pull_channel(self.data.channel(c), &mut mid, &mut pulled);
            let rhs = DenseMatrix::from_row_major(n1, n2, pulled.clone());
            let solved = inverse_u.matmul(&rhs).matmul(&inverse_v);
            out.channel_mut(c).copy_from_slice(solved.as_slice());
        }
        Ok(out)
    }

    /// Packages a control net into the fitted surface. Requires the problem
    /// to have been built from geometry.
    pub fn fitted(&self, control: PointGrid) -> Result<FittedSurface> {
        let Some(geometry) = &self.geometry else {
            return Err(Error::Config(
                "problem was built from bare collocation matrices and has no surface geometry"
                    .into(),
            ));
        };
        self.check_control(&control)?;
        Ok(FittedSurface {
            control,
            knots_u: geometry.knots_u.clone(),
            knots_v: geometry.knots_v.clone(),
        })
    }

    fn check_control(&self, control: &PointGrid) -> Result<()> {
        let (n1, n2) = self.control_shape();
        if control.nrows() != n1 || control.ncols() != n2 || control.dim() != self.data.dim() {
            return Err(Error::Dimension(format!(
                "control net must be {n1} x {n2} in {}D, got {} x {} in {}D",
                self.data.dim(),
                control.nrows(),
                control.ncols(),
                control.dim()
            )));
        }
        Ok(())
    }

    fn check_state(&self, state: &SurfaceState) -> Result<()> {
        self.check_control(&state.control)?;
        let (m1, m2) = (self.basis_u.nrows(), self.basis_v.nrows());
        if state.aux.nrows() != m1 || state.aux.ncols() != m2 || state.aux.dim() != self.data.dim()
        {
            return Err(Error::Dimension(format!(
                "auxiliary grid must be {m1} x {m2} in {}D, got {} x {} in {}D",
                self.data.dim(),
                state.aux.nrows(),
                state.aux.ncols(),
                state.aux.dim()
            )));
        }
        Ok(())
    }
}

fn gram_pseudo_inverse(basis: &CollocationMatrix) -> Result<DenseMatrix> {
    let eigen = symmetric_eigen(&basis.gram())?;
    let lambda_max = eigen.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = basis.ncols() as f64 * f64::EPSILON * lambda_max;
    Ok(pseudo_inverse_from_eigen(&eigen, cutoff))
}
