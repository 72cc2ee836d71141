//! Least-squares B-spline curve and surface fitting by progressive-iterative
//! approximation, in two flavors:
//!
//! * a plain iteration that repeatedly projects the fitting residual back
//!   onto the control points with a step size `mu`, and
//! * a memory-augmented iteration that carries an auxiliary point sequence
//!   and blends the previous update into the next one (weights `omega`,
//!   `gamma`, `upsilon`), converging in substantially fewer steps at its
//!   closed-form optimal weights.
//!
//! Both avoid ever solving or even forming a dense linear system: each step
//! costs a handful of sparse collocation-matrix products. The optimal
//! weights and the predicted contraction radius come from the extreme
//! singular values of the collocation matrix ([`spectral`]); convergence
//! holds even when that matrix is rank-deficient.
//!
//! # Fitting a curve
//!
//! ```
//! use mlspia::{
//!     chord_params, extreme_singular_values, make_knots, optimal_weights, collocate,
//!     CurveProblem, FitOptions, InitStrategy, PointSet, DEFAULT_RANK_TOL,
//! };
//!
//! // Data sampled from a parabola-like arc.
//! let rows: Vec<Vec<f64>> = (0..40)
//!     .map(|i| {
//!         let x = i as f64 / 39.0;
//!         vec![x, 4.0 * x * (1.0 - x)]
//!     })
//!     .collect();
//! let data = PointSet::from_rows(&rows)?;
//! let params = chord_params(&data)?;
//! let knots = make_knots(&params, 8, 3)?;
//! let basis = collocate(&knots, &params)?;
//! let spectrum = extreme_singular_values(&basis, DEFAULT_RANK_TOL)?;
//! let weights = optimal_weights(&spectrum)?;
//!
//! let problem = CurveProblem::new(
//!     data, params, knots, weights.weights, &spectrum, FitOptions::default(),
//! )?;
//! let result = problem.run(InitStrategy::II)?;
//! assert!(result.converged());
//! let curve = problem.fitted(result.control)?;
//! # Ok::<(), mlspia::Error>(())
//! ```

mod error;
mod linalg;
mod params;
pub mod spectral;
mod splines;

pub mod iterate;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use params::{chord_params, grid_params, SurfaceParams};
pub use spectral::{
    extreme_singular_values, iteration_matrix, optimal_weights, optimal_weights_surface,
    theoretical_radius, validate_weights, OptimalWeights, SpectralSummary, WeightSet,
    DEFAULT_RANK_TOL, ITERATION_MATRIX_CAP,
};
pub use splines::{
    collocate, curvature_samples, eval_basis, eval_curve, eval_surface, make_knots,
    CollocationMatrix, CurvatureSample, FittedCurve, FittedSurface, KnotVector, ParameterList,
    PointGrid, PointSet,
};

pub use iterate::{
    max_deviation, max_deviation_surface, ConvergenceRecord, CurveProblem, CurveState,
    FitOptions, InitStrategy, RunResult, RunStatus, SurfaceProblem, SurfaceState,
    CURVE_DEVIATION_SAMPLES, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
    SURFACE_DEVIATION_SAMPLES,
};
