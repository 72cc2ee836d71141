//! Run-to-convergence drivers for the fitting iterations.
//!
//! Two iterations are provided on the same problem types: the plain
//! residual-projection update (one step size `mu`) and the memory-augmented
//! update (weights `omega`, `gamma`, `upsilon`), which carries an auxiliary
//! point sequence and converges in far fewer steps at its optimal weights.
//! Both stop when the error functional `E_k = ||B^T (B P_k - Q)||_F` drops
//! below a tolerance, and both report a full per-step convergence history.

mod curve;
mod surface;

pub use curve::{CurveProblem, CurveState};
pub use surface::{SurfaceProblem, SurfaceState};

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::splines::{eval_curve, eval_surface, FittedCurve, FittedSurface};

/// Stopping tolerance applied to the error functional `E_k`.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Default iteration cap; poorly conditioned problems at non-optimal weights
/// can legitimately need tens of thousands of steps.
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// A run is declared divergent when `E_k` exceeds this factor times
/// `max(E_0, 1)` or stops being finite.
pub(crate) const DIVERGENCE_FACTOR: f64 = 1e12;

/// Default sample count for curve deviation measurements.
pub const CURVE_DEVIATION_SAMPLES: usize = 4096;

/// Default per-direction sample count for surface deviation measurements.
pub const SURFACE_DEVIATION_SAMPLES: usize = 256;

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// `E_k` dropped below the tolerance.
    Converged,
    /// The iteration cap was reached first.
    MaxIterations,
    /// `E_k` blew up or stopped being finite.
    Diverged,
}

/// One row of the convergence history.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    /// Step index `k`; step 0 describes the initial state.
    pub step: usize,
    /// Error functional `E_k` after this step.
    pub error: f64,
    /// Largest control-point movement during this step (0 at step 0).
    pub max_displacement: f64,
    /// Wall-clock time since the run started.
    pub elapsed: Duration,
}

/// Stopping parameters for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Converged once `E_k` falls below this value.
    pub tolerance: f64,
    /// Give up (status `MaxIterations`) after this many steps.
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, max_iterations: DEFAULT_MAX_ITERATIONS }
    }
}

impl FitOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be a positive finite number, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a run: final control net, history, and how it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<C> {
    /// Control points after the last recorded step.
    pub control: C,
    /// Per-step records, starting with the initial state at step 0.
    pub history: Vec<ConvergenceRecord>,
    pub status: RunStatus,
    /// Index of the step at which the run stopped.
    pub iterations: usize,
}

impl<C> RunResult<C> {
    /// `E_k` of the last recorded step.
    pub fn final_error(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.error)
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// How to pick the initial control net `P_0` and auxiliary points `Lambda_0`.
///
/// `T` is [`crate::PointSet`] for curves and [`crate::PointGrid`] for
/// surfaces. Strategies `I` and `II` both derive the auxiliary points from
/// the initial residual, `Lambda_0 = omega (Q - B P_0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy<T> {
    /// Zero control net; the auxiliary points become `omega Q`.
    I,
    /// Control net subsampled from the data at (nearly) equispaced indices,
    /// always including both endpoints. Requires at least as many data
    /// points as control points.
    II,
    /// Caller-supplied control net and auxiliary points.
    Custom { control: T, aux: T },
}

/// Drives one of the iterations to a stop condition, recording history.
///
/// `advance` failing with a non-finite-value error ends the run with status
/// `Diverged` (keeping the last finite state); any other error propagates.
pub(crate) fn run_loop<S, C>(
    initial: S,
    options: &FitOptions,
    error_of: impl Fn(&S) -> f64,
    mut advance: impl FnMut(&S) -> Result<S>,
    displacement: impl Fn(&S, &S) -> f64,
    extract: impl FnOnce(S) -> C,
) -> Result<RunResult<C>> {
    let started = Instant::now();
    let mut state = initial;
    let e0 = error_of(&state);
    let mut history = vec![ConvergenceRecord {
        step: 0,
        error: e0,
        max_displacement: 0.0,
        elapsed: started.elapsed(),
    }];
    let limit = DIVERGENCE_FACTOR * e0.max(1.0);

    let (mut status, mut iterations) = if !e0.is_finite() {
        (RunStatus::Diverged, 0)
    } else if e0 < options.tolerance {
        (RunStatus::Converged, 0)
    } else {
        (RunStatus::MaxIterations, options.max_iterations)
    };

    if status == RunStatus::MaxIterations {
        for k in 1..=options.max_iterations {
            let next = match advance(&state) {
                Ok(next) => next,
                Err(Error::NonFinite { .. }) => {
                    status = RunStatus::Diverged;
                    iterations = k;
                    break;
                }
                Err(other) => return Err(other),
            };
            let error = error_of(&next);
            history.push(ConvergenceRecord {
                step: k,
                error,
                max_displacement: displacement(&state, &next),
                elapsed: started.elapsed(),
            });
            state = next;
            if !error.is_finite() || error > limit {
                status = RunStatus::Diverged;
                iterations = k;
                break;
            }
            if error < options.tolerance {
                status = RunStatus::Converged;
                iterations = k;
                break;
            }
        }
    }

    Ok(RunResult { control: extract(state), history, status, iterations })
}

/// Largest pointwise distance between two curves over a uniform parameter
/// sample of the given size. The curves must share a knot vector.
pub fn max_deviation(a: &FittedCurve, b: &FittedCurve, samples: usize) -> Result<f64> {
    if a.knots != b.knots {
        return Err(Error::Dimension("curves are defined over different knot vectors".into()));
    }
    if a.control.dim() != b.control.dim() {
        return Err(Error::Dimension(format!(
            "curves in {}D and {}D cannot be compared",
            a.control.dim(),
            b.control.dim()
        )));
    }
    if samples < 2 {
        return Err(Error::Config("deviation needs at least 2 samples".into()));
    }
    let mut max = 0.0f64;
    for j in 0..samples {
        let t = j as f64 / (samples - 1) as f64;
        let pa = eval_curve(&a.control, &a.knots, t)?;
        let pb = eval_curve(&b.control, &b.knots, t)?;
        max = max.max(point_distance(&pa, &pb));
    }
    Ok(max)
}

/// Largest pointwise distance between two surfaces over a uniform
/// `samples_u x samples_v` parameter grid. The surfaces must share both knot
/// vectors.
pub fn max_deviation_surface(
    a: &FittedSurface,
    b: &FittedSurface,
    samples_u: usize,
    samples_v: usize,
) -> Result<f64> {
    if a.knots_u != b.knots_u || a.knots_v != b.knots_v {
        return Err(Error::Dimension("surfaces are defined over different knot vectors".into()));
    }
    if a.control.dim() != b.control.dim() {
        return Err(Error::Dimension(format!(
            "surfaces in {}D and {}D cannot be compared",
            a.control.dim(),
            b.control.dim()
        )));
    }
    if samples_u < 2 || samples_v < 2 {
        return Err(Error::Config("deviation needs at least 2 samples per direction".into()));
    }
    let mut max = 0.0f64;
    for i in 0..samples_u {
        let t = i as f64 / (samples_u - 1) as f64;
        for j in 0..samples_v {
            let s = j as f64 / (samples_v - 1) as f64;
            let pa = eval_surface(&a.control, &a.knots_u, &a.knots_v, t, s)?;
            let pb = eval_surface(&b.control, &b.knots_u, &b.knots_v, t, s)?;
            max = max.max(point_distance(&pa, &pb));
        }
    }
    Ok(max)
}

fn point_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
