use mlspia::{
    chord_params, collocate, extreme_singular_values, grid_params, make_knots, optimal_weights,
    optimal_weights_surface, CurveProblem, FitOptions, InitStrategy, OptimalWeights, PointGrid,
    PointSet, SpectralSummary, SurfaceProblem, WeightSet, DEFAULT_RANK_TOL,
};

use crate::config::{InitName, RunConfig, WeightMode};
use crate::datagen;
use crate::error::{CliError, Result};
use crate::io::{self, LoadedData};

/// Input data resolved to its geometric shape.
#[derive(Debug, Clone)]
pub enum ProblemData {
    Curve(PointSet),
    Surface(PointGrid),
}

/// Loads the input file or generates the requested example.
pub fn resolve_data(cfg: &RunConfig) -> Result<ProblemData> {
    match (&cfg.input, cfg.example) {
        (Some(path), None) => Ok(match io::load_points(path, cfg.format)? {
            LoadedData::Curve(pts) => ProblemData::Curve(pts),
            LoadedData::Surface(grid) => ProblemData::Surface(grid),
        }),
        (None, Some(name)) => {
            let as_surface = datagen::is_surface(name) || cfg.grid.is_some();
            if as_surface {
                let size = cfg.grid.unwrap_or_else(|| datagen::default_grid(name));
                Ok(ProblemData::Surface(datagen::gen_surface(name, size, cfg.seed)?))
            } else {
                let m = cfg.points.unwrap_or_else(|| datagen::default_points(name));
                Ok(ProblemData::Curve(datagen::gen_curve(name, m, cfg.seed)?))
            }
        }
        (Some(_), Some(_)) => {
            Err(CliError::Config("give either --input or --example, not both".into()))
        }
        (None, None) => Err(CliError::Config("one of --input or --example is required".into())),
    }
}

/// Unwraps curve data or explains how to handle the grid instead.
pub fn require_curve(data: ProblemData) -> Result<PointSet> {
    match data {
        ProblemData::Curve(pts) => Ok(pts),
        ProblemData::Surface(_) => Err(CliError::Config(
            "the input is a surface grid; use fit-surface for grids".into(),
        )),
    }
}

/// Unwraps grid data or explains how to handle the point list instead.
pub fn require_surface(data: ProblemData) -> Result<PointGrid> {
    match data {
        ProblemData::Surface(grid) => Ok(grid),
        ProblemData::Curve(_) => Err(CliError::Config(
            "the input is a point list; use fit-curve for point lists".into(),
        )),
    }
}

/// A curve problem plus the spectral quantities behind its weights.
pub struct CurveSetup {
    pub problem: CurveProblem,
    pub spectrum: SpectralSummary,
    pub optimal: OptimalWeights,
}

/// A surface problem plus per-direction spectra and combined weights.
pub struct SurfaceSetup {
    pub problem: SurfaceProblem,
    pub spectrum_u: SpectralSummary,
    pub spectrum_v: SpectralSummary,
    pub optimal: OptimalWeights,
}

/// Picks the configured weights, falling back to the computed optimum.
pub fn resolve_weights(mode: &WeightMode, optimal: &OptimalWeights) -> WeightSet {
    match mode {
        WeightMode::Optimal => optimal.weights,
        WeightMode::Manual { omega, gamma, upsilon, mu } => {
            let w = WeightSet::new(*omega, *gamma, *upsilon);
            match mu {
                Some(mu) => w.with_mu(*mu),
                None => w,
            }
        }
    }
}

/// The init strategy named by the config.
pub fn strategy<T>(init: InitName) -> InitStrategy<T> {
    match init {
        InitName::I => InitStrategy::I,
        InitName::II => InitStrategy::II,
    }
}

/// Builds a curve problem: chord parameters, averaged knots, collocation,
/// spectral analysis, and weight selection. Manual weights outside the
/// convergence region are rejected here, before any iteration runs.
pub fn prepare_curve(data: PointSet, cfg: &RunConfig) -> Result<CurveSetup> {
    let n = cfg
        .ctrl
        .ok_or_else(|| CliError::Config("--ctrl is required to fit a curve".into()))?;
    let params = chord_params(&data)?;
    let knots = make_knots(&params, n, cfg.degree)?;
    let basis = collocate(&knots, &params)?;
    let spectrum = extreme_singular_values(&basis, DEFAULT_RANK_TOL)?;
    let optimal = optimal_weights(&spectrum)?;
    let weights = resolve_weights(&cfg.weights, &optimal);
    let options = FitOptions { tolerance: cfg.tolerance, max_iterations: cfg.max_iterations };
    let problem = CurveProblem::new(data, params, knots, weights, &spectrum, options)?;
    Ok(CurveSetup { problem, spectrum, optimal })
}

/// Builds a tensor-product surface problem, mirroring [`prepare_curve`] in
/// each direction.
pub fn prepare_surface(data: PointGrid, cfg: &RunConfig) -> Result<SurfaceSetup> {
    let n1 = cfg
        .ctrl_u
        .ok_or_else(|| CliError::Config("--ctrl-u is required to fit a surface".into()))?;
    let n2 = cfg
        .ctrl_v
        .ok_or_else(|| CliError::Config("--ctrl-v is required to fit a surface".into()))?;
    let params = grid_params(&data)?;
    let knots_u = make_knots(&params.u, n1, cfg.degree)?;
    let knots_v = make_knots(&params.v, n2, cfg.degree)?;
    let basis_u = collocate(&knots_u, &params.u)?;
    let basis_v = collocate(&knots_v, &params.v)?;
    let spectrum_u = extreme_singular_values(&basis_u, DEFAULT_RANK_TOL)?;
    let spectrum_v = extreme_singular_values(&basis_v, DEFAULT_RANK_TOL)?;
    let optimal = optimal_weights_surface(&spectrum_u, &spectrum_v)?;
    let weights = resolve_weights(&cfg.weights, &optimal);
    let options = FitOptions { tolerance: cfg.tolerance, max_iterations: cfg.max_iterations };
    let problem = SurfaceProblem::new(
        data, params, knots_u, knots_v, weights, &spectrum_u, &spectrum_v, options,
    )?;
    Ok(SurfaceSetup { problem, spectrum_u, spectrum_v, optimal })
}
