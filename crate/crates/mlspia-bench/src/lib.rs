//! Ready-made fitting problems at benchmark-relevant sizes.
//!
//! The builders produce fully configured problems (data, knots, collocation,
//! optimal weights) so the benchmarks measure the iteration and analysis
//! kernels, not the setup.

use mlspia::{
    chord_params, collocate, extreme_singular_values, grid_params, make_knots, optimal_weights,
    optimal_weights_surface, CurveProblem, FitOptions, SurfaceProblem, DEFAULT_RANK_TOL,
};
use pia_fit::config::{ExampleName, GridSize};
use pia_fit::datagen;

/// The polar test curve with `m` samples fitted by `n` cubic control points,
/// at optimal weights.
pub fn polar_curve_problem(m: usize, n: usize) -> CurveProblem {
    let data = datagen::gen_curve(ExampleName::PolarSin4, m, 0).expect("valid sample count");
    let params = chord_params(&data).expect("distinct samples");
    let knots = make_knots(&params, n, 3).expect("valid control count");
    let basis = collocate(&knots, &params).expect("valid knots");
    let spectrum = extreme_singular_values(&basis, DEFAULT_RANK_TOL).expect("nonzero basis");
    let weights = optimal_weights(&spectrum).expect("positive extremes").weights;
    CurveProblem::new(data, params, knots, weights, &spectrum, FitOptions::default())
        .expect("weights lie in the convergence region")
}

/// The height-field test surface on a `grid x grid` sample lattice fitted by
/// an `n x n` cubic control net, at optimal weights.
pub fn height_field_surface_problem(grid: usize, n: usize) -> SurfaceProblem {
    let size = GridSize { rows: grid, cols: grid };
    let data = datagen::gen_surface(ExampleName::FaceLike, size, 0).expect("valid grid size");
    let params = grid_params(&data).expect("distinct rows and columns");
    let knots_u = make_knots(&params.u, n, 3).expect("valid control count");
    let knots_v = make_knots(&params.v, n, 3).expect("valid control count");
    let basis_u = collocate(&knots_u, &params.u).expect("valid knots");
    let basis_v = collocate(&knots_v, &params.v).expect("valid knots");
    let spectrum_u = extreme_singular_values(&basis_u, DEFAULT_RANK_TOL).expect("nonzero basis");
    let spectrum_v = extreme_singular_values(&basis_v, DEFAULT_RANK_TOL).expect("nonzero basis");
    let weights = optimal_weights_surface(&spectrum_u, &spectrum_v).expect("positive extremes").weights;
    SurfaceProblem::new(
        data,
        params,
        knots_u,
        knots_v,
        weights,
        &spectrum_u,
        &spectrum_v,
        FitOptions::default(),
    )
    .expect("weights lie in the convergence region")
}
