//! Fits a cubic B-spline curve to sampled points at the optimal weights.
//!
//! Run with `cargo run -p mlspia --example fit_curve`.

use mlspia::{
    chord_params, collocate, eval_curve, extreme_singular_values, make_knots,
    optimal_weights, CurveProblem, FitOptions, InitStrategy, PointSet, DEFAULT_RANK_TOL,
};

fn main() -> Result<(), mlspia::Error> {
    // Data sampled from a parabola-like arc.
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let x = i as f64 / 39.0;
            vec![x, 4.0 * x * (1.0 - x)]
        })
        .collect();
    let data = PointSet::from_rows(&rows)?;
    let params = chord_params(&data)?;
    let knots = make_knots(&params, 8, 3)?;
    let basis = collocate(&knots, &params)?;
    let spectrum = extreme_singular_values(&basis, DEFAULT_RANK_TOL)?;
    let weights = optimal_weights(&spectrum)?;

    let problem = CurveProblem::new(
        data, params, knots, weights.weights, &spectrum, FitOptions::default(),
    )?;
    let result = problem.run(InitStrategy::II)?;
    assert!(result.converged());
    let curve = problem.fitted(result.control)?;
    let midpoint = eval_curve(&curve.control, &curve.knots, 0.5)?;
    println!("fitted in {} steps; curve at t = 0.5: {midpoint:?}", result.iterations);
    Ok(())
}
