use std::path::{Path, PathBuf};
use std::time::Instant;

use mlspia::{
    curvature_samples, eval_curve, eval_surface, max_deviation, max_deviation_surface,
    theoretical_radius, validate_weights, PointGrid, PointSet, RunResult, SpectralSummary,
    CURVE_DEVIATION_SAMPLES, ITERATION_MATRIX_CAP, SURFACE_DEVIATION_SAMPLES,
};

use crate::config::RunConfig;
use crate::datagen;
use crate::eigencheck;
use crate::error::{CliError, Result};
use crate::io;
use crate::pipeline::{
    self, prepare_curve, prepare_surface, require_curve, require_surface, resolve_data, strategy,
    CurveSetup, ProblemData, SurfaceSetup,
};
use crate::report::{
    AnalyzeReport, CompareReport, FitReport, HistoryEntry, MethodOutcome, SpectralInfo, TableCell,
    TableReport, TableRow,
};

/// How many timed repeats back each mean timing in comparisons.
pub const TIMING_RUNS: usize = 10;

fn out_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn history_entries(result_history: &[mlspia::ConvergenceRecord]) -> Vec<HistoryEntry> {
    result_history.iter().map(HistoryEntry::from).collect()
}

fn mean_seconds<T>(runs: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..runs {
        let start = Instant::now();
        f()?;
        total += start.elapsed().as_secs_f64();
    }
    Ok(total / runs as f64)
}

/// All pairwise products of retained singular values of the two directions;
/// these are the singular values of the combined surface system.
fn surface_products(su: &SpectralSummary, sv: &SpectralSummary) -> Vec<f64> {
    let mut products = Vec::with_capacity(su.singular_values.len() * sv.singular_values.len());
    for &a in &su.singular_values {
        for &b in &sv.singular_values {
            products.push(a * b);
        }
    }
    products
}

fn uniform_parameter(i: usize, count: usize) -> f64 {
    i as f64 / (count - 1) as f64
}

fn curve_sample_rows(setup: &CurveSetup, control: &PointSet, count: usize) -> Result<Vec<Vec<f64>>> {
    let knots = setup.problem.knots().expect("curve problems built here carry geometry");
    let mut rows = Vec::with_capacity(count);
    for i in 0..count {
        let t = uniform_parameter(i, count);
        let mut row = vec![t];
        row.extend(eval_curve(control, knots, t)?);
        rows.push(row);
    }
    Ok(rows)
}

fn surface_sample_rows(
    setup: &SurfaceSetup,
    control: &PointGrid,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let knots_u = setup.problem.knots_u().expect("surface problems built here carry geometry");
    let knots_v = setup.problem.knots_v().expect("surface problems built here carry geometry");
    let mut rows = Vec::with_capacity(count * count);
    for i in 0..count {
        let u = uniform_parameter(i, count);
        for j in 0..count {
            let v = uniform_parameter(j, count);
            let mut row = vec![u, v];
            row.extend(eval_surface(control, knots_u, knots_v, u, v)?);
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Fits a curve, writes the report and its sidecar files, and returns the
/// report.
///
/// Files written to `out_dir`: `report.json`, `control.csv`, `history.csv`,
/// plus `samples.csv` and (for degree >= 2) `curvature.csv` when the final
/// control points are finite.
pub fn cmd_fit_curve(cfg: &RunConfig) -> Result<FitReport> {
    cfg.validate()?;
    let data = require_curve(resolve_data(cfg)?)?;
    let setup = prepare_curve(data, cfg)?;

    let start = Instant::now();
    let result = setup.problem.run(strategy(cfg.init))?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let full_rank = setup.spectrum.rank == setup.problem.control_count();
    let max_deviation_vs_direct = if result.converged() && full_rank {
        let fitted = setup.problem.fitted(result.control.clone())?;
        let direct = setup.problem.fitted(setup.problem.direct_ls()?)?;
        Some(max_deviation(&fitted, &direct, CURVE_DEVIATION_SAMPLES)?)
    } else {
        None
    };

    let control_finite = result.control.is_finite();
    let report = FitReport {
        config: cfg.clone(),
        kind: "curve".into(),
        data_count: setup.problem.data().len(),
        grid_shape: None,
        control_count: setup.problem.control_count(),
        control_shape: None,
        degree: cfg.degree,
        spectra: vec![SpectralInfo::new("curve", &setup.spectrum)],
        weights_used: setup.problem.weights().into(),
        optimal_weights: (&setup.optimal.weights).into(),
        predicted_radius: theoretical_radius(
            setup.problem.weights(),
            &setup.spectrum.singular_values,
        ),
        lspia_predicted_radius: setup.optimal.lspia_predicted_radius,
        status: result.status.into(),
        iterations: result.iterations,
        final_error: result.final_error(),
        max_deviation_vs_direct,
        wall_seconds,
        history: history_entries(&result.history),
        control_finite,
        control_points: if control_finite { result.control.rows() } else { Vec::new() },
    };

    io::save_json(&out_path(cfg, "report.json"), &report)?;
    io::save_points_csv(&out_path(cfg, "control.csv"), &result.control.rows())?;
    io::save_history_csv(&out_path(cfg, "history.csv"), &result.history)?;
    if control_finite {
        let header = if result.control.dim() == 2 { "t,x,y" } else { "t,x,y,z" };
        let rows = curve_sample_rows(&setup, &result.control, cfg.samples)?;
        io::save_samples_csv(&out_path(cfg, "samples.csv"), header, &rows)?;
        if cfg.degree >= 2 {
            let knots = setup.problem.knots().expect("geometry present");
            let samples = curvature_samples(&result.control, knots, cfg.samples)?;
            io::save_curvature_csv(&out_path(cfg, "curvature.csv"), &samples)?;
        }
    }
    Ok(report)
}

/// Fits a tensor-product surface; the grid analogue of [`cmd_fit_curve`].
pub fn cmd_fit_surface(cfg: &RunConfig) -> Result<FitReport> {
    cfg.validate()?;
    let data = require_surface(resolve_data(cfg)?)?;
    let grid_shape = (data.nrows(), data.ncols());
    let setup = prepare_surface(data, cfg)?;

    let start = Instant::now();
    let result = setup.problem.run(strategy(cfg.init))?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let (n1, n2) = setup.problem.control_shape();
    let full_rank = setup.spectrum_u.rank == n1 && setup.spectrum_v.rank == n2;
    let max_deviation_vs_direct = if result.converged() && full_rank {
        let fitted = setup.problem.fitted(result.control.clone())?;
        let direct = setup.problem.fitted(setup.problem.direct_ls()?)?;
        Some(max_deviation_surface(
            &fitted,
            &direct,
            SURFACE_DEVIATION_SAMPLES,
            SURFACE_DEVIATION_SAMPLES,
        )?)
    } else {
        None
    };

    let products = surface_products(&setup.spectrum_u, &setup.spectrum_v);
    let control_finite = result.control.is_finite();
    let report = FitReport {
        config: cfg.clone(),
        kind: "surface".into(),
        data_count: grid_shape.0 * grid_shape.1,
        grid_shape: Some(grid_shape),
        control_count: n1 * n2,
        control_shape: Some((n1, n2)),
        degree: cfg.degree,
        spectra: vec![
            SpectralInfo::new("u", &setup.spectrum_u),
            SpectralInfo::new("v", &setup.spectrum_v),
        ],
        weights_used: setup.problem.weights().into(),
        optimal_weights: (&setup.optimal.weights).into(),
        predicted_radius: theoretical_radius(setup.problem.weights(), &products),
        lspia_predicted_radius: setup.optimal.lspia_predicted_radius,
        status: result.status.into(),
        iterations: result.iterations,
        final_error: result.final_error(),
        max_deviation_vs_direct,
        wall_seconds,
        history: history_entries(&result.history),
        control_finite,
        control_points: if control_finite { result.control.points_row_major() } else { Vec::new() },
    };

    io::save_json(&out_path(cfg, "report.json"), &report)?;
    io::save_points_csv(&out_path(cfg, "control.csv"), &result.control.points_row_major())?;
    io::save_history_csv(&out_path(cfg, "history.csv"), &result.history)?;
    if control_finite {
        let rows = surface_sample_rows(&setup, &result.control, cfg.samples)?;
        io::save_samples_csv(&out_path(cfg, "samples.csv"), "u,v,x,y,z", &rows)?;
    }
    Ok(report)
}

fn method_outcome<C>(result: &RunResult<C>, mean_secs: f64) -> MethodOutcome {
    MethodOutcome {
        status: result.status.into(),
        iterations: result.iterations,
        final_error: result.final_error(),
        mean_seconds: mean_secs,
    }
}

/// Runs the two-weight and the single-weight method on the same problem and
/// reports iteration counts, mean timings, and the distance between limits.
///
/// Files written: `compare.json`, `history-mlspia.csv`, `history-lspia.csv`.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareReport> {
    cfg.validate()?;
    match resolve_data(cfg)? {
        ProblemData::Curve(data) => compare_curve(cfg, data),
        ProblemData::Surface(grid) => compare_surface(cfg, grid),
    }
}

fn require_mu(weights: &mlspia::WeightSet) -> Result<f64> {
    weights.mu.ok_or_else(|| {
        CliError::Config(
            "the single-weight method needs a step size; use --weights optimal or pass --mu"
                .into(),
        )
    })
}

fn compare_curve(cfg: &RunConfig, data: PointSet) -> Result<CompareReport> {
    let setup = prepare_curve(data, cfg)?;
    let mu = require_mu(setup.problem.weights())?;

    let mlspia_run = setup.problem.run(strategy(cfg.init))?;
    let lspia_run = setup.problem.run_lspia(strategy(cfg.init))?;
    let mlspia_secs = mean_seconds(TIMING_RUNS, || Ok(setup.problem.run(strategy(cfg.init))?))?;
    let lspia_secs = mean_seconds(TIMING_RUNS, || Ok(setup.problem.run_lspia(strategy(cfg.init))?))?;

    let max_deviation_between_limits = if mlspia_run.converged() && lspia_run.converged() {
        let a = setup.problem.fitted(mlspia_run.control.clone())?;
        let b = setup.problem.fitted(lspia_run.control.clone())?;
        Some(max_deviation(&a, &b, CURVE_DEVIATION_SAMPLES)?)
    } else {
        None
    };

    let report = CompareReport {
        config: cfg.clone(),
        kind: "curve".into(),
        data_count: setup.problem.data().len(),
        control_count: setup.problem.control_count(),
        degree: cfg.degree,
        spectra: vec![SpectralInfo::new("curve", &setup.spectrum)],
        mlspia_weights: setup.problem.weights().into(),
        lspia_mu: mu,
        predicted_radius: theoretical_radius(
            setup.problem.weights(),
            &setup.spectrum.singular_values,
        ),
        lspia_predicted_radius: setup.optimal.lspia_predicted_radius,
        timing_runs: TIMING_RUNS,
        mlspia: method_outcome(&mlspia_run, mlspia_secs),
        lspia: method_outcome(&lspia_run, lspia_secs),
        max_deviation_between_limits,
    };

    io::save_json(&out_path(cfg, "compare.json"), &report)?;
    io::save_history_csv(&out_path(cfg, "history-mlspia.csv"), &mlspia_run.history)?;
    io::save_history_csv(&out_path(cfg, "history-lspia.csv"), &lspia_run.history)?;
    Ok(report)
}

fn compare_surface(cfg: &RunConfig, data: PointGrid) -> Result<CompareReport> {
    let setup = prepare_surface(data, cfg)?;
    let mu = require_mu(setup.problem.weights())?;
    let grid_shape = (setup.problem.data().nrows(), setup.problem.data().ncols());

    let mlspia_run = setup.problem.run(strategy(cfg.init))?;
    let lspia_run = setup.problem.run_lspia(strategy(cfg.init))?;
    let mlspia_secs = mean_seconds(TIMING_RUNS, || Ok(setup.problem.run(strategy(cfg.init))?))?;
    let lspia_secs = mean_seconds(TIMING_RUNS, || Ok(setup.problem.run_lspia(strategy(cfg.init))?))?;

    let max_deviation_between_limits = if mlspia_run.converged() && lspia_run.converged() {
        let a = setup.problem.fitted(mlspia_run.control.clone())?;
        let b = setup.problem.fitted(lspia_run.control.clone())?;
        Some(max_deviation_surface(
            &a,
            &b,
            SURFACE_DEVIATION_SAMPLES,
            SURFACE_DEVIATION_SAMPLES,
        )?)
    } else {
        None
    };

    let (n1, n2) = setup.problem.control_shape();
    let products = surface_products(&setup.spectrum_u, &setup.spectrum_v);
    let report = CompareReport {
        config: cfg.clone(),
        kind: "surface".into(),
        data_count: grid_shape.0 * grid_shape.1,
        control_count: n1 * n2,
        degree: cfg.degree,
        spectra: vec![
            SpectralInfo::new("u", &setup.spectrum_u),
            SpectralInfo::new("v", &setup.spectrum_v),
        ],
        mlspia_weights: setup.problem.weights().into(),
        lspia_mu: mu,
        predicted_radius: theoretical_radius(setup.problem.weights(), &products),
        lspia_predicted_radius: setup.optimal.lspia_predicted_radius,
        timing_runs: TIMING_RUNS,
        mlspia: method_outcome(&mlspia_run, mlspia_secs),
        lspia: method_outcome(&lspia_run, lspia_secs),
        max_deviation_between_limits,
    };

    io::save_json(&out_path(cfg, "compare.json"), &report)?;
    io::save_history_csv(&out_path(cfg, "history-mlspia.csv"), &mlspia_run.history)?;
    io::save_history_csv(&out_path(cfg, "history-lspia.csv"), &lspia_run.history)?;
    Ok(report)
}

/// Reports the spectral picture of a problem without iterating: extreme
/// singular values, rank, optimal weights, predicted contraction factors,
/// and (for small problems) a dense eigenvalue verification.
///
/// Writes `analysis.json`.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<AnalyzeReport> {
    cfg.validate()?;
    let report = match resolve_data(cfg)? {
        ProblemData::Curve(data) => analyze_curve(cfg, data)?,
        ProblemData::Surface(grid) => analyze_surface(cfg, grid)?,
    };
    io::save_json(&out_path(cfg, "analysis.json"), &report)?;
    Ok(report)
}

fn weight_validity(weights: &mlspia::WeightSet, sigma_max: f64) -> (bool, Option<String>) {
    match validate_weights(weights, sigma_max) {
        Ok(()) => (true, None),
        Err(e) => (false, Some(e.to_string())),
    }
}

fn analyze_curve(cfg: &RunConfig, data: PointSet) -> Result<AnalyzeReport> {
    let setup = analyze_curve_setup(cfg, data)?;
    let (basis, spectrum, optimal, weights) = setup;
    let m = basis.nrows();
    let n = basis.ncols();

    let (weights_valid, weights_note) = weight_validity(&weights, spectrum.sigma_max);
    let (eigen_check, eigen_check_note) = if m + n <= ITERATION_MATRIX_CAP {
        if weights_valid {
            (Some(eigencheck::verify_iteration_matrix(&basis, &weights, &spectrum)?), None)
        } else {
            (
                None,
                Some("eigenvalue verification skipped: weights lie outside the convergence region".into()),
            )
        }
    } else {
        (
            None,
            Some(format!(
                "eigenvalue verification skipped: matrix side {} exceeds the diagnostic cap of {}",
                m + n,
                ITERATION_MATRIX_CAP
            )),
        )
    };

    Ok(AnalyzeReport {
        config: cfg.clone(),
        kind: "curve".into(),
        data_count: m,
        control_count: n,
        degree: cfg.degree,
        spectra: vec![SpectralInfo::new("curve", &spectrum)],
        weights: (&weights).into(),
        weights_valid,
        weights_note,
        optimal_weights: (&optimal.weights).into(),
        radius_at_weights: theoretical_radius(&weights, &spectrum.singular_values),
        predicted_radius: optimal.predicted_radius,
        lspia_predicted_radius: optimal.lspia_predicted_radius,
        eigen_check,
        eigen_check_note,
    })
}

/// The analyze path rebuilds the basis directly (no problem construction)
/// so out-of-region weights can still be analyzed instead of rejected.
type CurveAnalysis =
    (mlspia::CollocationMatrix, SpectralSummary, mlspia::OptimalWeights, mlspia::WeightSet);

fn analyze_curve_setup(cfg: &RunConfig, data: PointSet) -> Result<CurveAnalysis> {
    let n = cfg
        .ctrl
        .ok_or_else(|| CliError::Config("--ctrl is required to analyze a curve".into()))?;
    let params = mlspia::chord_params(&data)?;
    let knots = mlspia::make_knots(&params, n, cfg.degree)?;
    let basis = mlspia::collocate(&knots, &params)?;
    let spectrum = mlspia::extreme_singular_values(&basis, mlspia::DEFAULT_RANK_TOL)?;
    let optimal = mlspia::optimal_weights(&spectrum)?;
    let weights = pipeline::resolve_weights(&cfg.weights, &optimal);
    Ok((basis, spectrum, optimal, weights))
}

fn analyze_surface(cfg: &RunConfig, data: PointGrid) -> Result<AnalyzeReport> {
    let n1 = cfg
        .ctrl_u
        .ok_or_else(|| CliError::Config("--ctrl-u is required to analyze a surface".into()))?;
    let n2 = cfg
        .ctrl_v
        .ok_or_else(|| CliError::Config("--ctrl-v is required to analyze a surface".into()))?;
    let grid_shape = (data.nrows(), data.ncols());
    let params = mlspia::grid_params(&data)?;
    let knots_u = mlspia::make_knots(&params.u, n1, cfg.degree)?;
    let knots_v = mlspia::make_knots(&params.v, n2, cfg.degree)?;
    let basis_u = mlspia::collocate(&knots_u, &params.u)?;
    let basis_v = mlspia::collocate(&knots_v, &params.v)?;
    let spectrum_u = mlspia::extreme_singular_values(&basis_u, mlspia::DEFAULT_RANK_TOL)?;
    let spectrum_v = mlspia::extreme_singular_values(&basis_v, mlspia::DEFAULT_RANK_TOL)?;
    let optimal = mlspia::optimal_weights_surface(&spectrum_u, &spectrum_v)?;
    let weights = pipeline::resolve_weights(&cfg.weights, &optimal);

    let sigma_max = spectrum_u.sigma_max * spectrum_v.sigma_max;
    let (weights_valid, weights_note) = weight_validity(&weights, sigma_max);
    let products = surface_products(&spectrum_u, &spectrum_v);

    Ok(AnalyzeReport {
        config: cfg.clone(),
        kind: "surface".into(),
        data_count: grid_shape.0 * grid_shape.1,
        control_count: n1 * n2,
        degree: cfg.degree,
        spectra: vec![
            SpectralInfo::new("u", &spectrum_u),
            SpectralInfo::new("v", &spectrum_v),
        ],
        weights: (&weights).into(),
        weights_valid,
        weights_note,
        optimal_weights: (&optimal.weights).into(),
        radius_at_weights: theoretical_radius(&weights, &products),
        predicted_radius: optimal.predicted_radius,
        lspia_predicted_radius: optimal.lspia_predicted_radius,
        eigen_check: None,
        eigen_check_note: Some(
            "eigenvalue verification is available for curve problems only".into(),
        ),
    })
}

/// Runs both init strategies across a ladder of control counts and tabulates
/// the iteration counts.
///
/// Files written: `table1.json`, `table1.csv`.
pub fn cmd_table1(cfg: &RunConfig) -> Result<TableReport> {
    cfg.validate()?;
    let data = require_curve(resolve_data(cfg)?)?;
    let m = data.len();
    let fractions = cfg.table_fractions()?;

    let mut rows = Vec::with_capacity(fractions.len());
    for fraction in fractions {
        let n = fraction.of(m);
        if n <= cfg.degree || n > m {
            return Err(CliError::Config(format!(
                "fraction {fraction} of {m} points gives {n} control points, invalid for degree {}",
                cfg.degree
            )));
        }
        let sub = RunConfig { ctrl: Some(n), ..cfg.clone() };
        let setup = prepare_curve(data.clone(), &sub)?;
        let run_i = setup.problem.run(mlspia::InitStrategy::I)?;
        let run_ii = setup.problem.run(mlspia::InitStrategy::II)?;
        rows.push(TableRow {
            fraction: fraction.to_string(),
            control_count: n,
            strategy_i: TableCell {
                status: run_i.status.into(),
                iterations: run_i.iterations,
                final_error: run_i.final_error(),
            },
            strategy_ii: TableCell {
                status: run_ii.status.into(),
                iterations: run_ii.iterations,
                final_error: run_ii.final_error(),
            },
        });
    }

    let report = TableReport { config: cfg.clone(), data_count: m, degree: cfg.degree, rows };
    io::save_json(&out_path(cfg, "table1.json"), &report)?;
    save_table_csv(&out_path(cfg, "table1.csv"), &report)?;
    Ok(report)
}

fn save_table_csv(path: &Path, report: &TableReport) -> Result<()> {
    let mut text = String::from("fraction,control_count,iterations_I,iterations_II,status_I,status_II\n");
    for row in &report.rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.fraction,
            row.control_count,
            row.strategy_i.iterations,
            row.strategy_ii.iterations,
            row.strategy_i.status.label(),
            row.strategy_ii.status.label(),
        ));
    }
    io::write_atomic(path, &text)
}

/// Writes a built-in example dataset to the output directory and returns the
/// file path.
pub fn cmd_generate(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let name = cfg
        .example
        .ok_or_else(|| CliError::Config("--example is required to generate data".into()))?;
    let as_surface = datagen::is_surface(name) || cfg.grid.is_some();
    if as_surface {
        let size = cfg.grid.unwrap_or_else(|| datagen::default_grid(name));
        let grid = datagen::gen_surface(name, size, cfg.seed)?;
        let path = out_path(cfg, &format!("{name}-{size}.json"));
        io::save_grid_json(&path, &grid)?;
        Ok(path)
    } else {
        let m = cfg.points.unwrap_or_else(|| datagen::default_points(name));
        let pts = datagen::gen_curve(name, m, cfg.seed)?;
        let path = out_path(cfg, &format!("{name}-{m}.csv"));
        io::save_points_csv(&path, &pts.rows())?;
        Ok(path)
    }
}
