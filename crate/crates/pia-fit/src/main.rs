use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pia_fit::commands;
use pia_fit::config::{
    DataFormat, ExampleName, GridSize, InitName, Mode, RunConfig, WeightMode,
    DEFAULT_CURVE_SAMPLES, DEFAULT_DEGREE, DEFAULT_OUT_DIR, DEFAULT_SURFACE_SAMPLES,
};
use pia_fit::error::{CliError, Result};
use pia_fit::report::{AnalyzeReport, CompareReport, FitReport, TableReport};

#[derive(Parser)]
#[command(
    name = "pia-fit",
    version,
    about = "Least-squares B-spline fitting by progressive-iterative approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a B-spline curve to a point list
    FitCurve(FitCurveArgs),
    /// Fit a tensor-product B-spline surface to a grid
    FitSurface(FitSurfaceArgs),
    /// Run the two-weight and the single-weight method side by side
    Compare(CompareArgs),
    /// Report the spectral picture of a problem without iterating
    Analyze(AnalyzeArgs),
    /// Tabulate both init strategies across a ladder of control counts
    Table1(TableArgs),
    /// Write a built-in example dataset to disk
    Generate(GenerateArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input data file: CSV points `x,y[,z]` or grid JSON
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Input format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    format: Option<DataFormat>,
    /// Built-in example dataset, instead of --input
    #[arg(long, value_enum)]
    example: Option<ExampleName>,
    /// Point count for generated curve examples
    #[arg(long, value_name = "M")]
    points: Option<usize>,
    /// Grid size for generated surface examples, e.g. 41x41
    #[arg(long, value_name = "RxC")]
    grid: Option<GridSize>,
    /// Seed for the random example generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightChoice {
    /// Spectrally optimal weights computed from the collocation matrix
    Optimal,
    /// Explicit --omega/--gamma/--upsilon (and optionally --mu)
    Manual,
}

#[derive(Args)]
struct WeightArgs {
    /// How to choose the iteration weights
    #[arg(long, value_enum, default_value_t = WeightChoice::Optimal)]
    weights: WeightChoice,
    /// Relaxation weight omega (with --weights manual)
    #[arg(long)]
    omega: Option<f64>,
    /// Memory weight gamma (with --weights manual)
    #[arg(long)]
    gamma: Option<f64>,
    /// Gradient weight upsilon (with --weights manual)
    #[arg(long)]
    upsilon: Option<f64>,
    /// Step size of the single-weight method (with --weights manual)
    #[arg(long)]
    mu: Option<f64>,
}

impl WeightArgs {
    fn to_mode(&self) -> Result<WeightMode> {
        match self.weights {
            WeightChoice::Optimal => {
                if self.omega.is_some()
                    || self.gamma.is_some()
                    || self.upsilon.is_some()
                    || self.mu.is_some()
                {
                    return Err(CliError::Config(
                        "--omega/--gamma/--upsilon/--mu require --weights manual".into(),
                    ));
                }
                Ok(WeightMode::Optimal)
            }
            WeightChoice::Manual => {
                let need = |name: &str, v: Option<f64>| {
                    v.ok_or_else(|| {
                        CliError::Config(format!("--{name} is required with --weights manual"))
                    })
                };
                Ok(WeightMode::Manual {
                    omega: need("omega", self.omega)?,
                    gamma: need("gamma", self.gamma)?,
                    upsilon: need("upsilon", self.upsilon)?,
                    mu: self.mu,
                })
            }
        }
    }
}

#[derive(Args)]
struct IterArgs {
    /// Spline degree
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    /// Initialization strategy
    #[arg(long, value_enum, default_value_t = InitName::II)]
    init: InitName,
    /// Convergence tolerance on the error metric E_k
    #[arg(long, default_value_t = mlspia::DEFAULT_TOLERANCE)]
    tol: f64,
    /// Iteration cap
    #[arg(long, default_value_t = mlspia::DEFAULT_MAX_ITERATIONS)]
    max_iters: usize,
    /// Sample count for plot files (per direction for surfaces)
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitCurveArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Control-point count
    #[arg(long, value_name = "N")]
    ctrl: Option<usize>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args)]
struct FitSurfaceArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Control-net rows
    #[arg(long, value_name = "N1")]
    ctrl_u: Option<usize>,
    /// Control-net columns
    #[arg(long, value_name = "N2")]
    ctrl_v: Option<usize>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Control-point count (curves)
    #[arg(long, value_name = "N")]
    ctrl: Option<usize>,
    /// Control-net rows (surfaces)
    #[arg(long, value_name = "N1")]
    ctrl_u: Option<usize>,
    /// Control-net columns (surfaces)
    #[arg(long, value_name = "N2")]
    ctrl_v: Option<usize>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Control-point count (curves)
    #[arg(long, value_name = "N")]
    ctrl: Option<usize>,
    /// Control-net rows (surfaces)
    #[arg(long, value_name = "N1")]
    ctrl_u: Option<usize>,
    /// Control-net columns (surfaces)
    #[arg(long, value_name = "N2")]
    ctrl_v: Option<usize>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Control-count fractions of the data count, comma separated
    #[arg(long, value_delimiter = ',', value_name = "NUM/DEN")]
    fractions: Option<Vec<String>>,
    #[command(flatten)]
    weights: WeightArgs,
    #[command(flatten)]
    iter: IterArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output directory
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    out_dir: PathBuf,
}

fn build_config(
    mode: Mode,
    data: DataArgs,
    weights: WeightMode,
    iter: IterArgs,
    default_samples: usize,
) -> RunConfig {
    RunConfig {
        mode,
        input: data.input,
        format: data.format,
        example: data.example,
        points: data.points,
        grid: data.grid,
        seed: data.seed,
        degree: iter.degree,
        ctrl: None,
        ctrl_u: None,
        ctrl_v: None,
        weights,
        init: iter.init,
        tolerance: iter.tol,
        max_iterations: iter.max_iters,
        samples: iter.samples.unwrap_or(default_samples),
        fractions: None,
        out_dir: iter.out_dir,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::FitCurve(args) => {
            let weights = args.weights.to_mode()?;
            let mut cfg =
                build_config(Mode::FitCurve, args.data, weights, args.iter, DEFAULT_CURVE_SAMPLES);
            cfg.ctrl = args.ctrl;
            let report = commands::cmd_fit_curve(&cfg)?;
            print_fit(&cfg, &report);
            Ok(report.status.exit_code())
        }
        Command::FitSurface(args) => {
            let weights = args.weights.to_mode()?;
            let mut cfg = build_config(
                Mode::FitSurface,
                args.data,
                weights,
                args.iter,
                DEFAULT_SURFACE_SAMPLES,
            );
            cfg.ctrl_u = args.ctrl_u;
            cfg.ctrl_v = args.ctrl_v;
            let report = commands::cmd_fit_surface(&cfg)?;
            print_fit(&cfg, &report);
            Ok(report.status.exit_code())
        }
        Command::Compare(args) => {
            let weights = args.weights.to_mode()?;
            let mut cfg =
                build_config(Mode::Compare, args.data, weights, args.iter, DEFAULT_CURVE_SAMPLES);
            cfg.ctrl = args.ctrl;
            cfg.ctrl_u = args.ctrl_u;
            cfg.ctrl_v = args.ctrl_v;
            let report = commands::cmd_compare(&cfg)?;
            print_compare(&cfg, &report);
            Ok(report.mlspia.status.worst(report.lspia.status).exit_code())
        }
        Command::Analyze(args) => {
            let weights = args.weights.to_mode()?;
            let mut cfg =
                build_config(Mode::Analyze, args.data, weights, args.iter, DEFAULT_CURVE_SAMPLES);
            cfg.ctrl = args.ctrl;
            cfg.ctrl_u = args.ctrl_u;
            cfg.ctrl_v = args.ctrl_v;
            let report = commands::cmd_analyze(&cfg)?;
            print_analyze(&cfg, &report);
            Ok(0)
        }
        Command::Table1(args) => {
            let weights = args.weights.to_mode()?;
            let mut cfg =
                build_config(Mode::Table1, args.data, weights, args.iter, DEFAULT_CURVE_SAMPLES);
            cfg.fractions = args.fractions;
            let report = commands::cmd_table1(&cfg)?;
            print_table(&cfg, &report);
            Ok(report.worst_status().exit_code())
        }
        Command::Generate(args) => {
            let cfg = RunConfig {
                mode: Mode::Generate,
                input: None,
                format: None,
                example: args.data.example,
                points: args.data.points,
                grid: args.data.grid,
                seed: args.data.seed,
                degree: DEFAULT_DEGREE,
                ctrl: None,
                ctrl_u: None,
                ctrl_v: None,
                weights: WeightMode::Optimal,
                init: InitName::II,
                tolerance: mlspia::DEFAULT_TOLERANCE,
                max_iterations: mlspia::DEFAULT_MAX_ITERATIONS,
                samples: DEFAULT_CURVE_SAMPLES,
                fractions: None,
                out_dir: args.out_dir,
            };
            if args.data.input.is_some() {
                return Err(CliError::Config("generate takes --example, not --input".into()));
            }
            let path = commands::cmd_generate(&cfg)?;
            println!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn print_weights(label: &str, w: &pia_fit::report::WeightsInfo) {
    let mu = w.mu.map(|m| format!(", mu = {m:.12}")).unwrap_or_default();
    println!(
        "{label}: omega = {:.12}, gamma = {:.12}, upsilon = {:.12}{mu}",
        w.omega, w.gamma, w.upsilon
    );
}

fn print_fit(cfg: &RunConfig, report: &FitReport) {
    let shape = match report.control_shape {
        Some((a, b)) => format!("{a}x{b} control net"),
        None => format!("{} control points", report.control_count),
    };
    println!("{}: {} data points, {shape}, degree {}", report.kind, report.data_count, report.degree);
    print_weights("weights", &report.weights_used);
    println!(
        "predicted contraction factor {:.6} (single-weight optimum would give {:.6})",
        report.predicted_radius, report.lspia_predicted_radius
    );
    println!(
        "{} after {} iterations, E = {:.6e} ({:.3} s)",
        report.status.label(),
        report.iterations,
        report.final_error,
        report.wall_seconds
    );
    if let Some(dev) = report.max_deviation_vs_direct {
        println!("max deviation from the direct least-squares fit: {dev:.6e}");
    }
    println!("wrote {}", cfg.out_dir.join("report.json").display());
}

fn print_compare(cfg: &RunConfig, report: &CompareReport) {
    println!(
        "{}: {} data points, {} control points, degree {}",
        report.kind, report.data_count, report.control_count, report.degree
    );
    print_weights("two-weight method", &report.mlspia_weights);
    println!("single-weight method: mu = {:.12}", report.lspia_mu);
    println!(
        "two-weight:    {} after {} iterations, E = {:.6e}, mean {:.4} s over {} runs",
        report.mlspia.status.label(),
        report.mlspia.iterations,
        report.mlspia.final_error,
        report.mlspia.mean_seconds,
        report.timing_runs
    );
    println!(
        "single-weight: {} after {} iterations, E = {:.6e}, mean {:.4} s over {} runs",
        report.lspia.status.label(),
        report.lspia.iterations,
        report.lspia.final_error,
        report.lspia.mean_seconds,
        report.timing_runs
    );
    if let Some(dev) = report.max_deviation_between_limits {
        println!("max deviation between the two limits: {dev:.6e}");
    }
    println!("wrote {}", cfg.out_dir.join("compare.json").display());
}

fn print_analyze(cfg: &RunConfig, report: &AnalyzeReport) {
    println!(
        "{}: {} data points, {} control points, degree {}",
        report.kind, report.data_count, report.control_count, report.degree
    );
    for s in &report.spectra {
        println!(
            "spectrum ({}): rank {}, sigma_max = {:.12}, sigma_min = {:.12}",
            s.direction, s.rank, s.sigma_max, s.sigma_min_pos
        );
    }
    print_weights("optimal weights", &report.optimal_weights);
    println!(
        "predicted contraction factor {:.6} (single-weight optimum {:.6})",
        report.predicted_radius, report.lspia_predicted_radius
    );
    if !report.weights_valid {
        let note = report.weights_note.as_deref().unwrap_or("outside the convergence region");
        println!("configured weights are invalid: {note}");
    } else if report.radius_at_weights != report.predicted_radius {
        println!("contraction factor at the configured weights: {:.6}", report.radius_at_weights);
    }
    match (&report.eigen_check, &report.eigen_check_note) {
        (Some(check), _) => println!(
            "eigenvalue check: {} claims against a {}x{} matrix, max |det(H - lambda I)| = {:.3e}",
            check.eigenvalues_checked, check.matrix_size, check.matrix_size, check.max_scaled_residual
        ),
        (None, Some(note)) => println!("{note}"),
        (None, None) => {}
    }
    println!("wrote {}", cfg.out_dir.join("analysis.json").display());
}

fn print_table(cfg: &RunConfig, report: &TableReport) {
    println!("{} data points, degree {}", report.data_count, report.degree);
    println!("fraction  control  iterations(I)  iterations(II)");
    for row in &report.rows {
        println!(
            "{:<9} {:<8} {:<14} {:<14}",
            row.fraction, row.control_count, row.strategy_i.iterations, row.strategy_ii.iterations
        );
    }
    println!("wrote {}", cfg.out_dir.join("table1.json").display());
}
