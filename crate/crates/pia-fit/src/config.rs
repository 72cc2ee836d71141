use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Default spline degree for all commands.
pub const DEFAULT_DEGREE: usize = 3;
/// Default sample count for curve plots and deviation output files.
pub const DEFAULT_CURVE_SAMPLES: usize = 512;
/// Default per-direction sample count for surface plot files.
pub const DEFAULT_SURFACE_SAMPLES: usize = 64;
/// Default output directory.
pub const DEFAULT_OUT_DIR: &str = "pia-out";
/// Control-count fractions used by the strategy comparison table.
pub const DEFAULT_TABLE_FRACTIONS: [&str; 7] =
    ["1/12", "1/10", "1/8", "1/6", "1/4", "1/2", "2/3"];

/// Which subcommand produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    FitCurve,
    FitSurface,
    Compare,
    Analyze,
    Table1,
    Generate,
}

/// On-disk input formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// Point-per-line CSV, `x,y` or `x,y,z`.
    Csv,
    /// Grid JSON: `{"rows": m1, "cols": m2, "points": [[x,y,z], ...]}`.
    Json,
}

/// Built-in synthetic datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleName {
    /// Closed symmetric airfoil-style profile with cosine x-spacing.
    AirfoilLike,
    /// Wavy closed polar curve, `r = 1 + 0.25 cos 3t + 0.08 sin 7t`.
    IncenterLike,
    /// Four-petal rose, `r = sin(t/4)` over two full turns.
    PolarSin4,
    /// Open glyph-style outline: a circular arc joined to a straight stroke.
    GfontLike,
    /// Smooth multi-bump height field sampled on a grid.
    FaceLike,
    /// Seeded uniform draws in `[-1, 1]` per coordinate.
    Random,
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ExampleName::AirfoilLike => "airfoil-like",
            ExampleName::IncenterLike => "incenter-like",
            ExampleName::PolarSin4 => "polar-sin4",
            ExampleName::GfontLike => "gfont-like",
            ExampleName::FaceLike => "face-like",
            ExampleName::Random => "random",
        };
        f.write_str(name)
    }
}

/// Initialization strategy names as they appear on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum InitName {
    /// Zero initial control points.
    #[value(name = "I", alias = "i")]
    #[serde(rename = "I")]
    I,
    /// Initial control points subsampled from the data.
    #[value(name = "II", alias = "ii")]
    #[serde(rename = "II")]
    II,
}

impl fmt::Display for InitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitName::I => "I",
            InitName::II => "II",
        })
    }
}

/// How iteration weights are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum WeightMode {
    /// Spectrally optimal weights computed from the collocation matrix.
    Optimal,
    /// Explicit weights; `mu` is only consulted by the single-weight method.
    Manual { omega: f64, gamma: f64, upsilon: f64, mu: Option<f64> },
}

/// A surface grid size, written `ROWSxCOLS` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for GridSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (r, c) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected ROWSxCOLS, got '{s}'"))?;
        let rows = r.trim().parse().map_err(|_| format!("bad row count '{r}'"))?;
        let cols = c.trim().parse().map_err(|_| format!("bad column count '{c}'"))?;
        Ok(GridSize { rows, cols })
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// A control-count fraction such as `1/8` or `2/3` of the data count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: usize,
    pub den: usize,
}

impl Fraction {
    /// The control count this fraction selects for `m` data points.
    pub fn of(&self, m: usize) -> usize {
        m * self.num / self.den
    }
}

impl FromStr for Fraction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| format!("expected NUM/DEN, got '{s}'"))?;
        let num = n.trim().parse().map_err(|_| format!("bad numerator '{n}'"))?;
        let den = d.trim().parse().map_err(|_| format!("bad denominator '{d}'"))?;
        if num == 0 || den == 0 {
            return Err(format!("fraction '{s}' must have positive parts"));
        }
        Ok(Fraction { num, den })
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Everything a run depends on, echoed verbatim into every report.
///
/// Re-running a command from the `config` block of its report reproduces all
/// deterministic outputs (iteration counts, errors, control points); only
/// wall-clock fields differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    /// Input file, mutually exclusive with `example`.
    pub input: Option<PathBuf>,
    /// Input format override; inferred from the extension when absent.
    pub format: Option<DataFormat>,
    /// Built-in dataset, mutually exclusive with `input`.
    pub example: Option<ExampleName>,
    /// Point count for generated curve data.
    pub points: Option<usize>,
    /// Grid size for generated surface data.
    pub grid: Option<GridSize>,
    /// Seed for the `random` example generator.
    pub seed: u64,
    pub degree: usize,
    /// Control-point count for curves.
    pub ctrl: Option<usize>,
    /// Control-net rows for surfaces.
    pub ctrl_u: Option<usize>,
    /// Control-net columns for surfaces.
    pub ctrl_v: Option<usize>,
    pub weights: WeightMode,
    pub init: InitName,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sample count for plot files (per direction for surfaces).
    pub samples: usize,
    /// Control-count fractions for the strategy table.
    pub fractions: Option<Vec<String>>,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Rejects values no command can work with.
    pub fn validate(&self) -> Result<()> {
        if self.input.is_some() && self.example.is_some() {
            return Err(CliError::Config(
                "give either --input or --example, not both".into(),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(CliError::Config(format!(
                "--tol must be a positive finite number, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(CliError::Config("--max-iters must be at least 1".into()));
        }
        if self.samples < 2 {
            return Err(CliError::Config(format!(
                "--samples must be at least 2, got {}",
                self.samples
            )));
        }
        if self.degree == 0 {
            return Err(CliError::Config("--degree must be at least 1".into()));
        }
        Ok(())
    }

    /// Parses the configured fractions, falling back to the default table.
    pub fn table_fractions(&self) -> Result<Vec<Fraction>> {
        let texts: Vec<String> = match &self.fractions {
            Some(list) => list.clone(),
            None => DEFAULT_TABLE_FRACTIONS.iter().map(|s| s.to_string()).collect(),
        };
        if texts.is_empty() {
            return Err(CliError::Config("--fractions must name at least one fraction".into()));
        }
        texts
            .iter()
            .map(|t| t.parse().map_err(|e: String| CliError::Config(e)))
            .collect()
    }
}
