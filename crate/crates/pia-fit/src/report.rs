use serde::{Deserialize, Serialize};

use mlspia::{ConvergenceRecord, RunStatus, SpectralSummary, WeightSet};

use crate::config::RunConfig;
use crate::eigencheck::EigenCheck;

/// JSON-safe serialization for floats that may be non-finite.
///
/// JSON has no NaN or infinity literal, so non-finite values are written as
/// `null` and read back as NaN. Only fields that can legitimately go
/// non-finite (error metrics of diverged runs) use this.
pub mod maybe_finite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            ser.serialize_f64(*value)
        } else {
            ser.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::NAN))
    }
}

/// How a run ended, as reported and encoded in the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportStatus {
    Converged,
    MaxIterations,
    Diverged,
}

impl From<RunStatus> for ReportStatus {
    fn from(status: RunStatus) -> Self {
        match status {
            RunStatus::Converged => ReportStatus::Converged,
            RunStatus::MaxIterations => ReportStatus::MaxIterations,
            RunStatus::Diverged => ReportStatus::Diverged,
        }
    }
}

impl ReportStatus {
    /// Process exit code for this outcome.
    pub fn exit_code(self) -> i32 {
        match self {
            ReportStatus::Converged => 0,
            ReportStatus::MaxIterations => 2,
            ReportStatus::Diverged => 3,
        }
    }

    /// The more severe of two outcomes.
    pub fn worst(self, other: Self) -> Self {
        self.max(other)
    }

    pub fn label(self) -> &'static str {
        match self {
            ReportStatus::Converged => "converged",
            ReportStatus::MaxIterations => "max-iterations",
            ReportStatus::Diverged => "diverged",
        }
    }
}

/// Spectral facts about one collocation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralInfo {
    /// Which factor this describes: `curve`, `u`, or `v`.
    pub direction: String,
    pub rank: usize,
    pub sigma_max: f64,
    pub sigma_min_pos: f64,
    pub rank_tolerance: f64,
    /// All retained singular values, descending.
    pub singular_values: Vec<f64>,
}

impl SpectralInfo {
    pub fn new(direction: &str, summary: &SpectralSummary) -> Self {
        SpectralInfo {
            direction: direction.into(),
            rank: summary.rank,
            sigma_max: summary.sigma_max,
            sigma_min_pos: summary.sigma_min_pos,
            rank_tolerance: summary.rank_tolerance,
            singular_values: summary.singular_values.clone(),
        }
    }
}

/// Iteration weights as they appear in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightsInfo {
    pub omega: f64,
    pub gamma: f64,
    pub upsilon: f64,
    /// Step size of the single-weight method, when known.
    pub mu: Option<f64>,
}

impl From<&WeightSet> for WeightsInfo {
    fn from(w: &WeightSet) -> Self {
        WeightsInfo { omega: w.omega, gamma: w.gamma, upsilon: w.upsilon, mu: w.mu }
    }
}

/// One step of the convergence history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    #[serde(with = "maybe_finite")]
    pub error: f64,
    pub max_displacement: f64,
    pub seconds: f64,
}

impl From<&ConvergenceRecord> for HistoryEntry {
    fn from(r: &ConvergenceRecord) -> Self {
        HistoryEntry {
            step: r.step,
            error: r.error,
            max_displacement: r.max_displacement,
            seconds: r.elapsed.as_secs_f64(),
        }
    }
}

/// Full record of a fitting run; self-contained for reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// The exact configuration that produced this report.
    pub config: RunConfig,
    /// `curve` or `surface`.
    pub kind: String,
    /// Number of data points (total, for grids).
    pub data_count: usize,
    /// Grid shape for surfaces.
    pub grid_shape: Option<(usize, usize)>,
    /// Number of control points (total, for nets).
    pub control_count: usize,
    /// Control-net shape for surfaces.
    pub control_shape: Option<(usize, usize)>,
    pub degree: usize,
    pub spectra: Vec<SpectralInfo>,
    /// Weights the run actually used.
    pub weights_used: WeightsInfo,
    /// Spectrally optimal weights for this problem.
    pub optimal_weights: WeightsInfo,
    /// Predicted contraction factor of the two-weight method at `weights_used`.
    pub predicted_radius: f64,
    /// Predicted contraction factor of the single-weight method at its optimum.
    pub lspia_predicted_radius: f64,
    pub status: ReportStatus,
    pub iterations: usize,
    #[serde(with = "maybe_finite")]
    pub final_error: f64,
    /// Largest geometric distance to the directly solved least-squares fit,
    /// sampled densely; absent when the run did not converge or the problem
    /// is rank-deficient (where the limit is initialization-dependent).
    pub max_deviation_vs_direct: Option<f64>,
    pub wall_seconds: f64,
    pub history: Vec<HistoryEntry>,
    /// Whether the final control points are all finite.
    pub control_finite: bool,
    /// Final control points, row-major; empty when not finite.
    pub control_points: Vec<Vec<f64>>,
}

/// One method's outcome inside a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub status: ReportStatus,
    pub iterations: usize,
    #[serde(with = "maybe_finite")]
    pub final_error: f64,
    /// Mean wall-clock seconds over the timing repeats.
    pub mean_seconds: f64,
}

/// Side-by-side run of the two-weight and single-weight methods on one
/// problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: RunConfig,
    pub kind: String,
    pub data_count: usize,
    pub control_count: usize,
    pub degree: usize,
    pub spectra: Vec<SpectralInfo>,
    /// Weights used by the two-weight method.
    pub mlspia_weights: WeightsInfo,
    /// Step size used by the single-weight method.
    pub lspia_mu: f64,
    pub predicted_radius: f64,
    pub lspia_predicted_radius: f64,
    /// How many timed repeats the mean timings cover.
    pub timing_runs: usize,
    pub mlspia: MethodOutcome,
    pub lspia: MethodOutcome,
    /// Largest geometric distance between the two fitted limits, when both
    /// runs converged.
    pub max_deviation_between_limits: Option<f64>,
}

/// Spectral analysis of a problem without running any iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub config: RunConfig,
    pub kind: String,
    pub data_count: usize,
    pub control_count: usize,
    pub degree: usize,
    pub spectra: Vec<SpectralInfo>,
    /// Weights the analysis evaluated (the configured ones).
    pub weights: WeightsInfo,
    /// Whether `weights` lie inside the convergence region.
    pub weights_valid: bool,
    /// The violated inequality, when they do not.
    pub weights_note: Option<String>,
    pub optimal_weights: WeightsInfo,
    /// Contraction factor at `weights`, from the closed-form eigenvalues.
    pub radius_at_weights: f64,
    /// Contraction factor at the optimal weights.
    pub predicted_radius: f64,
    pub lspia_predicted_radius: f64,
    /// Dense verification that the closed-form eigenvalues annihilate the
    /// iteration matrix; skipped (with a note) for large problems.
    pub eigen_check: Option<EigenCheck>,
    pub eigen_check_note: Option<String>,
}

/// One strategy-comparison cell: a run at a fixed control count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub status: ReportStatus,
    pub iterations: usize,
    #[serde(with = "maybe_finite")]
    pub final_error: f64,
}

/// One control-count column of the strategy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    /// The fraction of the data count, as configured (e.g. `1/8`).
    pub fraction: String,
    pub control_count: usize,
    pub strategy_i: TableCell,
    pub strategy_ii: TableCell,
}

/// Initialization-strategy comparison across control counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub config: RunConfig,
    pub data_count: usize,
    pub degree: usize,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    /// The most severe status across all cells.
    pub fn worst_status(&self) -> ReportStatus {
        self.rows.iter().fold(ReportStatus::Converged, |acc, row| {
            acc.worst(row.strategy_i.status).worst(row.strategy_ii.status)
        })
    }
}
