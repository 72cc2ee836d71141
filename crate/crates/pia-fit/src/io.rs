use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mlspia::{ConvergenceRecord, CurvatureSample, PointGrid, PointSet};

use crate::config::DataFormat;
use crate::error::{CliError, Result};

/// Data loaded from disk, shaped as either a point list or a grid.
#[derive(Debug, Clone)]
pub enum LoadedData {
    Curve(PointSet),
    Surface(PointGrid),
}

/// Serialized form of a surface grid file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[x, y, z]` triples, `rows * cols` of them.
    pub points: Vec<Vec<f64>>,
}

/// Formats a float with 17 significant digits, enough to reparse exactly.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Guesses the input format from the file extension.
pub fn infer_format(path: &Path) -> Result<DataFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => Ok(DataFormat::Csv),
        Some("json") => Ok(DataFormat::Json),
        _ => Err(CliError::Config(format!(
            "cannot infer the format of '{}'; pass --format csv or --format json",
            path.display()
        ))),
    }
}

/// Loads curve points (CSV) or a surface grid (JSON) from `path`.
pub fn load_points(path: &Path, format: Option<DataFormat>) -> Result<LoadedData> {
    let format = match format {
        Some(f) => f,
        None => infer_format(path)?,
    };
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    match format {
        DataFormat::Csv => parse_points_csv(path, &text).map(LoadedData::Curve),
        DataFormat::Json => parse_grid_json(path, &text).map(LoadedData::Surface),
    }
}

fn parse_points_csv(path: &Path, text: &str) -> Result<PointSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for field in trimmed.split(',') {
            let field = field.trim();
            let value: f64 = field.parse().map_err(|_| CliError::Parse {
                path: path.into(),
                line: line_no,
                message: format!("cannot parse '{field}' as a number"),
            })?;
            row.push(value);
        }
        if row.len() < 2 || row.len() > 3 {
            return Err(CliError::Parse {
                path: path.into(),
                line: line_no,
                message: format!("expected 2 or 3 coordinates, found {}", row.len()),
            });
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: line_no,
                    message: format!(
                        "row has {} coordinates but earlier rows have {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Parse {
            path: path.into(),
            line: 1,
            message: "file contains no data rows".into(),
        });
    }
    PointSet::from_rows(&rows).map_err(CliError::from)
}

fn parse_grid_json(path: &Path, text: &str) -> Result<PointGrid> {
    let file: GridFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.into(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if file.rows == 0 || file.cols == 0 {
        return Err(CliError::Config(format!(
            "grid file '{}' declares an empty {}x{} grid",
            path.display(),
            file.rows,
            file.cols
        )));
    }
    if file.points.len() != file.rows * file.cols {
        return Err(CliError::Config(format!(
            "grid file '{}' declares {}x{} = {} points but contains {}",
            path.display(),
            file.rows,
            file.cols,
            file.rows * file.cols,
            file.points.len()
        )));
    }
    for (idx, point) in file.points.iter().enumerate() {
        if point.len() != 3 {
            return Err(CliError::Config(format!(
                "grid file '{}': point {} (row {}, column {}) has {} coordinates, expected 3",
                path.display(),
                idx,
                idx / file.cols,
                idx % file.cols,
                point.len()
            )));
        }
    }
    PointGrid::from_rows(file.rows, file.cols, &file.points).map_err(CliError::from)
}

/// Writes `contents` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::io(dir))?;
    tmp.write_all(contents.as_bytes()).map_err(CliError::io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.into(), source: e.error })?;
    Ok(())
}

/// Serializes `value` as pretty JSON and writes it atomically.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    text.push('\n');
    write_atomic(path, &text)
}

/// Writes point rows as headerless CSV at full float precision.
pub fn save_points_csv(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        let fields: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    write_atomic(path, &text)
}

/// Writes a surface grid in the JSON grid format.
pub fn save_grid_json(path: &Path, grid: &PointGrid) -> Result<()> {
    let file = GridFile {
        rows: grid.nrows(),
        cols: grid.ncols(),
        points: grid.points_row_major(),
    };
    save_json(path, &file)
}

/// Writes the convergence history as `k,E_k` rows.
pub fn save_history_csv(path: &Path, history: &[ConvergenceRecord]) -> Result<()> {
    let mut text = String::from("k,E_k\n");
    for record in history {
        text.push_str(&format!("{},{}\n", record.step, format_float(record.error)));
    }
    write_atomic(path, &text)
}

/// Writes sampled rows prefixed with their parameters under a header line.
pub fn save_samples_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        let fields: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        text.push_str(&fields.join(","));
        text.push('\n');
    }
    write_atomic(path, &text)
}

/// Writes curvature samples as `t,kappa`, leaving kappa empty where the
/// curve has no defined curvature.
pub fn save_curvature_csv(path: &Path, samples: &[CurvatureSample]) -> Result<()> {
    let mut text = String::from("t,kappa\n");
    for sample in samples {
        let kappa = sample.curvature.map(format_float).unwrap_or_default();
        text.push_str(&format!("{},{kappa}\n", format_float(sample.t)));
    }
    write_atomic(path, &text)
}
