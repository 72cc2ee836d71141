use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mlspia::{PointGrid, PointSet};

use crate::config::{ExampleName, GridSize};
use crate::error::{CliError, Result};

/// Fewest data points any generated example supports.
pub const MIN_EXAMPLE_POINTS: usize = 4;

/// Default point count for each curve example.
pub fn default_points(name: ExampleName) -> usize {
    match name {
        ExampleName::AirfoilLike => 205,
        ExampleName::IncenterLike => 305,
        ExampleName::PolarSin4 => 501,
        ExampleName::GfontLike => 269,
        ExampleName::FaceLike | ExampleName::Random => 200,
    }
}

/// Default grid size for each surface example.
pub fn default_grid(name: ExampleName) -> GridSize {
    match name {
        ExampleName::FaceLike => GridSize { rows: 81, cols: 81 },
        _ => GridSize { rows: 33, cols: 33 },
    }
}

/// Whether the example is inherently a surface.
pub fn is_surface(name: ExampleName) -> bool {
    matches!(name, ExampleName::FaceLike)
}

fn check_count(name: ExampleName, m: usize) -> Result<()> {
    if m < MIN_EXAMPLE_POINTS {
        return Err(CliError::Config(format!(
            "example '{name}' needs at least {MIN_EXAMPLE_POINTS} points, got {m}"
        )));
    }
    Ok(())
}

/// Generates `m` points of a curve example. `seed` only affects `random`.
pub fn gen_curve(name: ExampleName, m: usize, seed: u64) -> Result<PointSet> {
    check_count(name, m)?;
    let rows = match name {
        ExampleName::PolarSin4 => polar_sin4(m),
        ExampleName::AirfoilLike => airfoil_like(m),
        ExampleName::IncenterLike => incenter_like(m),
        ExampleName::GfontLike => gfont_like(m),
        ExampleName::Random => random_curve(m, seed),
        ExampleName::FaceLike => {
            return Err(CliError::Config(
                "example 'face-like' is a surface; use fit-surface or --grid".into(),
            ));
        }
    };
    PointSet::from_rows(&rows).map_err(CliError::from)
}

/// Generates a surface example on a `size.rows` x `size.cols` grid.
pub fn gen_surface(name: ExampleName, size: GridSize, seed: u64) -> Result<PointGrid> {
    check_count(name, size.rows)?;
    check_count(name, size.cols)?;
    let rows = match name {
        ExampleName::FaceLike => face_like(size),
        ExampleName::Random => random_surface(size, seed),
        other => {
            return Err(CliError::Config(format!(
                "example '{other}' is a curve; use fit-curve or --points"
            )));
        }
    };
    PointGrid::from_rows(size.rows, size.cols, &rows).map_err(CliError::from)
}

/// Four-petal rose `r = sin(theta/4)` sampled at `theta_i = 8 pi i/(m-1)`.
fn polar_sin4(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let theta = 8.0 * PI * i as f64 / (m - 1) as f64;
            let r = (theta / 4.0).sin();
            vec![r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

/// Symmetric four-digit-style thickness profile over a unit chord.
fn airfoil_thickness(x: f64) -> f64 {
    0.6 * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3)
        - 0.1015 * x.powi(4))
}

/// Closed airfoil-style outline: trailing edge over the top to the leading
/// edge and back underneath, with cosine spacing that clusters samples at
/// both ends.
fn airfoil_like(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / (m - 1) as f64;
            let x = (1.0 + phi.cos()) / 2.0;
            let sign = if phi <= PI { 1.0 } else { -1.0 };
            vec![x, sign * airfoil_thickness(x)]
        })
        .collect()
}

/// Wavy closed polar curve with three lobes and a mild high-frequency ripple.
fn incenter_like(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / (m - 1) as f64;
            let r = 1.0 + 0.25 * (3.0 * theta).cos() + 0.08 * (7.0 * theta).sin();
            vec![r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

/// Open glyph-style outline: three quarters of the points trace a long
/// circular arc, the rest a straight stroke into the opening.
fn gfont_like(m: usize) -> Vec<Vec<f64>> {
    let arc_count = (3 * m / 4).max(3);
    let seg_count = m - arc_count;
    let start = PI / 4.0;
    let end = 2.0 * PI - PI / 6.0;
    let mut rows: Vec<Vec<f64>> = (0..arc_count)
        .map(|i| {
            let theta = start + (end - start) * i as f64 / (arc_count - 1) as f64;
            vec![theta.cos(), theta.sin()]
        })
        .collect();
    let last = rows.last().expect("arc has points").clone();
    let target = [0.3, -0.5];
    for k in 1..=seg_count {
        let t = k as f64 / seg_count as f64;
        rows.push(vec![
            last[0] + (target[0] - last[0]) * t,
            last[1] + (target[1] - last[1]) * t,
        ]);
    }
    rows
}

/// Smooth standard test height field: three bumps and a dip over [0, 1]^2.
fn bump_field(x: f64, y: f64) -> f64 {
    0.75 * (-((9.0 * x - 2.0).powi(2) + (9.0 * y - 2.0).powi(2)) / 4.0).exp()
        + 0.75 * (-(9.0 * x + 1.0).powi(2) / 49.0 - (9.0 * y + 1.0) / 10.0).exp()
        + 0.5 * (-((9.0 * x - 7.0).powi(2) + (9.0 * y - 3.0).powi(2)) / 4.0).exp()
        - 0.2 * (-(9.0 * x - 4.0).powi(2) - (9.0 * y - 7.0).powi(2)).exp()
}

/// Face-like height field sampled on a uniform grid over [0, 1]^2.
fn face_like(size: GridSize) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(size.rows * size.cols);
    for i in 0..size.rows {
        let u = i as f64 / (size.rows - 1) as f64;
        for j in 0..size.cols {
            let v = j as f64 / (size.cols - 1) as f64;
            rows.push(vec![u, v, bump_field(u, v)]);
        }
    }
    rows
}

fn random_curve(m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()
}

/// Random surface: uniform grid in (u, v) with seeded random heights, so the
/// grid parameterization stays well defined.
fn random_surface(size: GridSize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(size.rows * size.cols);
    for i in 0..size.rows {
        let u = i as f64 / (size.rows - 1) as f64;
        for j in 0..size.cols {
            let v = j as f64 / (size.cols - 1) as f64;
            rows.push(vec![u, v, rng.random_range(-1.0..1.0)]);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polar_sin4_hits_its_closed_form() {
        // At m = 5 the sample angles are multiples of 2 pi, landing on the
        // axes: (0,0), (1,0), (0,0), (-1,0), (0,0) up to rounding in sin.
        let pts = gen_curve(ExampleName::PolarSin4, 5, 0).unwrap();
        let expected = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [-1.0, 0.0], [0.0, 0.0]];
        for (i, exp) in expected.iter().enumerate() {
            let p = pts.point(i);
            assert_abs_diff_eq!(p[0], exp[0], epsilon = 1e-14);
            assert_abs_diff_eq!(p[1], exp[1], epsilon = 1e-14);
        }

        let pts = gen_curve(ExampleName::PolarSin4, 501, 0).unwrap();
        assert_eq!(pts.len(), 501);
        let theta = 8.0 * PI * 100.0 / 500.0;
        let r = (theta / 4.0).sin();
        let p = pts.point(100);
        assert_abs_diff_eq!(p[0], r * theta.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], r * theta.sin(), epsilon = 1e-15);
    }

    #[test]
    fn curve_examples_have_distinct_consecutive_points() {
        // Chord parameterization requires consecutive points to differ.
        let curves = [
            ExampleName::PolarSin4,
            ExampleName::AirfoilLike,
            ExampleName::IncenterLike,
            ExampleName::GfontLike,
        ];
        for name in curves {
            for m in [4, 37, default_points(name)] {
                let pts = gen_curve(name, m, 0).unwrap();
                assert_eq!(pts.len(), m);
                for i in 1..m {
                    assert!(
                        pts.distance(i - 1, i) > 0.0,
                        "{name} m={m}: points {i}-1 and {i} coincide"
                    );
                }
            }
        }
    }

    #[test]
    fn random_data_is_seed_deterministic() {
        let a = gen_curve(ExampleName::Random, 50, 7).unwrap();
        let b = gen_curve(ExampleName::Random, 50, 7).unwrap();
        let c = gen_curve(ExampleName::Random, 50, 8).unwrap();
        assert_eq!(a.rows(), b.rows());
        assert_ne!(a.rows(), c.rows());
        for i in 0..50 {
            let p = a.point(i);
            assert!(p.iter().all(|v| (-1.0..1.0).contains(v)));
        }

        let g = gen_surface(ExampleName::Random, GridSize { rows: 5, cols: 6 }, 3).unwrap();
        let h = gen_surface(ExampleName::Random, GridSize { rows: 5, cols: 6 }, 3).unwrap();
        assert_eq!(g.points_row_major(), h.points_row_major());
    }

    #[test]
    fn face_like_grid_is_smooth_and_shaped() {
        let size = GridSize { rows: 9, cols: 11 };
        let grid = gen_surface(ExampleName::FaceLike, size, 0).unwrap();
        assert_eq!((grid.nrows(), grid.ncols()), (9, 11));
        let p = grid.point(0, 0);
        assert_abs_diff_eq!(p[0], 0.0);
        assert_abs_diff_eq!(p[1], 0.0);
        assert_abs_diff_eq!(p[2], bump_field(0.0, 0.0), epsilon = 1e-15);
        let q = grid.point(8, 10);
        assert_abs_diff_eq!(q[0], 1.0);
        assert_abs_diff_eq!(q[1], 1.0);
        // Heights stay within a sane band for this field.
        for i in 0..9 {
            for j in 0..11 {
                let z = grid.point(i, j)[2];
                assert!((-0.5..=1.5).contains(&z));
            }
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        assert!(gen_curve(ExampleName::FaceLike, 50, 0).is_err());
        assert!(gen_surface(ExampleName::PolarSin4, GridSize { rows: 9, cols: 9 }, 0).is_err());
        assert!(gen_curve(ExampleName::PolarSin4, 3, 0).is_err());
        assert!(gen_surface(ExampleName::FaceLike, GridSize { rows: 3, cols: 9 }, 0).is_err());
    }
}
