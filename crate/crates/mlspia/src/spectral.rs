//! Spectral analysis of collocation matrices and iteration-weight selection.
//!
//! The iteration converges for any weights inside an explicit region
//! parameterized by the largest singular value of the collocation matrix,
//! and converges fastest at closed-form optimal weights built from the
//! largest and smallest positive singular values. This module computes those
//! singular values, the weights, the predicted contraction radius, and a
//! densified diagnostic form of the iteration matrix.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::splines::CollocationMatrix;

/// Default relative tolerance for counting a singular value as nonzero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Extreme singular values and numerical rank of a collocation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// Number of singular values retained as positive.
    pub rank: usize,
    /// Largest singular value.
    pub sigma_max: f64,
    /// Smallest retained (positive) singular value.
    pub sigma_min_pos: f64,
    /// All retained singular values, descending.
    pub singular_values: Vec<f64>,
    /// Relative tolerance that was applied.
    pub rank_tolerance: f64,
}

/// Iteration weights. `omega`, `gamma` and `upsilon` drive the
/// memory-augmented iteration; `mu` is the plain-iteration step size carried
/// along for comparison runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSet {
    pub omega: f64,
    pub gamma: f64,
    pub upsilon: f64,
    pub mu: Option<f64>,
}

impl WeightSet {
    pub fn new(omega: f64, gamma: f64, upsilon: f64) -> Self {
        Self { omega, gamma, upsilon, mu: None }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }
}

/// Optimal weights with the contraction radii they predict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalWeights {
    pub weights: WeightSet,
    /// Spectral radius of the memory-augmented iteration at these weights:
    /// `(sigma_max - sigma_min) / (sigma_max + sigma_min)`.
    pub predicted_radius: f64,
    /// Spectral radius of the plain iteration at its own optimal step:
    /// `(sigma_max^2 - sigma_min^2) / (sigma_max^2 + sigma_min^2)`.
    pub lspia_predicted_radius: f64,
}

/// Computes the numerical rank and extreme singular values of `b` through a
/// symmetric eigendecomposition of the Gram matrix `B^T B`.
///
/// A singular value is retained when it exceeds `rel_tol * sigma_max`. The
/// Gram route squares the spectrum, so eigenvalues at or below the solver's
/// own noise floor (`n * eps * lambda_max`) are treated as exact zeros first;
/// exactly dependent columns therefore report a reduced rank even though the
/// squared tolerance would be unobservably small.
pub fn extreme_singular_values(
    b: &CollocationMatrix,
    rel_tol: f64,
) -> Result<SpectralSummary> {
    if !(0.0..1.0).contains(&rel_tol) {
        return Err(Error::Config(format!(
            "rank tolerance must lie in [0, 1), got {rel_tol}"
        )));
    }
    let eigen = symmetric_eigen(&b.gram())?;
    let lambda_max = eigen.values.last().copied().unwrap_or(0.0);
    if lambda_max <= 0.0 {
        return Err(Error::Degenerate("collocation matrix is numerically zero".into()));
    }
    let noise_floor = b.ncols() as f64 * f64::EPSILON * lambda_max;
    let sigma_max = lambda_max.sqrt();
    let cutoff = rel_tol * sigma_max;
    let mut retained: Vec<f64> = eigen
        .values
        .iter()
        .rev()
        .take_while(|&&lambda| lambda > noise_floor)
        .map(|&lambda| lambda.sqrt())
        .filter(|&sigma| sigma > cutoff)
        .collect();
    retained.sort_by(|a, b| b.total_cmp(a));
    let rank = retained.len();
    let sigma_min_pos = *retained.last().expect("sigma_max always retained");
    Ok(SpectralSummary {
        rank,
        sigma_max,
        sigma_min_pos,
        singular_values: retained,
        rank_tolerance: rel_tol,
    })
}

/// Optimal weights for a curve fit from its extreme singular values.
pub fn optimal_weights(spectrum: &SpectralSummary) -> Result<OptimalWeights> {
    optimal_weights_from_extremes(spectrum.sigma_max, spectrum.sigma_min_pos)
}

/// Optimal weights for a surface fit. The tensor-product collocation matrix
/// has singular values `sigma_i * mu_j`, so the extremes are the products of
/// the per-direction extremes.
pub fn optimal_weights_surface(
    row_spectrum: &SpectralSummary,
    col_spectrum: &SpectralSummary,
) -> Result<OptimalWeights> {
    optimal_weights_from_extremes(
        row_spectrum.sigma_max * col_spectrum.sigma_max,
        row_spectrum.sigma_min_pos * col_spectrum.sigma_min_pos,
    )
}

fn optimal_weights_from_extremes(largest: f64, smallest: f64) -> Result<OptimalWeights> {
    if !(largest.is_finite() && smallest.is_finite()) || smallest <= 0.0 || largest < smallest {
        return Err(Error::Config(format!(
            "optimal weights need 0 < sigma_min <= sigma_max, got ({smallest}, {largest})"
        )));
    }
    let sum = largest + smallest;
    let omega = 4.0 * largest * smallest / (sum * sum);
    let upsilon = 1.0 / (largest * smallest);
    let mu = 2.0 / (largest * largest + smallest * smallest);
    let predicted_radius = (largest - smallest) / sum;
    let lspia_predicted_radius =
        (largest * largest - smallest * smallest) / (largest * largest + smallest * smallest);
    Ok(OptimalWeights {
        weights: WeightSet::new(omega, omega, upsilon).with_mu(mu),
        predicted_radius,
        lspia_predicted_radius,
    })
}

/// Checks the convergence region for the given weights:
/// `0 < omega < 2`, `upsilon > 0` and
/// `omega - omega / (sigma_max^2 upsilon) < gamma < omega/2 - (omega - 2) / (sigma_max^2 upsilon)`.
///
/// On failure the error names the violated inequality.
pub fn validate_weights(w: &WeightSet, sigma_max: f64) -> Result<()> {
    if !(sigma_max.is_finite() && sigma_max > 0.0) {
        return Err(Error::Config(format!("sigma_max must be positive, got {sigma_max}")));
    }
    let WeightSet { omega, gamma, upsilon, .. } = *w;
    if !(omega.is_finite() && gamma.is_finite() && upsilon.is_finite()) {
        return Err(Error::Weights("non-finite weight".into()));
    }
    if !(omega > 0.0 && omega < 2.0) {
        return Err(Error::Weights(format!("0 < omega < 2 violated (omega = {omega})")));
    }
    if !(upsilon > 0.0) {
        return Err(Error::Weights(format!("upsilon > 0 violated (upsilon = {upsilon})")));
    }
    let s2u = sigma_max * sigma_max * upsilon;
    let lower = omega - omega / s2u;
    let upper = omega / 2.0 - (omega - 2.0) / s2u;
    if !(gamma > lower) {
        return Err(Error::Weights(format!(
            "gamma > omega - omega/(sigma_max^2 upsilon) violated (gamma = {gamma}, bound = {lower})"
        )));
    }
    if !(gamma < upper) {
        return Err(Error::Weights(format!(
            "gamma < omega/2 - (omega - 2)/(sigma_max^2 upsilon) violated (gamma = {gamma}, bound = {upper})"
        )));
    }
    Ok(())
}

/// Relative slack under which a quadratic discriminant is treated as zero.
///
/// At the optimal weights the discriminant is exactly zero at the extreme
/// singular values; evaluating it in floating point can land a hair on the
/// positive side, and the real-root branch would then inject an O(sqrt(eps))
/// error into the radius. Treating near-zero discriminants as repeated roots
/// keeps the radius accurate to machine precision.
const DISCRIMINANT_SLACK: f64 = 1e-12;

/// Spectral radius of the iteration matrix predicted by its characteristic
/// factorization: the eigenvalues are `1 - omega` plus, per singular value
/// `sigma`, the roots of
/// `lambda^2 + (gamma upsilon sigma^2 - (2 - omega)) lambda
///  + sigma^2 upsilon (omega - gamma) + 1 - omega = 0`.
pub fn theoretical_radius(w: &WeightSet, singular_values: &[f64]) -> f64 {
    let mut radius = (1.0 - w.omega).abs();
    for &sigma in singular_values {
        let (m1, m2) = quadratic_root_moduli(w, sigma);
        radius = radius.max(m1).max(m2);
    }
    radius
}

/// Moduli of the two roots of the per-singular-value quadratic.
pub(crate) fn quadratic_root_moduli(w: &WeightSet, sigma: f64) -> (f64, f64) {
    let s2u = sigma * sigma * w.upsilon;
    let b = w.gamma * s2u - (2.0 - w.omega);
    let c = s2u * (w.omega - w.gamma) + 1.0 - w.omega;
    let disc = b * b - 4.0 * c;
    if disc <= DISCRIMINANT_SLACK * (b * b + (4.0 * c).abs()) {
        // Conjugate pair (or repeated real root): both moduli are sqrt(c).
        let modulus = c.max(0.0).sqrt();
        (modulus, modulus)
    } else {
        // Stable real-root formula: avoid cancellation in the smaller root.
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            (0.0, 0.0) // b = 0 and disc = 0, so c = 0: both roots vanish
        } else {
            (q.abs(), (c / q).abs())
        }
    }
}

/// Diagnostics may densify the iteration matrix only up to this total side
/// length; beyond it the quadratic storage stops being harmless.
pub const ITERATION_MATRIX_CAP: usize = 500;

/// Dense `(m + n) x (m + n)` iteration matrix
/// `[[ (1-omega) I - gamma upsilon B B^T, -omega B ], [ upsilon B^T, I ]]`
/// for eigenvalue diagnostics on small instances.
pub fn iteration_matrix(b: &CollocationMatrix, w: &WeightSet) -> Result<DenseMatrix> {
    let (m, n) = (b.nrows(), b.ncols());
    let size = m + n;
    if size > ITERATION_MATRIX_CAP {
        return Err(Error::SizeCap { size, cap: ITERATION_MATRIX_CAP });
    }
    let mut h = DenseMatrix::zeros(size, size);
    // Top-left block: (1 - omega) I - gamma upsilon B B^T, assembled from
    // band overlaps of row pairs.
    for i in 0..m {
        h[(i, i)] = 1.0 - w.omega;
    }
    let coef = w.gamma * w.upsilon;
    if coef != 0.0 {
        for i in 0..m {
            let (fi, bi) = b.row(i);
            for j in 0..m {
                let (fj, bj) = b.row(j);
                let lo = fi.max(fj);
                let hi = (fi + bi.len()).min(fj + bj.len());
                if lo >= hi {
                    continue;
                }
                let mut dot = 0.0;
                for k in lo..hi {
                    dot += bi[k - fi] * bj[k - fj];
                }
                h[(i, j)] -= coef * dot;
            }
        }
    }
    // Off-diagonal blocks and the identity in the corner.
    for i in 0..m {
        let (first, band) = b.row(i);
        for (k, v) in band.iter().enumerate() {
            h[(i, m + first + k)] = -w.omega * v;
            h[(m + first + k, i)] = w.upsilon * v;
        }
    }
    for j in 0..n {
        h[(m + j, m + j)] = 1.0;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splines::CollocationMatrix;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hat_matrix() -> CollocationMatrix {
        CollocationMatrix::from_rows(
            2,
            vec![(0, vec![1.0]), (0, vec![0.5, 0.5]), (1, vec![1.0])],
        )
        .unwrap()
    }

    #[test]
    fn hat_matrix_extreme_singular_values() {
        // Gram is [[1.25, 0.25], [0.25, 1.25]] with eigenvalues 1.5 and 1.0.
        let s = extreme_singular_values(&hat_matrix(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank, 2);
        assert_abs_diff_eq!(s.sigma_max, 1.5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.sigma_min_pos, 1.0, epsilon = 1e-14);
        assert_eq!(s.singular_values.len(), 2);
    }

    #[test]
    fn identity_collocation_has_unit_spectrum() {
        let rows = (0..5).map(|i| (i, vec![1.0]));
        let b = CollocationMatrix::from_rows(5, rows.collect::<Vec<_>>()).unwrap();
        let s = extreme_singular_values(&b, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank, 5);
        assert_abs_diff_eq!(s.sigma_max, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.sigma_min_pos, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn duplicated_column_drops_the_rank_by_one() {
        let b = hat_matrix().duplicate_column(0).unwrap();
        let s = extreme_singular_values(&b, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.rank, 2);
        assert!(s.sigma_min_pos > 0.0);
    }

    #[test]
    fn optimal_weights_match_the_closed_forms() {
        let spectrum = SpectralSummary {
            rank: 2,
            sigma_max: 3.0,
            sigma_min_pos: 1.0,
            singular_values: vec![3.0, 1.0],
            rank_tolerance: DEFAULT_RANK_TOL,
        };
        let opt = optimal_weights(&spectrum).unwrap();
        assert_abs_diff_eq!(opt.weights.omega, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.weights.gamma, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.weights.upsilon, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.weights.mu.unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.predicted_radius, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.lspia_predicted_radius, 0.8, epsilon = 1e-15);
    }

    #[test]
    fn equal_extremes_predict_instant_contraction() {
        let spectrum = SpectralSummary {
            rank: 1,
            sigma_max: 2.0,
            sigma_min_pos: 2.0,
            singular_values: vec![2.0],
            rank_tolerance: DEFAULT_RANK_TOL,
        };
        let opt = optimal_weights(&spectrum).unwrap();
        assert_abs_diff_eq!(opt.weights.omega, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.weights.upsilon, 0.25, epsilon = 1e-15);
        assert_eq!(opt.predicted_radius, 0.0);
    }

    #[test]
    fn surface_weights_use_singular_value_products() {
        let row = SpectralSummary {
            rank: 2,
            sigma_max: 2.0,
            sigma_min_pos: 1.0,
            singular_values: vec![2.0, 1.0],
            rank_tolerance: DEFAULT_RANK_TOL,
        };
        let col = row.clone();
        // Products: largest 4, smallest 1.
        let opt = optimal_weights_surface(&row, &col).unwrap();
        assert_abs_diff_eq!(opt.weights.omega, 16.0 / 25.0, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.weights.upsilon, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(opt.predicted_radius, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn weight_validation_accepts_the_reference_point() {
        let w = WeightSet::new(1.0, 0.5, 1.0);
        assert!(validate_weights(&w, 1.0).is_ok());
    }

    #[test]
    fn weight_validation_names_the_violated_inequality() {
        let sigma = 1.0;
        let err = validate_weights(&WeightSet::new(2.0, 0.5, 1.0), sigma).unwrap_err();
        assert!(err.to_string().contains("0 < omega < 2"), "got: {err}");

        let err = validate_weights(&WeightSet::new(1.0, 0.5, 0.0), sigma).unwrap_err();
        assert!(err.to_string().contains("upsilon > 0"), "got: {err}");

        // gamma exactly at the upper bound omega/2 - (omega-2)/(sigma^2 upsilon) = 1.5.
        let err = validate_weights(&WeightSet::new(1.0, 1.5, 1.0), sigma).unwrap_err();
        assert!(err.to_string().contains("gamma <"), "got: {err}");

        // gamma exactly at the lower bound omega - omega/(sigma^2 upsilon) = 0.
        let err = validate_weights(&WeightSet::new(1.0, 0.0, 1.0), sigma).unwrap_err();
        assert!(err.to_string().contains("gamma >"), "got: {err}");
    }

    #[test]
    fn radius_at_optimal_weights_is_the_closed_form() {
        let spectrum = SpectralSummary {
            rank: 3,
            sigma_max: 2.5,
            sigma_min_pos: 0.4,
            singular_values: vec![2.5, 1.1, 0.4],
            rank_tolerance: DEFAULT_RANK_TOL,
        };
        let opt = optimal_weights(&spectrum).unwrap();
        let rho = theoretical_radius(&opt.weights, &spectrum.singular_values);
        let expect = (2.5 - 0.4) / (2.5 + 0.4);
        assert_abs_diff_eq!(rho, expect, epsilon = 1e-12);
        // And it beats the plain-iteration radius.
        assert!(rho <= opt.lspia_predicted_radius);
    }

    #[test]
    fn radius_degenerates_to_zero_for_the_identity_setup() {
        // omega = gamma = upsilon = 1 on a unit singular value: the quadratic
        // collapses to lambda^2 = 0 and 1 - omega = 0.
        let w = WeightSet::new(1.0, 1.0, 1.0);
        assert_eq!(theoretical_radius(&w, &[1.0]), 0.0);
    }

    #[test]
    fn discriminant_is_nonpositive_across_the_optimal_spectrum() {
        // At optimal weights every sigma in [sigma_min, sigma_max] must fall
        // in the conjugate-pair regime (discriminant <= 0 up to roundoff).
        let (lo, hi) = (0.3, 4.0);
        let opt = optimal_weights_from_extremes(hi, lo).unwrap();
        let w = opt.weights;
        for k in 0..=1000 {
            let sigma = lo + (hi - lo) * k as f64 / 1000.0;
            let s2u = sigma * sigma * w.upsilon;
            let b = w.gamma * s2u - (2.0 - w.omega);
            let c = s2u * (w.omega - w.gamma) + 1.0 - w.omega;
            let disc = b * b - 4.0 * c;
            assert!(
                disc <= 1e-12 * (b * b + (4.0 * c).abs()),
                "positive discriminant {disc} at sigma = {sigma}"
            );
            // Conjugate moduli are sqrt(1 - omega) exactly at omega = gamma.
            let (m1, _) = quadratic_root_moduli(&w, sigma);
            assert_abs_diff_eq!(m1, (1.0 - w.omega).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn root_moduli_match_a_complex_arithmetic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut checked = 0;
        while checked < 500 {
            let omega = rng.random_range(0.05..1.95);
            let sigma_max: f64 = rng.random_range(0.2..4.0);
            // Keep omega * sigma_max^2 * upsilon < 4 so the gamma interval
            // below is nonempty.
            let upsilon =
                rng.random_range(0.01..(3.9 / (omega * sigma_max * sigma_max)).min(3.0));
            let s2u = sigma_max * sigma_max * upsilon;
            let lower = omega - omega / s2u;
            let upper = omega / 2.0 - (omega - 2.0) / s2u;
            let gamma = rng.random_range(lower..upper);
            let w = WeightSet::new(omega, gamma, upsilon);
            let sigma = rng.random_range(0.1..sigma_max);

            let b = gamma * sigma * sigma * upsilon - (2.0 - omega);
            let c = sigma * sigma * upsilon * (omega - gamma) + 1.0 - omega;
            let disc = b * b - 4.0 * c;
            // Stay clear of the repeated-root guard band, where the
            // implementation intentionally rounds the discriminant to zero.
            if disc.abs() <= 1e-9 * (b * b + (4.0 * c).abs()) {
                continue;
            }
            checked += 1;

            let sqrt_disc = Complex64::new(disc, 0.0).sqrt();
            let r1 = (Complex64::new(-b, 0.0) + sqrt_disc) / 2.0;
            let r2 = (Complex64::new(-b, 0.0) - sqrt_disc) / 2.0;
            let (mut expect_hi, mut expect_lo) = (r1.norm(), r2.norm());
            if expect_hi < expect_lo {
                std::mem::swap(&mut expect_hi, &mut expect_lo);
            }
            let (mut got_hi, mut got_lo) = quadratic_root_moduli(&w, sigma);
            if got_hi < got_lo {
                std::mem::swap(&mut got_hi, &mut got_lo);
            }
            assert_abs_diff_eq!(got_hi, expect_hi, epsilon = 1e-11);
            assert_abs_diff_eq!(got_lo, expect_lo, epsilon = 1e-11);
        }
    }

    #[test]
    fn iteration_matrix_blocks_at_degenerate_weights() {
        // omega = 1, gamma = 0, upsilon = 0 gives [[0, -B], [0, I]].
        let b = hat_matrix();
        let h = iteration_matrix(&b, &WeightSet::new(1.0, 0.0, 0.0)).unwrap();
        let dense = b.to_dense();
        assert_eq!(h.nrows(), 5);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h[(i, j)], 0.0);
            }
            for j in 0..2 {
                assert_eq!(h[(i, 3 + j)], -dense[(i, j)]);
                assert_eq!(h[(3 + j, i)], 0.0);
            }
        }
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(h[(3 + j, 3 + k)], if j == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn iteration_matrix_refuses_oversized_instances() {
        let rows: Vec<_> = (0..400).map(|_| (0, vec![1.0])).collect();
        let b = CollocationMatrix::from_rows(200, rows).unwrap();
        assert!(matches!(
            iteration_matrix(&b, &WeightSet::new(1.0, 1.0, 1.0)),
            Err(Error::SizeCap { size: 600, cap: ITERATION_MATRIX_CAP })
        ));
    }

    #[test]
    fn closed_form_eigenvalues_annihilate_the_iteration_matrix() {
        // Claimed eigenvalues: 1 - omega plus the quadratic roots per sigma.
        // Verified against a dense complex determinant with row scaling.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let m = 10;
        let n = 4;
        let ts: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let params = crate::splines::ParameterList::new(ts).unwrap();
        let kv = crate::splines::make_knots(&params, n, 3).unwrap();
        let b = crate::splines::collocate(&kv, &params).unwrap();
        let spectrum = extreme_singular_values(&b, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(spectrum.rank, n);
        for _ in 0..5 {
            let omega = rng.random_range(0.2..1.8);
            let s1 = spectrum.sigma_max;
            let upsilon = rng.random_range(0.1..(3.9 / (omega * s1 * s1)).min(1.5));
            let s2u = s1 * s1 * upsilon;
            let lower = omega - omega / s2u;
            let upper = omega / 2.0 - (omega - 2.0) / s2u;
            let gamma = rng.random_range(lower..upper);
            let w = WeightSet::new(omega, gamma, upsilon);
            let h = iteration_matrix(&b, &w).unwrap();

            let mut claimed = vec![Complex64::new(1.0 - omega, 0.0)];
            for &sigma in &spectrum.singular_values {
                let bb = gamma * sigma * sigma * upsilon - (2.0 - omega);
                let cc = sigma * sigma * upsilon * (omega - gamma) + 1.0 - omega;
                let sqrt_disc = Complex64::new(bb * bb - 4.0 * cc, 0.0).sqrt();
                claimed.push((Complex64::new(-bb, 0.0) + sqrt_disc) / 2.0);
                claimed.push((Complex64::new(-bb, 0.0) - sqrt_disc) / 2.0);
            }
            for lambda in claimed {
                let residual = scaled_complex_det(&h, lambda);
                assert!(
                    residual <= 1e-8,
                    "det residual {residual:.3e} for lambda = {lambda}"
                );
            }
        }
    }

    /// |det(H - lambda I)| after scaling each row to unit max-abs, so the
    /// value is comparable across sizes.
    fn scaled_complex_det(h: &DenseMatrix, lambda: Complex64) -> f64 {
        let s = h.nrows();
        let mut a = nalgebra::DMatrix::<Complex64>::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                a[(i, j)] = Complex64::new(h[(i, j)], 0.0);
            }
            a[(i, i)] -= lambda;
        }
        for i in 0..s {
            let max = (0..s).map(|j| a[(i, j)].norm()).fold(0.0f64, f64::max);
            if max > 0.0 {
                for j in 0..s {
                    a[(i, j)] /= Complex64::new(max, 0.0);
                }
            }
        }
        a.determinant().norm()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn optimal_weights_always_sit_inside_the_region(
            sigma_min in 1e-3f64..1e3,
            ratio in 1.0f64..1e3,
        ) {
            let sigma_max = sigma_min * ratio;
            let opt = optimal_weights_from_extremes(sigma_max, sigma_min).unwrap();
            prop_assert!(validate_weights(&opt.weights, sigma_max).is_ok());
            prop_assert!(opt.predicted_radius < 1.0);
            prop_assert!(opt.predicted_radius <= opt.lspia_predicted_radius + 1e-15);
        }
    }
}
