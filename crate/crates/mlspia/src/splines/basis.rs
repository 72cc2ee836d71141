//! Low-level B-spline basis evaluation on a clamped knot vector.
//!
//! These kernels follow the standard triangular recurrences: values and
//! derivatives at a parameter are built from the knot span containing it,
//! touching only the `degree + 1` basis functions alive there.

/// Index of the knot span containing `t`: the largest `i` with
/// `knots[i] <= t < knots[i + 1]`, clamped so the right domain end maps to
/// the last non-vanishing span.
///
/// `basis_count` is the number of basis functions, i.e. `knots.len() - degree - 1`.
pub(crate) fn find_span(knots: &[f64], degree: usize, basis_count: usize, t: f64) -> usize {
    if t >= knots[basis_count] {
        return basis_count - 1;
    }
    // partition_point returns the first index whose knot exceeds t; the span
    // is the index just before it. Clamp to the valid range [degree, n-1].
    let upper = knots[..=basis_count].partition_point(|&u| u <= t);
    upper.saturating_sub(1).clamp(degree, basis_count - 1)
}

/// Values of the `degree + 1` basis functions alive on `span` at `t`;
/// `out[j]` is the value of basis function `span - degree + j`.
pub(crate) fn basis_values(knots: &[f64], degree: usize, span: usize, t: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), degree + 1);
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    out[0] = 1.0;
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let temp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

/// Values and derivatives up to `order` of the basis functions alive on
/// `span` at `t`. Returns `ders[k][j]` = k-th derivative of basis function
/// `span - degree + j`.
pub(crate) fn basis_derivatives(
    knots: &[f64],
    degree: usize,
    span: usize,
    t: f64,
    order: usize,
) -> Vec<Vec<f64>> {
    let p = degree;
    let order = order.min(p); // higher derivatives of a degree-p spline vanish
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            // Lower triangle: knot differences; upper triangle: basis values.
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }

    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let mut s1 = 0;
        let mut s2 = 1;
        a[0][0] = 1.0;
        for k in 1..=order {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                a[s2][j] =
                    (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][(rk + j as isize) as usize];
                d += a[s2][j] * ndu[(rk + j as isize) as usize][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }

    // Multiply through by the factorial-style factors p! / (p - k)!.
    let mut factor = p as f64;
    for k in 1..=order {
        for value in ders[k].iter_mut() {
            *value *= factor;
        }
        factor *= (p - k) as f64;
    }
    ders
}
