//! Cubic smoothing of per-column constraint targets over the grid index.
//!
//! The smoothing contract mirrors a residual-budget spline fit: if the
//! least-squares cubic polynomial already fits the column within the budget
//! it is returned unchanged (so columns that lie on a cubic pass through
//! exactly); otherwise a natural cubic smoothing spline is fitted with its
//! roughness penalty tuned so the residual sum of squares meets the budget.

use ndarray::{Array1, Array2};

use crate::linalg;

/// Smooths one column of grid-indexed values with residual budget
/// `target_rss`. Columns shorter than 4 points pass through unchanged.
pub fn smooth_column(y: &[f64], target_rss: f64) -> Vec<f64> {
    let m = y.len();
    if m < 4 {
        return y.to_vec();
    }

    let cubic = lsq_cubic(y);
    if rss(y, &cubic) <= target_rss {
        return cubic;
    }

    // Bisect the roughness weight (log scale) so the natural cubic
    // smoothing spline hits the residual budget. RSS is monotone
    // increasing in the weight: 0 -> interpolation, infinity -> the
    // least-squares line, whose RSS exceeds the cubic's and thus the
    // budget.
    let mut lo = -25.0_f64;
    let mut hi = 25.0_f64;
    let mut fit = reinsch_fit(y, hi.exp());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        fit = reinsch_fit(y, mid.exp());
        if rss(y, &fit) > target_rss {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    reinsch_fit(y, lo.exp())
}

fn rss(y: &[f64], fit: &[f64]) -> f64 {
    y.iter().zip(fit).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Least-squares cubic polynomial over the grid index, evaluated back on the
/// grid. Index is rescaled to [-1, 1] for conditioning.
fn lsq_cubic(y: &[f64]) -> Vec<f64> {
    let m = y.len();
    let scale = (m - 1) as f64;
    let mut design = Array2::<f64>::zeros((m, 4));
    for i in 0..m {
        let t = 2.0 * i as f64 / scale - 1.0;
        design[[i, 0]] = 1.0;
        design[[i, 1]] = t;
        design[[i, 2]] = t * t;
        design[[i, 3]] = t * t * t;
    }
    let coef = linalg::lstsq(&design, &Array1::from(y.to_vec()));
    (0..m)
        .map(|i| {
            let t = 2.0 * i as f64 / scale - 1.0;
            coef[0] + coef[1] * t + coef[2] * t * t + coef[3] * t * t * t
        })
        .collect()
}

/// Natural cubic smoothing spline on the unit-spaced grid: minimizes
/// ||y - g||^2 + w * g' K g with the classic second-difference form
/// K = Q R^{-1} Q', solving (I + w K) g = y.
fn reinsch_fit(y: &[f64], weight: f64) -> Vec<f64> {
    let m = y.len();
    let interior = m - 2;

    // Q: m x interior second-difference matrix, R: interior x interior
    // tridiagonal Gram matrix of the natural-spline second derivatives
    // (unit spacing: R_ii = 2/3, R_{i,i+1} = 1/6).
    let mut r = Array2::<f64>::zeros((interior, interior));
    for i in 0..interior {
        r[[i, i]] = 2.0 / 3.0;
        if i + 1 < interior {
            r[[i, i + 1]] = 1.0 / 6.0;
            r[[i + 1, i]] = 1.0 / 6.0;
        }
    }
    let r_chol = linalg::cholesky(&r).expect("R is SPD by construction");

    // K = Q R^{-1} Q' built column by column.
    let mut k = Array2::<f64>::zeros((m, m));
    for j in 0..m {
        // q_j = j-th row of Q as a vector in R^interior
        let mut qj = Array1::<f64>::zeros(interior);
        for i in 0..interior {
            let center = i + 1;
            if j + 1 == center {
                qj[i] += 1.0;
            }
            if j == center {
                qj[i] += -2.0;
            }
            if j == center + 1 {
                qj[i] += 1.0;
            }
        }
        let sj = linalg::cholesky_solve(&r_chol, &qj);
        for jj in 0..m {
            let mut acc = 0.0;
            for i in 0..interior {
                let center = i + 1;
                let q_jj = if jj + 1 == center {
                    1.0
                } else if jj == center {
                    -2.0
                } else if jj == center + 1 {
                    1.0
                } else {
                    0.0
                };
                acc += q_jj * sj[i];
            }
            k[[jj, j]] = acc;
        }
    }

    let mut system = k * weight;
    for i in 0..m {
        system[[i, i]] += 1.0;
    }
    let sol = linalg::spd_solve(&system, &Array1::from(y.to_vec()))
        .expect("I + w K is SPD for w >= 0");
    sol.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_col(m: usize, a: f64, b: f64) -> Vec<f64> {
        (0..m).map(|i| a + b * i as f64).collect()
    }

    #[test]
    fn short_columns_pass_through() {
        let y = vec![1.0, -5.0];
        assert_eq!(smooth_column(&y, 0.2), y);
        let y3 = vec![1.0, 9.0, 2.0];
        assert_eq!(smooth_column(&y3, 0.2), y3);
    }

    #[test]
    fn linear_column_unchanged() {
        let y = linear_col(20, 0.3, -0.7);
        let out = smooth_column(&y, 0.2);
        for (a, b) in y.iter().zip(&out) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn cubic_column_unchanged() {
        let y: Vec<f64> = (0..12)
            .map(|i| {
                let t = i as f64;
                0.1 * t * t * t - 0.5 * t * t + t - 2.0
            })
            .collect();
        let out = smooth_column(&y, 0.2);
        for (a, b) in y.iter().zip(&out) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn spike_magnitude_reduced() {
        // linear trend with one spiked bin; the smoother must pull the
        // spike toward the trend
        let m = 20;
        let trend = linear_col(m, 0.0, 0.1);
        let mut y = trend.clone();
        let spike_at = 9;
        y[spike_at] += 1.5;
        let out = smooth_column(&y, 0.2);
        let before = (y[spike_at] - trend[spike_at]).abs();
        let after = (out[spike_at] - trend[spike_at]).abs();
        assert!(
            after < before,
            "spike not reduced: before {before}, after {after}"
        );
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn residual_budget_respected() {
        // noisy column: the fit should land close to the requested RSS
        let m = 20;
        let y: Vec<f64> = (0..m)
            .map(|i| {
                let t = i as f64;
                0.2 * t + if i % 2 == 0 { 0.35 } else { -0.35 }
            })
            .collect();
        let out = smooth_column(&y, 0.2);
        let r = rss(&y, &out);
        assert!(r <= 0.2 + 1e-6, "rss {r} above budget");
        assert!(r > 0.02, "suspiciously tight fit, rss {r}");
    }

    #[test]
    fn idempotent_on_smooth_columns() {
        let y: Vec<f64> = (0..15)
            .map(|i| {
                let t = i as f64;
                0.02 * t * t * t - 0.3 * t * t + 0.9 * t
            })
            .collect();
        let once = smooth_column(&y, 0.2);
        let twice = smooth_column(&once, 0.2);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn reinsch_limits() {
        let y = vec![0.0, 1.0, -1.0, 2.0, 0.5, 1.5, -0.5, 0.2];
        // weight -> 0: interpolation
        let g0 = reinsch_fit(&y, 1e-12);
        for (a, b) in y.iter().zip(&g0) {
            assert!((a - b).abs() < 1e-6);
        }
        // large weight: close to the least-squares line
        let ginf = reinsch_fit(&y, 1e12);
        let m = y.len() as f64;
        let tbar = (m - 1.0) / 2.0;
        let ybar = y.iter().sum::<f64>() / m;
        let stt: f64 = (0..y.len()).map(|i| (i as f64 - tbar).powi(2)).sum();
        let sty: f64 = (0..y.len()).map(|i| (i as f64 - tbar) * (y[i] - ybar)).sum();
        let slope = sty / stt;
        for (i, g) in ginf.iter().enumerate() {
            let line = ybar + slope * (i as f64 - tbar);
            assert!((g - line).abs() < 1e-4, "at {i}: {g} vs {line}");
        }
    }
}
