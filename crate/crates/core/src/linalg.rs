//! Small dense linear-algebra helpers: Cholesky factorization/solves and
//! least squares via normal equations. Everything here works on matrices of
//! at most a few hundred rows, so simple O(n^3) loops are fine.

use ndarray::{Array1, Array2};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Returns `None` if a non-positive pivot is encountered.
pub fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Cholesky with escalating diagonal jitter. Returns the factor and the
/// jitter that was finally used, or `None` if even the largest jitter fails.
pub fn cholesky_with_jitter(a: &Array2<f64>, max_jitter: f64) -> Option<(Array2<f64>, f64)> {
    if let Some(l) = cholesky(a) {
        return Some((l, 0.0));
    }
    let mut jitter = 1e-10;
    while jitter <= max_jitter {
        let mut aj = a.clone();
        for i in 0..a.nrows() {
            aj[[i, i]] += jitter;
        }
        if let Some(l) = cholesky(&aj) {
            return Some((l, jitter));
        }
        jitter *= 10.0;
    }
    None
}

/// Solves `L y = b` then `L^T x = y` for a lower-triangular Cholesky factor.
pub fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solves the SPD system `A x = b` via Cholesky.
pub fn spd_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    cholesky(a).map(|l| cholesky_solve(&l, b))
}

/// Least-squares solution of `A x ~ b` through the normal equations with a
/// tiny ridge for rank-deficient designs.
pub fn lstsq(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let p = a.ncols();
    let mut ata = Array2::<f64>::zeros((p, p));
    let mut atb = Array1::<f64>::zeros(p);
    for i in 0..p {
        for j in 0..=i {
            let mut s = 0.0;
            for r in 0..a.nrows() {
                s += a[[r, i]] * a[[r, j]];
            }
            ata[[i, j]] = s;
            ata[[j, i]] = s;
        }
        let mut s = 0.0;
        for r in 0..a.nrows() {
            s += a[[r, i]] * b[r];
        }
        atb[i] = s;
    }
    let scale = (0..p).map(|i| ata[[i, i]]).fold(0.0_f64, f64::max);
    let ridge = scale.max(1.0) * 1e-12;
    for i in 0..p {
        ata[[i, i]] += ridge;
    }
    spd_solve(&ata, &atb).expect("ridge-regularized normal equations must be SPD")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_roundtrip() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.1], [0.6, 1.1, 3.0]];
        let l = cholesky(&a).unwrap();
        let back = l.dot(&l.t());
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back[[i, j]], a[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn solve_matches_direct() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let b = array![1.0, 2.0];
        let x = spd_solve(&a, &b).unwrap();
        let r0 = 4.0 * x[0] + x[1] - 1.0;
        let r1 = x[0] + 3.0 * x[1] - 2.0;
        assert!(r0.abs() < 1e-12 && r1.abs() < 1e-12);
    }

    #[test]
    fn lstsq_recovers_exact_fit() {
        // y = 2 + 3 t on four points, quadratic design
        let t = [0.0, 1.0, 2.0, 3.0];
        let mut a = Array2::<f64>::zeros((4, 3));
        let mut b = Array1::<f64>::zeros(4);
        for (r, &ti) in t.iter().enumerate() {
            a[[r, 0]] = 1.0;
            a[[r, 1]] = ti;
            a[[r, 2]] = ti * ti;
            b[r] = 2.0 + 3.0 * ti;
        }
        let x = lstsq(&a, &b);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-6);
        assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-6);
    }
}
