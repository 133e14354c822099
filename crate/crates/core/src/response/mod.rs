//! Response-function bases: the K functions psi_k defining the family
//! f_theta(x) = sum_k theta_k psi_k(x). Fixed monomials, a trained neural
//! basis, and Gaussian-process sample bases are available; all are pure and
//! immutable once constructed.

mod gp;
mod mlp;

pub use gp::{fit_gp_basis, GpBasis, GpFitConfig};
pub use mlp::{fit_mlp_basis, MlpBasis, MlpFitConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Basis family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Polynomial,
    Mlp,
    Gp,
}

/// A concrete basis. Learned variants carry everything needed to re-evaluate
/// without refitting (weights for the MLP, grid values for the GP).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResponseBasis {
    Polynomial { k: usize },
    Mlp(MlpBasis),
    Gp(GpBasis),
}

impl ResponseBasis {
    pub fn kind(&self) -> BasisKind {
        match self {
            ResponseBasis::Polynomial { .. } => BasisKind::Polynomial,
            ResponseBasis::Mlp(_) => BasisKind::Mlp,
            ResponseBasis::Gp(_) => BasisKind::Gp,
        }
    }

    pub fn k_count(&self) -> usize {
        match self {
            ResponseBasis::Polynomial { k } => *k,
            ResponseBasis::Mlp(m) => m.k_count(),
            ResponseBasis::Gp(g) => g.k_count(),
        }
    }

    /// Writes psi_1(x)..psi_K(x) into `out`.
    pub fn evaluate_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.k_count());
        match self {
            ResponseBasis::Polynomial { k } => {
                let mut p = 1.0;
                for slot in out.iter_mut().take(*k) {
                    *slot = p;
                    p *= x;
                }
            }
            ResponseBasis::Mlp(m) => m.evaluate_into(x, out),
            ResponseBasis::Gp(g) => g.evaluate_into(x, out),
        }
    }

    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.k_count()];
        self.evaluate_into(x, &mut out);
        out
    }
}

/// Monomial basis psi_k(x) = x^{k-1}. K is capped at 8: higher monomials on
/// whitened data are too ill-conditioned to be useful.
pub fn polynomial_basis(k_count: usize) -> Result<ResponseBasis> {
    if !(1..=8).contains(&k_count) {
        return Err(Error::InvalidParam(format!(
            "polynomial basis order K must be in 1..=8, got {k_count}"
        )));
    }
    Ok(ResponseBasis::Polynomial { k: k_count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn monomials() {
        let b = polynomial_basis(2).unwrap();
        assert_eq!(b.evaluate(3.0), vec![1.0, 3.0]);
        let b = polynomial_basis(4).unwrap();
        assert_eq!(b.evaluate(-1.0), vec![1.0, -1.0, 1.0, -1.0]);
        let b = polynomial_basis(1).unwrap();
        assert_eq!(b.evaluate(17.3), vec![1.0]);
        assert_eq!(b.evaluate(0.0), vec![1.0]);
    }

    #[test]
    fn polynomial_at_zero_is_unit_vector() {
        let b = polynomial_basis(5).unwrap();
        assert_eq!(b.evaluate(0.0), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn order_guard() {
        assert!(polynomial_basis(0).is_err());
        assert!(polynomial_basis(9).is_err());
    }

    #[test]
    fn linearity_in_theta() {
        let b = polynomial_basis(3).unwrap();
        let f = |theta: &[f64], x: f64| -> f64 {
            b.evaluate(x).iter().zip(theta).map(|(p, t)| p * t).sum()
        };
        let t1 = [0.5, -1.0, 2.0];
        let t2 = [1.5, 0.3, -0.7];
        let (a, c) = (2.0, -3.0);
        let mix: Vec<f64> = t1.iter().zip(&t2).map(|(u, v)| a * u + c * v).collect();
        for &x in &[-2.0, 0.0, 0.7, 3.1] {
            assert_abs_diff_eq!(
                f(&mix, x),
                a * f(&t1, x) + c * f(&t2, x),
                epsilon = 1e-12
            );
        }
    }
}
