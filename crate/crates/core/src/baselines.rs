//! Synthetic data designs, their analytic interventional-effect curves, and
//! the two-stage least squares point estimator used as a reference.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Synthetic designs. Both share the treatment equation
/// X = alpha Z + beta C + e_X with independent standard-normal Z, C, e_X,
/// e_Y; they differ in the outcome equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// Y = X - 6 C + e_Y; E[Y | do(x)] = x.
    LinearGaussian,
    /// Y = 0.3 X^2 - 1.5 X C + e_Y; E[Y | do(x)] = 0.3 x^2.
    Nonadditive,
}

/// Generator specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub design: Design,
    /// Instrument strength.
    pub alpha: f64,
    /// Confounding strength.
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
}

/// Raw generated columns in original units.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SyntheticData {
    pub fn into_dataset(self) -> Result<Dataset> {
        Dataset::from_columns(self.z, self.x, self.y)
    }
}

/// The analytic interventional expectation of a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueEffect {
    pub design: Design,
}

impl TrueEffect {
    pub fn eval(&self, x: f64) -> f64 {
        match self.design {
            Design::LinearGaussian => x,
            Design::Nonadditive => 0.3 * x * x,
        }
    }
}

/// Draws n observations from the design. Deterministic given the seed.
pub fn generate(spec: &SyntheticSpec) -> (SyntheticData, TrueEffect) {
    let mut rng = stream_rng(spec.seed, &[0x67656e]);
    let mut z = Vec::with_capacity(spec.n);
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let zi: f64 = StandardNormal.sample(&mut rng);
        let ci: f64 = StandardNormal.sample(&mut rng);
        let ex: f64 = StandardNormal.sample(&mut rng);
        let ey: f64 = StandardNormal.sample(&mut rng);
        let xi = spec.alpha * zi + spec.beta * ci + ex;
        let yi = match spec.design {
            Design::LinearGaussian => xi - 6.0 * ci + ey,
            Design::Nonadditive => 0.3 * xi * xi - 1.5 * xi * ci + ey,
        };
        z.push(zi);
        x.push(xi);
        y.push(yi);
    }
    (
        SyntheticData { z, x, y },
        TrueEffect {
            design: spec.design,
        },
    )
}

/// Just-identified two-stage least squares fit in original units.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoSlsFit {
    pub slope: f64,
    pub intercept: f64,
}

impl TwoSlsFit {
    pub fn effect(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// slope = Cov(Z, Y) / Cov(Z, X), intercept = mean(Y) - slope mean(X),
/// computed from the whitened data and rescaled to original units.
pub fn two_stage_least_squares(dataset: &Dataset) -> Result<TwoSlsFit> {
    let n = dataset.n() as f64;
    // whitened variables have mean 0
    let cov_zx: f64 = dataset
        .z()
        .iter()
        .zip(dataset.x())
        .map(|(z, x)| z * x)
        .sum::<f64>()
        / n;
    let cov_zy: f64 = dataset
        .z()
        .iter()
        .zip(dataset.y())
        .map(|(z, y)| z * y)
        .sum::<f64>()
        / n;
    if cov_zx.abs() < 1e-12 {
        return Err(Error::WeakInstrument);
    }
    let w = dataset.whitening();
    let slope = (cov_zy / cov_zx) * (w.y.std / w.x.std);
    let intercept = w.y.mean - slope * w.x.mean;
    Ok(TwoSlsFit { slope, intercept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn true_effect_curves() {
        let lin = TrueEffect {
            design: Design::LinearGaussian,
        };
        assert_abs_diff_eq!(lin.eval(2.0), 2.0);
        let quad = TrueEffect {
            design: Design::Nonadditive,
        };
        assert_abs_diff_eq!(quad.eval(2.0), 1.2);
    }

    #[test]
    fn generator_deterministic() {
        let spec = SyntheticSpec {
            design: Design::Nonadditive,
            alpha: 0.5,
            beta: 3.0,
            n: 100,
            seed: 9,
        };
        let (a, _) = generate(&spec);
        let (b, _) = generate(&spec);
        assert_eq!(a.z, b.z);
        assert_eq!(a.x, b.x);
        assert_eq!(a.y, b.y);
    }

    #[test]
    fn generator_moments() {
        let spec = SyntheticSpec {
            design: Design::LinearGaussian,
            alpha: 3.0,
            beta: 0.5,
            n: 100_000,
            seed: 11,
        };
        let (data, _) = generate(&spec);
        let mean = data.z.iter().sum::<f64>() / data.z.len() as f64;
        let std = (data.z.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / data.z.len() as f64)
            .sqrt();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 0.02);
        assert_abs_diff_eq!(std, 1.0, epsilon = 0.02);
    }

    #[test]
    fn two_sls_recovers_unit_slope() {
        let spec = SyntheticSpec {
            design: Design::LinearGaussian,
            alpha: 3.0,
            beta: 0.5,
            n: 5000,
            seed: 5,
        };
        let (data, _) = generate(&spec);
        let ds = data.into_dataset().unwrap();
        let fit = two_stage_least_squares(&ds).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 0.05);
    }

    #[test]
    fn two_sls_exact_on_deterministic_line() {
        // Y = 2 X, X = Z exactly
        let z: Vec<f64> = (0..50).map(|i| i as f64 * 0.1 - 2.0).collect();
        let x = z.clone();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let ds = Dataset::from_columns(z, x, y).unwrap();
        let fit = two_stage_least_squares(&ds).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn weak_instrument_rejected() {
        // X independent of Z by construction
        let z: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let x: Vec<f64> = (0..100)
            .map(|i| if (i / 2) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let y: Vec<f64> = x.iter().map(|v| v * 3.0).collect();
        let ds = Dataset::from_columns(z, x, y).unwrap();
        assert!(matches!(
            two_stage_least_squares(&ds),
            Err(Error::WeakInstrument)
        ));
    }

    #[test]
    fn constant_shift_moves_only_intercept() {
        let spec = SyntheticSpec {
            design: Design::LinearGaussian,
            alpha: 3.0,
            beta: 0.5,
            n: 2000,
            seed: 8,
        };
        let (data, _) = generate(&spec);
        let shifted: Vec<f64> = data.y.iter().map(|v| v + 10.0).collect();
        let ds1 = Dataset::from_columns(data.z.clone(), data.x.clone(), data.y).unwrap();
        let ds2 = Dataset::from_columns(data.z, data.x, shifted).unwrap();
        let f1 = two_stage_least_squares(&ds1).unwrap();
        let f2 = two_stage_least_squares(&ds2).unwrap();
        assert_abs_diff_eq!(f1.slope, f2.slope, epsilon = 1e-9);
        assert_abs_diff_eq!(f2.intercept - f1.intercept, 10.0, epsilon = 1e-9);
    }
}
