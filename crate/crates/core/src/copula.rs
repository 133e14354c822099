//! The optimization variable eta and the Gaussian-copula sampler that draws
//! response coefficients theta jointly with the frozen treatment samples.
//!
//! The copula couples K coefficient coordinates with one treatment-rank
//! coordinate. Sampling mixes a deterministic row of Gaussianized treatment
//! ranks with standard-normal base noise through a row-normalized
//! lower-triangular factor, then applies the Gaussian marginals of each
//! theta_k. Every step is differentiable in eta with the base noise held
//! fixed, and the backward pass lives next to the forward pass here.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Log-variances are clamped to this interval during optimization to keep
/// exp() away from overflow while still permitting near-deterministic
/// coefficients.
pub const LOG_VAR_CLAMP: f64 = 20.0;

/// Copula parameters: K Gaussian marginals (mean, log-variance) plus a
/// lower-triangular mixing factor over the K+1 coupled coordinates. The
/// diagonal is pinned to one and the upper triangle to zero; only the strict
/// lower triangle is free.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaParams {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    chol: Array2<f64>,
}

impl EtaParams {
    /// Builds parameters from the strict lower triangle of the mixing
    /// factor, row-major over rows 1..=K.
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>, strict_lower: &[f64]) -> Result<Self> {
        let k = mu.len();
        if log_var.len() != k {
            return Err(Error::InvalidParam(
                "mu and log_var must have the same length".into(),
            ));
        }
        let expected = k * (k + 1) / 2;
        if strict_lower.len() != expected {
            return Err(Error::InvalidParam(format!(
                "strict lower triangle needs {expected} entries for K={k}, got {}",
                strict_lower.len()
            )));
        }
        let mut chol = Array2::<f64>::eye(k + 1);
        let mut it = strict_lower.iter();
        for r in 1..=k {
            for c in 0..r {
                chol[[r, c]] = *it.next().unwrap();
            }
        }
        Ok(Self { mu, log_var, chol })
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    /// Number of free scalars: K(K+1)/2 + 2K.
    pub fn free_param_count(&self) -> usize {
        let k = self.k();
        k * (k + 1) / 2 + 2 * k
    }

    pub fn chol(&self) -> &Array2<f64> {
        &self.chol
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| (0.5 * lv).exp()).collect()
    }

    /// Flattens the free parameters: mu, then log_var, then the strict
    /// lower triangle row-major.
    pub fn pack(&self) -> Vec<f64> {
        let k = self.k();
        let mut out = Vec::with_capacity(self.free_param_count());
        out.extend_from_slice(&self.mu);
        out.extend_from_slice(&self.log_var);
        for r in 1..=k {
            for c in 0..r {
                out.push(self.chol[[r, c]]);
            }
        }
        out
    }

    pub fn unpack(k: usize, packed: &[f64]) -> Result<Self> {
        let expected = k * (k + 1) / 2 + 2 * k;
        if packed.len() != expected {
            return Err(Error::InvalidParam(format!(
                "packed eta needs {expected} entries for K={k}, got {}",
                packed.len()
            )));
        }
        Self::new(
            packed[..k].to_vec(),
            packed[k..2 * k].to_vec(),
            &packed[2 * k..],
        )
    }

    /// Human-readable name of the packed parameter at `index`.
    pub fn param_name(&self, index: usize) -> String {
        let k = self.k();
        if index < k {
            return format!("mu[{index}]");
        }
        if index < 2 * k {
            return format!("log_var[{}]", index - k);
        }
        let mut rest = index - 2 * k;
        for r in 1..=k {
            if rest < r {
                return format!("chol[{r},{rest}]");
            }
            rest -= r;
        }
        format!("param[{index}]")
    }

    /// Clamps log-variances into the optimization-safe interval.
    pub fn clamp_log_var(&mut self) {
        for lv in &mut self.log_var {
            *lv = lv.clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP);
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dto<'a> {
            k: usize,
            mu: &'a [f64],
            log_var: &'a [f64],
            chol_row_major: Vec<f64>,
        }
        serde_json::to_value(Dto {
            k: self.k(),
            mu: &self.mu,
            log_var: &self.log_var,
            chol_row_major: self.chol.iter().cloned().collect(),
        })
        .expect("eta serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Dto {
            k: usize,
            mu: Vec<f64>,
            log_var: Vec<f64>,
            chol_row_major: Vec<f64>,
        }
        let dto: Dto = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidParam(format!("eta json: {e}")))?;
        let dim = dto.k + 1;
        if dto.chol_row_major.len() != dim * dim {
            return Err(Error::InvalidParam("eta json: chol size mismatch".into()));
        }
        let mut strict = Vec::new();
        for r in 1..dim {
            for c in 0..r {
                strict.push(dto.chol_row_major[r * dim + c]);
            }
        }
        Self::new(dto.mu, dto.log_var, &strict)
    }
}

/// Row-normalizes a lower-triangular factor so the induced covariance of the
/// mixed coordinates is a correlation matrix. Returns (S, effective factor);
/// S = Gamma Gamma' has unit diagonal, and the first row of Gamma stays
/// (1, 0, ..., 0).
pub fn rescale_to_correlation(chol: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let dim = chol.nrows();
    let mut gamma = Array2::<f64>::zeros((dim, dim));
    for r in 0..dim {
        let norm: f64 = (0..=r).map(|c| chol[[r, c]] * chol[[r, c]]).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateMixingRow { row: r });
        }
        for c in 0..=r {
            gamma[[r, c]] = chol[[r, c]] / norm;
        }
    }
    let s = gamma.dot(&gamma.t());
    Ok((s, gamma))
}

/// Gaussianized rank grid Phi^{-1}((j - 1/2)/B) for j in 1..=B. Offset ranks
/// keep both tails finite.
pub fn gauss_rank_grid(batch: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..batch)
        .map(|j| normal.inverse_cdf((j as f64 + 0.5) / batch as f64))
        .collect()
}

/// One bin's coefficient draws.
#[derive(Debug, Clone)]
pub struct CopulaSample {
    /// K x B coefficient draws.
    pub theta: Array2<f64>,
    /// The bin's frozen treatment values, passed through untouched.
    pub x_row: Vec<f64>,
    /// The standard-normal base noise used (K x B), kept for pinned-noise
    /// gradient checks.
    pub base_noise: Array2<f64>,
}

/// Forward pass through the copula for one bin: mixed Gaussian rows and the
/// resulting theta draws.
#[derive(Debug, Clone)]
pub struct BinForward {
    /// K x B: theta_k = mu_k + sigma_k * v_mixed_k.
    pub theta: Array2<f64>,
    /// K x B: unit-variance mixed rows (before marginal scaling).
    pub v_mixed: Array2<f64>,
}

/// Mixes the deterministic first coordinate `u_row` with base noise through
/// `gamma` and applies the Gaussian marginals. The map Phi then inverse-CDF
/// of N(mu_k, sigma_k^2) collapses algebraically to mu_k + sigma_k * v, which
/// is what is computed.
pub fn mix_and_scale(
    gamma: &Array2<f64>,
    mu: &[f64],
    sigma: &[f64],
    u_row: &[f64],
    noise: &Array2<f64>,
) -> BinForward {
    let k = mu.len();
    let b = u_row.len();
    debug_assert_eq!(noise.dim(), (k, b));
    let mut v_mixed = Array2::<f64>::zeros((k, b));
    let mut theta = Array2::<f64>::zeros((k, b));
    for row in 1..=k {
        let g0 = gamma[[row, 0]];
        for j in 0..b {
            let mut v = g0 * u_row[j];
            for c in 1..=row {
                v += gamma[[row, c]] * noise[[c - 1, j]];
            }
            v_mixed[[row - 1, j]] = v;
            theta[[row - 1, j]] = mu[row - 1] + sigma[row - 1] * v;
        }
    }
    BinForward { theta, v_mixed }
}

/// Gradients of some scalar objective with respect to the copula inputs of
/// one bin, accumulated from d(objective)/d(theta).
#[derive(Debug, Clone)]
pub struct BinBackward {
    pub d_mu: Vec<f64>,
    pub d_log_var: Vec<f64>,
    /// (K+1) x (K+1), entries in rows 1..=K, cols 0..=row.
    pub d_gamma: Array2<f64>,
}

/// Backward pass matching `mix_and_scale`: chains d/d(theta) to the bin's
/// contributions to d/d(mu), d/d(log_var), d/d(gamma).
pub fn backprop_bin(
    gamma: &Array2<f64>,
    mu: &[f64],
    sigma: &[f64],
    u_row: &[f64],
    noise: &Array2<f64>,
    forward: &BinForward,
    d_theta: &Array2<f64>,
) -> BinBackward {
    let _ = (gamma, mu);
    let k = sigma.len();
    let b = u_row.len();
    let mut d_mu = vec![0.0; k];
    let mut d_log_var = vec![0.0; k];
    let mut d_gamma = Array2::<f64>::zeros((k + 1, k + 1));
    for kk in 0..k {
        let row = kk + 1;
        let mut acc_mu = 0.0;
        let mut acc_lv = 0.0;
        let mut acc_g0 = 0.0;
        for j in 0..b {
            let g = d_theta[[kk, j]];
            acc_mu += g;
            // theta = mu + exp(lv/2) v  =>  d theta / d lv = theta_dev / 2
            acc_lv += g * 0.5 * sigma[kk] * forward.v_mixed[[kk, j]];
            acc_g0 += g * sigma[kk] * u_row[j];
        }
        d_mu[kk] = acc_mu;
        d_log_var[kk] = acc_lv;
        d_gamma[[row, 0]] = acc_g0;
        for c in 1..=row {
            let mut acc = 0.0;
            for j in 0..b {
                acc += d_theta[[kk, j]] * sigma[kk] * noise[[c - 1, j]];
            }
            d_gamma[[row, c]] = acc;
        }
    }
    BinBackward {
        d_mu,
        d_log_var,
        d_gamma,
    }
}

/// Chains gradients through the row normalization Gamma = row / ||row||,
/// returning d/d(chol) on the strict lower triangle (row-major, rows 1..=K).
pub fn chain_gamma_to_chol(chol: &Array2<f64>, d_gamma: &Array2<f64>) -> Vec<f64> {
    let dim = chol.nrows();
    let k = dim - 1;
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for r in 1..dim {
        let norm: f64 = (0..=r).map(|c| chol[[r, c]] * chol[[r, c]]).sum::<f64>().sqrt();
        let inv = 1.0 / norm;
        let inv3 = inv * inv * inv;
        let dot: f64 = (0..=r).map(|c| d_gamma[[r, c]] * chol[[r, c]]).sum();
        for cp in 0..r {
            out.push(d_gamma[[r, cp]] * inv - dot * chol[[r, cp]] * inv3);
        }
    }
    out
}

fn draw_noise(k: usize, b: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut noise = Array2::<f64>::zeros((k, b));
    for v in noise.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    noise
}

/// Draws B coefficient samples coupled to the bin's frozen treatment
/// samples.
pub fn sample_theta_given_bin(
    eta: &EtaParams,
    x_hat_row: &[f64],
    rng: &mut impl Rng,
) -> Result<CopulaSample> {
    let noise = draw_noise(eta.k(), x_hat_row.len(), rng);
    sample_theta_given_bin_with_noise(eta, x_hat_row, noise)
}

/// Same as `sample_theta_given_bin` but with caller-pinned base noise.
pub fn sample_theta_given_bin_with_noise(
    eta: &EtaParams,
    x_hat_row: &[f64],
    base_noise: Array2<f64>,
) -> Result<CopulaSample> {
    let (_, gamma) = rescale_to_correlation(&eta.chol)?;
    let u_row = gauss_rank_grid(x_hat_row.len());
    let sigma = eta.sigmas();
    let fwd = mix_and_scale(&gamma, &eta.mu, &sigma, &u_row, &base_noise);
    Ok(CopulaSample {
        theta: fwd.theta,
        x_row: x_hat_row.to_vec(),
        base_noise,
    })
}

/// Pooled draws from the coefficient marginal: per-bin draws concatenated
/// along the batch axis into a K x (M*B) matrix. The treatment values in
/// `x_hat` never enter theta -- only its shape is used -- which is exactly
/// the marginal independence between theta and the instrument.
pub fn sample_theta_marginal(
    eta: &EtaParams,
    x_hat: &Array2<f64>,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    let (m, b) = x_hat.dim();
    let mut pooled = Array2::<f64>::zeros((eta.k(), m * b));
    for bin in 0..m {
        let row: Vec<f64> = (0..b).map(|j| x_hat[[bin, j]]).collect();
        let sample = sample_theta_given_bin(eta, &row, rng)?;
        for k in 0..eta.k() {
            for j in 0..b {
                pooled[[k, bin * b + j]] = sample.theta[[k, j]];
            }
        }
    }
    Ok(pooled)
}
