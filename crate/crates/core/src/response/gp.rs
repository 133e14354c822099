//! Gaussian-process sample bases: K independent GP regressions on random
//! subsamples, one posterior draw each on a dense grid. The basis functions
//! are the linear interpolants of those draws, constant outside the grid.

use ndarray::{Array1, Array2};
use rand::seq::index::sample as index_sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::linalg;
use crate::rng::stream_rng;

use super::ResponseBasis;

/// Configuration for the GP basis fit. The kernel is fixed to
/// polynomial(degree 3) + RBF + white noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpFitConfig {
    /// Subsample size N' drawn (without replacement) per basis function.
    pub subsample: usize,
    /// White-noise variance added to the training diagonal; keeps the
    /// kernel matrix well conditioned.
    pub white_noise: f64,
    /// Inhomogeneity constant of the polynomial kernel (x.x' + c)^3.
    pub poly_offset: f64,
    /// RBF length scale.
    pub length_scale: f64,
    /// Number of evaluation grid points.
    pub grid_size: usize,
}

impl Default for GpFitConfig {
    fn default() -> Self {
        Self {
            subsample: 200,
            white_noise: 0.4,
            poly_offset: 1.0,
            length_scale: 1.0,
            grid_size: 256,
        }
    }
}

/// One posterior draw per basis function, tabulated on a shared grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpBasis {
    grid_lo: f64,
    grid_step: f64,
    grid_size: usize,
    /// k x grid_size, row-major
    values: Vec<f64>,
    k: usize,
    pub seed: u64,
}

impl GpBasis {
    pub fn k_count(&self) -> usize {
        self.k
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_size)
            .map(|i| self.grid_lo + i as f64 * self.grid_step)
            .collect()
    }

    /// Linear interpolation on the grid, constant beyond the ends.
    pub fn evaluate_into(&self, x: f64, out: &mut [f64]) {
        let g = self.grid_size;
        let t = (x - self.grid_lo) / self.grid_step;
        let (i, frac) = if t <= 0.0 {
            (0usize, 0.0)
        } else if t >= (g - 1) as f64 {
            (g - 2, 1.0)
        } else {
            let i = t.floor() as usize;
            (i, t - i as f64)
        };
        for k in 0..self.k {
            let a = self.values[k * g + i];
            let b = self.values[k * g + i + 1];
            out[k] = a + frac * (b - a);
        }
    }
}

fn kernel(a: f64, b: f64, cfg: &GpFitConfig) -> f64 {
    let poly = (a * b + cfg.poly_offset).powi(3);
    let d = a - b;
    let rbf = (-d * d / (2.0 * cfg.length_scale * cfg.length_scale)).exp();
    poly + rbf
}

/// Fits K GP regressions on independent subsamples and draws one posterior
/// sample from each over the evaluation grid. Deterministic given the seed.
pub fn fit_gp_basis(
    dataset: &Dataset,
    k_count: usize,
    config: &GpFitConfig,
    seed: u64,
) -> Result<ResponseBasis> {
    if k_count == 0 {
        return Err(Error::InvalidParam("basis size K must be >= 1".into()));
    }
    if config.subsample > dataset.n() {
        return Err(Error::InvalidParam(format!(
            "subsample {} exceeds dataset size {}",
            config.subsample,
            dataset.n()
        )));
    }
    if config.white_noise <= 0.0 {
        return Err(Error::InvalidParam("white-noise variance must be > 0".into()));
    }
    if config.grid_size < 2 {
        return Err(Error::InvalidParam("grid needs at least 2 points".into()));
    }

    let xs = dataset.x();
    let lo_data = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi_data = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (hi_data - lo_data);
    let lo = lo_data - pad;
    let hi = hi_data + pad;
    let g = config.grid_size;
    let step = (hi - lo) / (g - 1) as f64;
    let grid: Vec<f64> = (0..g).map(|i| lo + i as f64 * step).collect();

    let draws: Vec<Result<Vec<f64>>> = exec::map_indexed(k_count, |k| {
        sample_posterior(dataset, &grid, config, seed, k as u64)
    });
    let mut values = Vec::with_capacity(k_count * g);
    for d in draws {
        values.extend(d?);
    }

    Ok(ResponseBasis::Gp(GpBasis {
        grid_lo: lo,
        grid_step: step,
        grid_size: g,
        values,
        k: k_count,
        seed,
    }))
}

fn sample_posterior(
    dataset: &Dataset,
    grid: &[f64],
    cfg: &GpFitConfig,
    seed: u64,
    k_index: u64,
) -> Result<Vec<f64>> {
    let mut rng = stream_rng(seed, &[0x6770, k_index]);
    let n = dataset.n();
    let np = cfg.subsample;
    let idx = index_sample(&mut rng, n, np);
    let xs: Vec<f64> = idx.iter().map(|i| dataset.x()[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|i| dataset.y()[i]).collect();

    let mut k_train = Array2::<f64>::zeros((np, np));
    for i in 0..np {
        for j in 0..=i {
            let v = kernel(xs[i], xs[j], cfg);
            k_train[[i, j]] = v;
            k_train[[j, i]] = v;
        }
        k_train[[i, i]] += cfg.white_noise;
    }
    let (l_train, _) = linalg::cholesky_with_jitter(&k_train, 1e-3)
        .ok_or(Error::KernelNotPositiveDefinite { jitter: 1e-3 })?;

    let alpha = linalg::cholesky_solve(&l_train, &Array1::from(ys));

    let g = grid.len();
    let mut k_star = Array2::<f64>::zeros((np, g));
    for i in 0..np {
        for (j, &gx) in grid.iter().enumerate() {
            k_star[[i, j]] = kernel(xs[i], gx, cfg);
        }
    }

    // posterior mean and covariance on the grid
    let mut mean = vec![0.0; g];
    for j in 0..g {
        let mut s = 0.0;
        for i in 0..np {
            s += k_star[[i, j]] * alpha[i];
        }
        mean[j] = s;
    }
    let mut solved = Array2::<f64>::zeros((np, g));
    for j in 0..g {
        let col = Array1::from_iter((0..np).map(|i| k_star[[i, j]]));
        let s = linalg::cholesky_solve(&l_train, &col);
        for i in 0..np {
            solved[[i, j]] = s[i];
        }
    }
    let mut cov = Array2::<f64>::zeros((g, g));
    for a in 0..g {
        for b in 0..=a {
            let mut v = kernel(grid[a], grid[b], cfg);
            for i in 0..np {
                v -= k_star[[i, a]] * solved[[i, b]];
            }
            cov[[a, b]] = v;
            cov[[b, a]] = v;
        }
    }
    let (l_post, _) = linalg::cholesky_with_jitter(&cov, 1e-3)
        .ok_or(Error::KernelNotPositiveDefinite { jitter: 1e-3 })?;

    let noise: Vec<f64> = (0..g).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut draw = vec![0.0; g];
    for i in 0..g {
        let mut s = mean[i];
        for j in 0..=i {
            s += l_post[[i, j]] * noise[j];
        }
        draw[i] = s;
    }
    Ok(draw)
}
