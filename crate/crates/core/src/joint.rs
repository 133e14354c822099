//! Alternative constraint mode matching the outcome distribution on a joint
//! (x, z) grid instead of the marginal per-z bins. Each retained cell pins
//! the copula's treatment coordinate to the Gaussianized rank of the cell's
//! x value within its z slice; the remaining coordinates then follow the
//! implied Gaussian conditional, so the solver machinery is reused
//! unchanged with cell-indexed constraints.

use ndarray::Array2;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::copula::{mix_and_scale, rescale_to_correlation, BinForward, EtaParams};
use crate::data::{Dataset, EmpiricalCdf};
use crate::error::{Error, Result};
use crate::estimator::{BinBasisValues, BinProblem, ObjectivePool, Problem};
use crate::preprocess::MomentDictionary;
use crate::response::ResponseBasis;

/// One retained joint-grid cell.
#[derive(Debug, Clone)]
pub struct JointCell {
    /// Whitened treatment value x of the cell.
    pub x_value: f64,
    /// Whitened instrument value z of the cell.
    pub z_value: f64,
    /// Observations assigned to the cell.
    pub count: usize,
    /// Gaussianized rank of the cell's x within its z slice; this is the
    /// pinned first coordinate of the copula vector.
    pub u_fixed: f64,
}

/// Joint constraint grid: retained cells and their per-cell moment targets.
#[derive(Debug, Clone)]
pub struct JointGrid {
    pub cells: Vec<JointCell>,
    /// n_cells x L targets.
    pub lhs: Array2<f64>,
}

impl JointGrid {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }
}

/// Default minimum number of observations a cell needs to be retained.
pub const DEFAULT_N_MIN: usize = 10;

/// Builds quantile grids over X and Z, assigns observations per axis
/// (nearest grid value, higher index on ties), drops cells thinner than
/// `n_min`, and computes per-cell moment targets.
pub fn build_joint_constraints(
    dataset: &Dataset,
    m_x: usize,
    m_z: usize,
    dict: &MomentDictionary,
    n_min: usize,
) -> Result<JointGrid> {
    if m_x == 0 || m_z == 0 {
        return Err(Error::InvalidParam("joint grid sizes must be >= 1".into()));
    }
    let x_cdf = EmpiricalCdf::new(dataset.x())?;
    let z_cdf = EmpiricalCdf::new(dataset.z())?;
    let x_grid: Vec<f64> = (1..=m_x)
        .map(|a| x_cdf.inverse_cdf(a as f64 / (m_x + 1) as f64))
        .collect::<Result<_>>()?;
    let z_grid: Vec<f64> = (1..=m_z)
        .map(|b| z_cdf.inverse_cdf(b as f64 / (m_z + 1) as f64))
        .collect::<Result<_>>()?;

    let assign = |v: f64, grid: &[f64]| -> usize {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (i, &g) in grid.iter().enumerate() {
            let d = (v - g).abs();
            if d <= best_dist {
                best_dist = d;
                best = i;
            }
        }
        best
    };

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m_x * m_z];
    let mut z_slice_members: Vec<Vec<usize>> = vec![Vec::new(); m_z];
    for i in 0..dataset.n() {
        let a = assign(dataset.x()[i], &x_grid);
        let b = assign(dataset.z()[i], &z_grid);
        members[b * m_x + a].push(i);
        z_slice_members[b].push(i);
    }

    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut cells = Vec::new();
    let mut lhs_rows: Vec<Vec<f64>> = Vec::new();
    for b in 0..m_z {
        let slice = &z_slice_members[b];
        let slice_x: Vec<f64> = slice.iter().map(|&i| dataset.x()[i]).collect();
        let slice_cdf = if slice_x.is_empty() {
            None
        } else {
            Some(EmpiricalCdf::new(&slice_x)?)
        };
        for a in 0..m_x {
            let cell_members = &members[b * m_x + a];
            if cell_members.len() < n_min {
                continue;
            }
            let cdf = slice_cdf.as_ref().expect("non-empty cell implies non-empty slice");
            let n_slice = slice_x.len() as f64;
            // midrank clamp keeps the Gaussianized rank finite
            let q = cdf
                .cdf(x_grid[a])
                .clamp(0.5 / n_slice, 1.0 - 0.5 / n_slice);
            let mut row = vec![0.0; dict.len()];
            for l in 1..=dict.len() {
                let sum: f64 = cell_members
                    .iter()
                    .map(|&i| dict.eval(l, dataset.y()[i]))
                    .sum();
                row[l - 1] = sum / cell_members.len() as f64;
            }
            cells.push(JointCell {
                x_value: x_grid[a],
                z_value: z_grid[b],
                count: cell_members.len(),
                u_fixed: normal.inverse_cdf(q),
            });
            lhs_rows.push(row);
        }
    }
    if cells.is_empty() {
        return Err(Error::AllCellsDropped { n_min });
    }
    let mut lhs = Array2::<f64>::zeros((cells.len(), dict.len()));
    for (r, row) in lhs_rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            lhs[[r, c]] = v;
        }
    }
    Ok(JointGrid { cells, lhs })
}

/// Draws theta from the copula conditional at the cell's Gaussianized
/// x-rank: the first coordinate is pinned to `u_fixed` and the rest follow
/// the implied Gaussian conditional exactly (the mixing factor is lower
/// triangular, so pinning the first input coordinate realizes it).
pub fn sample_theta_conditional(
    eta: &EtaParams,
    u_fixed: f64,
    batch: usize,
    rng: &mut impl Rng,
) -> Result<Array2<f64>> {
    let (_, gamma) = rescale_to_correlation(eta.chol())?;
    let k = eta.k();
    let mut noise = Array2::<f64>::zeros((k, batch));
    for v in noise.iter_mut() {
        *v = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
    }
    let u_row = vec![u_fixed; batch];
    let BinForward { theta, .. } = mix_and_scale(&gamma, &eta.mu, &eta.sigmas(), &u_row, &noise);
    Ok(theta)
}

/// Per-cell Monte Carlo right-hand sides: the response is evaluated at the
/// single cell value, no integration over x.
pub fn rhs_joint(
    basis: &ResponseBasis,
    grid: &JointGrid,
    dict: &MomentDictionary,
    per_cell_draws: &[Array2<f64>],
) -> Array2<f64> {
    let k = basis.k_count();
    let mut out = Array2::<f64>::zeros((grid.n_cells(), dict.len()));
    let mut psi = vec![0.0; k];
    for (cell_idx, cell) in grid.cells.iter().enumerate() {
        basis.evaluate_into(cell.x_value, &mut psi);
        let theta = &per_cell_draws[cell_idx];
        let batch = theta.ncols();
        let mut sums = vec![0.0; dict.len()];
        for j in 0..batch {
            let mut f = 0.0;
            for kk in 0..k {
                f += theta[[kk, j]] * psi[kk];
            }
            for l in 1..=dict.len() {
                sums[l - 1] += dict.eval(l, f);
            }
        }
        for l in 0..dict.len() {
            out[[cell_idx, l]] = sums[l] / batch as f64;
        }
    }
    out
}

/// Assembles the solver problem for joint mode: one constraint bin per
/// retained cell, plus a marginal draw pool for the objective (conditional
/// cell draws are not marginal draws, so pooling them would bias the
/// objective).
#[allow(clippy::too_many_arguments)]
pub fn joint_problem(
    grid: &JointGrid,
    basis: &ResponseBasis,
    dict: MomentDictionary,
    eps_abs: f64,
    eps_rel: f64,
    batch: usize,
    pool_blocks: usize,
    x_star: f64,
) -> Result<Problem> {
    if eps_abs <= 0.0 || eps_rel <= 0.0 {
        return Err(Error::InvalidParam("tolerances must be positive".into()));
    }
    let k = basis.k_count();
    let bins = grid
        .cells
        .iter()
        .map(|cell| BinProblem {
            u_row: vec![cell.u_fixed; batch],
            basis_values: BinBasisValues::Point(basis.evaluate(cell.x_value)),
        })
        .collect();
    let b = grid.lhs.mapv(|v| eps_abs.max(eps_rel * v.abs()));
    Ok(Problem {
        bins,
        lhs: grid.lhs.clone(),
        b,
        dict,
        psi_xstar: basis.evaluate(x_star),
        k,
        objective_pool: Some(ObjectivePool::new(pool_blocks.max(1), batch)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::gauss_rank_grid;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn grid_dataset(n: usize, coupled: bool) -> Dataset {
        // low-discrepancy uniforms over the unit square
        let mut z = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let v = (i as f64 * 0.754_877_666_f64).fract();
            z.push(u);
            x.push(if coupled { u } else { v });
            y.push(u + v);
        }
        Dataset::from_columns(z, x, y).unwrap()
    }

    #[test]
    fn independent_uniforms_keep_all_cells() {
        let ds = grid_dataset(3000, false);
        let dict = MomentDictionary::raw_moments(2).unwrap();
        let grid = build_joint_constraints(&ds, 3, 3, &dict, DEFAULT_N_MIN).unwrap();
        assert_eq!(grid.n_cells(), 9);
        assert!(grid.cells.iter().all(|c| c.count >= DEFAULT_N_MIN));
    }

    #[test]
    fn perfectly_coupled_axes_drop_off_diagonal() {
        let ds = grid_dataset(3000, true);
        let dict = MomentDictionary::raw_moments(2).unwrap();
        let grid = build_joint_constraints(&ds, 3, 3, &dict, DEFAULT_N_MIN).unwrap();
        // X = Z exactly: only cells with matching grid indices survive
        assert_eq!(grid.n_cells(), 3);
        for cell in &grid.cells {
            assert_abs_diff_eq!(cell.x_value, cell.z_value, epsilon = 1e-9);
        }
    }

    #[test]
    fn unreachable_threshold_errors() {
        let ds = grid_dataset(50, false);
        let dict = MomentDictionary::raw_moments(1).unwrap();
        assert!(matches!(
            build_joint_constraints(&ds, 3, 3, &dict, 51),
            Err(Error::AllCellsDropped { .. })
        ));
    }

    #[test]
    fn conditional_draws_have_gaussian_conditional_moments() {
        let eta = EtaParams::new(vec![0.5, -0.2], vec![0.3, -0.4], &[1.0, -0.6, 0.8]).unwrap();
        let (s, _) = rescale_to_correlation(eta.chol()).unwrap();
        let sigma = eta.sigmas();
        let u0 = 1.3;
        let batch = 60_000;
        let mut rng = stream_rng(4, &[0]);
        let theta = sample_theta_conditional(&eta, u0, batch, &mut rng).unwrap();
        for k in 0..2 {
            let want_mean = eta.mu[k] + sigma[k] * s[[k + 1, 0]] * u0;
            let want_var = sigma[k] * sigma[k] * (1.0 - s[[k + 1, 0]] * s[[k + 1, 0]]);
            let mean = theta.row(k).sum() / batch as f64;
            let var = theta
                .row(k)
                .iter()
                .map(|t| (t - mean) * (t - mean))
                .sum::<f64>()
                / batch as f64;
            let se_mean = want_var.sqrt() / (batch as f64).sqrt();
            assert_abs_diff_eq!(mean, want_mean, epsilon = 5.0 * se_mean);
            assert_abs_diff_eq!(var, want_var, epsilon = 0.05 * want_var.max(0.01));
        }
    }

    #[test]
    fn rhs_joint_deterministic_theta_is_plug_in() {
        let eta = EtaParams::new(vec![0.3, 1.1], vec![-60.0, -60.0], &[0.5, 0.2, -0.1]).unwrap();
        let basis = crate::response::polynomial_basis(2).unwrap();
        let dict = MomentDictionary::raw_moments(1).unwrap();
        let grid = JointGrid {
            cells: vec![JointCell {
                x_value: 0.7,
                z_value: 0.0,
                count: 100,
                u_fixed: 0.4,
            }],
            lhs: ndarray::array![[0.0]],
        };
        let mut rng = stream_rng(8, &[0]);
        let draws = vec![sample_theta_conditional(&eta, 0.4, 256, &mut rng).unwrap()];
        let r = rhs_joint(&basis, &grid, &dict, &draws);
        assert_abs_diff_eq!(r[[0, 0]], 0.3 + 1.1 * 0.7, epsilon = 1e-9);
    }

    #[test]
    fn rhs_joint_matches_closed_form_conditional_mean() {
        let eta = EtaParams::new(vec![0.4, -0.3], vec![-0.2, 0.3], &[1.5, 0.4, -0.9]).unwrap();
        let (s, _) = rescale_to_correlation(eta.chol()).unwrap();
        let sigma = eta.sigmas();
        let basis = crate::response::polynomial_basis(2).unwrap();
        let dict = MomentDictionary::raw_moments(1).unwrap();
        let (x_cell, u0) = (0.9, -0.7);
        let grid = JointGrid {
            cells: vec![JointCell {
                x_value: x_cell,
                z_value: 0.0,
                count: 100,
                u_fixed: u0,
            }],
            lhs: ndarray::array![[0.0]],
        };
        let batch = 10_000;
        let mut rng = stream_rng(10, &[0]);
        let draws = vec![sample_theta_conditional(&eta, u0, batch, &mut rng).unwrap()];
        let r = rhs_joint(&basis, &grid, &dict, &draws);
        let closed = (eta.mu[0] + sigma[0] * s[[1, 0]] * u0)
            + (eta.mu[1] + sigma[1] * s[[2, 0]] * u0) * x_cell;
        // conditional std of f at the cell
        let var_f = sigma[0] * sigma[0] * (1.0 - s[[1, 0]] * s[[1, 0]])
            + sigma[1] * sigma[1] * (1.0 - s[[2, 0]] * s[[2, 0]]) * x_cell * x_cell;
        let se = var_f.sqrt() / (batch as f64).sqrt() * 2.0;
        assert_abs_diff_eq!(r[[0, 0]], closed, epsilon = 3.0 * se);
    }

    #[test]
    fn identity_copula_joint_matches_marginal_rhs() {
        // theta independent of x: conditional draws coincide in law with
        // marginal draws, so both modes estimate the same cell moments
        let eta = EtaParams::new(vec![0.2, 0.8], vec![-0.4, -0.6], &[0.0, 0.0, 0.0]).unwrap();
        let basis = crate::response::polynomial_basis(2).unwrap();
        let dict = MomentDictionary::raw_moments(2).unwrap();
        let x_cell = 0.45;
        let grid = JointGrid {
            cells: vec![JointCell {
                x_value: x_cell,
                z_value: 0.1,
                count: 50,
                u_fixed: 0.9,
            }],
            lhs: ndarray::array![[0.0, 0.0]],
        };
        let batch = 40_000;
        let mut rng = stream_rng(12, &[0]);
        let cond = vec![sample_theta_conditional(&eta, 0.9, batch, &mut rng).unwrap()];
        let r_joint = rhs_joint(&basis, &grid, &dict, &cond);

        // marginal-mode estimate at a constant-x bin
        let x_row = vec![x_cell; batch];
        let mut x_hat = Array2::<f64>::zeros((1, batch));
        for j in 0..batch {
            x_hat[[0, j]] = x_cell;
        }
        let sample = crate::copula::sample_theta_given_bin(&eta, &x_row, &mut rng).unwrap();
        let r_marg = crate::estimator::rhs(&basis, &x_hat, &dict, &[sample]);
        for l in 0..2 {
            let tol = 6.0 / (batch as f64).sqrt();
            assert_abs_diff_eq!(r_joint[[0, l]], r_marg[[0, l]], epsilon = 3.0 * tol);
        }
        let _ = gauss_rank_grid(4);
    }
}
