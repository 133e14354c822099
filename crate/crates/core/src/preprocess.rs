//! Constraint preprocessing: the z-grid and bin assignment, moment targets
//! with spline smoothing, tolerances, and the frozen per-bin treatment
//! samples reused for the entire optimization.

use ndarray::Array2;
use serde::Serialize;

use crate::data::{Dataset, EmpiricalCdf};
use crate::error::{Error, Result};
use crate::exec;
use crate::spline;

/// Instrument grid z^(m) = F_Z^{-1}(m/(M+1)) plus the observation-to-bin
/// assignment (nearest grid point, higher bin on ties).
#[derive(Debug, Clone)]
pub struct ZGrid {
    points: Vec<f64>,
    bin_assignment: Vec<usize>,
    bin_members: Vec<Vec<usize>>,
}

impl ZGrid {
    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bin_of(&self, obs: usize) -> usize {
        self.bin_assignment[obs]
    }

    pub fn members(&self, bin: usize) -> &[usize] {
        &self.bin_members[bin]
    }
}

/// Builds the z-grid and assigns every observation to its nearest grid
/// point. Errors if any bin ends up empty.
pub fn make_z_grid(dataset: &Dataset, m_count: usize) -> Result<ZGrid> {
    if m_count == 0 {
        return Err(Error::InvalidParam("m_count must be >= 1".into()));
    }
    let cdf = EmpiricalCdf::new(dataset.z())?;
    let mut points = Vec::with_capacity(m_count);
    for m in 1..=m_count {
        points.push(cdf.inverse_cdf(m as f64 / (m_count + 1) as f64)?);
    }

    let mut bin_assignment = Vec::with_capacity(dataset.n());
    let mut bin_members = vec![Vec::new(); m_count];
    for (i, &z) in dataset.z().iter().enumerate() {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (m, &g) in points.iter().enumerate() {
            let d = (z - g).abs();
            // <= keeps the highest index among ties
            if d <= best_dist {
                best_dist = d;
                best = m;
            }
        }
        bin_assignment.push(best);
        bin_members[best].push(i);
    }
    if let Some(empty) = bin_members.iter().position(|b| b.is_empty()) {
        return Err(Error::EmptyBin {
            bin: empty,
            m: m_count,
        });
    }
    Ok(ZGrid {
        points,
        bin_assignment,
        bin_members,
    })
}

/// Dictionary of raw moments: phi_l(y) = y^l for l in 1..=L. Each phi is
/// smooth, so gradients flow through the constraint right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MomentDictionary {
    l_dict: usize,
}

impl MomentDictionary {
    pub fn raw_moments(l_dict: usize) -> Result<Self> {
        if l_dict == 0 {
            return Err(Error::InvalidParam("dictionary needs at least 1 moment".into()));
        }
        Ok(Self { l_dict })
    }

    pub fn len(&self) -> usize {
        self.l_dict
    }

    pub fn is_empty(&self) -> bool {
        self.l_dict == 0
    }

    /// phi_l(y) = y^l with 1-based l.
    pub fn eval(&self, l: usize, y: f64) -> f64 {
        y.powi(l as i32)
    }

    /// d phi_l / dy = l * y^{l-1}.
    pub fn eval_deriv(&self, l: usize, y: f64) -> f64 {
        l as f64 * y.powi(l as i32 - 1)
    }
}

/// Precomputed constraint data: raw and smoothed targets, tolerances, and
/// the frozen per-bin treatment samples. Immutable once built.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub lhs: Array2<f64>,
    pub lhs_smoothed: Array2<f64>,
    pub b: Array2<f64>,
    pub x_hat: Array2<f64>,
    pub eps_abs: f64,
    pub eps_rel: f64,
}

impl ConstraintSet {
    pub fn m(&self) -> usize {
        self.lhs.nrows()
    }

    pub fn l_dict(&self) -> usize {
        self.lhs.ncols()
    }

    pub fn batch(&self) -> usize {
        self.x_hat.ncols()
    }

    /// JSON view with matrices flattened row-major and dimensions recorded.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dto<'a> {
            m: usize,
            l_dict: usize,
            b_batch: usize,
            eps_abs: f64,
            eps_rel: f64,
            lhs: &'a [f64],
            lhs_smoothed: &'a [f64],
            tolerances: &'a [f64],
            x_hat: &'a [f64],
        }
        serde_json::to_value(Dto {
            m: self.m(),
            l_dict: self.l_dict(),
            b_batch: self.batch(),
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            lhs: self.lhs.as_slice().unwrap(),
            lhs_smoothed: self.lhs_smoothed.as_slice().unwrap(),
            tolerances: self.b.as_slice().unwrap(),
            x_hat: self.x_hat.as_slice().unwrap(),
        })
        .expect("constraint set serializes")
    }
}

/// LHS_{m,l}: sample mean of phi_l(y_i) over bin m.
pub fn estimate_lhs(
    dataset: &Dataset,
    grid: &ZGrid,
    dict: &MomentDictionary,
) -> Result<Array2<f64>> {
    let m_count = grid.m();
    let mut lhs = Array2::<f64>::zeros((m_count, dict.len()));
    for m in 0..m_count {
        let members = grid.members(m);
        if members.is_empty() {
            return Err(Error::EmptyBin { bin: m, m: m_count });
        }
        for l in 1..=dict.len() {
            let sum: f64 = members.iter().map(|&i| dict.eval(l, dataset.y()[i])).sum();
            lhs[[m, l - 1]] = sum / members.len() as f64;
        }
    }
    Ok(lhs)
}

/// Residual budget corresponding to the reference smoothing factor 0.2.
pub const SMOOTHING_FACTOR: f64 = 0.2;

/// Smooths each dictionary column across the grid index with a cubic
/// smoothing spline; fewer than 4 grid points pass through unchanged.
pub fn smooth_lhs(lhs: &Array2<f64>) -> Array2<f64> {
    let (m, l_dict) = lhs.dim();
    let cols: Vec<Vec<f64>> = exec::map_indexed(l_dict, |l| {
        let col: Vec<f64> = (0..m).map(|i| lhs[[i, l]]).collect();
        spline::smooth_column(&col, SMOOTHING_FACTOR)
    });
    let mut out = Array2::<f64>::zeros((m, l_dict));
    for (l, col) in cols.iter().enumerate() {
        for i in 0..m {
            out[[i, l]] = col[i];
        }
    }
    out
}

/// b_{m,l} = max(eps_abs, eps_rel * |lhs_{m,l}|), strictly positive.
pub fn compute_tolerances(
    lhs_smoothed: &Array2<f64>,
    eps_abs: f64,
    eps_rel: f64,
) -> Result<Array2<f64>> {
    if eps_abs <= 0.0 || eps_rel <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "tolerances must be positive: eps_abs={eps_abs}, eps_rel={eps_rel}"
        )));
    }
    Ok(lhs_smoothed.mapv(|v| eps_abs.max(eps_rel * v.abs())))
}

/// Freezes one batch of treatment samples per bin via inverse-CDF sampling
/// at the uniform grid (j-1)/(B-1). Rows are non-decreasing.
pub fn freeze_x_samples(dataset: &Dataset, grid: &ZGrid, batch: usize) -> Result<Array2<f64>> {
    if batch < 2 {
        return Err(Error::InvalidParam("batch size must be >= 2".into()));
    }
    let m_count = grid.m();
    let mut x_hat = Array2::<f64>::zeros((m_count, batch));
    for m in 0..m_count {
        let members = grid.members(m);
        if members.is_empty() {
            return Err(Error::EmptyBin { bin: m, m: m_count });
        }
        let xs: Vec<f64> = members.iter().map(|&i| dataset.x()[i]).collect();
        let cdf = EmpiricalCdf::new(&xs)?;
        for j in 0..batch {
            let q = j as f64 / (batch - 1) as f64;
            x_hat[[m, j]] = cdf.inverse_cdf(q)?;
        }
    }
    Ok(x_hat)
}

/// Builds the full constraint set in the order grid -> LHS -> smoothing ->
/// tolerances -> frozen samples.
pub fn build_constraints(
    dataset: &Dataset,
    grid: &ZGrid,
    dict: &MomentDictionary,
    eps_abs: f64,
    eps_rel: f64,
    batch: usize,
) -> Result<ConstraintSet> {
    let lhs = estimate_lhs(dataset, grid, dict)?;
    let lhs_smoothed = smooth_lhs(&lhs);
    let b = compute_tolerances(&lhs_smoothed, eps_abs, eps_rel)?;
    let x_hat = freeze_x_samples(dataset, grid, batch)?;
    Ok(ConstraintSet {
        lhs,
        lhs_smoothed,
        b,
        x_hat,
        eps_abs,
        eps_rel,
    })
}
