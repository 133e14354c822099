//! Monte Carlo evaluation of the objective, the constraint right-hand
//! sides, the relaxed constraints, the augmented Lagrangian, and its
//! gradient with respect to eta.
//!
//! Gradients are hand-derived through the reparameterized sampler: the
//! computation graph is shallow and fixed (mix, scale, basis contraction,
//! moment, penalty), so the chain rule is spelled out instead of taping.
//! Everything is pure given (eta, base noise); bins evaluate independently
//! and reduce in index order, so fixed seeds give bit-identical results in
//! both the rayon and sequential builds.

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::copula::{
    self, backprop_bin, chain_gamma_to_chol, gauss_rank_grid, mix_and_scale, rescale_to_correlation,
    EtaParams,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::preprocess::{ConstraintSet, MomentDictionary};
use crate::response::ResponseBasis;
use crate::rng::stream_rng;

/// Which bound is being solved. The objective enters the Lagrangian with
/// sign + (lower) or - (upper); penalties are sense-independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Lower,
    Upper,
}

impl Sense {
    pub fn objective_sign(self) -> f64 {
        match self {
            Sense::Lower => 1.0,
            Sense::Upper => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sense::Lower => "lower",
            Sense::Upper => "upper",
        }
    }
}

/// Multipliers and temperature of the augmented Lagrangian.
#[derive(Debug, Clone)]
pub struct LagrangianState {
    /// n_bins x L, non-negative.
    pub lambda: Array2<f64>,
    pub tau: f64,
    pub sense: Sense,
}

impl LagrangianState {
    pub fn new(n_bins: usize, l_dict: usize, tau0: f64, sense: Sense) -> Self {
        Self {
            lambda: Array2::zeros((n_bins, l_dict)),
            tau: tau0,
            sense,
        }
    }
}

/// Constraint residuals at one eta.
#[derive(Debug, Clone)]
pub struct ConstraintResiduals {
    /// Monte Carlo estimates of the right-hand sides.
    pub rhs: Array2<f64>,
    /// c = b - |LHS - RHS|; satisfied iff c >= 0.
    pub c: Array2<f64>,
    /// Entries with c < 0 (strict).
    pub violation_count: usize,
}

impl ConstraintResiduals {
    /// Largest violation, max(-c); negative when everything is satisfied.
    pub fn max_violation(&self) -> f64 {
        self.c.iter().fold(f64::NEG_INFINITY, |acc, &c| acc.max(-c))
    }
}

/// Per-constraint penalty of the augmented Lagrangian (two-branch form,
/// continuous at tau * c = lambda).
pub fn penalty(c: f64, lambda: f64, tau: f64) -> f64 {
    if tau * c <= lambda {
        -lambda * c + 0.5 * tau * c * c
    } else {
        -lambda * lambda / (2.0 * tau)
    }
}

/// d penalty / d c.
pub fn penalty_dc(c: f64, lambda: f64, tau: f64) -> f64 {
    if tau * c <= lambda {
        -lambda + tau * c
    } else {
        0.0
    }
}

/// Basis values attached to one bin of constraints.
#[derive(Debug, Clone)]
pub enum BinBasisValues {
    /// K x B: the j-th draw is evaluated at the bin's j-th frozen sample.
    PerDraw(Array2<f64>),
    /// K: every draw is evaluated at the one cell value (joint mode).
    Point(Vec<f64>),
}

/// One bin (or joint-mode cell) of the constraint problem.
#[derive(Debug, Clone)]
pub struct BinProblem {
    /// Gaussianized first coordinate handed to the copula: the rank grid in
    /// marginal mode, a constant Gaussianized cell rank in joint mode.
    pub u_row: Vec<f64>,
    pub basis_values: BinBasisValues,
}

impl BinProblem {
    fn tiled(&self, times: usize) -> BinProblem {
        let b = self.u_row.len();
        let mut u = Vec::with_capacity(b * times);
        for _ in 0..times {
            u.extend_from_slice(&self.u_row);
        }
        let basis_values = match &self.basis_values {
            BinBasisValues::PerDraw(psi) => {
                let k = psi.nrows();
                let mut out = Array2::<f64>::zeros((k, b * times));
                for t in 0..times {
                    for kk in 0..k {
                        for j in 0..b {
                            out[[kk, t * b + j]] = psi[[kk, j]];
                        }
                    }
                }
                BinBasisValues::PerDraw(out)
            }
            BinBasisValues::Point(p) => BinBasisValues::Point(p.clone()),
        };
        BinProblem {
            u_row: u,
            basis_values,
        }
    }
}

/// The full evaluation problem for one intervention level: bins, targets,
/// tolerances, and the basis evaluated at x_star. Immutable; shared across
/// steps.
#[derive(Debug, Clone)]
pub struct Problem {
    pub bins: Vec<BinProblem>,
    /// Smoothed targets, n_bins x L.
    pub lhs: Array2<f64>,
    /// Tolerances, n_bins x L.
    pub b: Array2<f64>,
    pub dict: MomentDictionary,
    pub psi_xstar: Vec<f64>,
    pub k: usize,
}

impl Problem {
    /// Marginal-mode problem: one bin per z-grid point, basis values frozen
    /// at the per-bin treatment samples.
    pub fn marginal(
        constraints: &ConstraintSet,
        basis: &ResponseBasis,
        dict: MomentDictionary,
        x_star: f64,
    ) -> Self {
        let (m, batch) = constraints.x_hat.dim();
        let k = basis.k_count();
        let u_row = gauss_rank_grid(batch);
        let mut bins = Vec::with_capacity(m);
        for bin in 0..m {
            let mut psi = Array2::<f64>::zeros((k, batch));
            let mut vals = vec![0.0; k];
            for j in 0..batch {
                basis.evaluate_into(constraints.x_hat[[bin, j]], &mut vals);
                for kk in 0..k {
                    psi[[kk, j]] = vals[kk];
                }
            }
            bins.push(BinProblem {
                u_row: u_row.clone(),
                basis_values: BinBasisValues::PerDraw(psi),
            });
        }
        Problem {
            bins,
            lhs: constraints.lhs_smoothed.clone(),
            b: constraints.b.clone(),
            dict,
            psi_xstar: basis.evaluate(x_star),
            k,
        }
    }

    /// Same problem with every bin's draw count multiplied, for lower-noise
    /// verification passes.
    pub fn tiled(&self, times: usize) -> Problem {
        Problem {
            bins: self.bins.iter().map(|b| b.tiled(times)).collect(),
            lhs: self.lhs.clone(),
            b: self.b.clone(),
            dict: self.dict,
            psi_xstar: self.psi_xstar.clone(),
            k: self.k,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn l_dict(&self) -> usize {
        self.dict.len()
    }

    pub fn batch(&self) -> usize {
        self.bins.first().map(|b| b.u_row.len()).unwrap_or(0)
    }
}

/// Where the base noise for one evaluation comes from.
#[derive(Debug, Clone, Copy)]
pub enum StepNoise<'a> {
    /// Per-bin streams derived from (master, step, bin); scheduling-proof.
    Seeded { master: u64, step: u64 },
    /// Caller-pinned noise, one K x B matrix per bin.
    Pinned(&'a [Array2<f64>]),
}

impl StepNoise<'_> {
    fn for_bin(&self, bin: usize, k: usize, b: usize) -> Array2<f64> {
        match self {
            StepNoise::Seeded { master, step } => {
                let mut rng = stream_rng(*master, &[0x6e6f, *step, bin as u64]);
                let mut noise = Array2::<f64>::zeros((k, b));
                for v in noise.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                noise
            }
            StepNoise::Pinned(all) => all[bin].clone(),
        }
    }
}

/// Everything produced by one evaluation of the Lagrangian.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub residuals: ConstraintResiduals,
    pub lagrangian: f64,
    /// Monte Carlo standard error of the objective mean.
    pub objective_se: f64,
}

struct BinOut {
    rhs_row: Vec<f64>,
    c_row: Vec<f64>,
    xi_sum: f64,
    viol: usize,
    obj_sum: f64,
    obj_sq_sum: f64,
    backward: Option<copula::BinBackward>,
}

#[allow(clippy::too_many_arguments)]
fn eval_bin(
    bin: &BinProblem,
    gamma: &Array2<f64>,
    mu: &[f64],
    sigma: &[f64],
    psi_xstar: &[f64],
    dict: &MomentDictionary,
    lhs_row: &[f64],
    b_row: &[f64],
    lambda_row: &[f64],
    tau: f64,
    obj_sign: f64,
    pooled_draws: f64,
    noise: Array2<f64>,
    want_grad: bool,
) -> BinOut {
    let k = mu.len();
    let batch = bin.u_row.len();
    let l_dict = lhs_row.len();
    let fwd = mix_and_scale(gamma, mu, sigma, &bin.u_row, &noise);

    // response values per draw
    let mut f = vec![0.0; batch];
    match &bin.basis_values {
        BinBasisValues::PerDraw(psi) => {
            for j in 0..batch {
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += fwd.theta[[kk, j]] * psi[[kk, j]];
                }
                f[j] = acc;
            }
        }
        BinBasisValues::Point(psi) => {
            for j in 0..batch {
                let mut acc = 0.0;
                for kk in 0..k {
                    acc += fwd.theta[[kk, j]] * psi[kk];
                }
                f[j] = acc;
            }
        }
    }

    let mut rhs_row = vec![0.0; l_dict];
    for l in 1..=l_dict {
        let sum: f64 = f.iter().map(|&fi| dict.eval(l, fi)).sum();
        rhs_row[l - 1] = sum / batch as f64;
    }

    let mut c_row = vec![0.0; l_dict];
    let mut xi_sum = 0.0;
    let mut viol = 0usize;
    for l in 0..l_dict {
        let d = lhs_row[l] - rhs_row[l];
        let c = b_row[l] - d.abs();
        c_row[l] = c;
        xi_sum += penalty(c, lambda_row[l], tau);
        if c < 0.0 {
            viol += 1;
        }
    }

    // pooled objective contribution: f_theta(x_star) per draw
    let mut obj_sum = 0.0;
    let mut obj_sq_sum = 0.0;
    for j in 0..batch {
        let mut acc = 0.0;
        for kk in 0..k {
            acc += fwd.theta[[kk, j]] * psi_xstar[kk];
        }
        obj_sum += acc;
        obj_sq_sum += acc * acc;
    }

    let backward = if want_grad {
        // dL/d rhs_l, local to this bin
        let mut w = vec![0.0; l_dict];
        for l in 0..l_dict {
            let d = lhs_row[l] - rhs_row[l];
            let sign_d = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            w[l] = penalty_dc(c_row[l], lambda_row[l], tau) * sign_d;
        }
        // dL/d f_j from the constraint side
        let mut df = vec![0.0; batch];
        for j in 0..batch {
            let mut acc = 0.0;
            for l in 1..=l_dict {
                acc += w[l - 1] * dict.eval_deriv(l, f[j]);
            }
            df[j] = acc / batch as f64;
        }
        // dL/d theta: constraint part plus the pooled-objective part
        let obj_w = obj_sign / pooled_draws;
        let mut d_theta = Array2::<f64>::zeros((k, batch));
        match &bin.basis_values {
            BinBasisValues::PerDraw(psi) => {
                for kk in 0..k {
                    for j in 0..batch {
                        d_theta[[kk, j]] = df[j] * psi[[kk, j]] + obj_w * psi_xstar[kk];
                    }
                }
            }
            BinBasisValues::Point(psi) => {
                for kk in 0..k {
                    for j in 0..batch {
                        d_theta[[kk, j]] = df[j] * psi[kk] + obj_w * psi_xstar[kk];
                    }
                }
            }
        }
        Some(backprop_bin(
            gamma, mu, sigma, &bin.u_row, &noise, &fwd, &d_theta,
        ))
    } else {
        None
    };

    BinOut {
        rhs_row,
        c_row,
        xi_sum,
        viol,
        obj_sum,
        obj_sq_sum,
        backward,
    }
}

fn eval_impl(
    eta: &EtaParams,
    problem: &Problem,
    state: &LagrangianState,
    noise: StepNoise<'_>,
    want_grad: bool,
) -> Result<(Evaluation, Option<Vec<f64>>)> {
    let (_, gamma) = rescale_to_correlation(eta.chol())?;
    let sigma = eta.sigmas();
    let n_bins = problem.n_bins();
    let l_dict = problem.l_dict();
    let pooled: f64 = problem.bins.iter().map(|b| b.u_row.len() as f64).sum();
    let obj_sign = state.sense.objective_sign();

    let outs: Vec<BinOut> = exec::map_indexed(n_bins, |m| {
        let bin = &problem.bins[m];
        let lhs_row: Vec<f64> = (0..l_dict).map(|l| problem.lhs[[m, l]]).collect();
        let b_row: Vec<f64> = (0..l_dict).map(|l| problem.b[[m, l]]).collect();
        let lambda_row: Vec<f64> = (0..l_dict).map(|l| state.lambda[[m, l]]).collect();
        let bin_noise = noise.for_bin(m, eta.k(), bin.u_row.len());
        eval_bin(
            bin,
            &gamma,
            &eta.mu,
            &sigma,
            &problem.psi_xstar,
            &problem.dict,
            &lhs_row,
            &b_row,
            &lambda_row,
            state.tau,
            obj_sign,
            pooled,
            bin_noise,
            want_grad,
        )
    });

    let mut rhs = Array2::<f64>::zeros((n_bins, l_dict));
    let mut c = Array2::<f64>::zeros((n_bins, l_dict));
    let mut xi_total = 0.0;
    let mut viol = 0usize;
    let mut obj_sum = 0.0;
    let mut obj_sq = 0.0;
    for (m, out) in outs.iter().enumerate() {
        for l in 0..l_dict {
            rhs[[m, l]] = out.rhs_row[l];
            c[[m, l]] = out.c_row[l];
        }
        xi_total += out.xi_sum;
        viol += out.viol;
        obj_sum += out.obj_sum;
        obj_sq += out.obj_sq_sum;
    }
    let objective = obj_sum / pooled;
    let var = (obj_sq / pooled - objective * objective).max(0.0);
    let objective_se = (var / pooled).sqrt();
    let lagrangian = obj_sign * objective + xi_total;

    let grad = if want_grad {
        let k = eta.k();
        let mut d_mu = vec![0.0; k];
        let mut d_lv = vec![0.0; k];
        let mut d_gamma = Array2::<f64>::zeros((k + 1, k + 1));
        for out in &outs {
            let back = out.backward.as_ref().expect("grad requested");
            for kk in 0..k {
                d_mu[kk] += back.d_mu[kk];
                d_lv[kk] += back.d_log_var[kk];
            }
            d_gamma += &back.d_gamma;
        }
        let d_chol = chain_gamma_to_chol(eta.chol(), &d_gamma);
        let mut g = Vec::with_capacity(eta.free_param_count());
        g.extend_from_slice(&d_mu);
        g.extend_from_slice(&d_lv);
        g.extend_from_slice(&d_chol);
        if let Some(idx) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                index: idx,
                name: eta.param_name(idx),
            });
        }
        Some(g)
    } else {
        None
    };

    Ok((
        Evaluation {
            objective,
            residuals: ConstraintResiduals {
                rhs,
                c,
                violation_count: viol,
            },
            lagrangian,
            objective_se,
        },
        grad,
    ))
}

/// Evaluates objective, residuals, and Lagrangian at `eta`.
pub fn eval_lagrangian(
    eta: &EtaParams,
    problem: &Problem,
    state: &LagrangianState,
    noise: StepNoise<'_>,
) -> Result<Evaluation> {
    eval_impl(eta, problem, state, noise, false).map(|(e, _)| e)
}

/// Evaluates the Lagrangian together with its gradient over all free eta
/// entries (packed order: mu, log_var, strict lower triangle).
pub fn eval_lagrangian_with_grad(
    eta: &EtaParams,
    problem: &Problem,
    state: &LagrangianState,
    noise: StepNoise<'_>,
) -> Result<(Evaluation, Vec<f64>)> {
    eval_impl(eta, problem, state, noise, true).map(|(e, g)| (e, g.expect("grad requested")))
}

/// Mean response at the intervention level over pooled coefficient draws.
pub fn objective(basis: &ResponseBasis, x_star: f64, theta_draws: &Array2<f64>) -> f64 {
    let psi = basis.evaluate(x_star);
    let (k, n) = theta_draws.dim();
    debug_assert_eq!(k, psi.len());
    let mut sum = 0.0;
    for j in 0..n {
        for kk in 0..k {
            sum += theta_draws[[kk, j]] * psi[kk];
        }
    }
    sum / n as f64
}

/// Monte Carlo right-hand sides from per-bin draws, the j-th draw paired
/// with the bin's j-th frozen treatment sample.
pub fn rhs(
    basis: &ResponseBasis,
    x_hat: &Array2<f64>,
    dict: &MomentDictionary,
    per_bin_draws: &[copula::CopulaSample],
) -> Array2<f64> {
    let (m, batch) = x_hat.dim();
    debug_assert_eq!(per_bin_draws.len(), m);
    let k = basis.k_count();
    let mut out = Array2::<f64>::zeros((m, dict.len()));
    let mut psi = vec![0.0; k];
    for bin in 0..m {
        let theta = &per_bin_draws[bin].theta;
        let mut sums = vec![0.0; dict.len()];
        for j in 0..batch {
            basis.evaluate_into(x_hat[[bin, j]], &mut psi);
            let mut f = 0.0;
            for kk in 0..k {
                f += theta[[kk, j]] * psi[kk];
            }
            for l in 1..=dict.len() {
                sums[l - 1] += dict.eval(l, f);
            }
        }
        for l in 0..dict.len() {
            out[[bin, l]] = sums[l] / batch as f64;
        }
    }
    out
}

/// Relaxed constraints c = b - |LHS - RHS| and the strict violation count.
pub fn constraints(
    lhs_smoothed: &Array2<f64>,
    b: &Array2<f64>,
    rhs: Array2<f64>,
) -> ConstraintResiduals {
    let mut c = Array2::<f64>::zeros(rhs.dim());
    let mut violation_count = 0usize;
    for ((idx, &r), &lhs) in rhs.indexed_iter().zip(lhs_smoothed.iter()) {
        let ci = b[idx] - (lhs - r).abs();
        c[idx] = ci;
        if ci < 0.0 {
            violation_count += 1;
        }
    }
    ConstraintResiduals {
        rhs,
        c,
        violation_count,
    }
}

/// The augmented Lagrangian from a precomputed objective and residuals.
pub fn lagrangian(objective_value: f64, residuals: &ConstraintResiduals, state: &LagrangianState) -> f64 {
    let mut total = state.sense.objective_sign() * objective_value;
    for (idx, &c) in residuals.c.indexed_iter() {
        total += penalty(c, state.lambda[idx], state.tau);
    }
    total
}
