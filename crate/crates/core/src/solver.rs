//! The augmented Lagrangian outer loop: SGD-with-momentum subproblem
//! solves, multiplier and temperature updates, feasibility verification,
//! and the sweep over intervention levels, senses, and tolerance levels.

use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::copula::EtaParams;
use crate::data::{Dataset, EmpiricalCdf, Whitening};
use crate::error::{Error, Result};
use crate::estimator::{
    eval_lagrangian, eval_lagrangian_with_grad, ConstraintResiduals, LagrangianState, Problem,
    Sense, StepNoise,
};
use crate::exec;
use crate::preprocess::{self, ConstraintSet, MomentDictionary};
use crate::response::{BasisKind, ResponseBasis};
use crate::rng::{derive_seed, stream_rng};

/// Solver hyperparameters. Defaults reproduce the reference configuration:
/// M = 20 bins, L = 2 moments, B = 1024 draws, SGD with momentum 0.9 and
/// learning rate 0.001 for 150 rounds of 30 updates, temperature 0.1 grown
/// by 1.08 per round and capped at 10, eps_abs 0.2 with the eps_rel
/// schedule tightening from 0.3 to 0.05.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rounds: usize,
    pub steps_per_round: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub tau0: f64,
    pub alpha: f64,
    pub tau_max: f64,
    pub eps_abs: f64,
    pub eps_rel_schedule: Vec<f64>,
    pub batch: usize,
    pub m_bins: usize,
    pub l_dict: usize,
    pub x_star_count: usize,
    pub x_star_quantile_lo: f64,
    pub x_star_quantile_hi: f64,
    pub delta_feas: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rounds: 150,
            steps_per_round: 30,
            learning_rate: 1e-3,
            momentum: 0.9,
            tau0: 0.1,
            alpha: 1.08,
            tau_max: 10.0,
            eps_abs: 0.2,
            eps_rel_schedule: vec![0.3, 0.2, 0.1, 0.05],
            batch: 1024,
            m_bins: 20,
            l_dict: 2,
            x_star_count: 15,
            x_star_quantile_lo: 0.05,
            x_star_quantile_hi: 0.95,
            delta_feas: 1e-2,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.rounds == 0 {
            problems.push("rounds must be >= 1".to_string());
        }
        if self.steps_per_round == 0 {
            problems.push("steps_per_round must be >= 1".to_string());
        }
        if self.alpha <= 1.0 {
            problems.push(format!("alpha must be > 1, got {}", self.alpha));
        }
        if self.tau0 <= 0.0 {
            problems.push(format!("tau0 must be > 0, got {}", self.tau0));
        }
        if self.tau_max < self.tau0 {
            problems.push("tau_max must be >= tau0".to_string());
        }
        if self.eps_abs <= 0.0 {
            problems.push("eps_abs must be > 0".to_string());
        }
        if self.eps_rel_schedule.is_empty() {
            problems.push("eps_rel schedule must be non-empty".to_string());
        }
        if self.eps_rel_schedule.iter().any(|&e| e <= 0.0) {
            problems.push("eps_rel schedule entries must be positive".to_string());
        }
        if self
            .eps_rel_schedule
            .windows(2)
            .any(|w| w[1] > w[0])
        {
            problems.push("eps_rel schedule must be non-increasing".to_string());
        }
        if self.batch < 2 {
            problems.push("batch must be >= 2".to_string());
        }
        if self.m_bins == 0 {
            problems.push("m_bins must be >= 1".to_string());
        }
        if self.l_dict == 0 {
            problems.push("l_dict must be >= 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.x_star_quantile_lo)
            || !(0.0..=1.0).contains(&self.x_star_quantile_hi)
            || self.x_star_quantile_lo > self.x_star_quantile_hi
        {
            problems.push("x_star quantile range must satisfy 0 <= lo <= hi <= 1".to_string());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            problems.push("momentum must be in [0, 1)".to_string());
        }
        if self.learning_rate < 0.0 {
            problems.push("learning rate must be >= 0".to_string());
        }
        if self.delta_feas <= 0.0 {
            problems.push("delta_feas must be > 0".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParam(problems.join("; ")))
        }
    }
}

/// One per-round trace record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: usize,
    pub objective: f64,
    pub max_violation: f64,
    pub lambda_norm: f64,
    pub tau: f64,
}

/// Outcome of one (x_star, sense, eps_rel) solve. Bound values and x_star
/// are reported in original units; violations stay in whitened units.
#[derive(Debug, Clone)]
pub struct BoundResult {
    pub x_star: f64,
    pub sense: Sense,
    pub eps_rel: f64,
    pub bound: f64,
    /// Monte Carlo standard error of the bound mean (original units).
    pub bound_se: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub eta_final: EtaParams,
    pub trace: Vec<TraceRecord>,
}

impl BoundResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "x_star": self.x_star,
            "sense": self.sense.label(),
            "eps_rel": self.eps_rel,
            "bound": self.bound,
            "bound_se": self.bound_se,
            "feasible": self.feasible,
            "max_violation": self.max_violation,
            "eta_final": self.eta_final.to_json(),
            "trace": self.trace,
        })
    }
}

/// Plain SGD with momentum. The velocity buffer persists for the life of
/// the optimizer (across augmented-Lagrangian rounds within one solve).
#[derive(Debug, Clone)]
pub struct SgdMomentum {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<f64>,
}

impl SgdMomentum {
    pub fn new(learning_rate: f64, momentum: f64, dim: usize) -> Self {
        Self {
            learning_rate,
            momentum,
            velocity: vec![0.0; dim],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for i in 0..params.len() {
            self.velocity[i] = self.momentum * self.velocity[i] + grad[i];
            params[i] -= self.learning_rate * self.velocity[i];
        }
    }
}

/// Random initialization: mixing factor with unit diagonal, zero upper
/// triangle, and N(0, 0.05)-distributed strict lower entries; zero means.
/// Coefficient scales start at 1 for polynomial bases and are matched to
/// the basis magnitude for learned bases so initial response draws have
/// roughly unit spread over the whitened data range.
pub fn init_eta(basis: &ResponseBasis, seed: u64) -> EtaParams {
    let k = basis.k_count();
    let mut rng = stream_rng(seed, &[0x696e6974]);
    // variance 0.05
    let lower_dist = Normal::new(0.0, 0.05_f64.sqrt()).unwrap();
    let strict: Vec<f64> = (0..k * (k + 1) / 2)
        .map(|_| lower_dist.sample(&mut rng))
        .collect();
    let log_var = match basis.kind() {
        BasisKind::Polynomial => vec![0.0; k],
        BasisKind::Mlp | BasisKind::Gp => {
            // rms of each basis function over the whitened range
            let grid: Vec<f64> = (0..64).map(|i| -2.5 + 5.0 * i as f64 / 63.0).collect();
            let mut vals = vec![0.0; k];
            let mut sq = vec![0.0; k];
            for &x in &grid {
                basis.evaluate_into(x, &mut vals);
                for kk in 0..k {
                    sq[kk] += vals[kk] * vals[kk];
                }
            }
            sq.iter()
                .map(|s| {
                    let rms = (s / grid.len() as f64).sqrt().max(1e-3);
                    // sigma_k = 0.5 / rms  =>  log sigma^2
                    (0.25 / (rms * rms)).ln()
                })
                .collect()
        }
    };
    EtaParams::new(vec![0.0; k], log_var, &strict).expect("init dimensions consistent")
}

/// Runs one subproblem: `steps` SGD-with-momentum updates of eta at fixed
/// multipliers and temperature, with fresh per-step Monte Carlo noise.
pub fn optimize_subproblem(
    eta: &EtaParams,
    problem: &Problem,
    state: &LagrangianState,
    opt: &mut SgdMomentum,
    steps: usize,
    noise_master: u64,
    step_offset: u64,
    round: usize,
) -> Result<EtaParams> {
    let k = eta.k();
    let mut packed = eta.pack();
    for step in 0..steps {
        let current = EtaParams::unpack(k, &packed)?;
        let noise = StepNoise::Seeded {
            master: noise_master,
            step: step_offset + step as u64,
        };
        let (eval, grad) = eval_lagrangian_with_grad(&current, problem, state, noise)?;
        if !eval.lagrangian.is_finite() {
            return Err(Error::NonFiniteLagrangian { round, step });
        }
        opt.step(&mut packed, &grad);
        // keep exp(log_var) away from overflow
        for lv in packed.iter_mut().skip(k).take(k) {
            *lv = lv.clamp(-crate::copula::LOG_VAR_CLAMP, crate::copula::LOG_VAR_CLAMP);
        }
    }
    EtaParams::unpack(k, &packed)
}

/// Multiplier and temperature update after a subproblem solve:
/// lambda <- max(0, lambda - tau c), tau <- min(alpha tau, tau_max).
pub fn update_multipliers(
    state: &mut LagrangianState,
    residuals: &ConstraintResiduals,
    alpha: f64,
    tau_max: f64,
) {
    for (idx, lam) in state.lambda.indexed_iter_mut() {
        *lam = (*lam - state.tau * residuals.c[idx]).max(0.0);
    }
    state.tau = (state.tau * alpha).min(tau_max);
}

/// Scale factor for the verification draw: feasibility is declared on a
/// fresh sample 4x the training batch.
const VERIFY_TILES: usize = 4;

/// Full augmented-Lagrangian solve for one (x_star, sense) at one tolerance
/// level. `problem` must already carry the tolerance b for this level.
pub fn solve_bound(
    problem: &Problem,
    basis: &ResponseBasis,
    sense: Sense,
    x_star_orig: f64,
    eps_rel: f64,
    y_whitening: Whitening,
    config: &SolverConfig,
    seed: u64,
) -> Result<BoundResult> {
    let mut eta = init_eta(basis, derive_seed(seed, &[0x69]));
    let noise_master = derive_seed(seed, &[0x6e]);
    let mut state = LagrangianState::new(problem.n_bins(), problem.l_dict(), config.tau0, sense);
    let mut opt = SgdMomentum::new(
        config.learning_rate,
        config.momentum,
        eta.free_param_count(),
    );
    let mut trace = Vec::with_capacity(config.rounds);

    for round in 0..config.rounds {
        eta = optimize_subproblem(
            &eta,
            problem,
            &state,
            &mut opt,
            config.steps_per_round,
            noise_master,
            (round * config.steps_per_round) as u64,
            round,
        )?;
        // fresh draw for the multiplier update and the trace record
        let eval = eval_lagrangian(
            &eta,
            problem,
            &state,
            StepNoise::Seeded {
                master: derive_seed(seed, &[0x72, round as u64]),
                step: 0,
            },
        )?;
        update_multipliers(&mut state, &eval.residuals, config.alpha, config.tau_max);
        let lambda_norm = state.lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        trace.push(TraceRecord {
            round,
            objective: eval.objective,
            max_violation: eval.residuals.max_violation(),
            lambda_norm,
            tau: state.tau,
        });
    }

    // verification draw: 4x batch, fresh noise
    let verify_problem = problem.tiled(VERIFY_TILES);
    let verify = eval_lagrangian(
        &eta,
        &verify_problem,
        &state,
        StepNoise::Seeded {
            master: derive_seed(seed, &[0x76]),
            step: 0,
        },
    )?;
    let max_violation = verify.residuals.max_violation();
    let feasible = max_violation <= config.delta_feas;

    Ok(BoundResult {
        x_star: x_star_orig,
        sense,
        eps_rel,
        bound: y_whitening.invert(verify.objective),
        bound_se: y_whitening.std * verify.objective_se,
        feasible,
        max_violation,
        eta_final: eta,
        trace,
    })
}

/// A solve that could not complete.
#[derive(Debug, Clone, Serialize)]
pub struct SolveFailure {
    pub x_star: f64,
    pub sense: Sense,
    pub eps_rel: f64,
    pub message: String,
}

/// All completed results plus recorded failures, sorted by
/// (x_star index, sense, tolerance index).
#[derive(Debug)]
pub struct SweepOutcome {
    pub results: Vec<BoundResult>,
    pub failures: Vec<SolveFailure>,
}

/// Default intervention grid: equally spaced quantiles of the observed
/// treatment between the configured limits, reported in original units.
pub fn x_star_grid(dataset: &Dataset, config: &SolverConfig) -> Result<Vec<f64>> {
    let cdf = EmpiricalCdf::new(dataset.x())?;
    let n = config.x_star_count;
    let (lo, hi) = (config.x_star_quantile_lo, config.x_star_quantile_hi);
    let mut grid = Vec::with_capacity(n);
    for i in 0..n {
        let q = if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        };
        grid.push(dataset.whitening().x.invert(cdf.inverse_cdf(q)?));
    }
    Ok(grid)
}

struct SweepTask {
    ix: usize,
    x_star_orig: f64,
    sense: Sense,
    eps_idx: usize,
    eps_rel: f64,
    seed: u64,
}

/// Sweeps the intervention grid over both senses and the tolerance
/// schedule. Each (x_star, sense) pair derives one seed shared across the
/// tolerance levels, so nested-tolerance comparisons are paired; every
/// solve starts from its own fresh initialization. `on_complete` fires as
/// solves finish (possibly from worker threads).
pub fn sweep_with_progress<F>(
    dataset: &Dataset,
    basis: &ResponseBasis,
    config: &SolverConfig,
    on_complete: F,
) -> Result<SweepOutcome>
where
    F: Fn(&BoundResult) + Sync,
{
    config.validate()?;
    let grid = preprocess::make_z_grid(dataset, config.m_bins)?;
    let dict = MomentDictionary::raw_moments(config.l_dict)?;
    let base = preprocess::build_constraints(
        dataset,
        &grid,
        &dict,
        config.eps_abs,
        config.eps_rel_schedule[0],
        config.batch,
    )?;
    let x_grid = x_star_grid(dataset, config)?;

    // one constraint set per tolerance level; only b differs
    let mut per_eps: Vec<ConstraintSet> = Vec::new();
    for &eps_rel in &config.eps_rel_schedule {
        let b = preprocess::compute_tolerances(&base.lhs_smoothed, config.eps_abs, eps_rel)?;
        per_eps.push(ConstraintSet {
            lhs: base.lhs.clone(),
            lhs_smoothed: base.lhs_smoothed.clone(),
            b,
            x_hat: base.x_hat.clone(),
            eps_abs: config.eps_abs,
            eps_rel,
        });
    }

    let mut tasks = Vec::new();
    for (ix, &x_star_orig) in x_grid.iter().enumerate() {
        for sense in [Sense::Lower, Sense::Upper] {
            let sense_id = match sense {
                Sense::Lower => 0u64,
                Sense::Upper => 1u64,
            };
            let seed = derive_seed(config.seed, &[ix as u64, sense_id]);
            for (eps_idx, &eps_rel) in config.eps_rel_schedule.iter().enumerate() {
                tasks.push(SweepTask {
                    ix,
                    x_star_orig,
                    sense,
                    eps_idx,
                    eps_rel,
                    seed,
                });
            }
        }
    }

    let y_whitening = dataset.whitening().y;
    let x_whitening = dataset.whitening().x;
    let outcomes: Vec<std::result::Result<BoundResult, SolveFailure>> =
        exec::map_slice(&tasks, |task| {
            let cs = &per_eps[task.eps_idx];
            let x_star_w = x_whitening.apply(task.x_star_orig);
            let problem = Problem::marginal(cs, basis, dict, x_star_w);
            match solve_bound(
                &problem,
                basis,
                task.sense,
                task.x_star_orig,
                task.eps_rel,
                y_whitening,
                config,
                task.seed,
            ) {
                Ok(result) => {
                    on_complete(&result);
                    Ok(result)
                }
                Err(e) => Err(SolveFailure {
                    x_star: task.x_star_orig,
                    sense: task.sense,
                    eps_rel: task.eps_rel,
                    message: e.to_string(),
                }),
            }
        });

    // tasks were generated in (ix, sense, eps) order; map_slice preserves it
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(SweepOutcome { results, failures })
}

/// `sweep_with_progress` without a progress callback.
pub fn sweep(
    dataset: &Dataset,
    basis: &ResponseBasis,
    config: &SolverConfig,
) -> Result<SweepOutcome> {
    sweep_with_progress(dataset, basis, config, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{generate, Design, SyntheticSpec};
    use crate::response::polynomial_basis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sgd_zero_gradient_is_fixed_point() {
        let mut opt = SgdMomentum::new(0.01, 0.9, 3);
        let mut params = vec![1.0, -2.0, 0.5];
        let before = params.clone();
        for _ in 0..10 {
            opt.step(&mut params, &[0.0, 0.0, 0.0]);
        }
        assert_eq!(params, before);
    }

    #[test]
    fn sgd_zero_learning_rate_is_fixed_point() {
        let mut opt = SgdMomentum::new(0.0, 0.9, 2);
        let mut params = vec![3.0, 4.0];
        opt.step(&mut params, &[1.0, -2.0]);
        assert_eq!(params, vec![3.0, 4.0]);
    }

    #[test]
    fn sgd_converges_on_quadratic() {
        // f(p) = 0.5 (p - t)' diag(1, 4) (p - t); minimum at t
        let target = [2.0, -1.0];
        let scale = [1.0, 4.0];
        let mut opt = SgdMomentum::new(0.01, 0.9, 2);
        let mut params = vec![0.0, 0.0];
        for _ in 0..1000 {
            let grad: Vec<f64> = (0..2).map(|i| scale[i] * (params[i] - target[i])).collect();
            opt.step(&mut params, &grad);
        }
        assert_abs_diff_eq!(params[0], 2.0, epsilon = 1e-3);
        assert_abs_diff_eq!(params[1], -1.0, epsilon = 1e-3);
    }

    #[test]
    fn multiplier_update_values() {
        let mut state = LagrangianState::new(1, 1, 2.0, Sense::Lower);
        state.lambda[[0, 0]] = 1.0;
        let residuals = ConstraintResiduals {
            rhs: ndarray::array![[0.0]],
            c: ndarray::array![[0.2]],
            violation_count: 0,
        };
        update_multipliers(&mut state, &residuals, 1.08, 10.0);
        assert_abs_diff_eq!(state.lambda[[0, 0]], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(state.tau, 2.16, epsilon = 1e-12);

        // clamping at zero
        let mut state = LagrangianState::new(1, 1, 2.0, Sense::Lower);
        state.lambda[[0, 0]] = 0.1;
        let residuals = ConstraintResiduals {
            rhs: ndarray::array![[0.0]],
            c: ndarray::array![[5.0]],
            violation_count: 0,
        };
        update_multipliers(&mut state, &residuals, 1.08, 10.0);
        assert_eq!(state.lambda[[0, 0]], 0.0);

        // temperature cap
        let mut state = LagrangianState::new(1, 1, 9.5, Sense::Lower);
        update_multipliers(&mut state, &residuals, 1.08, 10.0);
        assert_eq!(state.tau, 10.0);
    }

    #[test]
    fn multipliers_stay_nonnegative() {
        let mut state = LagrangianState::new(2, 2, 0.5, Sense::Upper);
        let mut tau_prev = state.tau;
        for round in 0..50 {
            let c = ndarray::Array2::from_shape_fn((2, 2), |(i, j)| {
                ((round + i * 2 + j) as f64 * 0.77).sin()
            });
            let residuals = ConstraintResiduals {
                rhs: ndarray::Array2::zeros((2, 2)),
                c,
                violation_count: 0,
            };
            update_multipliers(&mut state, &residuals, 1.3, 4.0);
            assert!(state.lambda.iter().all(|&l| l >= 0.0));
            assert!(state.tau >= tau_prev && state.tau <= 4.0);
            tau_prev = state.tau;
        }
    }

    #[test]
    fn init_eta_matches_contract() {
        let basis = polynomial_basis(3).unwrap();
        let eta = init_eta(&basis, 42);
        let chol = eta.chol();
        for i in 0..4 {
            assert_eq!(chol[[i, i]], 1.0);
            for j in (i + 1)..4 {
                assert_eq!(chol[[i, j]], 0.0);
            }
        }
        assert!(eta.mu.iter().all(|&m| m == 0.0));
        assert!(eta.log_var.iter().all(|&lv| lv == 0.0));
        // two seeds differ in the lower triangle
        let eta2 = init_eta(&basis, 43);
        assert_ne!(eta.chol(), eta2.chol());
        // determinism
        let eta3 = init_eta(&basis, 42);
        assert_eq!(eta, eta3);
    }

    fn small_config() -> SolverConfig {
        SolverConfig {
            rounds: 12,
            steps_per_round: 10,
            batch: 128,
            m_bins: 5,
            x_star_count: 3,
            eps_rel_schedule: vec![0.3],
            ..SolverConfig::default()
        }
    }

    #[test]
    fn constant_outcome_brackets_constant() {
        // y nearly constant: both bounds must sit at that constant
        let spec = SyntheticSpec {
            design: Design::LinearGaussian,
            alpha: 3.0,
            beta: 0.5,
            n: 1500,
            seed: 7,
        };
        let (mut data, _) = generate(&spec);
        for y in &mut data.y {
            *y = 4.0 + 1e-3 * (*y);
        }
        let ds = Dataset::from_columns(data.z, data.x, data.y).unwrap();
        let basis = polynomial_basis(2).unwrap();
        let config = small_config();
        let out = sweep(&ds, &basis, &config).unwrap();
        assert_eq!(out.results.len(), 3 * 2);
        for r in &out.results {
            assert!(r.feasible, "expected feasibility at loose tolerance");
            assert_abs_diff_eq!(r.bound, 4.0, epsilon = 0.15);
        }
    }

    #[test]
    fn sweep_determinism() {
        let spec = SyntheticSpec {
            design: Design::LinearGaussian,
            alpha: 3.0,
            beta: 0.5,
            n: 800,
            seed: 3,
        };
        let (data, _) = generate(&spec);
        let ds = Dataset::from_columns(data.z, data.x, data.y).unwrap();
        let basis = polynomial_basis(2).unwrap();
        let mut config = small_config();
        config.rounds = 6;
        let a = sweep(&ds, &basis, &config).unwrap();
        let b = sweep(&ds, &basis, &config).unwrap();
        assert_eq!(a.results.len(), b.results.len());
        for (ra, rb) in a.results.iter().zip(&b.results) {
            assert_eq!(ra.bound.to_bits(), rb.bound.to_bits());
            assert_eq!(ra.max_violation.to_bits(), rb.max_violation.to_bits());
            assert_eq!(ra.feasible, rb.feasible);
        }
    }

    #[test]
    fn empty_grid_vacuous_sweep() {
        let spec = SyntheticSpec {
            design: Design::LinearGaussian,
            alpha: 3.0,
            beta: 0.5,
            n: 500,
            seed: 1,
        };
        let (data, _) = generate(&spec);
        let ds = Dataset::from_columns(data.z, data.x, data.y).unwrap();
        let basis = polynomial_basis(2).unwrap();
        let mut config = small_config();
        config.x_star_count = 0;
        let out = sweep(&ds, &basis, &config).unwrap();
        assert!(out.results.is_empty());
        assert!(out.failures.is_empty());
    }

    #[test]
    fn config_validation_reports_all_problems() {
        let config = SolverConfig {
            rounds: 0,
            alpha: 0.9,
            eps_rel_schedule: vec![0.05, 0.3],
            ..SolverConfig::default()
        };
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("rounds"));
        assert!(err.contains("alpha"));
        assert!(err.contains("non-increasing"));
    }
}
