//! Neural basis functions: a small feed-forward regressor y ~ g(x) trained
//! in-repo, whose last-hidden-layer activations become the basis. The output
//! layer is a pure linear combination of those activations (no output bias),
//! so the trained predictor itself lies in the span of the basis.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

use super::ResponseBasis;

/// Training configuration for the neural basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpFitConfig {
    /// Width of the first hidden layer; the second hidden layer has K units.
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
}

impl Default for MlpFitConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            epochs: 100,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl MlpFitConfig {
    fn validate(&self, k: usize) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParam("epochs must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParam("batch size must be >= 1".into()));
        }
        if k == 0 {
            return Err(Error::InvalidParam("basis size K must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trained two-hidden-layer rectifier network, kept in full so a bound run
/// can be reproduced without refitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpBasis {
    k: usize,
    hidden: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    /// k x hidden, row-major
    w2: Vec<f64>,
    b2: Vec<f64>,
    /// readout weights, kept for provenance
    w3: Vec<f64>,
    pub seed: u64,
    pub final_loss: f64,
}

impl MlpBasis {
    pub fn k_count(&self) -> usize {
        self.k
    }

    /// Activations of the K-unit hidden layer.
    pub fn evaluate_into(&self, x: f64, out: &mut [f64]) {
        let h = self.hidden;
        let mut h1 = vec![0.0; h];
        for i in 0..h {
            h1[i] = (self.w1[i] * x + self.b1[i]).max(0.0);
        }
        for k in 0..self.k {
            let mut pre = self.b2[k];
            for i in 0..h {
                pre += self.w2[k * h + i] * h1[i];
            }
            out[k] = pre.max(0.0);
        }
    }

    /// Trained predictor (readout over the basis), exposed for diagnostics.
    pub fn predict(&self, x: f64) -> f64 {
        let mut act = vec![0.0; self.k];
        self.evaluate_into(x, &mut act);
        act.iter().zip(&self.w3).map(|(a, w)| a * w).sum()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &MlpFitConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grads[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
        }
    }
}

/// Fits the regressor and returns the K last-hidden-layer activations as a
/// basis. Deterministic given the seed.
pub fn fit_mlp_basis(
    dataset: &Dataset,
    k_count: usize,
    config: &MlpFitConfig,
    seed: u64,
) -> Result<ResponseBasis> {
    config.validate(k_count)?;
    let xs = dataset.x();
    let ys = dataset.y();
    let n = xs.len();
    let h = config.hidden;
    let k = k_count;

    let mut rng = stream_rng(seed, &[0x6d6c70]);
    let he_in = Normal::new(0.0, (2.0f64).sqrt()).unwrap();
    let he_h = Normal::new(0.0, (2.0 / h as f64).sqrt()).unwrap();
    let out_init = Normal::new(0.0, (1.0 / k as f64).sqrt()).unwrap();
    let bias_spread = Uniform::new_inclusive(-1.0, 1.0);

    let mut w1: Vec<f64> = (0..h).map(|_| he_in.sample(&mut rng)).collect();
    let mut b1: Vec<f64> = (0..h).map(|_| bias_spread.sample(&mut rng)).collect();
    let mut w2: Vec<f64> = (0..k * h).map(|_| he_h.sample(&mut rng)).collect();
    let mut b2: Vec<f64> = vec![0.0; k];
    let mut w3: Vec<f64> = (0..k).map(|_| out_init.sample(&mut rng)).collect();

    let mut opt_w1 = Adam::new(h);
    let mut opt_b1 = Adam::new(h);
    let mut opt_w2 = Adam::new(k * h);
    let mut opt_b2 = Adam::new(k);
    let mut opt_w3 = Adam::new(k);

    let mut order: Vec<usize> = (0..n).collect();
    let mut h1_pre = vec![0.0; h];
    let mut h1 = vec![0.0; h];
    let mut h2_pre = vec![0.0; k];
    let mut h2 = vec![0.0; k];
    let mut final_loss = f64::NAN;

    for epoch in 0..config.epochs {
        // Fisher-Yates with the seeded stream
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let bsz = chunk.len() as f64;
            let mut g_w1 = vec![0.0; h];
            let mut g_b1 = vec![0.0; h];
            let mut g_w2 = vec![0.0; k * h];
            let mut g_b2 = vec![0.0; k];
            let mut g_w3 = vec![0.0; k];

            for &idx in chunk {
                let x = xs[idx];
                let y = ys[idx];
                for i in 0..h {
                    h1_pre[i] = w1[i] * x + b1[i];
                    h1[i] = h1_pre[i].max(0.0);
                }
                for kk in 0..k {
                    let mut pre = b2[kk];
                    for i in 0..h {
                        pre += w2[kk * h + i] * h1[i];
                    }
                    h2_pre[kk] = pre;
                    h2[kk] = pre.max(0.0);
                }
                let yhat: f64 = (0..k).map(|kk| w3[kk] * h2[kk]).sum();
                let err = yhat - y;
                epoch_loss += err * err;

                let dy = 2.0 * err / bsz;
                let mut dh1 = vec![0.0; h];
                for kk in 0..k {
                    g_w3[kk] += dy * h2[kk];
                    if h2_pre[kk] > 0.0 {
                        let dh2 = dy * w3[kk];
                        g_b2[kk] += dh2;
                        for i in 0..h {
                            g_w2[kk * h + i] += dh2 * h1[i];
                            dh1[i] += dh2 * w2[kk * h + i];
                        }
                    }
                }
                for i in 0..h {
                    if h1_pre[i] > 0.0 {
                        g_w1[i] += dh1[i] * x;
                        g_b1[i] += dh1[i];
                    }
                }
            }

            opt_w1.step(&mut w1, &g_w1, config);
            opt_b1.step(&mut b1, &g_b1, config);
            opt_w2.step(&mut w2, &g_w2, config);
            opt_b2.step(&mut b2, &g_b2, config);
            opt_w3.step(&mut w3, &g_w3, config);
        }
        final_loss = epoch_loss / n as f64;
        if !final_loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: final_loss,
            });
        }
    }

    Ok(ResponseBasis::Mlp(MlpBasis {
        k,
        hidden: h,
        w1,
        b1,
        w2,
        b2,
        w3,
        seed,
        final_loss,
    }))
}
