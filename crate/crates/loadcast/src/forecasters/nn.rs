//! Shared neural-network machinery: flat parameter vectors, Adam updates,
//! the mini-batch training loop with early stopping, and finite-difference
//! gradient checking. Training is single-threaded and fully determined by
//! the spec seed.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::windowing::WindowedDataset;

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A network over flat parameter storage. Inputs arrive in the dataset's
/// `[sample][step][feature]` layout; flat-input networks read the window
/// as one `steps * n_features` vector.
pub trait Network {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Expected per-sample input width.
    fn input_width(&self) -> usize;
    fn output_len(&self) -> usize;

    /// Forward pass for one sample.
    fn forward(&self, input: &[f64]) -> Vec<f64>;

    /// Mean-squared-error loss over a batch plus the parameter gradient
    /// (accumulated into `grad`, which arrives zeroed).
    fn loss_and_grad(&self, inputs: &[f64], targets: &[f64], n: usize, grad: &mut [f64]) -> f64;
}

/// MSE over a batch using only `forward` (for finite differences).
pub fn batch_loss<N: Network + ?Sized>(net: &N, inputs: &[f64], targets: &[f64], n: usize) -> f64 {
    let w = net.input_width();
    let out = net.output_len();
    let mut sum = 0.0;
    for i in 0..n {
        let pred = net.forward(&inputs[i * w..(i + 1) * w]);
        for (p, t) in pred.iter().zip(&targets[i * out..(i + 1) * out]) {
            sum += (p - t) * (p - t);
        }
    }
    sum / (n * out) as f64
}

/// Central finite differences against the analytic gradient; returns the
/// maximum relative error over all parameters.
pub fn finite_difference_check<N: Network>(
    net: &mut N,
    inputs: &[f64],
    targets: &[f64],
    n: usize,
    step: f64,
) -> f64 {
    let n_params = net.params().len();
    let mut analytic = vec![0.0; n_params];
    net.loss_and_grad(inputs, targets, n, &mut analytic);
    let mut max_rel = 0.0f64;
    for p in 0..n_params {
        let orig = net.params()[p];
        net.params_mut()[p] = orig + step;
        let plus = batch_loss(net, inputs, targets, n);
        net.params_mut()[p] = orig - step;
        let minus = batch_loss(net, inputs, targets, n);
        net.params_mut()[p] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let rel = (analytic[p] - numeric).abs() / (analytic[p].abs() + numeric.abs()).max(1e-6);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

/// Adam with the usual bias-corrected moments.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub total_seconds: f64,
    pub best_epoch: usize,
    pub converged_note: Option<String>,
}

impl TrainingLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch,train_loss,val_loss,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.val_loss, e.seconds));
        }
        std::fs::write(path, out).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

/// Mini-batch Adam training with early stopping on validation loss; the
/// best-epoch parameters are restored before returning.
pub fn train<N: Network>(
    net: &mut N,
    train: &WindowedDataset,
    val: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<TrainingLog> {
    let w = net.input_width();
    if train.flat_width() != w {
        return Err(Error::LayoutMismatch {
            expected: w,
            got: train.flat_width(),
        });
    }
    let out = net.output_len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.learning_rate, net.params().len());
    let mut grad = vec![0.0; net.params().len()];
    let mut indices: Vec<usize> = (0..train.n).collect();
    let mut batch_inputs = vec![0.0; cfg.batch_size * w];
    let mut batch_targets = vec![0.0; cfg.batch_size * out];

    let mut log = TrainingLog::default();
    let mut best_val = f64::INFINITY;
    let mut best_params = net.params().to_vec();
    let mut best_epoch = 0usize;
    let mut epochs_since_best = 0usize;
    let start = Instant::now();

    for epoch in 0..cfg.max_epochs {
        indices.shuffle(&mut rng);
        let mut train_loss_sum = 0.0;
        let mut train_count = 0usize;
        for chunk in indices.chunks(cfg.batch_size) {
            let n = chunk.len();
            for (slot, &i) in chunk.iter().enumerate() {
                batch_inputs[slot * w..(slot + 1) * w].copy_from_slice(train.input(i));
                batch_targets[slot * out..(slot + 1) * out].copy_from_slice(train.target(i));
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = net.loss_and_grad(&batch_inputs[..n * w], &batch_targets[..n * out], n, &mut grad);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            adam.step(net.params_mut(), &grad);
            train_loss_sum += loss * n as f64;
            train_count += n;
        }
        let train_loss = train_loss_sum / train_count as f64;
        let val_loss = batch_loss(net, &val.inputs, &val.targets, val.n);
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            seconds: start.elapsed().as_secs_f64(),
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_params.copy_from_slice(net.params());
            best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best > cfg.patience {
                break;
            }
        }
    }

    net.params_mut().copy_from_slice(&best_params);
    log.best_epoch = best_epoch;
    log.total_seconds = start.elapsed().as_secs_f64();
    Ok(log)
}

/// Uniform Glorot-style init in +-sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize, out: &mut [f64]) {
    use rand::Rng;
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in out.iter_mut() {
        *v = rng.gen_range(-limit..limit);
    }
}
