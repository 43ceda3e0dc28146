//! LSTM and BiLSTM forecasters built from the gate recurrences
//!
//!   f_t = sigmoid(W_f [h_{t-1}, x_t] + b_f)
//!   i_t = sigmoid(W_i [h_{t-1}, x_t] + b_i)
//!   g_t = tanh(W_C [h_{t-1}, x_t] + b_C)
//!   C_t = f_t C_{t-1} + i_t g_t
//!   o_t = sigmoid(W_o [h_{t-1}, x_t] + b_o)
//!   h_t = o_t tanh(C_t)
//!
//! with a dense head mapping the final hidden state (concatenated
//! forward/backward states for BiLSTM) to the 24 output values.
//! Backpropagation through time is hand-rolled; see the gradient checks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nn::{glorot_uniform, sigmoid, Network};

/// One direction of LSTM cells. Parameter layout: the four gate weight
/// blocks W_f, W_i, W_C, W_o (each hidden x (hidden + features),
/// row-major) concatenated, then the four bias blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmShape {
    pub hidden: usize,
    pub n_features: usize,
}

struct StepCache {
    /// Concatenated [h_{t-1}, x_t].
    z: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl LstmShape {
    pub fn n_params(&self) -> usize {
        let zw = self.hidden + self.n_features;
        4 * self.hidden * zw + 4 * self.hidden
    }

    fn weight_block(&self, gate: usize) -> usize {
        gate * self.hidden * (self.hidden + self.n_features)
    }

    fn bias_block(&self, gate: usize) -> usize {
        4 * self.hidden * (self.hidden + self.n_features) + gate * self.hidden
    }

    /// One cell update; used by the sequence runner below.
    fn step(&self, params: &[f64], h_prev: &[f64], c_prev: &[f64], x: &[f64]) -> StepCache {
        let h = self.hidden;
        let zw = h + self.n_features;
        let mut z = Vec::with_capacity(zw);
        z.extend_from_slice(h_prev);
        z.extend_from_slice(x);

        let gate = |g: usize, unit: usize| {
            let row = self.weight_block(g) + unit * zw;
            let mut s = params[self.bias_block(g) + unit];
            for (w, zv) in params[row..row + zw].iter().zip(&z) {
                s += w * zv;
            }
            s
        };

        let mut cache = StepCache {
            z: Vec::new(),
            f: vec![0.0; h],
            i: vec![0.0; h],
            g: vec![0.0; h],
            o: vec![0.0; h],
            c: vec![0.0; h],
            tanh_c: vec![0.0; h],
        };
        for u in 0..h {
            cache.f[u] = sigmoid(gate(0, u));
            cache.i[u] = sigmoid(gate(1, u));
            cache.g[u] = gate(2, u).tanh();
            cache.o[u] = sigmoid(gate(3, u));
            cache.c[u] = cache.f[u] * c_prev[u] + cache.i[u] * cache.g[u];
            cache.tanh_c[u] = cache.c[u].tanh();
        }
        cache.z = z;
        cache
    }

    /// Run the recurrence over `steps` input vectors; returns the per-step
    /// caches and the final hidden state.
    fn run(&self, params: &[f64], xs: &[f64], steps: usize) -> (Vec<StepCache>, Vec<f64>) {
        let h = self.hidden;
        let f = self.n_features;
        let mut caches = Vec::with_capacity(steps);
        let mut h_state = vec![0.0; h];
        let mut c_state = vec![0.0; h];
        for t in 0..steps {
            let cache = self.step(params, &h_state, &c_state, &xs[t * f..(t + 1) * f]);
            for u in 0..h {
                c_state[u] = cache.c[u];
                h_state[u] = cache.o[u] * cache.tanh_c[u];
            }
            caches.push(cache);
        }
        (caches, h_state)
    }

    /// Backpropagation through time from the gradient at the final hidden
    /// state; accumulates into `grad` (same layout as `params`).
    fn backprop(&self, params: &[f64], caches: &[StepCache], dh_final: &[f64], grad: &mut [f64]) {
        let h = self.hidden;
        let zw = h + self.n_features;
        let mut dh = dh_final.to_vec();
        let mut dc = vec![0.0; h];
        for t in (0..caches.len()).rev() {
            let cache = &caches[t];
            let c_prev = |u: usize| if t == 0 { 0.0 } else { caches[t - 1].c[u] };
            let mut dpre = vec![0.0; 4 * h]; // [f, i, g, o] pre-activation grads
            for u in 0..h {
                let d_o = dh[u] * cache.tanh_c[u];
                let dcu = dc[u] + dh[u] * cache.o[u] * (1.0 - cache.tanh_c[u] * cache.tanh_c[u]);
                let d_f = dcu * c_prev(u);
                let d_i = dcu * cache.g[u];
                let d_g = dcu * cache.i[u];
                dpre[u] = d_f * cache.f[u] * (1.0 - cache.f[u]);
                dpre[h + u] = d_i * cache.i[u] * (1.0 - cache.i[u]);
                dpre[2 * h + u] = d_g * (1.0 - cache.g[u] * cache.g[u]);
                dpre[3 * h + u] = d_o * cache.o[u] * (1.0 - cache.o[u]);
                dc[u] = dcu * cache.f[u];
            }
            let mut dz = vec![0.0; zw];
            for gate_idx in 0..4 {
                for u in 0..h {
                    let d = dpre[gate_idx * h + u];
                    let row = self.weight_block(gate_idx) + u * zw;
                    grad[self.bias_block(gate_idx) + u] += d;
                    for k in 0..zw {
                        grad[row + k] += d * cache.z[k];
                        dz[k] += d * params[row + k];
                    }
                }
            }
            dh.copy_from_slice(&dz[..h]);
        }
    }

    fn init(&self, rng: &mut ChaCha8Rng, params: &mut [f64]) {
        let zw = self.hidden + self.n_features;
        for gate in 0..4 {
            let o = self.weight_block(gate);
            glorot_uniform(rng, zw, self.hidden, &mut params[o..o + self.hidden * zw]);
        }
        // forget-gate bias starts at 1
        let fb = self.bias_block(0);
        params[fb..fb + self.hidden].iter_mut().for_each(|b| *b = 1.0);
    }
}

/// Unidirectional LSTM with a dense final-state head.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    pub shape: LstmShape,
    pub steps: usize,
    pub out_len: usize,
    /// Direction params, then head weights (out_len x hidden), then head bias.
    pub params: Vec<f64>,
}

impl Lstm {
    pub fn new(steps: usize, n_features: usize, hidden: usize, out_len: usize, seed: u64) -> Self {
        let shape = LstmShape { hidden, n_features };
        let n = shape.n_params() + out_len * hidden + out_len;
        let mut params = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        shape.init(&mut rng, &mut params);
        let head = shape.n_params();
        glorot_uniform(&mut rng, hidden, out_len, &mut params[head..head + out_len * hidden]);
        Self {
            shape,
            steps,
            out_len,
            params,
        }
    }

    fn head_offset(&self) -> usize {
        self.shape.n_params()
    }
}

fn head_forward(params: &[f64], offset: usize, state: &[f64], out_len: usize) -> Vec<f64> {
    let width = state.len();
    (0..out_len)
        .map(|r| {
            let row = offset + r * width;
            let mut s = params[offset + out_len * width + r];
            for (w, h) in params[row..row + width].iter().zip(state) {
                s += w * h;
            }
            s
        })
        .collect()
}

/// Head backward: returns gradient wrt the state, accumulates weight and
/// bias grads.
fn head_backward(
    params: &[f64],
    offset: usize,
    state: &[f64],
    dy: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let width = state.len();
    let out_len = dy.len();
    let mut dstate = vec![0.0; width];
    for (r, d) in dy.iter().enumerate() {
        let row = offset + r * width;
        grad[offset + out_len * width + r] += d;
        for k in 0..width {
            grad[row + k] += d * state[k];
            dstate[k] += d * params[row + k];
        }
    }
    dstate
}

impl Network for Lstm {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_width(&self) -> usize {
        self.steps * self.shape.n_features
    }

    fn output_len(&self) -> usize {
        self.out_len
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        let (_, h_final) = self.shape.run(&self.params, input, self.steps);
        head_forward(&self.params, self.head_offset(), &h_final, self.out_len)
    }

    fn loss_and_grad(&self, inputs: &[f64], targets: &[f64], n: usize, grad: &mut [f64]) -> f64 {
        let w = self.input_width();
        let out = self.out_len;
        let mut loss = 0.0;
        for s in 0..n {
            let xs = &inputs[s * w..(s + 1) * w];
            let (caches, h_final) = self.shape.run(&self.params, xs, self.steps);
            let pred = head_forward(&self.params, self.head_offset(), &h_final, out);
            let dy: Vec<f64> = pred
                .iter()
                .zip(&targets[s * out..(s + 1) * out])
                .map(|(p, t)| {
                    loss += (p - t) * (p - t);
                    2.0 * (p - t) / (n * out) as f64
                })
                .collect();
            let dh = head_backward(&self.params, self.head_offset(), &h_final, &dy, grad);
            self.shape.backprop(&self.params, &caches, &dh, grad);
        }
        loss / (n * out) as f64
    }
}

/// Bidirectional LSTM: a forward and a backward direction, final hidden
/// states concatenated (dimension 2H) into the dense head.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub shape: LstmShape,
    pub steps: usize,
    pub out_len: usize,
    /// Forward direction, backward direction, head (out_len x 2H), bias.
    pub params: Vec<f64>,
}

impl BiLstm {
    pub fn new(steps: usize, n_features: usize, hidden: usize, out_len: usize, seed: u64) -> Self {
        let shape = LstmShape { hidden, n_features };
        let n = 2 * shape.n_params() + out_len * 2 * hidden + out_len;
        let mut params = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        shape.init(&mut rng, &mut params[..shape.n_params()]);
        let bwd = shape.n_params();
        {
            let (_, rest) = params.split_at_mut(bwd);
            shape.init(&mut rng, &mut rest[..shape.n_params()]);
        }
        let head = 2 * shape.n_params();
        glorot_uniform(&mut rng, 2 * hidden, out_len, &mut params[head..head + out_len * 2 * hidden]);
        Self {
            shape,
            steps,
            out_len,
            params,
        }
    }

    fn bwd_offset(&self) -> usize {
        self.shape.n_params()
    }

    fn head_offset(&self) -> usize {
        2 * self.shape.n_params()
    }

    fn reversed_input(&self, input: &[f64]) -> Vec<f64> {
        let f = self.shape.n_features;
        let mut rev = Vec::with_capacity(input.len());
        for t in (0..self.steps).rev() {
            rev.extend_from_slice(&input[t * f..(t + 1) * f]);
        }
        rev
    }
}

impl Network for BiLstm {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_width(&self) -> usize {
        self.steps * self.shape.n_features
    }

    fn output_len(&self) -> usize {
        self.out_len
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        let (_, h_fwd) = self.shape.run(&self.params, input, self.steps);
        let rev = self.reversed_input(input);
        let (_, h_bwd) = self.shape.run(&self.params[self.bwd_offset()..], &rev, self.steps);
        let mut state = h_fwd;
        state.extend_from_slice(&h_bwd);
        head_forward(&self.params, self.head_offset(), &state, self.out_len)
    }

    fn loss_and_grad(&self, inputs: &[f64], targets: &[f64], n: usize, grad: &mut [f64]) -> f64 {
        let w = self.input_width();
        let out = self.out_len;
        let h = self.shape.hidden;
        let bwd = self.bwd_offset();
        let mut loss = 0.0;
        for s in 0..n {
            let xs = &inputs[s * w..(s + 1) * w];
            let rev = self.reversed_input(xs);
            let (caches_f, h_fwd) = self.shape.run(&self.params, xs, self.steps);
            let (caches_b, h_bwd) = self.shape.run(&self.params[bwd..], &rev, self.steps);
            let mut state = h_fwd;
            state.extend_from_slice(&h_bwd);
            let pred = head_forward(&self.params, self.head_offset(), &state, out);
            let dy: Vec<f64> = pred
                .iter()
                .zip(&targets[s * out..(s + 1) * out])
                .map(|(p, t)| {
                    loss += (p - t) * (p - t);
                    2.0 * (p - t) / (n * out) as f64
                })
                .collect();
            let dstate = head_backward(&self.params, self.head_offset(), &state, &dy, grad);
            self.shape.backprop(&self.params, &caches_f, &dstate[..h], grad);
            self.shape
                .backprop(&self.params[bwd..], &caches_b, &dstate[h..], &mut grad[bwd..]);
        }
        loss / (n * out) as f64
    }
}
