//! Feed-forward network over the flattened input window: dense layers
//! with tanh hidden activations and a linear 24-value output head.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nn::{glorot_uniform, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct Ffnn {
    /// Layer widths, input first, output last.
    pub sizes: Vec<usize>,
    /// Per layer: weight matrix (rows x cols = sizes[l+1] x sizes[l])
    /// row-major, then bias; layers concatenated.
    pub params: Vec<f64>,
}

impl Ffnn {
    pub fn new(input: usize, hidden: usize, hidden_layers: usize, output: usize, seed: u64) -> Self {
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat(hidden).take(hidden_layers));
        sizes.push(output);
        let n_params: usize = sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum();
        let mut params = vec![0.0; n_params];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            glorot_uniform(&mut rng, fan_in, fan_out, &mut params[offset..offset + fan_out * fan_in]);
            offset += fan_out * fan_in + fan_out; // biases stay zero
        }
        Self { sizes, params }
    }

    fn layer_offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        // (weight_offset, bias_offset, rows, cols)
        let mut out = Vec::new();
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            let (cols, rows) = (w[0], w[1]);
            out.push((offset, offset + rows * cols, rows, cols));
            offset += rows * cols + rows;
        }
        out
    }

    /// Forward pass caching per-layer activations (input first, output
    /// last).
    fn forward_cached(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.layer_offsets();
        let n_layers = layers.len();
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        for (l, (wo, bo, rows, cols)) in layers.into_iter().enumerate() {
            let x = &acts[l];
            let mut y = vec![0.0; rows];
            for r in 0..rows {
                let row = &self.params[wo + r * cols..wo + (r + 1) * cols];
                let mut s = self.params[bo + r];
                for (wv, xv) in row.iter().zip(x) {
                    s += wv * xv;
                }
                y[r] = if l + 1 < n_layers { s.tanh() } else { s };
            }
            acts.push(y);
        }
        acts
    }
}

impl Network for Ffnn {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_width(&self) -> usize {
        self.sizes[0]
    }

    fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).pop().unwrap()
    }

    fn loss_and_grad(&self, inputs: &[f64], targets: &[f64], n: usize, grad: &mut [f64]) -> f64 {
        let w = self.input_width();
        let out = self.output_len();
        let layers = self.layer_offsets();
        let n_layers = layers.len();
        let mut loss = 0.0;
        for i in 0..n {
            let acts = self.forward_cached(&inputs[i * w..(i + 1) * w]);
            let pred = &acts[n_layers];
            let target = &targets[i * out..(i + 1) * out];
            // delta at the linear output
            let mut delta: Vec<f64> = pred
                .iter()
                .zip(target)
                .map(|(p, t)| {
                    loss += (p - t) * (p - t);
                    2.0 * (p - t) / (n * out) as f64
                })
                .collect();
            for l in (0..n_layers).rev() {
                let (wo, bo, rows, cols) = layers[l];
                let x = &acts[l];
                let mut dx = vec![0.0; cols];
                for r in 0..rows {
                    let d = delta[r];
                    grad[bo + r] += d;
                    let row = wo + r * cols;
                    for c in 0..cols {
                        grad[row + c] += d * x[c];
                        dx[c] += d * self.params[row + c];
                    }
                }
                if l > 0 {
                    // through the tanh of the layer below
                    for (dv, a) in dx.iter_mut().zip(&acts[l]) {
                        *dv *= 1.0 - a * a;
                    }
                }
                delta = dx;
            }
        }
        loss / (n * out) as f64
    }
}
