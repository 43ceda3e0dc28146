//! Multi-output support vector regression trained by iteratively
//! reweighted least squares (IRWLS).
//!
//! All 24 outputs share one set of kernel expansion coefficients per
//! sample column; the loss couples them through the Euclidean norm of the
//! per-sample error vector,
//!
//!   L(u_i) = 0                 if u_i < epsilon
//!            C (u_i - eps)^2   otherwise,      u_i = ||y_i - f(x_i)||.
//!
//! Each IRWLS pass linearizes that loss with weights
//! a_i = 2C (u_i - eps) / u_i, solves the resulting weighted kernel ridge
//! system (one LU factorization shared by all outputs), and backtracks a
//! step toward the solution so the true objective never increases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsvrModel {
    pub kernel: Kernel,
    pub n_features: usize,
    pub out_len: usize,
    /// Training inputs retained for kernel evaluation, row-major
    /// `[sample][feature]`.
    pub support: Vec<f64>,
    /// Expansion coefficients, `[sample][output]`.
    pub beta: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct MsvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` = 1 / n_features.
    pub gamma: Option<f64>,
    /// Training-set cap: IRWLS solves a dense n x n system, so larger
    /// training sets are thinned to this many evenly spaced samples.
    pub max_samples: usize,
}

impl Default for MsvrParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            epsilon: 0.1,
            gamma: None,
            max_samples: 1000,
        }
    }
}

impl MsvrModel {
    pub fn n_support(&self) -> usize {
        self.support.len() / self.n_features.max(1)
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_support();
        let mut out = self.bias.clone();
        for i in 0..n {
            let k = self
                .kernel
                .eval(&self.support[i * self.n_features..(i + 1) * self.n_features], x);
            if k == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += k * self.beta[i * self.out_len + j];
            }
        }
        out
    }
}

fn thin_indices(n: usize, cap: usize) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    // evenly spaced, deterministic
    (0..cap).map(|i| i * n / cap).collect()
}

struct IrwlsState {
    /// n x out
    beta: DMatrix<f64>,
    bias: DVector<f64>,
}

fn objective(
    k: &DMatrix<f64>,
    y: &DMatrix<f64>,
    state: &IrwlsState,
    c: f64,
    eps: f64,
) -> (f64, Vec<f64>) {
    let n = y.nrows();
    let out = y.ncols();
    let pred = k * &state.beta;
    let mut reg = 0.0;
    for j in 0..out {
        reg += state.beta.column(j).dot(&pred.column(j));
    }
    let mut loss = 0.0;
    let mut u = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..out {
            let e = y[(i, j)] - pred[(i, j)] - state.bias[j];
            s += e * e;
        }
        u[i] = s.sqrt();
        if u[i] > eps {
            loss += c * (u[i] - eps) * (u[i] - eps);
        }
    }
    (0.5 * reg + loss, u)
}

/// Fit on flat `[sample][feature]` inputs and `[sample][out]` targets.
/// Returns the model and the per-iteration objective values.
pub fn fit_msvr(
    inputs: &[f64],
    targets: &[f64],
    n: usize,
    n_features: usize,
    out_len: usize,
    params: &MsvrParams,
) -> Result<(MsvrModel, Vec<f64>)> {
    if n == 0 || n_features == 0 {
        return Err(Error::EmptyPartition("msvr training set".into()));
    }
    let kernel = Kernel::Rbf {
        gamma: params.gamma.unwrap_or(1.0 / n_features as f64),
    };
    fit_msvr_kernel(inputs, targets, n, n_features, out_len, params, kernel)
}

pub fn fit_msvr_kernel(
    inputs: &[f64],
    targets: &[f64],
    n: usize,
    n_features: usize,
    out_len: usize,
    params: &MsvrParams,
    kernel: Kernel,
) -> Result<(MsvrModel, Vec<f64>)> {
    let keep = thin_indices(n, params.max_samples);
    let ns = keep.len();
    let mut x = Vec::with_capacity(ns * n_features);
    let mut y = DMatrix::zeros(ns, out_len);
    for (r, &i) in keep.iter().enumerate() {
        x.extend_from_slice(&inputs[i * n_features..(i + 1) * n_features]);
        for j in 0..out_len {
            y[(r, j)] = targets[i * out_len + j];
        }
    }

    let mut k = DMatrix::zeros(ns, ns);
    for a in 0..ns {
        for b in a..ns {
            let v = kernel.eval(
                &x[a * n_features..(a + 1) * n_features],
                &x[b * n_features..(b + 1) * n_features],
            );
            k[(a, b)] = v;
            k[(b, a)] = v;
        }
    }

    let mut state = IrwlsState {
        beta: DMatrix::zeros(ns, out_len),
        bias: DVector::zeros(out_len),
    };
    let (mut obj, mut u) = objective(&k, &y, &state, params.c, params.epsilon);
    let mut trace = vec![obj];

    for _ in 0..100 {
        // active set and weights from the current residual norms
        let mut active = Vec::new();
        let mut weights = Vec::new();
        for i in 0..ns {
            if u[i] > params.epsilon {
                let a = 2.0 * params.c * (u[i] - params.epsilon) / u[i].max(1e-300);
                if a > 1e-12 {
                    active.push(i);
                    weights.push(a);
                }
            }
        }
        let target = if active.is_empty() {
            // Every sample sits strictly inside the tube: the loss term
            // vanishes, so the weighted problem degenerates to the
            // regularizer alone, whose minimizer is beta = 0. If we are
            // already there this is the global optimum; otherwise descend
            // toward it (samples re-enter at the tube boundary and the
            // next iteration rebalances).
            if state.beta.iter().all(|v| *v == 0.0) {
                break;
            }
            IrwlsState {
                beta: DMatrix::zeros(ns, out_len),
                bias: state.bias.clone(),
            }
        } else {
            let m = active.len();

            // [ K_AA + diag(1/a)   1 ] [beta_A]   [y_A]
            // [ 1^T                0 ] [  b   ] = [ 0 ]
            let mut sys = DMatrix::zeros(m + 1, m + 1);
            for p in 0..m {
                for q in 0..m {
                    sys[(p, q)] = k[(active[p], active[q])];
                }
                sys[(p, p)] += 1.0 / weights[p];
                sys[(p, m)] = 1.0;
                sys[(m, p)] = 1.0;
            }
            let mut rhs = DMatrix::zeros(m + 1, out_len);
            for (p, &i) in active.iter().enumerate() {
                for j in 0..out_len {
                    rhs[(p, j)] = y[(i, j)];
                }
            }
            let lu = sys.lu();
            let sol = match lu.solve(&rhs) {
                Some(s) => s,
                None => break, // singular system; keep the current iterate
            };

            let mut target = IrwlsState {
                beta: DMatrix::zeros(ns, out_len),
                bias: DVector::zeros(out_len),
            };
            for (p, &i) in active.iter().enumerate() {
                for j in 0..out_len {
                    target.beta[(i, j)] = sol[(p, j)];
                }
            }
            for j in 0..out_len {
                target.bias[j] = sol[(m, j)];
            }
            target
        };

        // backtracking line search toward the IRWLS solution
        let mut eta = 1.0;
        let mut accepted = None;
        while eta > 1e-8 {
            let cand = IrwlsState {
                beta: &state.beta * (1.0 - eta) + &target.beta * eta,
                bias: &state.bias * (1.0 - eta) + &target.bias * eta,
            };
            let (cand_obj, cand_u) = objective(&k, &y, &cand, params.c, params.epsilon);
            if cand_obj <= obj {
                accepted = Some((cand, cand_obj, cand_u));
                break;
            }
            eta *= 0.5;
        }
        let Some((next, next_obj, next_u)) = accepted else {
            break; // no descent step found
        };
        let delta = obj - next_obj;
        state = next;
        u = next_u;
        obj = next_obj;
        trace.push(obj);
        if delta < 1e-9 * obj.abs().max(1.0) {
            break;
        }
    }

    let model = MsvrModel {
        kernel,
        n_features,
        out_len,
        support: x,
        beta: (0..ns)
            .flat_map(|i| (0..out_len).map(move |j| (i, j)))
            .map(|(i, j)| state.beta[(i, j)])
            .collect(),
        bias: state.bias.iter().copied().collect(),
    };
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_kernel_recovers_linear_map() {
        // y = 2x with a generous C: the fit should track the slope closely
        let n = 60;
        let inputs: Vec<f64> = (0..n).map(|i| i as f64 / 10.0).collect();
        let targets: Vec<f64> = inputs.iter().map(|x| 2.0 * x).collect();
        let params = MsvrParams {
            c: 1000.0,
            epsilon: 0.01,
            gamma: None,
            max_samples: 1000,
        };
        let (model, trace) =
            fit_msvr_kernel(&inputs, &targets, n, 1, 1, &params, Kernel::Linear).unwrap();
        for (i, x) in inputs.iter().enumerate() {
            let p = model.predict(std::slice::from_ref(x))[0];
            assert!(
                (p - targets[i]).abs() < 5e-2,
                "x={x} pred={p} want={}",
                targets[i]
            );
        }
        assert!(trace.len() > 1);
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 40;
        let f = 3;
        let out = 2;
        let inputs: Vec<f64> = (0..n * f).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let targets: Vec<f64> = (0..n)
            .flat_map(|i| {
                let x = &inputs[i * f..(i + 1) * f];
                vec![x[0] + 0.5 * x[1], x[2] * x[2]]
            })
            .collect();
        let (_, trace) =
            fit_msvr(&inputs, &targets, n, f, out, &MsvrParams::default()).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rbf_fits_smooth_function() {
        let n = 80;
        let inputs: Vec<f64> = (0..n).map(|i| i as f64 / 12.0).collect();
        let targets: Vec<f64> = inputs.iter().map(|x| x.sin()).collect();
        let params = MsvrParams {
            c: 100.0,
            epsilon: 0.01,
            gamma: Some(2.0),
            max_samples: 1000,
        };
        let (model, _) = fit_msvr(&inputs, &targets, n, 1, 1, &params).unwrap();
        let mut worst = 0.0f64;
        for (x, t) in inputs.iter().zip(&targets) {
            worst = worst.max((model.predict(std::slice::from_ref(x))[0] - t).abs());
        }
        assert!(worst < 0.1, "worst abs error {worst}");
    }

    #[test]
    fn sample_cap_thins_training_set() {
        let n = 50;
        let inputs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let targets = inputs.clone();
        let params = MsvrParams {
            max_samples: 10,
            ..Default::default()
        };
        let (model, _) = fit_msvr(&inputs, &targets, n, 1, 1, &params).unwrap();
        assert_eq!(model.n_support(), 10);
    }

    #[test]
    fn thin_indices_even_coverage() {
        assert_eq!(thin_indices(4, 10), vec![0, 1, 2, 3]);
        let idx = thin_indices(100, 10);
        assert_eq!(idx, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90]);
    }
}
