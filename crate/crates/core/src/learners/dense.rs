//! Fully connected regression network: `Linear -> ReLU -> BatchNorm` per
//! hidden layer, then a scalar linear output, trained with Adam on MSE.
//!
//! All trainable parameters live in one flat vector so the optimiser and the
//! finite-difference gradient check can treat them uniformly. Per hidden
//! layer the layout is `W (out x in, row-major) | b | gamma | beta`, followed
//! by the output weights and bias.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::RegressorSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const BN_EPSILON: f64 = 1e-3;
pub const BN_MOMENTUM: f64 = 0.99;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DenseNet<T: Real> {
    pub n_inputs: usize,
    pub layer_sizes: Vec<usize>,
    pub params: Vec<T>,
    pub running_mean: Vec<Vec<T>>,
    pub running_var: Vec<Vec<T>>,
}

#[derive(Debug, Clone, Copy)]
struct LayerOffsets {
    n_in: usize,
    n_out: usize,
    w: usize,
    b: usize,
    gamma: usize,
    beta: usize,
}

/// Per-layer values kept from the forward pass for backpropagation.
struct Cache<T> {
    input: Array2<T>,
    pre: Array2<T>,
    xhat: Array2<T>,
    inv_std: Array1<T>,
    mean: Array1<T>,
    var: Array1<T>,
}

fn layout(n_inputs: usize, sizes: &[usize]) -> (Vec<LayerOffsets>, usize, usize, usize) {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut at = 0;
    let mut n_in = n_inputs;
    for &n_out in sizes {
        let w = at;
        let b = w + n_out * n_in;
        let gamma = b + n_out;
        let beta = gamma + n_out;
        at = beta + n_out;
        offsets.push(LayerOffsets { n_in, n_out, w, b, gamma, beta });
        n_in = n_out;
    }
    let out_w = at;
    let out_b = out_w + n_in;
    (offsets, out_w, out_b, out_b + 1)
}

impl<T: Real> DenseNet<T> {
    /// Glorot-uniform weights, zero biases, identity batch norm, output bias
    /// at the target mean.
    pub fn init(n_inputs: usize, layer_sizes: &[usize], output_bias: T, rng: &mut ChaCha8Rng) -> Self {
        let (offsets, out_w, out_b, total) = layout(n_inputs, layer_sizes);
        let mut params = vec![T::zero(); total];
        let mut glorot = |slice: &mut [T], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in slice {
                *v = T::lit(rng.random_range(-limit..limit));
            }
        };
        for o in &offsets {
            glorot(&mut params[o.w..o.b], o.n_in, o.n_out);
            for g in &mut params[o.gamma..o.beta] {
                *g = T::one();
            }
        }
        let last = layer_sizes.last().copied().unwrap_or(n_inputs);
        glorot(&mut params[out_w..out_b], last, 1);
        params[out_b] = output_bias;
        Self {
            n_inputs,
            layer_sizes: layer_sizes.to_vec(),
            params,
            running_mean: layer_sizes.iter().map(|&u| vec![T::zero(); u]).collect(),
            running_var: layer_sizes.iter().map(|&u| vec![T::one(); u]).collect(),
        }
    }

    fn view2(&self, at: usize, rows: usize, cols: usize) -> ArrayView2<'_, T> {
        ArrayView2::from_shape((rows, cols), &self.params[at..at + rows * cols]).expect("layout")
    }

    fn view1(&self, at: usize, len: usize) -> ArrayView1<'_, T> {
        ArrayView1::from(&self.params[at..at + len])
    }

    /// Inference with running batch-norm statistics.
    pub fn predict(&self, x: &Array2<T>) -> Array1<T> {
        let (offsets, out_w, out_b, _) = layout(self.n_inputs, &self.layer_sizes);
        let eps = T::lit(BN_EPSILON);
        let mut a = x.to_owned();
        for (l, o) in offsets.iter().enumerate() {
            let mut z = a.dot(&self.view2(o.w, o.n_out, o.n_in).t()) + &self.view1(o.b, o.n_out);
            let gamma = self.view1(o.gamma, o.n_out);
            let beta = self.view1(o.beta, o.n_out);
            for mut row in z.rows_mut() {
                for u in 0..o.n_out {
                    let r = row[u].max(T::zero());
                    let inv = T::one() / (self.running_var[l][u] + eps).sqrt();
                    row[u] = gamma[u] * (r - self.running_mean[l][u]) * inv + beta[u];
                }
            }
            a = z;
        }
        let last = self.layer_sizes.last().copied().unwrap_or(self.n_inputs);
        a.dot(&self.view1(out_w, last)) + self.params[out_b]
    }

    /// Training-mode (batch statistics) mean squared error.
    pub fn batch_loss(&self, x: &Array2<T>, y: &[T]) -> T {
        self.forward_backward(x, y, false).0
    }

    /// Training-mode loss and its gradient with respect to [`Self::params`].
    pub fn loss_and_gradient(&self, x: &Array2<T>, y: &[T]) -> (T, Vec<T>) {
        let (loss, grad, _) = self.forward_backward(x, y, true);
        (loss, grad)
    }

    fn forward_backward(&self, x: &Array2<T>, y: &[T], backward: bool) -> (T, Vec<T>, Vec<Cache<T>>) {
        let (offsets, out_w, out_b, total) = layout(self.n_inputs, &self.layer_sizes);
        let m = T::from_usize_lossy(x.nrows());
        let eps = T::lit(BN_EPSILON);
        let mut caches = Vec::with_capacity(offsets.len());
        let mut a = x.to_owned();
        for o in &offsets {
            let pre = a.dot(&self.view2(o.w, o.n_out, o.n_in).t()) + &self.view1(o.b, o.n_out);
            let r = pre.mapv(|v| v.max(T::zero()));
            let mean = r.sum_axis(Axis(0)) / m;
            let centred = &r - &mean;
            let var = centred.mapv(|v| v * v).sum_axis(Axis(0)) / m;
            let inv_std = var.mapv(|v| T::one() / (v + eps).sqrt());
            let xhat = &centred * &inv_std;
            let out = &xhat * &self.view1(o.gamma, o.n_out) + &self.view1(o.beta, o.n_out);
            caches.push(Cache { input: a, pre, xhat, inv_std, mean, var });
            a = out;
        }
        let last = self.layer_sizes.last().copied().unwrap_or(self.n_inputs);
        let w_out = self.view1(out_w, last);
        let pred = a.dot(&w_out) + self.params[out_b];
        let resid: Array1<T> = pred.iter().zip(y).map(|(&p, &t)| p - t).collect();
        let loss = resid.iter().fold(T::zero(), |s, &r| s + r * r) / m;
        if !backward {
            return (loss, Vec::new(), caches);
        }

        let mut grad = vec![T::zero(); total];
        let two = T::lit(2.0);
        let d_pred = resid.mapv(|r| two * r / m);
        let g_out_w = a.t().dot(&d_pred);
        grad[out_w..out_b].copy_from_slice(g_out_w.as_slice().expect("contiguous"));
        grad[out_b] = d_pred.sum();
        let mut d_a = d_pred.view().insert_axis(Axis(1)).dot(&w_out.insert_axis(Axis(0)));

        for (o, c) in offsets.iter().zip(&caches).rev() {
            let gamma = self.view1(o.gamma, o.n_out);
            let g_gamma = (&d_a * &c.xhat).sum_axis(Axis(0));
            let g_beta = d_a.sum_axis(Axis(0));
            let d_xhat = &d_a * &gamma;
            let sum_dx = d_xhat.sum_axis(Axis(0));
            let sum_dx_xhat = (&d_xhat * &c.xhat).sum_axis(Axis(0));
            let mut d_pre = (&d_xhat * m - &sum_dx - &c.xhat * &sum_dx_xhat) * &(&c.inv_std / m);
            d_pre.zip_mut_with(&c.pre, |d, &z| {
                if z <= T::zero() {
                    *d = T::zero();
                }
            });
            let g_w = d_pre.t().dot(&c.input);
            let g_b = d_pre.sum_axis(Axis(0));
            grad[o.w..o.b].copy_from_slice(g_w.as_standard_layout().as_slice().expect("contiguous"));
            grad[o.b..o.gamma].copy_from_slice(g_b.as_slice().expect("contiguous"));
            grad[o.gamma..o.beta].copy_from_slice(g_gamma.as_slice().expect("contiguous"));
            grad[o.beta..o.beta + o.n_out].copy_from_slice(g_beta.as_slice().expect("contiguous"));
            d_a = d_pre.dot(&self.view2(o.w, o.n_out, o.n_in));
        }
        (loss, grad, caches)
    }

    fn update_running(&mut self, caches: &[Cache<T>]) {
        let mom = T::lit(BN_MOMENTUM);
        let keep = T::one() - mom;
        for (l, c) in caches.iter().enumerate() {
            for u in 0..c.mean.len() {
                self.running_mean[l][u] = mom * self.running_mean[l][u] + keep * c.mean[u];
                self.running_var[l][u] = mom * self.running_var[l][u] + keep * c.var[u];
            }
        }
    }
}

struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
    step: T,
}

impl<T: Real> Adam<T> {
    fn new(n: usize, step: f64) -> Self {
        Self { m: vec![T::zero(); n], v: vec![T::zero(); n], t: 0, step: T::lit(step) }
    }

    fn apply(&mut self, params: &mut [T], grad: &[T]) {
        let (b1, b2, eps) = (T::lit(ADAM_BETA1), T::lit(ADAM_BETA2), T::lit(ADAM_EPSILON));
        self.t += 1;
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.step * mh / (vh.sqrt() + eps);
        }
    }
}

pub fn fit_dense<T: Real>(x: &Array2<T>, y: &[T], spec: &RegressorSpec) -> Result<DenseNet<T>> {
    spec.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset("no training rows".into()));
    }
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{n} rows but {} targets", y.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let y_mean = y.iter().copied().sum::<T>() / T::from_usize_lossy(n);
    let mut net = DenseNet::init(x.ncols(), &spec.layer_sizes, y_mean, &mut rng);
    let mut adam = Adam::new(net.params.len(), spec.step_size);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..spec.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(spec.batch_size) {
            // Batch statistics are undefined for a single row.
            if batch.len() < 2 {
                continue;
            }
            let xb = x.select(Axis(0), batch);
            let yb: Vec<T> = batch.iter().map(|&i| y[i]).collect();
            let (loss, grad, caches) = net.forward_backward(&xb, &yb, true);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            adam.apply(&mut net.params, &grad);
            net.update_running(&caches);
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(n: usize, p: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>());
        let y = (0..n).map(|_| rng.random_range(0.0..12.0)).collect();
        (x, y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = batch(5, 4, 1);
        let net = DenseNet::init(4, &[3, 2], 6.0, &mut ChaCha8Rng::seed_from_u64(2));
        let (_, g) = net.loss_and_gradient(&x, &y);
        let h = 1e-6;
        for i in 0..net.params.len() {
            let mut plus = net.clone();
            plus.params[i] += h;
            let mut minus = net.clone();
            minus.params[i] -= h;
            let fd = (plus.batch_loss(&x, &y) - minus.batch_loss(&x, &y)) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
            assert!(rel < 1e-4, "param {i}: analytic {} numeric {fd}", g[i]);
        }
    }

    #[test]
    fn zero_epochs_is_the_initial_network() {
        let (x, y) = batch(30, 3, 3);
        let mut spec = RegressorSpec::dense(vec![4]).with_seed(5);
        spec.epochs = 0;
        let a = fit_dense(&x, &y, &spec).unwrap();
        let b = fit_dense(&x, &y, &spec).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mean = y.iter().sum::<f64>() / 30.0;
        assert_eq!(a, DenseNet::init(3, &[4], mean, &mut rng));
    }

    #[test]
    fn training_reduces_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((256, 3), |_| rng.random::<f64>());
        let y: Vec<f64> = x.rows().into_iter().map(|r| 8.0 * r[0] + 2.0 * r[1]).collect();
        let mut spec = RegressorSpec::dense(vec![8, 8]).with_seed(1);
        spec.epochs = 150;
        spec.batch_size = 32;
        spec.step_size = 1e-2;
        let net = fit_dense(&x, &y, &spec).unwrap();
        let mean = y.iter().sum::<f64>() / 256.0;
        let base: f64 = y.iter().map(|v| (v - mean).abs()).sum::<f64>() / 256.0;
        let fit: f64 = net.predict(&x).iter().zip(&y).map(|(p, v)| (p - v).abs()).sum::<f64>() / 256.0;
        assert!(fit < 0.3 * base, "fit {fit} vs base {base}");
    }

    #[test]
    fn diverging_step_reports_epoch() {
        let (x, y) = batch(64, 3, 6);
        let y: Vec<f64> = y.iter().map(|v| v * 1e300).collect();
        let mut spec = RegressorSpec::dense(vec![4]).with_seed(1);
        spec.epochs = 3;
        assert!(matches!(fit_dense(&x, &y, &spec), Err(Error::Divergence { epoch: 0 })));
    }
}
