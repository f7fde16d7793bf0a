//! Neural-net primitives: affine maps, activations, softmax cross-entropy,
//! Adam, and a finite-difference gradient checker.
//!
//! Every gradient here is hand-derived; [`grad_check`] is the contract that
//! keeps them honest. The tape in [`crate::tape`] composes these primitives
//! for the full training losses.

use crate::error::{Error, Result};
use crate::mat::Mat;
use rand::Rng;

/// `Y = X·Wᵀ (+ b)`, with `b` broadcast over rows.
pub fn affine(x: &Mat, w: &Mat, b: Option<&Mat>) -> Result<Mat> {
    if x.cols() != w.cols() {
        return Err(Error::Dimension(format!(
            "affine: x is {}x{}, w is {}x{}",
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let mut y = x.matmul_nt(w);
    if let Some(bias) = b {
        if bias.rows() != 1 || bias.cols() != w.rows() {
            return Err(Error::Dimension(format!(
                "affine: bias is {}x{}, expected 1x{}",
                bias.rows(),
                bias.cols(),
                w.rows()
            )));
        }
        for i in 0..y.rows() {
            for (v, &bv) in y.row_mut(i).iter_mut().zip(bias.row(0)) {
                *v += bv;
            }
        }
    }
    Ok(y)
}

/// Gradients of [`affine`] given the upstream gradient on `Y`.
/// Returns `(dX, dW, db)` where `db` is summed over rows.
pub fn grad_affine(x: &Mat, w: &Mat, upstream: &Mat) -> (Mat, Mat, Mat) {
    let dx = upstream.matmul(w);
    let dw = upstream.matmul_tn(x);
    let db = upstream.col_sums();
    (dx, dw, db)
}

pub fn tanh_mat(x: &Mat) -> Mat {
    x.map(f64::tanh)
}

/// `tanh'` in terms of the forward output: `1 - y²`.
pub fn tanh_backward(y: &Mat, upstream: &Mat) -> Mat {
    upstream.hadamard(&y.map(|v| 1.0 - v * v))
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_mat(x: &Mat) -> Mat {
    x.map(sigmoid)
}

/// `sigmoid'` in terms of the forward output: `y·(1 - y)`.
pub fn sigmoid_backward(y: &Mat, upstream: &Mat) -> Mat {
    upstream.hadamard(&y.map(|v| v * (1.0 - v)))
}

/// Row-wise softmax with max-shift stabilization. Rows sum to 1.
pub fn softmax_rows(logits: &Mat) -> Mat {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean over rows of `-w_y · log softmax(logits)_y`.
///
/// Returns the loss and its exact gradient on the logits. `class_weights`,
/// when given, must hold one positive weight per class.
pub fn softmax_cross_entropy(
    logits: &Mat,
    labels: &[usize],
    class_weights: Option<&[f64]>,
) -> Result<(f64, Mat)> {
    if logits.rows() == 0 {
        return Err(Error::Domain("cross-entropy on an empty batch".into()));
    }
    if labels.len() != logits.rows() {
        return Err(Error::Dimension(format!(
            "cross-entropy: {} labels for {} rows",
            labels.len(),
            logits.rows()
        )));
    }
    let m = logits.cols();
    if let Some(w) = class_weights {
        if w.len() != m {
            return Err(Error::Dimension(format!(
                "cross-entropy: {} class weights for {m} classes",
                w.len()
            )));
        }
        if w.iter().any(|&v| v <= 0.0) {
            return Err(Error::Domain("class weights must be positive".into()));
        }
    }
    for (i, &y) in labels.iter().enumerate() {
        if y >= m {
            return Err(Error::Domain(format!(
                "label {y} out of range for {m} classes (row {i})"
            )));
        }
    }

    let n = logits.rows() as f64;
    let probs = softmax_rows(logits);
    let mut loss = 0.0;
    let mut dlogits = Mat::zeros(logits.rows(), m);
    for (i, &y) in labels.iter().enumerate() {
        let w = class_weights.map_or(1.0, |cw| cw[y]);
        // log-prob via shifted logits, avoiding log of a denormal
        let row = logits.row(i);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss += -w * (row[y] - max - log_sum);
        for (j, dv) in dlogits.row_mut(i).iter_mut().enumerate() {
            let indicator = if j == y { 1.0 } else { 0.0 };
            *dv = w * (probs.get(i, j) - indicator) / n;
        }
    }
    Ok((loss / n, dlogits))
}

/// Adam hyperparameters; `weight_decay` is decoupled (applied to the weights
/// directly, not through the moments).
#[derive(Clone, Copy, Debug)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First/second moments for one parameter group, in parameter order.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Mat>,
    v: Vec<Mat>,
    step: u64,
    cfg: AdamConfig,
}

impl AdamState {
    pub fn new(params: &[&Mat], cfg: AdamConfig) -> Self {
        AdamState {
            m: params.iter().map(|p| Mat::zeros(p.rows(), p.cols())).collect(),
            v: params.iter().map(|p| Mat::zeros(p.rows(), p.cols())).collect(),
            step: 0,
            cfg,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam step over a parameter group.
    ///
    /// `names` is used for diagnostics when a gradient is non-finite.
    pub fn step(
        &mut self,
        params: &mut [&mut Mat],
        grads: &[Mat],
        names: &[String],
    ) -> Result<()> {
        assert_eq!(params.len(), self.m.len(), "adam group size");
        assert_eq!(grads.len(), self.m.len(), "adam grads size");
        for (i, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::Numeric {
                    tensor: names.get(i).cloned().unwrap_or_else(|| format!("param[{i}]")),
                });
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert!(p.same_shape(g), "adam param/grad shapes");
            let pd = p.data_mut();
            for k in 0..pd.len() {
                let gk = g.data()[k];
                let mk = c.beta1 * m.data()[k] + (1.0 - c.beta1) * gk;
                let vk = c.beta2 * v.data()[k] + (1.0 - c.beta2) * gk * gk;
                m.data_mut()[k] = mk;
                v.data_mut()[k] = vk;
                let m_hat = mk / bc1;
                let v_hat = vk / bc2;
                pd[k] -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * pd[k]);
            }
        }
        Ok(())
    }
}

/// Central-difference gradient check.
///
/// `f` returns the loss and the analytic gradient for every parameter in the
/// group. Reported error per coordinate is
/// `|fd - analytic| / (|fd| + |analytic| + 1e-3)`; the floor keeps
/// finite-difference noise on near-zero gradients from dominating. Returns the
/// maximum over all checked coordinates.
pub fn grad_check<F>(f: &mut F, params: &mut [Mat], epsilon: f64) -> f64
where
    F: FnMut(&[Mat]) -> (f64, Vec<Mat>),
{
    grad_check_sampled(f, params, epsilon, None, 0)
}

/// [`grad_check`] over at most `max_coords_per_tensor` coordinates per tensor,
/// chosen by a seeded stride; `None` checks everything.
pub fn grad_check_sampled<F>(
    f: &mut F,
    params: &mut [Mat],
    epsilon: f64,
    max_coords_per_tensor: Option<usize>,
    seed: u64,
) -> f64
where
    F: FnMut(&[Mat]) -> (f64, Vec<Mat>),
{
    let (_, analytic) = f(params);
    assert_eq!(analytic.len(), params.len(), "grad_check group size");
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for t in 0..params.len() {
        let len = params[t].data().len();
        let coords: Vec<usize> = match max_coords_per_tensor {
            Some(cap) if cap < len => {
                let mut idx: Vec<usize> = (0..len).collect();
                for i in (1..idx.len()).rev() {
                    idx.swap(i, rng.random_range(0..=i));
                }
                idx.truncate(cap);
                idx
            }
            _ => (0..len).collect(),
        };
        for k in coords {
            let orig = params[t].data()[k];
            params[t].data_mut()[k] = orig + epsilon;
            let (f_plus, _) = f(params);
            params[t].data_mut()[k] = orig - epsilon;
            let (f_minus, _) = f(params);
            params[t].data_mut()[k] = orig;
            let fd = (f_plus - f_minus) / (2.0 * epsilon);
            let an = analytic[t].data()[k];
            let err = (fd - an).abs() / (fd.abs() + an.abs() + 1e-3);
            max_err = max_err.max(err);
        }
    }
    max_err
}

/// Convenience for seeding test rngs.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed)
}
