use log::warn;

use crate::embedding::Embedding;
use crate::error::{Error, Result};

/// L2 weight on the coefficients (the bias is not penalized).
pub const L2: f64 = 1e-4;
pub const MAX_EPOCHS: usize = 500;
pub const GRAD_TOL: f64 = 1e-6;

/// A binary logistic model `σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Logistic {
    pub fn zeros(d: usize) -> Self {
        Self { weights: vec![0.0; d], bias: 0.0 }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2/2 ‖w‖²` over the rows of `x`, and
/// its gradient with respect to `(w, b)`.
pub fn logistic_loss_grad(model: &Logistic, x: &Embedding, y: &[bool], l2: f64) -> (f64, Logistic) {
    let m = x.n() as f64;
    let mut grad = Logistic::zeros(x.dim());
    let mut loss = 0.0;
    for (row, &yi) in x.rows().zip(y) {
        let z = model.decision(row);
        let t = if yi { 1.0 } else { 0.0 };
        loss += softplus(z) - t * z;
        let r = (sigmoid(z) - t) / m;
        grad.bias += r;
        for (g, v) in grad.weights.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    loss /= m;
    loss += 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.weights.iter_mut().zip(&model.weights) {
        *g += l2 * w;
    }
    (loss, grad)
}

/// Largest eigenvalue of `[X 1]ᵀ[X 1] / m` by power iteration.
fn gram_spectral_norm(x: &Embedding) -> f64 {
    let d = x.dim() + 1;
    let m = x.n() as f64;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut next = vec![0.0; d];
        for row in x.rows() {
            let proj = v[d - 1] + row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
            for (n, a) in next.iter_mut().zip(row) {
                *n += proj * a / m;
            }
            next[d - 1] += proj / m;
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = next.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

/// Full-batch gradient descent with step `1/L`, where `L` bounds the
/// curvature of the loss. Stops after [`MAX_EPOCHS`] or once the gradient
/// norm drops below [`GRAD_TOL`].
pub fn train_logistic(x: &Embedding, y: &[bool]) -> Result<Logistic> {
    if x.n() != y.len() {
        return Err(Error::DimensionMismatch { left: x.n(), right: y.len() });
    }
    if x.n() == 0 {
        return Err(Error::InvalidArgument("no training rows".into()));
    }
    let lipschitz = 0.25 * gram_spectral_norm(x) + L2;
    let step = 1.0 / lipschitz;
    let mut model = Logistic::zeros(x.dim());
    for _ in 0..MAX_EPOCHS {
        let (_, g) = logistic_loss_grad(&model, x, y, L2);
        let norm = (g.bias * g.bias + g.weights.iter().map(|v| v * v).sum::<f64>()).sqrt();
        if norm < GRAD_TOL {
            break;
        }
        model.bias -= step * g.bias;
        for (w, gw) in model.weights.iter_mut().zip(&g.weights) {
            *w -= step * gw;
        }
    }
    Ok(model)
}

/// One-vs-rest classifier over `classes` labels.
#[derive(Debug, Clone, PartialEq)]
pub enum OvrClassifier {
    Models(Vec<Logistic>),
    /// Every training row had the same class.
    Constant(usize),
}

impl OvrClassifier {
    /// Argmax of the per-class decision values; ties go to the lowest class.
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Self::Constant(c) => *c,
            Self::Models(models) => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (c, m) in models.iter().enumerate() {
                    let s = m.decision(x);
                    if s > best_score {
                        best = c;
                        best_score = s;
                    }
                }
                best
            }
        }
    }
}

pub fn train_logreg_ovr(x: &Embedding, labels: &[usize], classes: usize) -> Result<OvrClassifier> {
    if x.n() != labels.len() {
        return Err(Error::DimensionMismatch { left: x.n(), right: labels.len() });
    }
    let first = *labels.first().ok_or_else(|| Error::InvalidArgument("no training rows".into()))?;
    if labels.iter().all(|&c| c == first) {
        warn!("training set holds a single class ({first}); using a constant classifier");
        return Ok(OvrClassifier::Constant(first));
    }
    let models = (0..classes)
        .map(|c| {
            let y: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            train_logistic(x, &y)
        })
        .collect::<Result<_>>()?;
    Ok(OvrClassifier::Models(models))
}
