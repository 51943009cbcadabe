//! Multinomial logistic regression trained by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use super::{dot, log_sum_exp, softmax, ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;

/// Softmax-linear model `p = softmax(Wx + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub classes: Vec<Label>,
    /// `n_classes x n_features`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// Objective value before each update plus the final value; full-batch
    /// descent keeps this non-increasing for a sane learning rate.
    pub loss_history: Vec<f64>,
}

impl LogRegModel {
    fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| dot(self.weights.row(c), x) + self.bias[c])
            .collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        if x.len() != self.weights.cols() {
            return Err(HarError::InvalidInput(format!(
                "expected {} features, got {}",
                self.weights.cols(),
                x.len()
            )));
        }
        ProbabilityDistribution::new(softmax(&self.logits(x)))
    }
}

/// Mean cross-entropy plus `(l2/2) * ||W||^2` (bias unregularized).
pub fn cross_entropy_loss(
    features: &Matrix,
    label_indices: &[usize],
    weights: &Matrix,
    bias: &[f64],
    l2: f64,
) -> f64 {
    let m = features.rows() as f64;
    let k = weights.rows();
    let mut loss = 0.0;
    for (i, row) in features.iter_rows().enumerate() {
        let logits: Vec<f64> = (0..k).map(|c| dot(weights.row(c), row) + bias[c]).collect();
        loss += log_sum_exp(&logits) - logits[label_indices[i]];
    }
    loss / m + 0.5 * l2 * weights.as_slice().iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of `cross_entropy_loss` in `(dW, db)` form.
pub fn cross_entropy_gradient(
    features: &Matrix,
    label_indices: &[usize],
    weights: &Matrix,
    bias: &[f64],
    l2: f64,
) -> (Matrix, Vec<f64>) {
    let m = features.rows() as f64;
    let k = weights.rows();
    let d = weights.cols();
    let mut grad_w = Matrix::zeros(k, d);
    let mut grad_b = vec![0.0; k];
    for (i, row) in features.iter_rows().enumerate() {
        let logits: Vec<f64> = (0..k).map(|c| dot(weights.row(c), row) + bias[c]).collect();
        let probs = softmax(&logits);
        for c in 0..k {
            let delta = probs[c] - if c == label_indices[i] { 1.0 } else { 0.0 };
            grad_b[c] += delta;
            let grad_row = grad_w.row_mut(c);
            for (g, &x) in grad_row.iter_mut().zip(row) {
                *g += delta * x;
            }
        }
    }
    for (g, &w) in grad_w.as_mut_slice().iter_mut().zip(weights.as_slice()) {
        *g = *g / m + l2 * w;
    }
    for g in &mut grad_b {
        *g /= m;
    }
    (grad_w, grad_b)
}

pub(crate) fn train(ts: &TrainingSet, lr: f64, epochs: usize, l2: f64) -> Result<LogRegModel> {
    let k = ts.n_classes();
    let d = ts.n_features();
    let mut weights = Matrix::zeros(k, d);
    let mut bias = vec![0.0; k];
    let mut loss_history = Vec::with_capacity(epochs + 1);

    for _ in 0..epochs {
        let loss = cross_entropy_loss(ts.features(), ts.label_indices(), &weights, &bias, l2);
        if !loss.is_finite() {
            return Err(HarError::Diverged {
                learner: "logreg".into(),
                message: format!("non-finite loss (lr={} may be too high)", lr),
            });
        }
        loss_history.push(loss);
        let (grad_w, grad_b) =
            cross_entropy_gradient(ts.features(), ts.label_indices(), &weights, &bias, l2);
        for (w, g) in weights.as_mut_slice().iter_mut().zip(grad_w.as_slice()) {
            *w -= lr * g;
        }
        for (b, g) in bias.iter_mut().zip(&grad_b) {
            *b -= lr * g;
        }
        if weights.as_slice().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(HarError::Diverged {
                learner: "logreg".into(),
                message: format!("non-finite weights (lr={} may be too high)", lr),
            });
        }
    }
    let final_loss = cross_entropy_loss(ts.features(), ts.label_indices(), &weights, &bias, l2);
    if !final_loss.is_finite() {
        return Err(HarError::Diverged {
            learner: "logreg".into(),
            message: format!("non-finite loss (lr={} may be too high)", lr),
        });
    }
    loss_history.push(final_loss);

    Ok(LogRegModel {
        classes: ts.classes().to_vec(),
        weights,
        bias,
        loss_history,
    })
}
