//! One-vs-rest linear SVM trained by subgradient descent on hinge loss.

use serde::{Deserialize, Serialize};

use super::{dot, softmax, ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;

/// One linear scorer per class. `predict` takes the argmax margin;
/// `predict_proba` softmaxes the margins, a pseudo-probability good enough
/// for soft combination rules but not calibrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub classes: Vec<Label>,
    /// `n_classes x n_features`, one one-vs-rest hyperplane per row.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    /// Summed per-class hinge objectives, one entry per epoch plus the final
    /// value.
    pub loss_history: Vec<f64>,
}

impl LinearSvmModel {
    /// Raw one-vs-rest margins `w_c . x + b_c`.
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
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
        ProbabilityDistribution::new(softmax(&self.margins(x)))
    }
}

/// L2-regularized mean hinge loss of one binary scorer:
/// `(1/m) * sum max(0, 1 - y * (w.x + b)) + (l2/2) * ||w||^2`, `y in {-1, +1}`.
pub fn hinge_loss(features: &Matrix, y_sign: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let m = features.rows() as f64;
    let hinge: f64 = features
        .iter_rows()
        .zip(y_sign)
        .map(|(row, &y)| (1.0 - y * (dot(w, row) + b)).max(0.0))
        .sum();
    hinge / m + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Subgradient of `hinge_loss`; the margin-exactly-1 kink contributes 0.
pub fn hinge_subgradient(
    features: &Matrix,
    y_sign: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (Vec<f64>, f64) {
    let m = features.rows() as f64;
    let mut grad_w: Vec<f64> = w.iter().map(|v| l2 * v).collect();
    let mut grad_b = 0.0;
    for (row, &y) in features.iter_rows().zip(y_sign) {
        if y * (dot(w, row) + b) < 1.0 {
            for (g, &x) in grad_w.iter_mut().zip(row) {
                *g -= y * x / m;
            }
            grad_b -= y / m;
        }
    }
    (grad_w, grad_b)
}

pub(crate) fn train_ovr(ts: &TrainingSet, lr: f64, epochs: usize, l2: f64) -> Result<LinearSvmModel> {
    let k = ts.n_classes();
    let d = ts.n_features();
    let signs: Vec<Vec<f64>> = (0..k)
        .map(|c| {
            ts.label_indices()
                .iter()
                .map(|&li| if li == c { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();

    let mut weights = Matrix::zeros(k, d);
    let mut bias = vec![0.0; k];
    let mut loss_history = Vec::with_capacity(epochs + 1);
    for _ in 0..epochs {
        let mut epoch_loss = 0.0;
        for c in 0..k {
            epoch_loss += hinge_loss(ts.features(), &signs[c], weights.row(c), bias[c], l2);
        }
        if !epoch_loss.is_finite() {
            return Err(HarError::Diverged {
                learner: "linsvm".into(),
                message: format!("non-finite loss (lr={} may be too high)", lr),
            });
        }
        loss_history.push(epoch_loss);
        for c in 0..k {
            let (grad_w, grad_b) =
                hinge_subgradient(ts.features(), &signs[c], weights.row(c), bias[c], l2);
            for (w, g) in weights.row_mut(c).iter_mut().zip(&grad_w) {
                *w -= lr * g;
            }
            bias[c] -= lr * grad_b;
        }
        if weights.as_slice().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(HarError::Diverged {
                learner: "linsvm".into(),
                message: format!("non-finite weights (lr={} may be too high)", lr),
            });
        }
    }
    let final_loss: f64 = (0..k)
        .map(|c| hinge_loss(ts.features(), &signs[c], weights.row(c), bias[c], l2))
        .sum();
    if !final_loss.is_finite() {
        return Err(HarError::Diverged {
            learner: "linsvm".into(),
            message: format!("non-finite loss (lr={} may be too high)", lr),
        });
    }
    loss_history.push(final_loss);

    Ok(LinearSvmModel {
        classes: ts.classes().to_vec(),
        weights,
        bias,
        loss_history,
    })
}
