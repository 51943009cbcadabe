//! One-hidden-layer perceptron: ReLU hidden units, softmax output,
//! cross-entropy loss, mini-batch SGD with backpropagated gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dot, log_sum_exp, softmax, ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;
use crate::rng::seeded_rng;

/// Network parameters; also the container for their gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// `hidden x n_features`.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `n_classes x hidden`.
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(n_features: usize, hidden: usize, n_classes: usize) -> Self {
        Self {
            w1: Matrix::zeros(hidden, n_features),
            b1: vec![0.0; hidden],
            w2: Matrix::zeros(n_classes, hidden),
            b2: vec![0.0; n_classes],
        }
    }

    /// Glorot-uniform init, `+-sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn glorot(n_features: usize, hidden: usize, n_classes: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut params = Self::zeros(n_features, hidden, n_classes);
        let bound1 = (6.0 / (n_features + hidden) as f64).sqrt();
        for w in params.w1.as_mut_slice() {
            *w = rng.random_range(-bound1..bound1);
        }
        let bound2 = (6.0 / (hidden + n_classes) as f64).sqrt();
        for w in params.w2.as_mut_slice() {
            *w = rng.random_range(-bound2..bound2);
        }
        params
    }

    pub fn hidden_size(&self) -> usize {
        self.b1.len()
    }

    /// Hidden pre-activations, ReLU activations, and output logits.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let pre: Vec<f64> = (0..self.hidden_size())
            .map(|h| dot(self.w1.row(h), x) + self.b1[h])
            .collect();
        let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let logits: Vec<f64> = (0..self.b2.len())
            .map(|c| dot(self.w2.row(c), &act) + self.b2[c])
            .collect();
        (pre, act, logits)
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, features: &Matrix, label_indices: &[usize]) -> f64 {
        let mut total = 0.0;
        for (i, row) in features.iter_rows().enumerate() {
            let (_, _, logits) = self.forward(row);
            total += log_sum_exp(&logits) - logits[label_indices[i]];
        }
        total / features.rows() as f64
    }

    /// Backpropagated gradients of `loss`, shaped like the parameters.
    pub fn gradients(&self, features: &Matrix, label_indices: &[usize]) -> MlpParams {
        let hidden = self.hidden_size();
        let k = self.b2.len();
        let m = features.rows() as f64;
        let mut grads = MlpParams::zeros(self.w1.cols(), hidden, k);

        for (i, row) in features.iter_rows().enumerate() {
            let (pre, act, logits) = self.forward(row);
            let probs = softmax(&logits);
            // d loss / d logits = p - onehot(y)
            let dz: Vec<f64> = probs
                .iter()
                .enumerate()
                .map(|(c, p)| p - if c == label_indices[i] { 1.0 } else { 0.0 })
                .collect();
            for c in 0..k {
                grads.b2[c] += dz[c] / m;
                let grad_row = grads.w2.row_mut(c);
                for (g, &a) in grad_row.iter_mut().zip(&act) {
                    *g += dz[c] * a / m;
                }
            }
            for h in 0..hidden {
                if pre[h] <= 0.0 {
                    continue;
                }
                let da: f64 = (0..k).map(|c| dz[c] * self.w2.get(c, h)).sum();
                grads.b1[h] += da / m;
                let grad_row = grads.w1.row_mut(h);
                for (g, &x) in grad_row.iter_mut().zip(row) {
                    *g += da * x / m;
                }
            }
        }
        grads
    }

    fn step(&mut self, grads: &MlpParams, lr: f64) {
        for (w, g) in self.w1.as_mut_slice().iter_mut().zip(grads.w1.as_slice()) {
            *w -= lr * g;
        }
        for (b, g) in self.b1.iter_mut().zip(&grads.b1) {
            *b -= lr * g;
        }
        for (w, g) in self.w2.as_mut_slice().iter_mut().zip(grads.w2.as_slice()) {
            *w -= lr * g;
        }
        for (b, g) in self.b2.iter_mut().zip(&grads.b2) {
            *b -= lr * g;
        }
    }

    /// Parameters as one flat vector (w1, b1, w2, b2), for finite-difference
    /// verification.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        flat.extend_from_slice(self.w1.as_slice());
        flat.extend_from_slice(&self.b1);
        flat.extend_from_slice(self.w2.as_slice());
        flat.extend_from_slice(&self.b2);
        flat
    }

    pub fn from_flat(
        n_features: usize,
        hidden: usize,
        n_classes: usize,
        flat: &[f64],
    ) -> Result<Self> {
        let expected = hidden * n_features + hidden + n_classes * hidden + n_classes;
        if flat.len() != expected {
            return Err(HarError::InvalidInput(format!(
                "expected {} flat parameters, got {}",
                expected,
                flat.len()
            )));
        }
        let mut at = 0;
        let mut take = |n: usize| {
            let slice = flat[at..at + n].to_vec();
            at += n;
            slice
        };
        Ok(Self {
            w1: Matrix::from_flat(hidden, n_features, take(hidden * n_features))?,
            b1: take(hidden),
            w2: Matrix::from_flat(n_classes, hidden, take(n_classes * hidden))?,
            b2: take(n_classes),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub classes: Vec<Label>,
    pub params: MlpParams,
    /// Full-dataset loss before training and after each epoch.
    pub loss_history: Vec<f64>,
}

impl MlpModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        if x.len() != self.params.w1.cols() {
            return Err(HarError::InvalidInput(format!(
                "expected {} features, got {}",
                self.params.w1.cols(),
                x.len()
            )));
        }
        let (_, _, logits) = self.params.forward(x);
        ProbabilityDistribution::new(softmax(&logits))
    }
}

pub(crate) fn train(
    ts: &TrainingSet,
    hidden: usize,
    lr: f64,
    epochs: usize,
    batch: usize,
    seed: u64,
) -> Result<MlpModel> {
    let mut params = MlpParams::glorot(ts.n_features(), hidden, ts.n_classes(), seed);
    let mut rng = seeded_rng(crate::rng::derive_seed(seed, 1));
    let mut order: Vec<usize> = (0..ts.n_samples()).collect();
    let mut loss_history = Vec::with_capacity(epochs + 1);
    loss_history.push(params.loss(ts.features(), ts.label_indices()));

    for _ in 0..epochs {
        // Fisher-Yates via the epoch RNG keeps batches deterministic.
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        for chunk in order.chunks(batch) {
            let rows: Vec<Vec<f64>> = chunk.iter().map(|&i| ts.features().row(i).to_vec()).collect();
            let batch_features = Matrix::from_rows(rows)?;
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| ts.label_index(i)).collect();
            let grads = params.gradients(&batch_features, &batch_labels);
            params.step(&grads, lr);
        }
        let loss = params.loss(ts.features(), ts.label_indices());
        if !loss.is_finite() {
            return Err(HarError::Diverged {
                learner: "mlp".into(),
                message: format!("non-finite loss (lr={} may be too high)", lr),
            });
        }
        loss_history.push(loss);
    }

    Ok(MlpModel {
        classes: ts.classes().to_vec(),
        params,
        loss_history,
    })
}
