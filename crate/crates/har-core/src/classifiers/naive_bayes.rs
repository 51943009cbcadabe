//! Gaussian naive Bayes with per-class feature independence.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{softmax, ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    pub classes: Vec<Label>,
    /// Class frequencies.
    pub priors: Vec<f64>,
    /// `n_classes x n_features` per-class feature means.
    pub means: Matrix,
    /// Floored per-class feature variances, same shape.
    pub variances: Matrix,
}

impl GaussianNbModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        if x.len() != self.means.cols() {
            return Err(HarError::InvalidInput(format!(
                "expected {} features, got {}",
                self.means.cols(),
                x.len()
            )));
        }
        let log_scores: Vec<f64> = (0..self.classes.len())
            .map(|c| {
                let mut score = self.priors[c].ln();
                for (j, &v) in x.iter().enumerate() {
                    let mu = self.means.get(c, j);
                    let var = self.variances.get(c, j);
                    score += -0.5 * (2.0 * PI * var).ln() - (v - mu) * (v - mu) / (2.0 * var);
                }
                score
            })
            .collect();
        // Softmax rather than exp(s - logsumexp): subtracting two huge log
        // scores first would shed the digits that keep the sum at 1.
        ProbabilityDistribution::new(softmax(&log_scores))
    }
}

pub(crate) fn train(ts: &TrainingSet, var_floor: f64) -> Result<GaussianNbModel> {
    let k = ts.n_classes();
    let d = ts.n_features();
    let mut counts = vec![0usize; k];
    let mut means = Matrix::zeros(k, d);
    for i in 0..ts.n_samples() {
        let c = ts.label_index(i);
        counts[c] += 1;
        for (j, &v) in ts.features().row(i).iter().enumerate() {
            means.set(c, j, means.get(c, j) + v);
        }
    }
    for c in 0..k {
        for j in 0..d {
            means.set(c, j, means.get(c, j) / counts[c] as f64);
        }
    }
    let mut variances = Matrix::zeros(k, d);
    for i in 0..ts.n_samples() {
        let c = ts.label_index(i);
        for (j, &v) in ts.features().row(i).iter().enumerate() {
            let delta = v - means.get(c, j);
            variances.set(c, j, variances.get(c, j) + delta * delta);
        }
    }
    for c in 0..k {
        for j in 0..d {
            let var = (variances.get(c, j) / counts[c] as f64).max(var_floor);
            variances.set(c, j, var);
        }
    }
    let m = ts.n_samples() as f64;
    let priors = counts.iter().map(|&n| n as f64 / m).collect();
    Ok(GaussianNbModel {
        classes: ts.classes().to_vec(),
        priors,
        means,
        variances,
    })
}
