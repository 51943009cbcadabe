//! Classification metrics: one-vs-rest confusion counts, accuracy, macro
//! precision/recall/F-score, and Student-t confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataio::Label;
use crate::error::{HarError, Result};

/// Per-class one-vs-rest counts over one prediction batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    classes: Vec<Label>,
    tp: Vec<usize>,
    fp: Vec<usize>,
    fn_: Vec<usize>,
    tn: Vec<usize>,
    total: usize,
}

/// Builds one-vs-rest counts for each class in `classes`. Predictions and
/// truths outside the class list only ever contribute to the negative side.
pub fn confusion_counts(
    y_true: &[Label],
    y_pred: &[Label],
    classes: &[Label],
) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(HarError::InvalidInput(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let k = classes.len();
    let mut counts = ConfusionCounts {
        classes: classes.to_vec(),
        tp: vec![0; k],
        fp: vec![0; k],
        fn_: vec![0; k],
        tn: vec![0; k],
        total: y_true.len(),
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        for (c, &class) in classes.iter().enumerate() {
            match (t == class, p == class) {
                (true, true) => counts.tp[c] += 1,
                (false, true) => counts.fp[c] += 1,
                (true, false) => counts.fn_[c] += 1,
                (false, false) => counts.tn[c] += 1,
            }
        }
    }
    Ok(counts)
}

impl ConfusionCounts {
    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn class_counts(&self, c: usize) -> (usize, usize, usize, usize) {
        (self.tp[c], self.fp[c], self.fn_[c], self.tn[c])
    }

    /// Micro accuracy: every correct sample is a true positive for exactly
    /// its own class, so `sum(TP) / total` equals the direct match rate.
    pub fn accuracy(&self) -> f64 {
        self.tp.iter().sum::<usize>() as f64 / self.total as f64
    }

    pub fn per_class_precision(&self) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| {
                let denom = self.tp[c] + self.fp[c];
                if denom == 0 { 0.0 } else { self.tp[c] as f64 / denom as f64 }
            })
            .collect()
    }

    pub fn per_class_recall(&self) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| {
                let denom = self.tp[c] + self.fn_[c];
                if denom == 0 { 0.0 } else { self.tp[c] as f64 / denom as f64 }
            })
            .collect()
    }

    pub fn per_class_fscore(&self) -> Vec<f64> {
        self.per_class_precision()
            .iter()
            .zip(self.per_class_recall())
            .map(|(&p, r)| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
            .collect()
    }

    pub fn macro_precision(&self) -> f64 {
        mean(&self.per_class_precision())
    }

    pub fn macro_recall(&self) -> f64 {
        mean(&self.per_class_recall())
    }

    pub fn macro_fscore(&self) -> f64 {
        mean(&self.per_class_fscore())
    }

    /// Classes with no positive truth in this batch; they contribute zero
    /// recall and should be surfaced to the report.
    pub fn zero_support_classes(&self) -> Vec<Label> {
        (0..self.classes.len())
            .filter(|&c| self.tp[c] + self.fn_[c] == 0)
            .map(|c| self.classes[c])
            .collect()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Exact-match rate computed directly from label vectors.
pub fn accuracy_of(y_true: &[Label], y_pred: &[Label]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(HarError::InvalidInput(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(HarError::InvalidInput("empty label vectors".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Two-sided Student-t confidence interval `mean +- t * s / sqrt(n)` over
/// per-fold metric values. Not clipped to [0, 1].
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(HarError::InvalidInput(format!(
            "confidence interval needs at least 2 values, got {}",
            n
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(HarError::InvalidInput(format!(
            "confidence level {} outside (0, 1)",
            level
        )));
    }
    let nf = n as f64;
    let m = mean(values);
    let s = (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if s == 0.0 {
        return Ok((m, m));
    }
    let t = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| HarError::Internal(format!("t distribution: {}", e)))?
        .inverse_cdf((1.0 + level) / 2.0);
    let half_width = t * s / nf.sqrt();
    Ok((m - half_width, m + half_width))
}
