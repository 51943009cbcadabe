//! K-nearest-neighbor classification with Euclidean distance.

use serde::{Deserialize, Serialize};

use super::{ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;

/// Offset keeping inverse-distance weights finite at zero distance.
const DISTANCE_EPSILON: f64 = 1e-9;

/// Instance-based model; stores the training data verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub classes: Vec<Label>,
    pub k: usize,
    /// Weight neighbors by `1 / (distance + 1e-9)` instead of uniformly.
    pub weighted: bool,
    features: Matrix,
    label_indices: Vec<usize>,
}

impl KnnModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        if x.len() != self.features.cols() {
            return Err(HarError::InvalidInput(format!(
                "expected {} features, got {}",
                self.features.cols(),
                x.len()
            )));
        }
        let mut distances: Vec<(f64, usize)> = self
            .features
            .iter_rows()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2.sqrt(), i)
            })
            .collect();
        // Stable sort on distance: equal distances keep training-set order.
        distances.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));

        let mut scores = vec![0.0; self.classes.len()];
        for &(dist, idx) in distances.iter().take(self.k) {
            let weight = if self.weighted {
                1.0 / (dist + DISTANCE_EPSILON)
            } else {
                1.0
            };
            scores[self.label_indices[idx]] += weight;
        }
        ProbabilityDistribution::from_scores(scores)
    }
}

pub(crate) fn fit(ts: &TrainingSet, k: usize, weighted: bool) -> Result<KnnModel> {
    if k > ts.n_samples() {
        return Err(HarError::InvalidInput(format!(
            "k = {} exceeds the {} training samples",
            k,
            ts.n_samples()
        )));
    }
    Ok(KnnModel {
        classes: ts.classes().to_vec(),
        k,
        weighted,
        features: ts.features().clone(),
        label_indices: ts.label_indices().to_vec(),
    })
}

/// Single-query form of the classifier: the distribution over classes among
/// the `k` nearest training points.
pub fn knn_predict(
    ts: &TrainingSet,
    x: &[f64],
    k: usize,
    weighted: bool,
) -> Result<ProbabilityDistribution> {
    fit(ts, k, weighted)?.predict_proba(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts_1d(points: &[(f64, Label)]) -> TrainingSet {
        let rows: Vec<Vec<f64>> = points.iter().map(|(v, _)| vec![*v]).collect();
        let labels: Vec<Label> = points.iter().map(|(_, l)| *l).collect();
        TrainingSet::new(Matrix::from_rows(rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn nearest_single_neighbor_wins() {
        let ts = ts_1d(&[(0.0, 1), (10.0, 2)]);
        let p = knn_predict(&ts, &[1.0], 1, false).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
    }

    #[test]
    fn k_equals_m_uniform_gives_class_frequencies() {
        let ts = ts_1d(&[(0.0, 1), (1.0, 1), (2.0, 1), (3.0, 2)]);
        for query in [-100.0, 0.0, 55.0] {
            let p = knn_predict(&ts, &[query], 4, false).unwrap();
            assert_eq!(p.probs(), &[0.75, 0.25]);
        }
    }

    #[test]
    fn matches_exhaustive_sort_oracle() {
        let points = [(0.0, 1), (2.0, 2), (3.5, 1), (5.0, 2), (9.0, 2)];
        let ts = ts_1d(&points);
        let query = 3.0;
        let k = 3;

        // Brute-force oracle: sort by (distance, index), tally the top k.
        let mut order: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, (v, _))| ((v - query).abs(), i))
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut counts = [0usize; 2];
        for &(_, i) in order.iter().take(k) {
            counts[(points[i].1 - 1) as usize] += 1;
        }
        let expected: Vec<f64> = counts.iter().map(|&c| c as f64 / k as f64).collect();

        let p = knn_predict(&ts, &[query], k, false).unwrap();
        assert_eq!(p.probs(), expected.as_slice());
    }

    #[test]
    fn distance_ties_break_by_training_order() {
        // Both neighbors sit at distance 1; k = 1 must pick the earlier row.
        let ts = ts_1d(&[(1.0, 2), (-1.0, 1)]);
        let p = knn_predict(&ts, &[0.0], 1, false).unwrap();
        assert_eq!(p.probs(), &[0.0, 1.0]);
    }

    #[test]
    fn weighted_neighbors_dominate_by_proximity() {
        let ts = ts_1d(&[(0.0, 1), (0.1, 1), (5.0, 2)]);
        let p = knn_predict(&ts, &[0.0], 3, true).unwrap();
        assert!(p.probs()[0] > 0.99);
    }

    #[test]
    fn k_larger_than_m_errors() {
        let ts = ts_1d(&[(0.0, 1), (1.0, 2)]);
        assert!(knn_predict(&ts, &[0.0], 3, false).is_err());
    }
}
