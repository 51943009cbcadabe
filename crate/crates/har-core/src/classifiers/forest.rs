//! Random forest: bagged CART trees with per-split feature subsampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{CartModel, FeatureSampler, TreeGrower};
use super::{ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::Result;
use crate::rng::{derive_seed, seeded_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub classes: Vec<Label>,
    pub trees: Vec<CartModel>,
}

impl RandomForestModel {
    /// Mean of the member trees' leaf distributions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        let k = self.classes.len();
        let mut acc = vec![0.0; k];
        for tree in &self.trees {
            let dist = tree.predict_proba(x)?;
            for (a, p) in acc.iter_mut().zip(dist.probs()) {
                *a += p;
            }
        }
        let t = self.trees.len() as f64;
        ProbabilityDistribution::new(acc.into_iter().map(|v| v / t).collect())
    }
}

pub(crate) fn train(
    ts: &TrainingSet,
    n_trees: usize,
    max_depth: usize,
    min_leaf: usize,
    bootstrap: bool,
    all_features: bool,
    seed: u64,
) -> RandomForestModel {
    let m = ts.n_samples();
    let d = ts.n_features();
    let candidate_count = if all_features {
        d
    } else {
        ((d as f64).sqrt().round() as usize).clamp(1, d)
    };

    let trees = (0..n_trees)
        .map(|t| {
            // Each tree owns an RNG stream derived from (seed, tree index).
            let mut rng = seeded_rng(derive_seed(seed, t as u64));
            let rows: Vec<usize> = if bootstrap {
                (0..m).map(|_| rng.random_range(0..m)).collect()
            } else {
                (0..m).collect()
            };
            let sampler = if all_features {
                FeatureSampler::All
            } else {
                FeatureSampler::Random { count: candidate_count, rng: &mut rng }
            };
            let nodes = TreeGrower::new(ts, max_depth, min_leaf, sampler).grow(rows);
            CartModel {
                classes: ts.classes().to_vec(),
                nodes,
            }
        })
        .collect();

    RandomForestModel {
        classes: ts.classes().to_vec(),
        trees,
    }
}

#[cfg(test)]
mod tests {
    use crate::classifiers::{testdata, ClassifierSpec, Model};

    #[test]
    fn degenerate_forest_equals_cart() {
        let ts = testdata::xor_clusters(12, 23);
        let forest_spec = ClassifierSpec::Rforest {
            n_trees: 1,
            max_depth: 10,
            min_leaf: 2,
            bootstrap: false,
            all_features: true,
            seed: 0,
        };
        let cart_spec = ClassifierSpec::Cart { max_depth: 10, min_leaf: 2 };
        let forest = forest_spec.fit(&ts).unwrap();
        let cart = cart_spec.fit(&ts).unwrap();
        use rand::Rng;
        let mut rng = crate::rng::seeded_rng(24);
        for _ in 0..200 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            assert_eq!(forest.predict(&x).unwrap(), cart.predict(&x).unwrap());
            assert_eq!(
                forest.predict_proba(&x).unwrap().probs(),
                cart.predict_proba(&x).unwrap().probs()
            );
        }
    }

    #[test]
    fn separable_blobs_reach_high_accuracy() {
        let ts = testdata::separable_blobs(30, 25);
        let model = ClassifierSpec::Rforest {
            n_trees: 25,
            max_depth: 8,
            min_leaf: 1,
            bootstrap: true,
            all_features: false,
            seed: 26,
        }
        .fit(&ts)
        .unwrap();
        let acc = testdata::training_accuracy(&model, &ts);
        assert!(acc >= 0.99, "training accuracy {}", acc);
    }

    #[test]
    fn same_seed_is_identical() {
        let ts = testdata::xor_clusters(8, 27);
        let spec = ClassifierSpec::Rforest {
            n_trees: 12,
            max_depth: 6,
            min_leaf: 1,
            bootstrap: true,
            all_features: false,
            seed: 28,
        };
        let a = spec.fit(&ts).unwrap();
        let b = spec.fit(&ts).unwrap();
        assert_eq!(a, b);
        match (&a, spec.reseeded(29).fit(&ts).unwrap()) {
            (Model::Rforest(first), Model::Rforest(second)) => {
                assert_ne!(first.trees, second.trees, "different seeds should differ");
            }
            _ => unreachable!(),
        }
    }
}
