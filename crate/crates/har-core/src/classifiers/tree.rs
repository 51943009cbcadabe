//! CART classification tree: greedy binary splits minimizing weighted Gini
//! impurity, thresholds at midpoints between consecutive distinct values.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;

/// Arena node; children are indices into the tree's node vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Class frequencies of the training samples that reached this leaf.
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    pub classes: Vec<Label>,
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl CartModel {
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Split { feature, threshold, left, right } => {
                    if *feature >= x.len() {
                        return Err(HarError::InvalidInput(format!(
                            "tree splits on feature {} but input has {}",
                            feature,
                            x.len()
                        )));
                    }
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { probs } => {
                    return ProbabilityDistribution::new(probs.clone());
                }
            }
        }
    }

    /// Number of split levels below the root.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Gini impurity `1 - sum p_k^2` of a class count vector.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            p * p
        })
        .sum::<f64>()
}

/// Per-split candidate feature policy.
pub(crate) enum FeatureSampler<'a> {
    /// Every feature, ascending.
    All,
    /// `count` distinct features drawn fresh at each split.
    Random { count: usize, rng: &'a mut ChaCha8Rng },
}

pub(crate) struct TreeGrower<'a> {
    features: &'a Matrix,
    label_indices: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    min_leaf: usize,
    sampler: FeatureSampler<'a>,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<'a> TreeGrower<'a> {
    pub(crate) fn new(
        ts: &'a TrainingSet,
        max_depth: usize,
        min_leaf: usize,
        sampler: FeatureSampler<'a>,
    ) -> Self {
        Self {
            features: ts.features(),
            label_indices: ts.label_indices(),
            n_classes: ts.n_classes(),
            max_depth,
            min_leaf,
            sampler,
            nodes: Vec::new(),
        }
    }

    pub(crate) fn grow(mut self, rows: Vec<usize>) -> Vec<TreeNode> {
        let root = self.grow_node(rows, 0);
        debug_assert_eq!(root, 0);
        self.nodes
    }

    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows {
            counts[self.label_indices[r]] += 1;
        }
        counts
    }

    fn leaf(&mut self, counts: &[usize]) -> usize {
        let n: usize = counts.iter().sum();
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        self.nodes.push(TreeNode::Leaf { probs });
        self.nodes.len() - 1
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.features.cols();
        match &mut self.sampler {
            FeatureSampler::All => (0..d).collect(),
            FeatureSampler::Random { count, rng } => {
                let mut picked = rand::seq::index::sample(rng, d, (*count).min(d)).into_vec();
                // Ascending order keeps the tie-break rule "first feature wins".
                picked.sort_unstable();
                picked
            }
        }
    }

    /// Lowest weighted child Gini over (feature, midpoint threshold) pairs;
    /// ties keep the earliest candidate. `None` when no split leaves both
    /// children with at least `min_leaf` samples.
    fn best_split(&self, rows: &[usize], candidates: &[usize]) -> Option<BestSplit> {
        let n = rows.len();
        let nf = n as f64;
        let mut best: Option<BestSplit> = None;

        for &feature in candidates {
            let mut ordered: Vec<(f64, usize)> = rows
                .iter()
                .map(|&r| (self.features.get(r, feature), self.label_indices[r]))
                .collect();
            ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

            let mut left_counts = vec![0usize; self.n_classes];
            let mut right_counts = self.class_counts(rows);
            for p in 1..n {
                let (prev_value, prev_class) = ordered[p - 1];
                left_counts[prev_class] += 1;
                right_counts[prev_class] -= 1;
                let value = ordered[p].0;
                if value == prev_value {
                    continue;
                }
                if p < self.min_leaf || n - p < self.min_leaf {
                    continue;
                }
                let threshold = (prev_value + value) / 2.0;
                // Rounding can land the midpoint on the upper value; the
                // `<=` partition would then disagree with the prefix counts.
                if !(threshold >= prev_value && threshold < value) {
                    continue;
                }
                let impurity = (p as f64 / nf) * gini(&left_counts)
                    + ((n - p) as f64 / nf) * gini(&right_counts);
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(BestSplit { feature, threshold, impurity });
                }
            }
        }
        best
    }

    fn grow_node(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            return self.leaf(&counts);
        }
        let candidates = self.candidate_features();
        let Some(split) = self.best_split(&rows, &candidates) else {
            return self.leaf(&counts);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.features.get(r, split.feature) <= split.threshold);

        // Reserve the split slot so the root stays at index 0.
        let at = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { probs: vec![] });
        let left = self.grow_node(left_rows, depth + 1);
        let right = self.grow_node(right_rows, depth + 1);
        self.nodes[at] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

pub(crate) fn train(ts: &TrainingSet, max_depth: usize, min_leaf: usize) -> CartModel {
    let rows: Vec<usize> = (0..ts.n_samples()).collect();
    let nodes = TreeGrower::new(ts, max_depth, min_leaf, FeatureSampler::All).grow(rows);
    CartModel {
        classes: ts.classes().to_vec(),
        nodes,
    }
}
