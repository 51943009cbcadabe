//! Base learners behind one contract: fit a spec on a training set, then
//! `predict_proba` a distribution over the training classes.
//!
//! All learners are native implementations. Ties in `predict` break toward
//! the lowest class code everywhere, and the seeded learners (MLP, forest)
//! are bitwise deterministic given their seed.

pub mod forest;
pub mod knn;
pub mod logreg;
pub mod mlp;
pub mod naive_bayes;
pub mod svm;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::matrix::Matrix;

pub use forest::RandomForestModel;
pub use knn::{knn_predict, KnnModel};
pub use logreg::LogRegModel;
pub use mlp::{MlpModel, MlpParams};
pub use naive_bayes::GaussianNbModel;
pub use svm::LinearSvmModel;
pub use tree::CartModel;

/// Version tag written into persisted model files.
const MODEL_FORMAT_VERSION: u32 = 1;

/// Standardized feature matrix with labels and the sorted class list.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    features: Matrix,
    labels: Vec<Label>,
    classes: Vec<Label>,
    /// Per-sample index into `classes`.
    label_indices: Vec<usize>,
}

impl TrainingSet {
    pub fn new(features: Matrix, labels: Vec<Label>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(HarError::InvalidInput("empty training set".into()));
        }
        if features.rows() != labels.len() {
            return Err(HarError::InvalidInput(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(HarError::InvalidInput(
                "training features contain non-finite values".into(),
            ));
        }
        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        let label_indices = labels
            .iter()
            .map(|l| classes.binary_search(l).expect("label in class list"))
            .collect();
        Ok(Self {
            features,
            labels,
            classes,
            label_indices,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Sorted distinct class codes.
    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Class index of sample `i`.
    pub fn label_index(&self, i: usize) -> usize {
        self.label_indices[i]
    }

    pub fn label_indices(&self) -> &[usize] {
        &self.label_indices
    }
}

/// Per-class probability vector aligned with a model's class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution {
    probs: Vec<f64>,
}

impl ProbabilityDistribution {
    /// Validates the distribution invariant: non-negative entries summing to
    /// 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(HarError::InvalidInput("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(HarError::InvalidInput(format!(
                "distribution has negative or non-finite entries: {:?}",
                probs
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(HarError::InvalidInput(format!(
                "distribution sums to {}, expected 1",
                sum
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative scores into a distribution; a zero total
    /// falls back to uniform.
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(HarError::InvalidInput(format!(
                "scores must be finite and non-negative: {:?}",
                scores
            )));
        }
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return Ok(Self::uniform(scores.len()));
        }
        Self::new(scores.into_iter().map(|s| s / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest probability; ties break toward the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// A base learner choice with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Logreg { lr: f64, epochs: usize, l2: f64 },
    Gnb { var_floor: f64 },
    Knn { k: usize, weighted: bool },
    Linsvm { lr: f64, epochs: usize, l2: f64 },
    Mlp { hidden: usize, lr: f64, epochs: usize, batch: usize, seed: u64 },
    Cart { max_depth: usize, min_leaf: usize },
    Rforest {
        n_trees: usize,
        max_depth: usize,
        min_leaf: usize,
        /// Train each tree on a bootstrap resample (disable to reproduce a
        /// plain CART with `n_trees = 1`).
        bootstrap: bool,
        /// Consider every feature at each split instead of round(sqrt(d)).
        all_features: bool,
        seed: u64,
    },
}

impl ClassifierSpec {
    pub fn logreg() -> Self {
        Self::Logreg { lr: 0.1, epochs: 500, l2: 1e-4 }
    }

    pub fn gnb() -> Self {
        Self::Gnb { var_floor: 1e-9 }
    }

    pub fn knn() -> Self {
        Self::Knn { k: 5, weighted: true }
    }

    pub fn linsvm() -> Self {
        Self::Linsvm { lr: 0.01, epochs: 500, l2: 1e-3 }
    }

    pub fn mlp(seed: u64) -> Self {
        Self::Mlp { hidden: 64, lr: 0.01, epochs: 200, batch: 32, seed }
    }

    pub fn cart() -> Self {
        Self::Cart { max_depth: 12, min_leaf: 2 }
    }

    pub fn rforest(seed: u64) -> Self {
        Self::Rforest {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 2,
            bootstrap: true,
            all_features: false,
            seed,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Logreg { .. } => "logreg",
            Self::Gnb { .. } => "gnb",
            Self::Knn { .. } => "knn",
            Self::Linsvm { .. } => "linsvm",
            Self::Mlp { .. } => "mlp",
            Self::Cart { .. } => "cart",
            Self::Rforest { .. } => "rforest",
        }
    }

    /// Returns a copy with the RNG seed replaced; no-op for deterministic
    /// learners.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            Self::Mlp { seed: s, .. } | Self::Rforest { seed: s, .. } => *s = seed,
            _ => {}
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarError::Config(msg));
        match *self {
            Self::Logreg { lr, epochs, l2 } | Self::Linsvm { lr, epochs, l2 } => {
                if lr <= 0.0 {
                    return fail(format!("{}: lr must be positive", self.kind_name()));
                }
                if epochs == 0 {
                    return fail(format!("{}: epochs must be at least 1", self.kind_name()));
                }
                if l2 < 0.0 {
                    return fail(format!("{}: l2 must be non-negative", self.kind_name()));
                }
            }
            Self::Gnb { var_floor } => {
                if var_floor <= 0.0 {
                    return fail("gnb: var_floor must be positive".into());
                }
            }
            Self::Knn { k, .. } => {
                if k == 0 {
                    return fail("knn: k must be at least 1".into());
                }
            }
            Self::Mlp { hidden, lr, epochs, batch, .. } => {
                if hidden == 0 {
                    return fail("mlp: hidden must be at least 1".into());
                }
                if lr <= 0.0 {
                    return fail("mlp: lr must be positive".into());
                }
                if epochs == 0 || batch == 0 {
                    return fail("mlp: epochs and batch must be at least 1".into());
                }
            }
            Self::Cart { max_depth, min_leaf } => {
                if max_depth == 0 || min_leaf == 0 {
                    return fail("cart: max_depth and min_leaf must be at least 1".into());
                }
            }
            Self::Rforest { n_trees, max_depth, min_leaf, .. } => {
                if n_trees == 0 {
                    return fail("rforest: n_trees must be at least 1".into());
                }
                if max_depth == 0 || min_leaf == 0 {
                    return fail("rforest: max_depth and min_leaf must be at least 1".into());
                }
            }
        }
        Ok(())
    }

    /// Trains this learner on a training set.
    pub fn fit(&self, ts: &TrainingSet) -> Result<Model> {
        self.validate()?;
        match *self {
            Self::Logreg { lr, epochs, l2 } => {
                Ok(Model::Logreg(logreg::train(ts, lr, epochs, l2)?))
            }
            Self::Gnb { var_floor } => Ok(Model::Gnb(naive_bayes::train(ts, var_floor)?)),
            Self::Knn { k, weighted } => Ok(Model::Knn(knn::fit(ts, k, weighted)?)),
            Self::Linsvm { lr, epochs, l2 } => {
                Ok(Model::Linsvm(svm::train_ovr(ts, lr, epochs, l2)?))
            }
            Self::Mlp { hidden, lr, epochs, batch, seed } => {
                Ok(Model::Mlp(mlp::train(ts, hidden, lr, epochs, batch, seed)?))
            }
            Self::Cart { max_depth, min_leaf } => {
                Ok(Model::Cart(tree::train(ts, max_depth, min_leaf)))
            }
            Self::Rforest {
                n_trees,
                max_depth,
                min_leaf,
                bootstrap,
                all_features,
                seed,
            } => Ok(Model::Rforest(forest::train(
                ts,
                n_trees,
                max_depth,
                min_leaf,
                bootstrap,
                all_features,
                seed,
            ))),
        }
    }
}

/// A trained base learner; immutable and safe to share between threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Logreg(LogRegModel),
    Gnb(GaussianNbModel),
    Knn(KnnModel),
    Linsvm(LinearSvmModel),
    Mlp(MlpModel),
    Cart(CartModel),
    Rforest(RandomForestModel),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Logreg(_) => "logreg",
            Self::Gnb(_) => "gnb",
            Self::Knn(_) => "knn",
            Self::Linsvm(_) => "linsvm",
            Self::Mlp(_) => "mlp",
            Self::Cart(_) => "cart",
            Self::Rforest(_) => "rforest",
        }
    }

    /// Sorted class codes this model predicts over.
    pub fn classes(&self) -> &[Label] {
        match self {
            Self::Logreg(m) => &m.classes,
            Self::Gnb(m) => &m.classes,
            Self::Knn(m) => &m.classes,
            Self::Linsvm(m) => &m.classes,
            Self::Mlp(m) => &m.classes,
            Self::Cart(m) => &m.classes,
            Self::Rforest(m) => &m.classes,
        }
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbabilityDistribution> {
        match self {
            Self::Logreg(m) => m.predict_proba(x),
            Self::Gnb(m) => m.predict_proba(x),
            Self::Knn(m) => m.predict_proba(x),
            Self::Linsvm(m) => m.predict_proba(x),
            Self::Mlp(m) => m.predict_proba(x),
            Self::Cart(m) => m.predict_proba(x),
            Self::Rforest(m) => m.predict_proba(x),
        }
    }

    /// Argmax of `predict_proba`; ties break toward the lowest class code.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let dist = self.predict_proba(x)?;
        Ok(self.classes()[dist.argmax()])
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: Model,
}

/// Persists a model as versioned, self-describing structured text (JSON).
/// Floats are written in shortest round-trip form, so reloading reproduces
/// predictions bitwise.
pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| HarError::Internal(format!("model serialization failed: {}", e)))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(&path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| {
        HarError::InvalidInput(format!(
            "cannot parse model file {}: {}",
            path.as_ref().display(),
            e
        ))
    })?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(HarError::InvalidInput(format!(
            "unsupported model format version {}",
            file.format_version
        )));
    }
    Ok(file.model)
}

/// Stable softmax over a score slice.
pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `ln(sum(exp(scores)))` without overflow.
pub(crate) fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
