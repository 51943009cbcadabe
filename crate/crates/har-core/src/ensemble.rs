//! Combining base classifiers: hard voting (plurality, majority, unanimous)
//! and soft per-class probability rules (sum, product, min, max, median).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierSpec, Model, ProbabilityDistribution, TrainingSet};
use crate::dataio::Label;
use crate::error::{HarError, Result};
use crate::rng::derive_seed;

/// Label-vote combination rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardRule {
    /// The most frequent label wins.
    Plurality,
    /// A label needs strictly more than half the votes.
    Majority,
    /// All members must agree.
    Unanimous,
}

/// Per-class score combination rules over member distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftRule {
    Sum,
    Product,
    Min,
    Max,
    Median,
}

/// Any combination rule an ensemble can be configured with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    Plurality,
    Majority,
    Unanimous,
    Sum,
    Product,
    Min,
    Max,
    Median,
}

impl CombineRule {
    pub fn as_hard(self) -> Option<HardRule> {
        match self {
            Self::Plurality => Some(HardRule::Plurality),
            Self::Majority => Some(HardRule::Majority),
            Self::Unanimous => Some(HardRule::Unanimous),
            _ => None,
        }
    }

    pub fn as_soft(self) -> Option<SoftRule> {
        match self {
            Self::Sum => Some(SoftRule::Sum),
            Self::Product => Some(SoftRule::Product),
            Self::Min => Some(SoftRule::Min),
            Self::Max => Some(SoftRule::Max),
            Self::Median => Some(SoftRule::Median),
            _ => None,
        }
    }
}

/// Result of a hard vote: a decided label, or no decision under the rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteOutcome {
    Decided(Label),
    Abstain,
}

/// What a plurality tie resolves to inside `hard_vote` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PluralityTieBreak {
    /// Lowest label code among the tied modal labels.
    LowestLabel,
    /// Surface the tie to the caller.
    Abstain,
}

/// Combines member label votes under one of the three voting variants.
pub fn hard_vote(
    votes: &[Label],
    rule: HardRule,
    tiebreak: PluralityTieBreak,
) -> Result<VoteOutcome> {
    if votes.is_empty() {
        return Err(HarError::InvalidInput("no votes to combine".into()));
    }
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for &v in votes {
        *counts.entry(v).or_insert(0) += 1;
    }
    Ok(match rule {
        HardRule::Unanimous => {
            if counts.len() == 1 {
                VoteOutcome::Decided(votes[0])
            } else {
                VoteOutcome::Abstain
            }
        }
        HardRule::Majority => {
            let (label, count) = counts
                .iter()
                .max_by_key(|(_, &c)| c)
                .map(|(&l, &c)| (l, c))
                .expect("non-empty counts");
            if 2 * count > votes.len() {
                VoteOutcome::Decided(label)
            } else {
                VoteOutcome::Abstain
            }
        }
        HardRule::Plurality => {
            let top = *counts.values().max().expect("non-empty counts");
            // BTreeMap iteration is ascending, so the first modal label is
            // the lowest code.
            let mut modal = counts.iter().filter(|(_, &c)| c == top).map(|(&l, _)| l);
            let lowest = modal.next().expect("at least one modal label");
            if modal.next().is_none() {
                VoteOutcome::Decided(lowest)
            } else {
                match tiebreak {
                    PluralityTieBreak::LowestLabel => VoteOutcome::Decided(lowest),
                    PluralityTieBreak::Abstain => VoteOutcome::Abstain,
                }
            }
        }
    })
}

/// Combines member distributions element-wise under a soft rule.
///
/// Returns the winning class index (argmax, ties to the lowest index) and the
/// raw combined scores, unnormalized.
pub fn soft_vote(
    distributions: &[ProbabilityDistribution],
    rule: SoftRule,
) -> Result<(usize, Vec<f64>)> {
    if distributions.is_empty() {
        return Err(HarError::InvalidInput("no distributions to combine".into()));
    }
    let arity = distributions[0].len();
    for (i, d) in distributions.iter().enumerate() {
        if d.len() != arity {
            return Err(HarError::InvalidInput(format!(
                "member {} has {} classes, expected {}",
                i,
                d.len(),
                arity
            )));
        }
    }
    let scores: Vec<f64> = (0..arity)
        .map(|c| {
            let column = distributions.iter().map(|d| d.probs()[c]);
            match rule {
                SoftRule::Sum => column.sum(),
                SoftRule::Product => column.product(),
                SoftRule::Min => column.fold(f64::INFINITY, f64::min),
                SoftRule::Max => column.fold(f64::NEG_INFINITY, f64::max),
                SoftRule::Median => {
                    let mut values: Vec<f64> = column.collect();
                    values.sort_by(|a, b| a.partial_cmp(b).expect("finite probabilities"));
                    let n = values.len();
                    if n % 2 == 1 {
                        values[n / 2]
                    } else {
                        (values[n / 2 - 1] + values[n / 2]) / 2.0
                    }
                }
            }
        })
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}

/// How an undecided hard vote resolves in non-strict prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiebreakPolicy {
    /// Sum-rule over member distributions, remaining ties to the lowest code.
    SoftSum,
    /// Plurality with ties broken toward the lowest label code.
    LowestLabel,
}

/// Ensemble composition: members, combine rule, tiebreak policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub members: Vec<ClassifierSpec>,
    pub rule: CombineRule,
    pub tiebreak: TiebreakPolicy,
}

impl EnsembleSpec {
    /// The proposed five-learner ensemble: logistic regression, MLP, KNN,
    /// linear SVM, random forest.
    pub fn proposed(seed: u64) -> Self {
        Self {
            members: vec![
                ClassifierSpec::logreg(),
                ClassifierSpec::mlp(derive_seed(seed, 101)),
                ClassifierSpec::knn(),
                ClassifierSpec::linsvm(),
                ClassifierSpec::rforest(derive_seed(seed, 102)),
            ],
            rule: CombineRule::Plurality,
            tiebreak: TiebreakPolicy::SoftSum,
        }
    }

    /// The baseline triple: decision tree, logistic regression, MLP.
    pub fn catal(seed: u64) -> Self {
        Self {
            members: vec![
                ClassifierSpec::cart(),
                ClassifierSpec::logreg(),
                ClassifierSpec::mlp(derive_seed(seed, 101)),
            ],
            rule: CombineRule::Plurality,
            tiebreak: TiebreakPolicy::SoftSum,
        }
    }

    /// Wraps one learner; useful for comparing the ensemble against its
    /// individual members through the same pipeline.
    pub fn single(member: ClassifierSpec) -> Self {
        Self {
            members: vec![member],
            rule: CombineRule::Plurality,
            tiebreak: TiebreakPolicy::SoftSum,
        }
    }

    /// Configuration-level validation; run configs require >= 2 members
    /// (`single` is a programmatic test hook).
    pub fn validate(&self) -> Result<()> {
        if self.members.len() < 2 {
            return Err(HarError::Config(format!(
                "ensemble needs at least 2 members, got {}",
                self.members.len()
            )));
        }
        self.validate_members()
    }

    /// Hyperparameter validation alone, without the member-count rule.
    pub fn validate_members(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(HarError::Config("ensemble has no members".into()));
        }
        for member in &self.members {
            member.validate()?;
        }
        Ok(())
    }

    /// Copy with every seeded member reseeded from `(seed, member index)`.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self {
            members: self
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| m.reseeded(derive_seed(seed, i as u64)))
                .collect(),
            rule: self.rule,
            tiebreak: self.tiebreak,
        }
    }
}

/// Trained member models plus the spec that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub spec: EnsembleSpec,
    pub members: Vec<Model>,
    pub classes: Vec<Label>,
}

/// One combined prediction with its abstention diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsemblePrediction {
    pub label: Label,
    /// True when the configured hard rule did not decide and the tiebreak
    /// policy produced the label.
    pub abstained: bool,
}

/// Fits every member independently on the same training data.
pub fn fit_ensemble(spec: &EnsembleSpec, ts: &TrainingSet) -> Result<EnsembleModel> {
    if spec.members.is_empty() {
        return Err(HarError::Config("ensemble has no members".into()));
    }
    let mut members = Vec::with_capacity(spec.members.len());
    for (i, member_spec) in spec.members.iter().enumerate() {
        let model = member_spec
            .fit(ts)
            .map_err(|e| e.in_context(format!("member {} ({})", i, member_spec.kind_name())))?;
        members.push(model);
    }
    Ok(EnsembleModel {
        spec: spec.clone(),
        members,
        classes: ts.classes().to_vec(),
    })
}

impl EnsembleModel {
    fn member_distributions(&self, x: &[f64]) -> Result<Vec<ProbabilityDistribution>> {
        self.members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.predict_proba(x)
                    .map_err(|e| e.in_context(format!("member {} ({})", i, m.kind_name())))
            })
            .collect()
    }

    fn soft_sum_label(&self, distributions: &[ProbabilityDistribution]) -> Result<Label> {
        let (idx, _) = soft_vote(distributions, SoftRule::Sum)?;
        Ok(self.classes[idx])
    }

    /// Strict-mode combination: hard rules may abstain, soft rules always
    /// decide.
    pub fn predict_strict(&self, x: &[f64]) -> Result<VoteOutcome> {
        if let Some(hard) = self.spec.rule.as_hard() {
            let votes: Vec<Label> = self
                .members
                .iter()
                .map(|m| m.predict(x))
                .collect::<Result<_>>()?;
            hard_vote(&votes, hard, PluralityTieBreak::Abstain)
        } else {
            let rule = self.spec.rule.as_soft().expect("rule is hard or soft");
            let (idx, _) = soft_vote(&self.member_distributions(x)?, rule)?;
            Ok(VoteOutcome::Decided(self.classes[idx]))
        }
    }

    /// Default-mode combination: always resolves to a label, applying the
    /// tiebreak policy when the hard rule abstains.
    pub fn predict_detailed(&self, x: &[f64]) -> Result<EnsemblePrediction> {
        match self.predict_strict(x)? {
            VoteOutcome::Decided(label) => Ok(EnsemblePrediction { label, abstained: false }),
            VoteOutcome::Abstain => {
                let label = match self.spec.tiebreak {
                    TiebreakPolicy::SoftSum => {
                        self.soft_sum_label(&self.member_distributions(x)?)?
                    }
                    TiebreakPolicy::LowestLabel => {
                        let votes: Vec<Label> = self
                            .members
                            .iter()
                            .map(|m| m.predict(x))
                            .collect::<Result<_>>()?;
                        match hard_vote(
                            &votes,
                            HardRule::Plurality,
                            PluralityTieBreak::LowestLabel,
                        )? {
                            VoteOutcome::Decided(label) => label,
                            VoteOutcome::Abstain => unreachable!("lowest-label never abstains"),
                        }
                    }
                };
                Ok(EnsemblePrediction { label, abstained: true })
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        Ok(self.predict_detailed(x)?.label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::testdata;

    fn dist(probs: &[f64]) -> ProbabilityDistribution {
        ProbabilityDistribution::new(probs.to_vec()).unwrap()
    }

    #[test]
    fn unanimity_decides_all_rules() {
        for rule in [HardRule::Plurality, HardRule::Majority, HardRule::Unanimous] {
            let out = hard_vote(&[7, 7, 7], rule, PluralityTieBreak::Abstain).unwrap();
            assert_eq!(out, VoteOutcome::Decided(7));
        }
    }

    #[test]
    fn two_to_one_split() {
        let votes = [1, 1, 2];
        assert_eq!(
            hard_vote(&votes, HardRule::Plurality, PluralityTieBreak::Abstain).unwrap(),
            VoteOutcome::Decided(1)
        );
        assert_eq!(
            hard_vote(&votes, HardRule::Majority, PluralityTieBreak::Abstain).unwrap(),
            VoteOutcome::Decided(1)
        );
        assert_eq!(
            hard_vote(&votes, HardRule::Unanimous, PluralityTieBreak::Abstain).unwrap(),
            VoteOutcome::Abstain
        );
    }

    #[test]
    fn three_way_tie() {
        let votes = [1, 2, 3];
        assert_eq!(
            hard_vote(&votes, HardRule::Majority, PluralityTieBreak::Abstain).unwrap(),
            VoteOutcome::Abstain
        );
        assert_eq!(
            hard_vote(&votes, HardRule::Plurality, PluralityTieBreak::Abstain).unwrap(),
            VoteOutcome::Abstain
        );
        assert_eq!(
            hard_vote(&votes, HardRule::Plurality, PluralityTieBreak::LowestLabel).unwrap(),
            VoteOutcome::Decided(1)
        );
    }

    #[test]
    fn empty_votes_error() {
        assert!(hard_vote(&[], HardRule::Plurality, PluralityTieBreak::Abstain).is_err());
    }

    #[test]
    fn product_rule_hand_example() {
        let (idx, scores) = soft_vote(
            &[dist(&[0.6, 0.4]), dist(&[0.3, 0.7])],
            SoftRule::Product,
        )
        .unwrap();
        assert!((scores[0] - 0.18).abs() < 1e-12);
        assert!((scores[1] - 0.28).abs() < 1e-12);
        assert_eq!(idx, 1);
    }

    #[test]
    fn sum_rule_hand_example() {
        let (idx, scores) =
            soft_vote(&[dist(&[0.6, 0.4]), dist(&[0.3, 0.7])], SoftRule::Sum).unwrap();
        assert!((scores[0] - 0.9).abs() < 1e-12);
        assert!((scores[1] - 1.1).abs() < 1e-12);
        assert_eq!(idx, 1);
    }

    #[test]
    fn identical_members_are_idempotent() {
        let member = dist(&[0.2, 0.5, 0.3]);
        for rule in [SoftRule::Sum, SoftRule::Product, SoftRule::Min, SoftRule::Max, SoftRule::Median] {
            let (idx, _) = soft_vote(&[member.clone(), member.clone(), member.clone()], rule)
                .unwrap();
            assert_eq!(idx, 1, "rule {:?}", rule);
        }
    }

    #[test]
    fn arity_mismatch_errors() {
        let a = dist(&[0.5, 0.5]);
        let b = dist(&[0.2, 0.3, 0.5]);
        assert!(soft_vote(&[a, b], SoftRule::Sum).is_err());
    }

    #[test]
    fn median_rule_even_and_odd() {
        let members = [dist(&[0.1, 0.9]), dist(&[0.5, 0.5]), dist(&[0.2, 0.8])];
        let (_, scores) = soft_vote(&members, SoftRule::Median).unwrap();
        assert!((scores[0] - 0.2).abs() < 1e-12);
        assert!((scores[1] - 0.8).abs() < 1e-12);

        let members = [dist(&[0.1, 0.9]), dist(&[0.5, 0.5])];
        let (_, scores) = soft_vote(&members, SoftRule::Median).unwrap();
        assert!((scores[0] - 0.3).abs() < 1e-12);
        assert!((scores[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn majority_decision_implies_plurality_agreement() {
        // Exhaustive over all 3-member votes drawn from 3 labels.
        for a in 1..=3i64 {
            for b in 1..=3i64 {
                for c in 1..=3i64 {
                    let votes = [a, b, c];
                    let majority =
                        hard_vote(&votes, HardRule::Majority, PluralityTieBreak::Abstain).unwrap();
                    let plurality =
                        hard_vote(&votes, HardRule::Plurality, PluralityTieBreak::Abstain).unwrap();
                    let unanimous =
                        hard_vote(&votes, HardRule::Unanimous, PluralityTieBreak::Abstain).unwrap();
                    if let VoteOutcome::Decided(m) = majority {
                        assert_eq!(plurality, VoteOutcome::Decided(m));
                    }
                    if let VoteOutcome::Decided(u) = unanimous {
                        assert_eq!(majority, VoteOutcome::Decided(u));
                        assert_eq!(plurality, VoteOutcome::Decided(u));
                    }
                }
            }
        }
    }

    #[test]
    fn plurality_is_order_invariant() {
        let votes = [3, 1, 3, 2, 1, 3];
        let expected = hard_vote(&votes, HardRule::Plurality, PluralityTieBreak::Abstain).unwrap();
        let mut permuted = votes;
        permuted.reverse();
        assert_eq!(
            hard_vote(&permuted, HardRule::Plurality, PluralityTieBreak::Abstain).unwrap(),
            expected
        );
    }

    #[test]
    fn product_argmax_invariant_under_member_scaling() {
        use rand::Rng;
        let mut rng = crate::rng::seeded_rng(44);
        for _ in 0..100 {
            let members: Vec<ProbabilityDistribution> = (0..3)
                .map(|_| {
                    let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
                    ProbabilityDistribution::from_scores(raw).unwrap()
                })
                .collect();
            let (baseline, _) = soft_vote(&members, SoftRule::Product).unwrap();

            // Scaling one member's scores by a positive constant cannot move
            // the product argmax; verified on the raw (unnormalized) scores.
            let scale = rng.random_range(0.1..10.0);
            let scores_scaled: Vec<f64> = (0..4)
                .map(|c| {
                    members
                        .iter()
                        .enumerate()
                        .map(|(i, d)| if i == 0 { d.probs()[c] * scale } else { d.probs()[c] })
                        .product()
                })
                .collect();
            let mut best = 0;
            for (i, s) in scores_scaled.iter().enumerate() {
                if *s > scores_scaled[best] {
                    best = i;
                }
            }
            assert_eq!(best, baseline);
        }
    }

    #[test]
    fn fitted_ensemble_beats_or_matches_members_on_blobs() {
        let ts = testdata::separable_blobs(20, 33);
        let spec = EnsembleSpec::proposed(33);
        let ensemble = fit_ensemble(&spec, &ts).unwrap();
        assert_eq!(ensemble.members.len(), 5);

        let ensemble_acc = {
            let mut hits = 0;
            for i in 0..ts.n_samples() {
                if ensemble.predict(ts.features().row(i)).unwrap() == ts.labels()[i] {
                    hits += 1;
                }
            }
            hits as f64 / ts.n_samples() as f64
        };
        let best_member_acc = ensemble
            .members
            .iter()
            .map(|m| testdata::training_accuracy(m, &ts))
            .fold(0.0, f64::max);
        assert!(
            ensemble_acc >= best_member_acc - 0.02,
            "ensemble {} vs best member {}",
            ensemble_acc,
            best_member_acc
        );
    }

    #[test]
    fn single_member_ensemble_matches_member() {
        use rand::Rng;
        let ts = testdata::xor_clusters(10, 34);
        let member_spec = ClassifierSpec::cart();
        let ensemble = fit_ensemble(&EnsembleSpec::single(member_spec.clone()), &ts).unwrap();
        let solo = member_spec.fit(&ts).unwrap();
        let mut rng = crate::rng::seeded_rng(35);
        for _ in 0..100 {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            assert_eq!(ensemble.predict(&x).unwrap(), solo.predict(&x).unwrap());
        }
    }

    #[test]
    fn catal_preset_has_three_members() {
        let spec = EnsembleSpec::catal(1);
        assert_eq!(spec.members.len(), 3);
        assert_eq!(spec.members[0].kind_name(), "cart");
        assert_eq!(spec.members[1].kind_name(), "logreg");
        assert_eq!(spec.members[2].kind_name(), "mlp");
        let proposed = EnsembleSpec::proposed(1);
        assert_eq!(proposed.members.len(), 5);
        let kinds: Vec<&str> = proposed.members.iter().map(|m| m.kind_name()).collect();
        assert_eq!(kinds, ["logreg", "mlp", "knn", "linsvm", "rforest"]);
        assert!(!kinds.contains(&"gnb"), "GNB stays out of the default ensemble");
    }

    #[test]
    fn spec_validation_requires_two_members() {
        assert!(EnsembleSpec::single(ClassifierSpec::knn()).validate().is_err());
        assert!(EnsembleSpec::catal(0).validate().is_ok());
    }

    #[test]
    fn strict_mode_surfaces_abstention() {
        // Two members that disagree guarantee a majority abstention.
        let ts = testdata::separable_blobs(10, 36);
        let spec = EnsembleSpec {
            members: vec![ClassifierSpec::knn(), ClassifierSpec::cart()],
            rule: CombineRule::Unanimous,
            tiebreak: TiebreakPolicy::SoftSum,
        };
        let ensemble = fit_ensemble(&spec, &ts).unwrap();
        // On training data both members agree, so decisions come out.
        let x = ts.features().row(0);
        assert!(matches!(
            ensemble.predict_strict(x).unwrap(),
            VoteOutcome::Decided(_)
        ));
        // Default mode always yields a label either way.
        let p = ensemble.predict_detailed(x).unwrap();
        assert_eq!(p.label, ts.labels()[0]);
    }
}
