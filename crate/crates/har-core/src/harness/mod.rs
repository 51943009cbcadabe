//! Leave-one-trial-out cross-validation, report assembly, and method
//! comparison.

pub mod config;
pub mod metrics;
pub mod synth;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{drop_null_trials, segment_trials, select_channels, Label, LabeledRecording, SensorTrial};
use crate::ensemble::{fit_ensemble, VoteOutcome};
use crate::error::{HarError, Result};
use crate::features::{extract_feature_vector, feature_names, fft_size, FeatureVector, Standardizer};
use crate::matrix::Matrix;
use crate::rng::derive_seed;
use crate::windowing::{fnow_windows, loto_folds, snow_windows, window_samples, FoldAssignment, Window};

pub use config::{PipelineConfig, Preset, WindowingKind};
pub use metrics::{accuracy_of, confidence_interval, confusion_counts, ConfusionCounts};

/// Confidence level for all reported intervals.
pub const CI_LEVEL: f64 = 0.90;

/// Label assigned to strict-mode abstentions; never a real class, so an
/// abstention always scores as a misclassification.
pub const ABSTAIN_SENTINEL: Label = Label::MIN;

/// Seed stream tags (fold dealing vs per-fold member training).
const STREAM_FOLDS: u64 = 1;
const STREAM_MEMBERS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test_trials: usize,
    pub n_test_windows: usize,
    /// Hard-vote abstentions (resolved by tiebreak unless strict mode).
    pub abstentions: usize,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_fscore: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

fn summarize(values: &[f64]) -> Result<MetricSummary> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (ci_lo, ci_hi) = confidence_interval(values, CI_LEVEL)?;
    Ok(MetricSummary { mean, ci_lo, ci_hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dataset_id: String,
    pub method: String,
    pub seed: u64,
    pub n_trials: usize,
    pub n_windows: usize,
    /// Window length in samples (`round(window_seconds * rate)`).
    pub window_samples: usize,
    /// Zero-padded FFT length the spectral features were computed at.
    pub fft_size: usize,
    pub classes: Vec<Label>,
    pub feature_count: usize,
    /// Macro-averaging anomalies, e.g. folds where a class had no test
    /// windows and contributed zero recall.
    pub flagged: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: RunMetadata,
    pub config: PipelineConfig,
    pub folds: Vec<FoldMetrics>,
    pub accuracy: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub fscore: MetricSummary,
}

struct FoldOutcome {
    metrics: FoldMetrics,
    flagged: Vec<String>,
}

fn window_trial(trial: &SensorTrial, config: &PipelineConfig) -> Result<Vec<Window>> {
    match config.windowing {
        WindowingKind::Snow => snow_windows(trial, config.window_seconds, config.overlap),
        WindowingKind::Fnow => fnow_windows(trial, config.window_seconds),
    }
}

fn run_fold(
    fold: usize,
    trials: &[SensorTrial],
    folds: &FoldAssignment,
    classes: &[Label],
    channels: &[crate::dataio::ChannelSpec],
    config: &PipelineConfig,
) -> Result<FoldOutcome> {
    let mut train_trials: Vec<&SensorTrial> = Vec::new();
    let mut test_trials: Vec<&SensorTrial> = Vec::new();
    for trial in trials {
        match folds.fold_of(&trial.trial_id) {
            Some(f) if f == fold => test_trials.push(trial),
            Some(_) => train_trials.push(trial),
            None => {
                return Err(HarError::Internal(format!(
                    "trial {} missing from fold assignment",
                    trial.trial_id
                )))
            }
        }
    }
    if test_trials.is_empty() {
        return Err(HarError::InvalidInput("fold has no test trials".into()));
    }
    if train_trials.is_empty() {
        return Err(HarError::InvalidInput("fold has no training trials".into()));
    }

    // Leakage guard: the two trial-id sets must be disjoint and cover all.
    let train_ids: BTreeSet<&str> = train_trials.iter().map(|t| t.trial_id.as_str()).collect();
    let test_ids: BTreeSet<&str> = test_trials.iter().map(|t| t.trial_id.as_str()).collect();
    if train_ids.intersection(&test_ids).next().is_some() {
        return Err(HarError::Internal(
            "train/test trial leakage detected".into(),
        ));
    }
    if train_ids.len() + test_ids.len() != trials.len() {
        return Err(HarError::Internal(
            "fold split does not partition the trials".into(),
        ));
    }

    let window_stage = |subset: &[&SensorTrial]| -> Result<Vec<Window>> {
        let mut windows = Vec::new();
        for trial in subset {
            windows.extend(window_trial(trial, config)?);
        }
        Ok(windows)
    };
    let train_windows = window_stage(&train_trials)
        .map_err(|e| e.in_context("stage windowing (train)"))?;
    let test_windows = window_stage(&test_trials)
        .map_err(|e| e.in_context("stage windowing (test)"))?;
    if train_windows.is_empty() || test_windows.is_empty() {
        return Err(HarError::InvalidInput(
            "windowing produced an empty train or test side".into(),
        ));
    }
    // Second leakage guard at window granularity.
    for w in &test_windows {
        if train_ids.contains(w.trial_id.as_str()) {
            return Err(HarError::Internal(format!(
                "window of trial {} appears in both train and test",
                w.trial_id
            )));
        }
    }

    let extract_stage = |windows: &[Window]| -> Result<Vec<FeatureVector>> {
        windows
            .iter()
            .map(|w| extract_feature_vector(w, channels, &config.features))
            .collect()
    };
    let train_features =
        extract_stage(&train_windows).map_err(|e| e.in_context("stage features (train)"))?;
    let test_features =
        extract_stage(&test_windows).map_err(|e| e.in_context("stage features (test)"))?;

    let standardizer =
        Standardizer::fit(&train_features).map_err(|e| e.in_context("stage standardize"))?;
    let train_std: Vec<FeatureVector> = train_features
        .iter()
        .map(|v| standardizer.apply(v))
        .collect::<Result<_>>()?;
    let test_std: Vec<FeatureVector> = test_features
        .iter()
        .map(|v| standardizer.apply(v))
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<f64>> = train_std.iter().map(|v| v.values.clone()).collect();
    let labels: Vec<Label> = train_std.iter().map(|v| v.label).collect();
    let ts = crate::classifiers::TrainingSet::new(Matrix::from_rows(rows)?, labels)
        .map_err(|e| e.in_context("stage training-set"))?;

    let fold_spec = config
        .ensemble
        .reseeded(derive_seed(derive_seed(config.seed, STREAM_MEMBERS), fold as u64));
    let model = fit_ensemble(&fold_spec, &ts).map_err(|e| e.in_context("stage fit"))?;

    let mut y_true = Vec::with_capacity(test_std.len());
    let mut y_pred = Vec::with_capacity(test_std.len());
    let mut abstentions = 0usize;
    for v in &test_std {
        y_true.push(v.label);
        if config.strict_abstain {
            match model.predict_strict(&v.values).map_err(|e| e.in_context("stage predict"))? {
                VoteOutcome::Decided(label) => y_pred.push(label),
                VoteOutcome::Abstain => {
                    abstentions += 1;
                    y_pred.push(ABSTAIN_SENTINEL);
                }
            }
        } else {
            let p = model
                .predict_detailed(&v.values)
                .map_err(|e| e.in_context("stage predict"))?;
            if p.abstained {
                abstentions += 1;
            }
            y_pred.push(p.label);
        }
    }

    let counts = confusion_counts(&y_true, &y_pred, classes)?;
    let flagged = counts
        .zero_support_classes()
        .into_iter()
        .map(|c| format!("fold {}: class {} had no test windows (recall counted as 0)", fold, c))
        .collect();

    Ok(FoldOutcome {
        metrics: FoldMetrics {
            fold,
            n_test_trials: test_trials.len(),
            n_test_windows: test_windows.len(),
            abstentions,
            accuracy: counts.accuracy(),
            macro_precision: counts.macro_precision(),
            macro_recall: counts.macro_recall(),
            macro_fscore: counts.macro_fscore(),
        },
        flagged,
    })
}

/// Runs the full LOTO protocol on one recording: segment, deal folds, window,
/// extract, standardize on train only, fit the ensemble, score the held-out
/// trials. Deterministic given `config.seed`.
pub fn cross_validate(
    recording: &LabeledRecording,
    config: &PipelineConfig,
    dataset_id: &str,
) -> Result<EvaluationReport> {
    config.validate()?;
    let selected;
    let rec = match &config.channel_groups {
        Some(groups) => {
            selected = select_channels(recording, groups)?;
            &selected
        }
        None => recording,
    };

    let w = window_samples(config.window_seconds, rec.sampling_rate_hz);
    if w < 2 {
        return Err(HarError::Config(format!(
            "window of {}s at {} Hz is only {} samples",
            config.window_seconds, rec.sampling_rate_hz, w
        )));
    }
    let min_len = config.min_trial_len.unwrap_or(w).max(1);
    let mut trials = segment_trials(rec, min_len);
    if let Some(null) = config.null_label {
        trials = drop_null_trials(trials, null);
    }
    if trials.is_empty() {
        return Err(HarError::InvalidInput(format!(
            "no trials survive segmentation and null filtering \
             (minimum trial length is {} samples = one {}s window at {} Hz)",
            min_len, config.window_seconds, rec.sampling_rate_hz
        )));
    }
    if trials
        .iter()
        .any(|t| t.sampling_rate_hz != rec.sampling_rate_hz)
    {
        return Err(HarError::InvalidInput(
            "trials carry mismatched sampling rates".into(),
        ));
    }

    let mut classes: Vec<Label> = trials.iter().map(|t| t.label).collect();
    classes.sort_unstable();
    classes.dedup();

    let folds = loto_folds(&trials, config.folds, derive_seed(config.seed, STREAM_FOLDS))?;

    let names = feature_names(&config.features, &rec.channels);
    let mut fold_metrics = Vec::with_capacity(config.folds);
    let mut flagged = Vec::new();
    let mut n_windows = 0usize;

    for fold in 0..config.folds {
        let outcome = run_fold(fold, &trials, &folds, &classes, &rec.channels, config)
            .map_err(|e| e.in_context(format!("fold {}", fold)))?;
        n_windows += outcome.metrics.n_test_windows;
        fold_metrics.push(outcome.metrics);
        flagged.extend(outcome.flagged);
    }

    let collect = |f: fn(&FoldMetrics) -> f64| -> Vec<f64> { fold_metrics.iter().map(f).collect() };
    let accuracy = summarize(&collect(|m| m.accuracy))?;
    let precision = summarize(&collect(|m| m.macro_precision))?;
    let recall = summarize(&collect(|m| m.macro_recall))?;
    let fscore = summarize(&collect(|m| m.macro_fscore))?;

    Ok(EvaluationReport {
        metadata: RunMetadata {
            dataset_id: dataset_id.to_string(),
            method: config.method_name.clone(),
            seed: config.seed,
            n_trials: trials.len(),
            n_windows,
            window_samples: w,
            fft_size: fft_size(w),
            classes,
            feature_count: names.len(),
            flagged,
        },
        config: config.clone(),
        folds: fold_metrics,
        accuracy,
        precision,
        recall,
        fscore,
    })
}

/// Canonical JSON form of a report; identical runs produce identical bytes.
pub fn report_json(report: &EvaluationReport) -> Result<String> {
    serde_json::to_string_pretty(report)
        .map_err(|e| HarError::Internal(format!("report serialization: {}", e)))
}

pub fn save_report(path: impl AsRef<Path>, report: &EvaluationReport) -> Result<()> {
    std::fs::write(path, report_json(report)?)?;
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<EvaluationReport> {
    let text = std::fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| {
        HarError::InvalidInput(format!(
            "cannot parse report {}: {}",
            path.as_ref().display(),
            e
        ))
    })
}

fn fmt_ci(summary: &MetricSummary) -> String {
    format!("({:.4}, {:.4})", summary.ci_lo, summary.ci_hi)
}

/// Fixed-width single-method table: Accuracy / Recall / F-score columns with
/// the mean row above the 90% CI row.
pub fn render_report_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "dataset: {}   method: {}   seed: {}   folds: {}",
        report.metadata.dataset_id,
        report.metadata.method,
        report.metadata.seed,
        report.folds.len()
    );
    let _ = writeln!(
        out,
        "{:<12}{:>18}{:>18}{:>18}",
        "", "Accuracy", "Recall", "F-score"
    );
    let _ = writeln!(
        out,
        "{:<12}{:>18.4}{:>18.4}{:>18.4}",
        report.metadata.method, report.accuracy.mean, report.recall.mean, report.fscore.mean
    );
    let _ = writeln!(
        out,
        "{:<12}{:>18}{:>18}{:>18}",
        "90% CI",
        fmt_ci(&report.accuracy),
        fmt_ci(&report.recall),
        fmt_ci(&report.fscore)
    );
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub left: MetricSummary,
    pub right: MetricSummary,
    /// `left.mean - right.mean`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub left_method: String,
    pub right_method: String,
    pub left_dataset: String,
    pub right_dataset: String,
    pub rows: Vec<ComparisonRow>,
}

/// Side-by-side mean/CI per metric with elementwise mean deltas.
pub fn compare(left: &EvaluationReport, right: &EvaluationReport) -> Comparison {
    let row = |metric: &str, l: &MetricSummary, r: &MetricSummary| ComparisonRow {
        metric: metric.to_string(),
        left: l.clone(),
        right: r.clone(),
        delta: l.mean - r.mean,
    };
    Comparison {
        left_method: left.metadata.method.clone(),
        right_method: right.metadata.method.clone(),
        left_dataset: left.metadata.dataset_id.clone(),
        right_dataset: right.metadata.dataset_id.clone(),
        rows: vec![
            row("Accuracy", &left.accuracy, &right.accuracy),
            row("Precision", &left.precision, &right.precision),
            row("Recall", &left.recall, &right.recall),
            row("F-score", &left.fscore, &right.fscore),
        ],
    }
}

/// Fixed-width comparison in the six-column layout: Accuracy / Recall /
/// F-score, each split into the two methods.
pub fn render_comparison_table(comparison: &Comparison) -> String {
    let dataset = if comparison.left_dataset == comparison.right_dataset {
        comparison.left_dataset.clone()
    } else {
        format!("{} vs {}", comparison.left_dataset, comparison.right_dataset)
    };
    let find = |name: &str| -> &ComparisonRow {
        comparison
            .rows
            .iter()
            .find(|r| r.metric == name)
            .expect("comparison carries the paper metrics")
    };
    let acc = find("Accuracy");
    let rec = find("Recall");
    let f = find("F-score");

    const W: usize = 19;
    let mut out = String::new();
    let _ = writeln!(out, "dataset: {}", dataset);
    let _ = writeln!(
        out,
        "{:<8}{:^width$}{:^width$}{:^width$}",
        "",
        "Accuracy",
        "Recall",
        "F-score",
        width = 2 * W
    );
    let method_pair = format!(
        "{:>w$}{:>w$}",
        comparison.left_method,
        comparison.right_method,
        w = W
    );
    let _ = writeln!(
        out,
        "{:<8}{}{}{}",
        "", method_pair, method_pair, method_pair
    );
    let _ = writeln!(
        out,
        "{:<8}{:>w$.4}{:>w$.4}{:>w$.4}{:>w$.4}{:>w$.4}{:>w$.4}",
        "mean",
        acc.left.mean,
        acc.right.mean,
        rec.left.mean,
        rec.right.mean,
        f.left.mean,
        f.right.mean,
        w = W
    );
    let _ = writeln!(
        out,
        "{:<8}{:>w$}{:>w$}{:>w$}{:>w$}{:>w$}{:>w$}",
        "90% CI",
        fmt_ci(&acc.left),
        fmt_ci(&acc.right),
        fmt_ci(&rec.left),
        fmt_ci(&rec.right),
        fmt_ci(&f.left),
        fmt_ci(&f.right),
        w = W
    );
    let _ = writeln!(
        out,
        "{:<8}{:>w$}{:>w$}{:>w$}",
        "delta",
        format!("{:+.4}", acc.delta),
        format!("{:+.4}", rec.delta),
        format!("{:+.4}", f.delta),
        w = 2 * W
    );
    out
}

pub fn save_comparison_table(path: impl AsRef<Path>, comparison: &Comparison) -> Result<()> {
    std::fs::write(path, render_comparison_table(comparison))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierSpec;
    use crate::ensemble::{CombineRule, EnsembleSpec, TiebreakPolicy};
    use crate::harness::synth::{synthetic_recording, SynthConfig};

    /// Cheap configuration for smoke runs: small windows, fast members.
    pub(crate) fn mini_config(seed: u64) -> PipelineConfig {
        PipelineConfig {
            window_seconds: 2.0,
            overlap: 0.5,
            windowing: WindowingKind::Snow,
            folds: 3,
            seed,
            min_trial_len: None,
            null_label: Some(0),
            channel_groups: None,
            features: crate::features::FeatureConfig::default(),
            ensemble: EnsembleSpec {
                members: vec![ClassifierSpec::gnb(), ClassifierSpec::knn(), ClassifierSpec::cart()],
                rule: CombineRule::Plurality,
                tiebreak: TiebreakPolicy::SoftSum,
            },
            method_name: "mini".into(),
            strict_abstain: false,
        }
    }

    #[test]
    fn mini_benchmark_runs_and_reports() {
        let rec = synthetic_recording(&SynthConfig::mini(), 3).unwrap();
        let report = cross_validate(&rec, &mini_config(3), "mini").unwrap();
        assert_eq!(report.folds.len(), 3);
        assert_eq!(report.metadata.classes, vec![1, 2, 3]);
        assert!(report.metadata.n_trials >= 12);
        assert!(report.accuracy.mean > 0.5, "accuracy {}", report.accuracy.mean);
        // Means sit inside their own confidence intervals.
        for s in [&report.accuracy, &report.precision, &report.recall, &report.fscore] {
            assert!(s.ci_lo <= s.mean && s.mean <= s.ci_hi);
        }
        // Metric values are all probabilities.
        for fm in &report.folds {
            for v in [fm.accuracy, fm.macro_precision, fm.macro_recall, fm.macro_fscore] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn identical_seeds_are_bitwise_identical() {
        let rec = synthetic_recording(&SynthConfig::mini(), 4).unwrap();
        let a = cross_validate(&rec, &mini_config(11), "mini").unwrap();
        let b = cross_validate(&rec, &mini_config(11), "mini").unwrap();
        assert_eq!(report_json(&a).unwrap(), report_json(&b).unwrap());
        let c = cross_validate(&rec, &mini_config(12), "mini").unwrap();
        assert_ne!(report_json(&a).unwrap(), report_json(&c).unwrap());
    }

    #[test]
    fn fold_count_larger_than_trials_errors() {
        let rec = synthetic_recording(&SynthConfig::mini(), 5).unwrap();
        let mut config = mini_config(5);
        config.folds = 1000;
        assert!(cross_validate(&rec, &config, "mini").is_err());
    }

    #[test]
    fn comparison_of_report_with_itself_is_zero_delta() {
        let rec = synthetic_recording(&SynthConfig::mini(), 6).unwrap();
        let report = cross_validate(&rec, &mini_config(6), "mini").unwrap();
        let cmp = compare(&report, &report);
        assert!(cmp.rows.iter().all(|r| r.delta == 0.0));
        let table = render_comparison_table(&cmp);
        assert!(table.contains("Accuracy"));
        assert!(table.contains("delta"));
    }

    #[test]
    fn comparison_deltas_are_mean_differences() {
        let rec = synthetic_recording(&SynthConfig::mini(), 7).unwrap();
        let a = cross_validate(&rec, &mini_config(7), "mini").unwrap();
        let b = cross_validate(&rec, &mini_config(8), "mini").unwrap();
        let cmp = compare(&a, &b);
        for row in &cmp.rows {
            assert_eq!(row.delta, row.left.mean - row.right.mean);
        }
    }

    #[test]
    fn six_column_table_structure() {
        let rec = synthetic_recording(&SynthConfig::mini(), 9).unwrap();
        let mut cfg_a = mini_config(9);
        cfg_a.method_name = "proposed".into();
        let mut cfg_b = mini_config(9);
        cfg_b.method_name = "catal".into();
        let a = cross_validate(&rec, &cfg_a, "mini").unwrap();
        let b = cross_validate(&rec, &cfg_b, "mini").unwrap();
        let table = render_comparison_table(&compare(&a, &b));

        let mean_line = table
            .lines()
            .find(|l| l.starts_with("mean"))
            .expect("mean row present");
        let numbers: Vec<&str> = mean_line.split_whitespace().skip(1).collect();
        assert_eq!(numbers.len(), 6, "six numeric columns: {:?}", numbers);
        for header in ["Accuracy", "Recall", "F-score"] {
            assert!(table.contains(header));
        }
        assert!(table.contains("proposed"));
        assert!(table.contains("catal"));
    }

    #[test]
    fn report_roundtrips_through_json() {
        let rec = synthetic_recording(&SynthConfig::mini(), 10).unwrap();
        let report = cross_validate(&rec, &mini_config(10), "mini").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        save_report(&path, &report).unwrap();
        let back = load_report(&path).unwrap();
        assert_eq!(back, report);
        let table = render_report_table(&back);
        assert!(table.contains("Accuracy"));
        assert!(table.contains("90% CI"));
    }

    #[test]
    fn strict_mode_counts_abstentions_as_errors() {
        let rec = synthetic_recording(&SynthConfig::mini(), 13).unwrap();
        let mut config = mini_config(13);
        config.strict_abstain = true;
        config.ensemble.rule = CombineRule::Unanimous;
        let strict = cross_validate(&rec, &config, "mini").unwrap();
        config.strict_abstain = false;
        let resolved = cross_validate(&rec, &config, "mini").unwrap();
        // Strict unanimity can only lose accuracy relative to resolution.
        assert!(strict.accuracy.mean <= resolved.accuracy.mean + 1e-12);
    }
}
