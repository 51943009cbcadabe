//! End-to-end integration of the library surface: files in, reports out.

use har_core::dataio::{
    drop_null_trials, load_canonical_csv, mhealth_default_groups, parse_mhealth_log,
    save_canonical_csv, segment_trials, select_channels, LabelMap,
};
use har_core::features::{extract_feature_vector, feature_names, FeatureConfig};
use har_core::harness::synth::{synthetic_recording, SynthConfig};
use har_core::harness::{cross_validate, render_report_table, PipelineConfig, WindowingKind};
use har_core::windowing::{snow_windows, window_samples};

mod common {
    use har_core::classifiers::ClassifierSpec;
    use har_core::ensemble::{CombineRule, EnsembleSpec, TiebreakPolicy};
    use har_core::harness::{PipelineConfig, WindowingKind};

    /// Fast three-member config for smoke-scale runs.
    pub fn quick_config(seed: u64, window_seconds: f64, folds: usize) -> PipelineConfig {
        PipelineConfig {
            window_seconds,
            overlap: 0.5,
            windowing: WindowingKind::Snow,
            folds,
            seed,
            min_trial_len: None,
            null_label: Some(0),
            channel_groups: None,
            features: Default::default(),
            ensemble: EnsembleSpec {
                members: vec![
                    ClassifierSpec::gnb(),
                    ClassifierSpec::knn(),
                    ClassifierSpec::cart(),
                ],
                rule: CombineRule::Plurality,
                tiebreak: TiebreakPolicy::SoftSum,
            },
            method_name: "quick".into(),
            strict_abstain: false,
        }
    }
}

/// Synthetic MHEALTH-format text: `blocks` constant-label runs of `run` rows.
fn fake_mhealth_text(blocks: &[(i64, usize)]) -> String {
    let mut text = String::new();
    let mut t = 0usize;
    for &(label, run) in blocks {
        for _ in 0..run {
            let mut fields: Vec<String> = (0..23)
                .map(|c| format!("{:.3}", ((t * 23 + c) as f64 * 0.37).sin()))
                .collect();
            fields.push(label.to_string());
            text.push_str(&fields.join("\t"));
            text.push('\n');
            t += 1;
        }
    }
    text
}

#[test]
fn mhealth_protocol_flow() {
    // Parse, drop ECG, segment, drop nulls, window, extract.
    let text = fake_mhealth_text(&[(0, 30), (1, 120), (0, 25), (2, 130), (1, 115)]);
    let rec = parse_mhealth_log(text.as_bytes(), "subject1", 50.0).unwrap();
    assert_eq!(rec.n_channels(), 23);
    rec.validate_labels(&LabelMap::mhealth(), Some(0)).unwrap();

    let kept = select_channels(&rec, &mhealth_default_groups()).unwrap();
    assert_eq!(kept.n_channels(), 21);

    let trials = drop_null_trials(segment_trials(&kept, 1), 0);
    assert_eq!(trials.len(), 3);
    assert_eq!(
        trials.iter().map(|t| t.label).collect::<Vec<_>>(),
        vec![1, 2, 1]
    );

    // 2-second windows at 50 Hz: w = 100, stride 50.
    let config = FeatureConfig::default();
    let names = feature_names(&config, &kept.channels);
    // 21 channels x (10 time + 4 spectral + 5 fft + 5 dct) + 7 triads x 3.
    assert_eq!(names.len(), 21 * 24 + 21);
    for trial in &trials {
        let windows = snow_windows(trial, 2.0, 0.5).unwrap();
        assert!(!windows.is_empty());
        for window in &windows {
            let v = extract_feature_vector(window, &kept.channels, &config).unwrap();
            assert_eq!(v.values.len(), names.len());
            assert!(v.values.iter().all(|x| x.is_finite()));
        }
    }
}

#[test]
fn full_mhealth_feature_dimension() {
    // With ECG kept: 23 channels but still 7 triads.
    let text = fake_mhealth_text(&[(1, 10)]);
    let rec = parse_mhealth_log(text.as_bytes(), "s", 50.0).unwrap();
    let names = feature_names(&FeatureConfig::default(), &rec.channels);
    assert_eq!(names.len(), 23 * 24 + 21);
}

#[test]
fn csv_file_roundtrip_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let rec = synthetic_recording(&SynthConfig::mini(), 42).unwrap();
    save_canonical_csv(&path, &rec).unwrap();
    let loaded = load_canonical_csv(&path).unwrap();
    assert_eq!(loaded.labels, rec.labels);
    assert_eq!(loaded.channels, rec.channels);
    assert_eq!(loaded.sampling_rate_hz, rec.sampling_rate_hz);

    let config = common::quick_config(3, 2.0, 3);
    let report = cross_validate(&loaded, &config, "bench").unwrap();
    assert_eq!(report.folds.len(), 3);
    assert_eq!(report.metadata.window_samples, window_samples(2.0, 25.0));
    assert_eq!(report.metadata.fft_size, 64);
    assert_eq!(report.metadata.feature_count, 75);
    let table = render_report_table(&report);
    assert!(table.contains("quick"));
}

#[test]
fn csv_precision_survives_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prec.csv");
    let rec = synthetic_recording(&SynthConfig::mini(), 43).unwrap();
    save_canonical_csv(&path, &rec).unwrap();
    let loaded = load_canonical_csv(&path).unwrap();
    for (a, b) in loaded
        .samples
        .as_slice()
        .iter()
        .zip(rec.samples.as_slice())
    {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{} vs {}", a, b);
    }
}

#[test]
fn fnow_pipeline_also_runs() {
    let rec = synthetic_recording(&SynthConfig::mini(), 44).unwrap();
    let mut config = common::quick_config(4, 2.0, 3);
    config.windowing = WindowingKind::Fnow;
    let report = cross_validate(&rec, &config, "bench").unwrap();
    // FNOW yields fewer windows than SNOW at 0.5 overlap.
    let snow_report = cross_validate(&rec, &common::quick_config(4, 2.0, 3), "bench").unwrap();
    assert!(report.metadata.n_windows < snow_report.metadata.n_windows);
}

#[test]
fn config_file_controls_run() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let config = common::quick_config(9, 2.0, 4);
    config.save(&path).unwrap();
    let loaded = PipelineConfig::load(&path).unwrap();
    assert_eq!(loaded, config);

    let rec = synthetic_recording(&SynthConfig::mini(), 9).unwrap();
    let a = cross_validate(&rec, &config, "bench").unwrap();
    let b = cross_validate(&rec, &loaded, "bench").unwrap();
    assert_eq!(a, b);
}

#[test]
fn channel_selection_inside_config() {
    let rec = synthetic_recording(&SynthConfig::default(), 45).unwrap();
    let mut config = common::quick_config(5, 5.0, 3);
    config.channel_groups = Some(vec!["imu0".into()]);
    let report = cross_validate(&rec, &config, "bench").unwrap();
    assert_eq!(report.metadata.feature_count, 75);
    let mut bad = common::quick_config(5, 5.0, 3);
    bad.channel_groups = Some(vec!["nope".into()]);
    assert!(cross_validate(&rec, &bad, "bench").is_err());
}
