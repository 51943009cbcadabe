//! Black-box tests of the `har` binary: every subcommand over temp files.

use std::path::Path;
use std::process::Command;

fn har() -> Command {
    Command::new(env!("CARGO_BIN_EXE_har"))
}

fn run_ok(cmd: &mut Command) -> String {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).expect("utf8 output")
}

/// Two MHEALTH-format log files with null-separated activity runs.
fn write_fake_mhealth_logs(dir: &Path) {
    for (file_idx, labels) in [[1i64, 2], [2, 3]].iter().enumerate() {
        let mut text = String::new();
        let mut t = 0usize;
        let mut block = |label: i64, rows: usize, text: &mut String| {
            for _ in 0..rows {
                let mut fields: Vec<String> = (0..23)
                    .map(|c| format!("{:.4}", ((t + c) as f64 * 0.61).sin()))
                    .collect();
                fields.push(label.to_string());
                text.push_str(&fields.join("\t"));
                text.push('\n');
                t += 1;
            }
        };
        block(0, 10, &mut text);
        block(labels[0], 150, &mut text);
        block(0, 10, &mut text);
        block(labels[1], 160, &mut text);
        std::fs::write(dir.join(format!("subject{}.log", file_idx + 1)), text).unwrap();
    }
}

#[test]
fn convert_mhealth_directory() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    std::fs::create_dir(&raw).unwrap();
    write_fake_mhealth_logs(&raw);
    let out = dir.path().join("mhealth.csv");

    let stdout = run_ok(
        har()
            .args(["convert", "--format", "mhealth", "--in"])
            .arg(&raw)
            .arg("--out")
            .arg(&out),
    );
    assert!(stdout.contains("21 channels"), "ECG dropped by default: {}", stdout);

    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("#meta subject=raw rate_hz=50"));
    let header = lines.next().unwrap();
    assert!(header.starts_with("label,chest-acc_x,chest-acc_y,chest-acc_z,left-ankle-acc_x"));
    assert!(!header.contains("ecg"));
    // 2 files x (10 + 150 + 10 + 160) rows + 1 separator row.
    assert_eq!(text.lines().count() - 2, 2 * 330 + 1);
}

#[test]
fn convert_keep_ecg_keeps_23_channels() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    std::fs::create_dir(&raw).unwrap();
    write_fake_mhealth_logs(&raw);
    let out = dir.path().join("full.csv");
    let stdout = run_ok(
        har()
            .args(["convert", "--format", "mhealth", "--keep-ecg", "--in"])
            .arg(&raw)
            .arg("--out")
            .arg(&out),
    );
    assert!(stdout.contains("23 channels"), "{}", stdout);
}

#[test]
fn synth_eval_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bench.csv");
    run_ok(har().args(["synth", "--seed", "9", "--out"]).arg(&data));

    let report_a = dir.path().join("proposed.json");
    let report_b = dir.path().join("catal.json");
    let stdout = run_ok(
        har()
            .args(["eval", "--preset", "proposed", "--seed", "11", "--data"])
            .arg(&data)
            .arg("--out")
            .arg(&report_a),
    );
    assert!(stdout.contains("Accuracy"));
    assert!(stdout.contains("proposed"));
    run_ok(
        har()
            .args(["eval", "--preset", "catal", "--seed", "11", "--data"])
            .arg(&data)
            .arg("--out")
            .arg(&report_b),
    );

    let table_path = dir.path().join("table.txt");
    let stdout = run_ok(
        har()
            .arg("compare")
            .arg(&report_a)
            .arg(&report_b)
            .arg("--out")
            .arg(&table_path),
    );
    assert!(stdout.contains("proposed"));
    assert!(stdout.contains("catal"));
    assert!(stdout.contains("delta"));
    let table = std::fs::read_to_string(&table_path).unwrap();
    assert!(table.contains("Accuracy"));
}

#[test]
fn features_dump_matches_contract() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mini.csv");
    run_ok(har().args(["synth", "--mini", "--seed", "3", "--out"]).arg(&data));

    // The mini benchmark has 4 s trials at 25 Hz: use 2 s windows.
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, r#"{"window_seconds": 2.0, "folds": 3}"#).unwrap();

    let features = dir.path().join("features.csv");
    run_ok(
        har()
            .args(["features", "--config"])
            .arg(&config_path)
            .arg("--in")
            .arg(&data)
            .arg("--out")
            .arg(&features),
    );
    let text = std::fs::read_to_string(&features).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("trial_id,label,"));
    assert_eq!(header.split(',').count(), 2 + 75);
    assert!(text.lines().count() > 12);
}

#[test]
fn eval_is_deterministic_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mini.csv");
    run_ok(har().args(["synth", "--mini", "--seed", "5", "--out"]).arg(&data));
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"window_seconds": 2.0, "folds": 3, "seed": 21}"#,
    )
    .unwrap();

    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for out in [&r1, &r2] {
        run_ok(
            har()
                .args(["eval", "--config"])
                .arg(&config_path)
                .arg("--data")
                .arg(&data)
                .arg("--out")
                .arg(out),
        );
    }
    let a = std::fs::read(&r1).unwrap();
    let b = std::fs::read(&r2).unwrap();
    assert_eq!(a, b, "same config + seed must give byte-identical reports");
}

#[test]
fn shipped_example_config_is_valid() {
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs/example.json");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bench.csv");
    run_ok(har().args(["synth", "--seed", "2", "--out"]).arg(&data));
    let out = dir.path().join("report.json");
    let stdout = run_ok(
        har()
            .args(["eval", "--config"])
            .arg(&config_path)
            .arg("--data")
            .arg(&data)
            .arg("--out")
            .arg(&out),
    );
    assert!(stdout.contains("proposed"));
}

#[test]
fn malformed_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "not a canonical csv\n").unwrap();
    let out = dir.path().join("r.json");
    let output = har()
        .args(["eval", "--data"])
        .arg(&bad)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("#meta"), "helpful parse error, got: {}", stderr);
}
