//! `har`: wearable-sensor activity recognition pipeline.
//!
//! Subcommands: `convert` raw datasets to canonical CSV, dump window
//! `features`, run a LOTO `eval`, `compare` two reports, and generate the
//! built-in `synth` benchmark.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use har_core::dataio::{
    drop_null_trials, load_canonical_csv, mhealth_default_groups, parse_mhealth_log,
    save_canonical_csv, segment_trials, select_channels, LabeledRecording,
};
use har_core::features::{extract_feature_vector, feature_names, save_features_csv};
use har_core::harness::synth::{synthetic_recording, SynthConfig};
use har_core::harness::{
    compare, cross_validate, load_report, render_comparison_table, render_report_table,
    save_comparison_table, save_report, PipelineConfig, Preset, WindowingKind,
};
use har_core::matrix::Matrix;
use har_core::windowing::{fnow_windows, snow_windows, window_samples};

#[derive(Parser)]
#[command(name = "har", version, about = "Wearable-sensor human activity recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RawFormat {
    /// Whitespace-delimited 24-column logs (23 sensor channels + label).
    Mhealth,
}

#[derive(Subcommand)]
enum Command {
    /// Convert raw dataset logs into the canonical CSV format.
    Convert {
        #[arg(long, value_enum)]
        format: RawFormat,
        /// A raw log file, or a directory whose *.log/*.txt files are
        /// concatenated (a null-label row separates files).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Sampling rate of the raw logs.
        #[arg(long, default_value_t = 50.0)]
        rate: f64,
        /// Subject id recorded in the output; defaults to the input stem.
        #[arg(long)]
        subject: Option<String>,
        /// Keep the ECG channels instead of dropping them.
        #[arg(long)]
        keep_ecg: bool,
    },
    /// Window a canonical CSV and dump per-window feature vectors.
    Features {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Run leave-one-trial-out cross-validation and write a report.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Canonical CSV dataset.
        #[arg(long)]
        data: PathBuf,
        /// Ensemble preset overriding the config's members.
        #[arg(long)]
        preset: Option<String>,
        /// Seed overriding the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Report output path (structured JSON).
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Render two reports side by side.
    Compare {
        report_a: PathBuf,
        report_b: PathBuf,
        /// Write the rendered table here as well as to stdout.
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Generate the seeded synthetic benchmark as canonical CSV.
    Synth {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long = "out")]
        output: PathBuf,
        /// Use the shrunk benchmark (fewer, shorter trials).
        #[arg(long)]
        mini: bool,
    },
}

fn load_config_or_default(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => {
            let config = PipelineConfig::load(p)
                .with_context(|| format!("loading config {}", p.display()))?;
            // File-level contract: a configured ensemble has >= 2 members.
            config.ensemble.validate()?;
            Ok(config)
        }
        None => Ok(PipelineConfig::default()),
    }
}

fn convert_mhealth(
    input: &Path,
    rate: f64,
    subject: Option<String>,
    keep_ecg: bool,
) -> Result<LabeledRecording> {
    let mut sources: Vec<PathBuf> = Vec::new();
    if input.is_dir() {
        for entry in std::fs::read_dir(input)? {
            let path = entry?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if matches!(ext, "log" | "txt") {
                sources.push(path);
            }
        }
        sources.sort();
        if sources.is_empty() {
            bail!("no *.log or *.txt files in {}", input.display());
        }
    } else {
        sources.push(input.to_path_buf());
    }

    let subject = subject.unwrap_or_else(|| {
        input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "mhealth".into())
    });

    let mut combined: Option<LabeledRecording> = None;
    for path in &sources {
        let file = std::fs::File::open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        let rec = parse_mhealth_log(file, &subject, rate)
            .with_context(|| format!("parsing {}", path.display()))?;
        combined = Some(match combined {
            None => rec,
            Some(acc) => concat_recordings(acc, rec)?,
        });
    }
    let mut rec = combined.expect("at least one source file");
    if !keep_ecg {
        rec = select_channels(&rec, &mhealth_default_groups())?;
    }
    Ok(rec)
}

/// Appends `next` to `acc` with a single null-label all-zero row in between,
/// so activity runs never span file boundaries.
fn concat_recordings(acc: LabeledRecording, next: LabeledRecording) -> Result<LabeledRecording> {
    if acc.channels != next.channels {
        bail!("cannot concatenate recordings with different channel layouts");
    }
    if acc.sampling_rate_hz != next.sampling_rate_hz {
        bail!("cannot concatenate recordings with different sampling rates");
    }
    let cols = acc.n_channels();
    let mut rows: Vec<Vec<f64>> = acc.samples.iter_rows().map(|r| r.to_vec()).collect();
    let mut labels = acc.labels.clone();
    rows.push(vec![0.0; cols]);
    labels.push(0);
    rows.extend(next.samples.iter_rows().map(|r| r.to_vec()));
    labels.extend(&next.labels);
    Ok(LabeledRecording::new(
        acc.subject_id,
        acc.sampling_rate_hz,
        acc.channels,
        Matrix::from_rows(rows)?,
        labels,
    )?)
}

fn run_features(config: &PipelineConfig, input: &Path, output: &Path) -> Result<()> {
    config.validate()?;
    let mut rec = load_canonical_csv(input)?;
    if let Some(groups) = &config.channel_groups {
        rec = select_channels(&rec, groups)?;
    }
    let w = window_samples(config.window_seconds, rec.sampling_rate_hz);
    let min_len = config.min_trial_len.unwrap_or(w).max(1);
    let mut trials = segment_trials(&rec, min_len);
    if let Some(null) = config.null_label {
        trials = drop_null_trials(trials, null);
    }
    let mut vectors = Vec::new();
    for trial in &trials {
        let windows = match config.windowing {
            WindowingKind::Snow => snow_windows(trial, config.window_seconds, config.overlap)?,
            WindowingKind::Fnow => fnow_windows(trial, config.window_seconds)?,
        };
        for window in &windows {
            vectors.push(extract_feature_vector(window, &rec.channels, &config.features)?);
        }
    }
    let names = feature_names(&config.features, &rec.channels);
    save_features_csv(output, &vectors, &names)?;
    println!(
        "wrote {} feature vectors ({} features) from {} trials to {}",
        vectors.len(),
        names.len(),
        trials.len(),
        output.display()
    );
    Ok(())
}

/// Default SIGPIPE disposition so `har ... | head` exits quietly instead of
/// panicking on a closed stdout.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> Result<()> {
    reset_sigpipe();
    match Cli::parse().command {
        Command::Convert { format, input, output, rate, subject, keep_ecg } => {
            let rec = match format {
                RawFormat::Mhealth => convert_mhealth(&input, rate, subject, keep_ecg)?,
            };
            save_canonical_csv(&output, &rec)?;
            println!(
                "wrote {} samples x {} channels at {} Hz to {}",
                rec.n_samples(),
                rec.n_channels(),
                rec.sampling_rate_hz,
                output.display()
            );
        }
        Command::Features { config, input, output } => {
            let config = load_config_or_default(&config)?;
            run_features(&config, &input, &output)?;
        }
        Command::Eval { config, data, preset, seed, output } => {
            let mut config = load_config_or_default(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(preset) = preset {
                let preset: Preset = preset.parse()?;
                config = config.with_preset(preset);
            }
            let rec = load_canonical_csv(&data)?;
            let dataset_id = data
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into());
            let report = cross_validate(&rec, &config, &dataset_id)?;
            save_report(&output, &report)?;
            print!("{}", render_report_table(&report));
            println!("report written to {}", output.display());
        }
        Command::Compare { report_a, report_b, output } => {
            let a = load_report(&report_a)?;
            let b = load_report(&report_b)?;
            let comparison = compare(&a, &b);
            print!("{}", render_comparison_table(&comparison));
            if let Some(path) = output {
                save_comparison_table(&path, &comparison)?;
                println!("table written to {}", path.display());
            }
        }
        Command::Synth { seed, output, mini } => {
            let config = if mini { SynthConfig::mini() } else { SynthConfig::default() };
            let rec = synthetic_recording(&config, seed)?;
            save_canonical_csv(&output, &rec)?;
            println!(
                "wrote synthetic benchmark ({} samples x {} channels, seed {}) to {}",
                rec.n_samples(),
                rec.n_channels(),
                seed,
                output.display()
            );
        }
    }
    Ok(())
}
