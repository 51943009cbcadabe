//! Fixed-duration windows over trials and leave-one-trial-out fold dealing.
//!
//! Windows never span trial boundaries, so every window is label-homogeneous
//! by construction. Fold assignment operates on whole trials: all windows of
//! a trial land on the same side of every train/test split.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataio::{ChannelSpec, Label, SensorTrial};
use crate::error::{HarError, Result};
use crate::matrix::Matrix;
use crate::rng::seeded_rng;

/// A fixed-duration slice of one trial; the classification sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub trial_id: String,
    pub subject_id: String,
    pub label: Label,
    /// Sample offset of the window start within its trial.
    pub start_index: usize,
    /// `w x n_channels` where `w = round(window_seconds * rate)`.
    pub samples: Matrix,
    pub sampling_rate_hz: f64,
}

impl Window {
    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }
}

/// Window length in samples for a duration at a sampling rate.
pub fn window_samples(window_seconds: f64, sampling_rate_hz: f64) -> usize {
    (window_seconds * sampling_rate_hz).round() as usize
}

fn slice_windows(trial: &SensorTrial, w: usize, stride: usize) -> Vec<Window> {
    let len = trial.len();
    let mut windows = Vec::new();
    if w == 0 || len < w {
        return windows;
    }
    let mut offset = 0;
    while offset + w <= len {
        windows.push(Window {
            trial_id: trial.trial_id.clone(),
            subject_id: trial.subject_id.clone(),
            label: trial.label,
            start_index: offset,
            samples: trial.samples.slice_rows(offset, offset + w),
            sampling_rate_hz: trial.sampling_rate_hz,
        });
        offset += stride;
    }
    windows
}

/// Semi-non-overlapping windows: stride `max(1, round(w * (1 - overlap)))`.
///
/// A trial shorter than one window yields an empty list. The trailing partial
/// window is dropped, so the count is `floor((L - w) / stride) + 1`.
pub fn snow_windows(
    trial: &SensorTrial,
    window_seconds: f64,
    overlap_fraction: f64,
) -> Result<Vec<Window>> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(HarError::InvalidInput(format!(
            "overlap fraction must be in [0, 1), got {}",
            overlap_fraction
        )));
    }
    let w = window_samples(window_seconds, trial.sampling_rate_hz);
    let stride = ((w as f64) * (1.0 - overlap_fraction)).round().max(1.0) as usize;
    Ok(slice_windows(trial, w, stride))
}

/// Full-non-overlapping windows: back-to-back, stride = window length.
pub fn fnow_windows(trial: &SensorTrial, window_seconds: f64) -> Result<Vec<Window>> {
    let w = window_samples(window_seconds, trial.sampling_rate_hz);
    Ok(slice_windows(trial, w, w))
}

/// Assignment of every trial to exactly one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    fold_count: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn fold_of(&self, trial_id: &str) -> Option<usize> {
        self.assignment.get(trial_id).copied()
    }

    pub fn trials_in_fold(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Deals trials to `k` folds for leave-one-trial-out cross-validation.
///
/// Trials are shuffled by a seeded RNG, grouped by label, and dealt round
/// robin with a single fold cursor that persists across label groups. The
/// cursor keeps overall fold sizes within one trial of each other while the
/// per-label grouping stratifies class balance where counts allow.
pub fn loto_folds(trials: &[SensorTrial], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(HarError::InvalidInput(format!(
            "fold count must be at least 2, got {}",
            k
        )));
    }
    if trials.len() < k {
        return Err(HarError::InvalidInput(format!(
            "{} trials cannot fill {} folds",
            trials.len(),
            k
        )));
    }
    let mut order: Vec<usize> = (0..trials.len()).collect();
    let mut rng = seeded_rng(seed);
    order.shuffle(&mut rng);

    let mut labels: Vec<Label> = trials.iter().map(|t| t.label).collect();
    labels.sort_unstable();
    labels.dedup();

    let mut assignment = BTreeMap::new();
    let mut cursor = 0usize;
    for label in labels {
        for &idx in order.iter().filter(|&&i| trials[i].label == label) {
            assignment.insert(trials[idx].trial_id.clone(), cursor);
            cursor = (cursor + 1) % k;
        }
    }
    Ok(FoldAssignment {
        fold_count: k,
        assignment,
    })
}

/// Dumps windows in the canonical CSV layout with a leading `window_id`
/// column; rows of one window stay contiguous and in sample order.
pub fn write_windows_csv(
    mut w: impl Write,
    windows: &[Window],
    channels: &[ChannelSpec],
    subject_id: &str,
    sampling_rate_hz: f64,
) -> Result<()> {
    writeln!(w, "#meta subject={} rate_hz={}", subject_id, sampling_rate_hz)?;
    let names: Vec<&str> = channels.iter().map(|c| c.name.as_str()).collect();
    writeln!(w, "window_id,label,{}", names.join(","))?;
    for (wid, window) in windows.iter().enumerate() {
        for row in window.samples.iter_rows() {
            let values: Vec<String> = row.iter().map(|v| format!("{:.8e}", v)).collect();
            writeln!(w, "{},{},{}", wid, window.label, values.join(","))?;
        }
    }
    Ok(())
}

pub fn save_windows_csv(
    path: impl AsRef<Path>,
    windows: &[Window],
    channels: &[ChannelSpec],
    subject_id: &str,
    sampling_rate_hz: f64,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_windows_csv(&mut buf, windows, channels, subject_id, sampling_rate_hz)?;
    buf.flush()?;
    Ok(())
}
