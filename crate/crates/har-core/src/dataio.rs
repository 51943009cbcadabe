//! Raw recording ingestion: MHEALTH logs, the canonical CSV format, channel
//! selection and trial segmentation.
//!
//! A recording is a continuous multi-channel stream with one activity label
//! per sample. Trials are the maximal contiguous constant-label runs inside a
//! recording; they are the atomic unit for leave-one-trial-out evaluation.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarError, Result};
use crate::matrix::Matrix;

/// Integer activity code. `0` conventionally marks "no activity" segments.
pub type Label = i64;

/// Axis of a channel within its sensor group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    /// Non-spatial channel (e.g. an ECG lead).
    Scalar,
}

impl Axis {
    fn suffix(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Scalar => "s",
        }
    }
}

/// One named channel, grouped with its sensor triad.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// Unique channel name, `<group>_<axis>` in the canonical CSV header.
    pub name: String,
    /// Sensor group identifier, e.g. `chest-acc`.
    pub group: String,
    pub axis: Axis,
}

impl ChannelSpec {
    pub fn new(group: &str, axis: Axis) -> Self {
        Self {
            name: format!("{}_{}", group, axis.suffix()),
            group: group.to_string(),
            axis,
        }
    }

    fn named(name: &str, group: &str, axis: Axis) -> Self {
        Self {
            name: name.to_string(),
            group: group.to_string(),
            axis,
        }
    }
}

/// Checks channel-list invariants: unique names, no duplicated axis within a
/// group, and no group mixing scalar and spatial channels. A 3-axis group is
/// any group carrying X, Y, and Z (then necessarily exactly once each);
/// partial spatial groups are permitted but never treated as triads.
pub fn validate_channels(channels: &[ChannelSpec]) -> Result<()> {
    let mut names = std::collections::BTreeSet::new();
    for ch in channels {
        if !names.insert(ch.name.as_str()) {
            return Err(HarError::InvalidInput(format!(
                "duplicate channel name '{}'",
                ch.name
            )));
        }
    }
    let mut groups: Vec<&str> = channels.iter().map(|c| c.group.as_str()).collect();
    groups.sort_unstable();
    groups.dedup();
    for group in groups {
        let axes: Vec<Axis> = channels
            .iter()
            .filter(|c| c.group == group)
            .map(|c| c.axis)
            .collect();
        let spatial: Vec<Axis> = axes.iter().copied().filter(|a| *a != Axis::Scalar).collect();
        if !spatial.is_empty() && spatial.len() != axes.len() {
            return Err(HarError::InvalidInput(format!(
                "group '{}' mixes scalar and spatial channels",
                group
            )));
        }
        let mut deduped = spatial.clone();
        deduped.sort_by_key(|a| *a as u8);
        deduped.dedup();
        if deduped.len() != spatial.len() {
            return Err(HarError::InvalidInput(format!(
                "group '{}' repeats an axis",
                group
            )));
        }
    }
    Ok(())
}

/// Bijective mapping from activity codes to human-readable names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    entries: std::collections::BTreeMap<Label, String>,
}

impl LabelMap {
    pub fn new(pairs: impl IntoIterator<Item = (Label, String)>) -> Result<Self> {
        let mut entries = std::collections::BTreeMap::new();
        let mut names = std::collections::BTreeSet::new();
        for (code, name) in pairs {
            if entries.insert(code, name.clone()).is_some() {
                return Err(HarError::InvalidInput(format!(
                    "duplicate label code {}",
                    code
                )));
            }
            if !names.insert(name.clone()) {
                return Err(HarError::InvalidInput(format!(
                    "duplicate label name '{}'",
                    name
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn name(&self, code: Label) -> Option<&str> {
        self.entries.get(&code).map(String::as_str)
    }

    pub fn contains(&self, code: Label) -> bool {
        self.entries.contains_key(&code)
    }

    pub fn codes(&self) -> impl Iterator<Item = Label> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The twelve USC-HAD daily activities, codes 1..=12.
    pub fn usc_had() -> Self {
        let names = [
            "walking forward",
            "walking left",
            "walking right",
            "walking upstairs",
            "walking downstairs",
            "running forward",
            "jumping",
            "sitting",
            "standing",
            "sleeping",
            "elevator up",
            "elevator down",
        ];
        Self::new(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| (i as Label + 1, n.to_string())),
        )
        .expect("static label map is bijective")
    }

    /// The twelve MHEALTH activities, codes 1..=12 (0 is the null class).
    pub fn mhealth() -> Self {
        let names = [
            "standing still",
            "sitting and relaxing",
            "lying down",
            "walking",
            "climbing stairs",
            "waist bends forward",
            "frontal elevation of arms",
            "knees bending",
            "cycling",
            "jogging",
            "running",
            "jump front and back",
        ];
        Self::new(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| (i as Label + 1, n.to_string())),
        )
        .expect("static label map is bijective")
    }
}

/// One subject's continuous multi-channel sensor stream with per-sample labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecording {
    pub subject_id: String,
    pub sampling_rate_hz: f64,
    pub channels: Vec<ChannelSpec>,
    /// `n_samples x n_channels`.
    pub samples: Matrix,
    /// One activity code per sample row.
    pub labels: Vec<Label>,
}

impl LabeledRecording {
    pub fn new(
        subject_id: impl Into<String>,
        sampling_rate_hz: f64,
        channels: Vec<ChannelSpec>,
        samples: Matrix,
        labels: Vec<Label>,
    ) -> Result<Self> {
        if sampling_rate_hz <= 0.0 || !sampling_rate_hz.is_finite() {
            return Err(HarError::InvalidInput(format!(
                "sampling rate must be positive, got {}",
                sampling_rate_hz
            )));
        }
        if samples.rows() == 0 {
            return Err(HarError::InvalidInput("recording has no samples".into()));
        }
        if samples.cols() != channels.len() {
            return Err(HarError::InvalidInput(format!(
                "{} channels declared but sample rows have {} values",
                channels.len(),
                samples.cols()
            )));
        }
        if labels.len() != samples.rows() {
            return Err(HarError::InvalidInput(format!(
                "{} labels for {} samples",
                labels.len(),
                samples.rows()
            )));
        }
        validate_channels(&channels)?;
        Ok(Self {
            subject_id: subject_id.into(),
            sampling_rate_hz,
            channels,
            samples,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.samples.rows()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Errors if any sample label is missing from `map` (the null label is
    /// tolerated since it marks unlabeled gaps, not an activity).
    pub fn validate_labels(&self, map: &LabelMap, null_label: Option<Label>) -> Result<()> {
        for (i, &label) in self.labels.iter().enumerate() {
            if Some(label) == null_label {
                continue;
            }
            if !map.contains(label) {
                return Err(HarError::Parse {
                    line: i + 1,
                    message: format!("unknown label code {}", label),
                });
            }
        }
        Ok(())
    }
}

/// A maximal contiguous run of one activity; the atomic LOTO unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrial {
    /// Unique within the dataset, `<subject>:<run index>`.
    pub trial_id: String,
    pub subject_id: String,
    pub label: Label,
    pub samples: Matrix,
    pub sampling_rate_hz: f64,
}

impl SensorTrial {
    pub fn len(&self) -> usize {
        self.samples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.rows() == 0
    }
}

/// The 23 sensor channels of an MHEALTH log row, in column order.
///
/// Columns 4-5 are the two ECG leads; the paper's protocol drops them via
/// `select_channels`.
pub fn mhealth_channels() -> Vec<ChannelSpec> {
    let mut channels = vec![
        ChannelSpec::new("chest-acc", Axis::X),
        ChannelSpec::new("chest-acc", Axis::Y),
        ChannelSpec::new("chest-acc", Axis::Z),
        ChannelSpec::named("ecg_1", "ecg", Axis::Scalar),
        ChannelSpec::named("ecg_2", "ecg", Axis::Scalar),
    ];
    for group in [
        "left-ankle-acc",
        "left-ankle-gyro",
        "left-ankle-mag",
        "right-wrist-acc",
        "right-wrist-gyro",
        "right-wrist-mag",
    ] {
        channels.push(ChannelSpec::new(group, Axis::X));
        channels.push(ChannelSpec::new(group, Axis::Y));
        channels.push(ChannelSpec::new(group, Axis::Z));
    }
    channels
}

/// Sensor groups kept for the MHEALTH protocol (everything but ECG).
pub fn mhealth_default_groups() -> Vec<String> {
    mhealth_channels()
        .iter()
        .map(|c| c.group.clone())
        .filter(|g| g != "ecg")
        .fold(Vec::new(), |mut acc, g| {
            if acc.last() != Some(&g) {
                acc.push(g);
            }
            acc
        })
}

/// Parses a whitespace/tab-delimited MHEALTH log: 24 numeric columns per row,
/// 23 sensor channels plus a trailing integer label.
pub fn parse_mhealth_log(
    reader: impl Read,
    subject_id: &str,
    sampling_rate_hz: f64,
) -> Result<LabeledRecording> {
    let channels = mhealth_channels();
    let n_cols = channels.len() + 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();

    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != n_cols {
            return Err(HarError::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", n_cols, fields.len()),
            });
        }
        let mut row = Vec::with_capacity(channels.len());
        for (col, field) in fields[..channels.len()].iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| HarError::Parse {
                line: line_no,
                message: format!("column {} is not numeric: '{}'", col + 1, field),
            })?;
            row.push(value);
        }
        let label_field = fields[channels.len()];
        // Labels are integers but some exports write them as "3.0".
        let label: Label = label_field
            .parse::<Label>()
            .or_else(|_| {
                label_field
                    .parse::<f64>()
                    .map_err(|_| ())
                    .and_then(|v| if v.fract() == 0.0 { Ok(v as Label) } else { Err(()) })
            })
            .map_err(|_| HarError::Parse {
                line: line_no,
                message: format!("label column is not an integer: '{}'", label_field),
            })?;
        rows.push(row);
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(HarError::InvalidInput(
            "empty stream: no sample rows found".into(),
        ));
    }
    LabeledRecording::new(
        subject_id,
        sampling_rate_hz,
        channels,
        Matrix::from_rows(rows)?,
        labels,
    )
}

// Canonical CSV: line 1 `#meta subject=<id> rate_hz=<r>`, line 2 header
// `label,<group>_<axis>,...`, then one sample per row with the label first.
// Floats carry 9 significant digits.

fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{:.8e}", v)
    }
}

/// Writes a recording in the canonical CSV format.
pub fn write_canonical_csv(mut w: impl Write, rec: &LabeledRecording) -> Result<()> {
    writeln!(
        w,
        "#meta subject={} rate_hz={}",
        rec.subject_id, rec.sampling_rate_hz
    )?;
    let header: Vec<&str> = rec.channels.iter().map(|c| c.name.as_str()).collect();
    writeln!(w, "label,{}", header.join(","))?;
    let mut line = String::new();
    for (i, row) in rec.samples.iter_rows().enumerate() {
        line.clear();
        write!(line, "{}", rec.labels[i]).expect("write to string");
        for v in row {
            line.push(',');
            line.push_str(&format_value(*v));
        }
        writeln!(w, "{}", line)?;
    }
    Ok(())
}

pub fn save_canonical_csv(path: impl AsRef<Path>, rec: &LabeledRecording) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_canonical_csv(&mut buf, rec)?;
    buf.flush()?;
    Ok(())
}

fn parse_meta_line(line: &str) -> Result<(String, f64)> {
    let rest = line.strip_prefix("#meta").ok_or_else(|| HarError::Parse {
        line: 1,
        message: "first line must start with '#meta'".into(),
    })?;
    let mut subject = None;
    let mut rate = None;
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("subject=") {
            subject = Some(v.to_string());
        } else if let Some(v) = token.strip_prefix("rate_hz=") {
            rate = Some(v.parse::<f64>().map_err(|_| HarError::Parse {
                line: 1,
                message: format!("rate_hz is not numeric: '{}'", v),
            })?);
        }
    }
    match (subject, rate) {
        (Some(s), Some(r)) => Ok((s, r)),
        (None, _) => Err(HarError::Parse {
            line: 1,
            message: "missing 'subject=' in meta line".into(),
        }),
        (_, None) => Err(HarError::Parse {
            line: 1,
            message: "missing 'rate_hz=' in meta line".into(),
        }),
    }
}

/// Recovers a `ChannelSpec` from a `<group>_<axis>` header name. Names whose
/// suffix is not x/y/z are treated as scalar channels of their own group.
fn channel_from_name(name: &str) -> ChannelSpec {
    if let Some((group, suffix)) = name.rsplit_once('_') {
        let axis = match suffix {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        };
        if let Some(axis) = axis {
            return ChannelSpec::named(name, group, axis);
        }
        return ChannelSpec::named(name, group, Axis::Scalar);
    }
    ChannelSpec::named(name, name, Axis::Scalar)
}

/// Reads a recording from the canonical CSV format.
pub fn read_canonical_csv(reader: impl Read) -> Result<LabeledRecording> {
    let mut lines = BufReader::new(reader).lines();
    let meta = lines
        .next()
        .ok_or_else(|| HarError::InvalidInput("empty file".into()))??;
    let (subject, rate) = parse_meta_line(&meta)?;

    let header = lines.next().ok_or_else(|| HarError::Parse {
        line: 2,
        message: "missing header line".into(),
    })??;
    let mut columns = header.split(',');
    if columns.next() != Some("label") {
        return Err(HarError::Parse {
            line: 2,
            message: "header must start with 'label'".into(),
        });
    }
    let channels: Vec<ChannelSpec> = columns.map(channel_from_name).collect();
    if channels.is_empty() {
        return Err(HarError::Parse {
            line: 2,
            message: "header declares no channels".into(),
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 3;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label_field = fields.next().unwrap_or_default();
        let label: Label = label_field.parse().map_err(|_| HarError::Parse {
            line: line_no,
            message: format!("label is not an integer: '{}'", label_field),
        })?;
        let mut row = Vec::with_capacity(channels.len());
        for field in fields {
            let v: f64 = field.parse().map_err(|_| HarError::Parse {
                line: line_no,
                message: format!("value is not numeric: '{}'", field),
            })?;
            row.push(v);
        }
        if row.len() != channels.len() {
            return Err(HarError::Parse {
                line: line_no,
                message: format!(
                    "expected {} channel values, found {}",
                    channels.len(),
                    row.len()
                ),
            });
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(HarError::InvalidInput("CSV contains no sample rows".into()));
    }
    LabeledRecording::new(subject, rate, channels, Matrix::from_rows(rows)?, labels)
}

pub fn load_canonical_csv(path: impl AsRef<Path>) -> Result<LabeledRecording> {
    let file = std::fs::File::open(&path).map_err(|e| {
        HarError::InvalidInput(format!("cannot open {}: {}", path.as_ref().display(), e))
    })?;
    read_canonical_csv(file)
}

/// Keeps only the channels belonging to the requested sensor groups, in the
/// original channel order. Sample count and labels are unchanged.
pub fn select_channels(rec: &LabeledRecording, groups: &[String]) -> Result<LabeledRecording> {
    let mut available: Vec<&str> = rec.channels.iter().map(|c| c.group.as_str()).collect();
    available.dedup();
    for g in groups {
        if !available.iter().any(|a| a == g) {
            return Err(HarError::InvalidInput(format!(
                "unknown sensor group '{}'; available groups: {}",
                g,
                available.join(", ")
            )));
        }
    }
    let keep: Vec<usize> = rec
        .channels
        .iter()
        .enumerate()
        .filter(|(_, c)| groups.contains(&c.group))
        .map(|(i, _)| i)
        .collect();
    let channels: Vec<ChannelSpec> = keep.iter().map(|&i| rec.channels[i].clone()).collect();
    let mut out = Matrix::zeros(rec.n_samples(), keep.len());
    for r in 0..rec.n_samples() {
        for (j, &c) in keep.iter().enumerate() {
            out.set(r, j, rec.samples.get(r, c));
        }
    }
    LabeledRecording::new(
        rec.subject_id.clone(),
        rec.sampling_rate_hz,
        channels,
        out,
        rec.labels.clone(),
    )
}

/// Splits a recording into maximal contiguous constant-label runs, dropping
/// runs shorter than `min_trial_len`. Trial ids number all maximal runs in
/// temporal order, so they are stable under changes of `min_trial_len`.
pub fn segment_trials(rec: &LabeledRecording, min_trial_len: usize) -> Vec<SensorTrial> {
    assert!(min_trial_len >= 1, "min_trial_len must be at least 1");
    let mut trials = Vec::new();
    let n = rec.n_samples();
    let mut start = 0;
    let mut run_index = 0;
    while start < n {
        let label = rec.labels[start];
        let mut end = start + 1;
        while end < n && rec.labels[end] == label {
            end += 1;
        }
        if end - start >= min_trial_len {
            trials.push(SensorTrial {
                trial_id: format!("{}:{:04}", rec.subject_id, run_index),
                subject_id: rec.subject_id.clone(),
                label,
                samples: rec.samples.slice_rows(start, end),
                sampling_rate_hz: rec.sampling_rate_hz,
            });
        }
        run_index += 1;
        start = end;
    }
    trials
}

/// Drops trials carrying the null (no-activity) label.
///
/// Null runs are excluded as whole trials rather than by deleting their rows
/// up front, so two bouts of the same activity separated by a null gap are
/// never merged into one trial.
pub fn drop_null_trials(trials: Vec<SensorTrial>, null_label: Label) -> Vec<SensorTrial> {
    trials.into_iter().filter(|t| t.label != null_label).collect()
}
