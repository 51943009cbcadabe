//! Hand-crafted time- and frequency-domain window features.
//!
//! Per channel: distributional statistics of the raw samples, summaries of
//! the DFT magnitude spectrum, and leading DCT-II coefficients. Per sensor
//! triad: pairwise Pearson correlations between axes. Feature names are a
//! function of the configuration and channel layout only, never of the data.

pub mod spectral;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::{Axis, ChannelSpec, Label};
use crate::error::{HarError, Result};
use crate::matrix::Matrix;
use crate::windowing::Window;

pub use spectral::{dct2, dft, fft_size, frequency_features, SpectralSummary};

/// Scale floor preventing division blow-ups on constant feature columns.
const SCALE_FLOOR: f64 = 1e-8;

/// Feature extraction configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Percentile levels in (0, 100).
    pub percentiles: Vec<f64>,
    /// Equal-width bins for the sample histogram entropy.
    pub entropy_bins: usize,
    /// Leading transform coefficients kept per channel (FFT magnitudes and
    /// DCT-II coefficients both use this count).
    pub spectral_coeffs: usize,
    pub include_time: bool,
    pub include_frequency: bool,
    pub include_correlations: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            percentiles: vec![25.0, 50.0, 75.0],
            entropy_bins: 16,
            spectral_coeffs: 5,
            include_time: true,
            include_frequency: true,
            include_correlations: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        for &p in &self.percentiles {
            if !(0.0 < p && p < 100.0) {
                return Err(HarError::Config(format!(
                    "percentile {} outside (0, 100)",
                    p
                )));
            }
        }
        if self.entropy_bins < 2 {
            return Err(HarError::Config("entropy_bins must be at least 2".into()));
        }
        if self.spectral_coeffs < 1 {
            return Err(HarError::Config("spectral_coeffs must be at least 1".into()));
        }
        if !(self.include_time || self.include_frequency) {
            return Err(HarError::Config(
                "at least one of the time/frequency families must be enabled".into(),
            ));
        }
        Ok(())
    }
}

/// Time-domain statistics of one channel series.
///
/// `variance` is carried for completeness but is not emitted into feature
/// vectors, being exactly `std^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFeatures {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub variance: f64,
    /// Root mean square `sqrt((1/n) * sum x^2)`.
    pub rms: f64,
    /// One value per configured percentile level, in level order.
    pub percentiles: Vec<f64>,
    /// `p75 - p25`, independent of the configured percentile set.
    pub iqr: f64,
    /// Non-excess population kurtosis `m4 / m2^2`; 0 at zero variance.
    pub kurtosis: f64,
    /// Mean absolute deviation from the mean.
    pub mad: f64,
    /// Histogram entropy over equal-width bins spanning [min, max], nats.
    pub entropy: f64,
}

/// Linear-interpolation percentile at rank `p * (n - 1) / 100` of a sorted
/// slice.
fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64 / 100.0;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

fn histogram_entropy(series: &[f64], bins: usize) -> f64 {
    let min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return 0.0;
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in series {
        let idx = (((x - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let n = series.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Computes the time-domain statistics of a series of at least two samples.
pub fn time_features(series: &[f64], config: &FeatureConfig) -> Result<TimeFeatures> {
    let n = series.len();
    if n < 2 {
        return Err(HarError::InvalidInput(format!(
            "time features need at least 2 samples, got {}",
            n
        )));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;
    let sum_sq_dev: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
    let variance = sum_sq_dev / (nf - 1.0);
    let std = variance.sqrt();
    let rms = (series.iter().map(|x| x * x).sum::<f64>() / nf).sqrt();
    let mad = series.iter().map(|x| (x - mean).abs()).sum::<f64>() / nf;

    let m2 = sum_sq_dev / nf;
    let m4 = series.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let kurtosis = if m2 == 0.0 { 0.0 } else { m4 / (m2 * m2) };

    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let percentiles = config
        .percentiles
        .iter()
        .map(|&p| percentile_sorted(&sorted, p))
        .collect();
    let iqr = percentile_sorted(&sorted, 75.0) - percentile_sorted(&sorted, 25.0);
    let entropy = histogram_entropy(series, config.entropy_bins);

    Ok(TimeFeatures {
        mean,
        std,
        variance,
        rms,
        percentiles,
        iqr,
        kurtosis,
        mad,
        entropy,
    })
}

/// Pearson correlation; 0 when either series has zero variance.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        0.0
    } else {
        cov / (var_a.sqrt() * var_b.sqrt())
    }
}

/// Pearson correlations between the X/Y/Z axes of a sensor group:
/// `(r_xy, r_xz, r_yz)`. The group must be a 3-axis triad.
pub fn axis_correlations(
    samples: &Matrix,
    channels: &[ChannelSpec],
    group: &str,
) -> Result<[f64; 3]> {
    let triad = triad_columns(channels, group).ok_or_else(|| {
        HarError::InvalidInput(format!("group '{}' is not an X/Y/Z triad", group))
    })?;
    let x = samples.column(triad[0]);
    let y = samples.column(triad[1]);
    let z = samples.column(triad[2]);
    Ok([
        pearson_correlation(&x, &y),
        pearson_correlation(&x, &z),
        pearson_correlation(&y, &z),
    ])
}

/// Column indices of a group's X, Y, Z channels, if it is a full triad.
fn triad_columns(channels: &[ChannelSpec], group: &str) -> Option<[usize; 3]> {
    let mut x = None;
    let mut y = None;
    let mut z = None;
    for (i, ch) in channels.iter().enumerate() {
        if ch.group == group {
            match ch.axis {
                Axis::X => x = Some(i),
                Axis::Y => y = Some(i),
                Axis::Z => z = Some(i),
                Axis::Scalar => return None,
            }
        }
    }
    Some([x?, y?, z?])
}

/// Triad groups in order of first channel appearance.
fn triad_groups(channels: &[ChannelSpec]) -> Vec<String> {
    let mut groups = Vec::new();
    for ch in channels {
        if !groups.contains(&ch.group) {
            groups.push(ch.group.clone());
        }
    }
    groups
        .into_iter()
        .filter(|g| triad_columns(channels, g).is_some())
        .collect()
}

fn percentile_name(p: f64) -> String {
    if p == p.trunc() {
        format!("p{}", p as i64)
    } else {
        format!("p{}", p)
    }
}

/// Ordered feature name list for a configuration and channel layout.
pub fn feature_names(config: &FeatureConfig, channels: &[ChannelSpec]) -> Vec<String> {
    let mut names = Vec::new();
    for ch in channels {
        if config.include_time {
            names.push(format!("{}_mean", ch.name));
            names.push(format!("{}_std", ch.name));
            names.push(format!("{}_rms", ch.name));
            for &p in &config.percentiles {
                names.push(format!("{}_{}", ch.name, percentile_name(p)));
            }
            names.push(format!("{}_iqr", ch.name));
            names.push(format!("{}_kurtosis", ch.name));
            names.push(format!("{}_mad", ch.name));
            names.push(format!("{}_entropy", ch.name));
        }
        if config.include_frequency {
            names.push(format!("{}_energy", ch.name));
            names.push(format!("{}_domfreq", ch.name));
            names.push(format!("{}_centroid", ch.name));
            names.push(format!("{}_specent", ch.name));
            for k in 1..=config.spectral_coeffs {
                names.push(format!("{}_fft{}", ch.name, k));
            }
            for k in 1..=config.spectral_coeffs {
                names.push(format!("{}_dct{}", ch.name, k));
            }
        }
    }
    if config.include_correlations {
        for group in triad_groups(channels) {
            names.push(format!("{}_corr_xy", group));
            names.push(format!("{}_corr_xz", group));
            names.push(format!("{}_corr_yz", group));
        }
    }
    names
}

/// Flattened per-channel features of one window, tagged with its label and
/// parent trial.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Label,
    pub trial_id: String,
}

/// Extracts the configured feature vector from a window.
///
/// Per channel, in order: time statistics, spectral summaries with leading
/// FFT magnitudes, DCT-II coefficients; then per-triad axis correlations.
pub fn extract_feature_vector(
    window: &Window,
    channels: &[ChannelSpec],
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    if window.samples.cols() != channels.len() {
        return Err(HarError::InvalidInput(format!(
            "window has {} channels but layout declares {}",
            window.samples.cols(),
            channels.len()
        )));
    }
    let mut values = Vec::new();
    for col in 0..channels.len() {
        let series = window.samples.column(col);
        if config.include_time {
            let t = time_features(&series, config)?;
            values.push(t.mean);
            values.push(t.std);
            values.push(t.rms);
            values.extend(&t.percentiles);
            values.push(t.iqr);
            values.push(t.kurtosis);
            values.push(t.mad);
            values.push(t.entropy);
        }
        if config.include_frequency {
            let spectrum = dft(&series);
            let s = frequency_features(&spectrum, window.sampling_rate_hz, config.spectral_coeffs)?;
            values.push(s.energy);
            values.push(s.dominant_freq_hz);
            values.push(s.centroid_hz);
            values.push(s.entropy);
            values.extend(&s.magnitudes);
            values.extend(dct2(&series, config.spectral_coeffs)?);
        }
    }
    if config.include_correlations {
        for group in triad_groups(channels) {
            values.extend(axis_correlations(&window.samples, channels, &group)?);
        }
    }
    debug_assert_eq!(values.len(), feature_names(config, channels).len());
    Ok(FeatureVector {
        values,
        label: window.label,
        trial_id: window.trial_id.clone(),
    })
}

/// Per-feature location/scale learned on training data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    /// `max(sample std, 1e-8)` per feature.
    scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(training: &[FeatureVector]) -> Result<Self> {
        if training.len() < 2 {
            return Err(HarError::InvalidInput(format!(
                "standardizer needs at least 2 training vectors, got {}",
                training.len()
            )));
        }
        let dim = training[0].values.len();
        for v in training {
            if v.values.len() != dim {
                return Err(HarError::InvalidInput(format!(
                    "feature dimension mismatch: {} vs {}",
                    v.values.len(),
                    dim
                )));
            }
        }
        let m = training.len() as f64;
        let mut means = vec![0.0; dim];
        for v in training {
            for (acc, &x) in means.iter_mut().zip(&v.values) {
                *acc += x;
            }
        }
        for acc in &mut means {
            *acc /= m;
        }
        let mut scales = vec![0.0; dim];
        for v in training {
            for ((acc, &mu), &x) in scales.iter_mut().zip(&means).zip(&v.values) {
                *acc += (x - mu) * (x - mu);
            }
        }
        for acc in &mut scales {
            *acc = (*acc / (m - 1.0)).sqrt().max(SCALE_FLOOR);
        }
        Ok(Self { means, scales })
    }

    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector> {
        if v.values.len() != self.means.len() {
            return Err(HarError::InvalidInput(format!(
                "cannot standardize a {}-dim vector with a {}-dim standardizer",
                v.values.len(),
                self.means.len()
            )));
        }
        let values = v
            .values
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(&x, (&mu, &s))| (x - mu) / s)
            .collect();
        Ok(FeatureVector {
            values,
            label: v.label,
            trial_id: v.trial_id.clone(),
        })
    }
}

/// Writes the feature dump CSV: header `trial_id,label,<feature names...>`.
pub fn write_features_csv(
    mut w: impl Write,
    vectors: &[FeatureVector],
    names: &[String],
) -> Result<()> {
    writeln!(w, "trial_id,label,{}", names.join(","))?;
    for v in vectors {
        let values: Vec<String> = v.values.iter().map(|x| format!("{:.8e}", x)).collect();
        writeln!(w, "{},{},{}", v.trial_id, v.label, values.join(","))?;
    }
    Ok(())
}

pub fn save_features_csv(
    path: impl AsRef<Path>,
    vectors: &[FeatureVector],
    names: &[String],
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_features_csv(&mut buf, vectors, names)?;
    buf.flush()?;
    Ok(())
}
