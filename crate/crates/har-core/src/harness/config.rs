//! Run configuration: one JSON file covering windowing, features, folds,
//! the ensemble, and the master seed.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataio::Label;
use crate::ensemble::EnsembleSpec;
use crate::error::{HarError, Result};
use crate::features::FeatureConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowingKind {
    /// Semi-non-overlapping sliding windows.
    Snow,
    /// Full-non-overlapping back-to-back windows.
    Fnow,
}

/// Named ensemble presets exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Proposed,
    Catal,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Proposed => "proposed",
            Preset::Catal => "catal",
        }
    }
}

impl FromStr for Preset {
    type Err = HarError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Preset::Proposed),
            "catal" => Ok(Preset::Catal),
            other => Err(HarError::Config(format!(
                "unknown preset '{}'; expected 'proposed' or 'catal'",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Temporal window length in seconds.
    pub window_seconds: f64,
    /// SNOW overlap fraction in [0, 1).
    pub overlap: f64,
    pub windowing: WindowingKind,
    /// LOTO fold count.
    pub folds: usize,
    /// Master seed; fold dealing and every seeded learner derive from it.
    pub seed: u64,
    /// Minimum trial length in samples; default is one window length.
    pub min_trial_len: Option<usize>,
    /// Trials with this label are dropped (no-activity segments).
    pub null_label: Option<Label>,
    /// Sensor groups to keep; `None` keeps everything.
    pub channel_groups: Option<Vec<String>>,
    pub features: FeatureConfig,
    pub ensemble: EnsembleSpec,
    /// Identifies the ensemble in reports and comparison tables.
    pub method_name: String,
    /// Surface hard-vote abstentions instead of resolving them; abstained
    /// windows then count as misclassifications.
    pub strict_abstain: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_seconds: 5.0,
            overlap: 0.5,
            windowing: WindowingKind::Snow,
            folds: 10,
            seed: 7,
            min_trial_len: None,
            null_label: Some(0),
            channel_groups: None,
            features: FeatureConfig::default(),
            ensemble: EnsembleSpec::proposed(7),
            method_name: "proposed".into(),
            strict_abstain: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_seconds <= 0.0 || !self.window_seconds.is_finite() {
            return Err(HarError::Config(format!(
                "window_seconds must be positive, got {}",
                self.window_seconds
            )));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(HarError::Config(format!(
                "overlap must be in [0, 1), got {}",
                self.overlap
            )));
        }
        if self.folds < 2 {
            return Err(HarError::Config(format!(
                "folds must be at least 2, got {}",
                self.folds
            )));
        }
        self.features.validate()?;
        // Member count is a file/CLI contract; single-member ensembles stay
        // available programmatically for member-vs-ensemble comparisons.
        self.ensemble.validate_members()?;
        Ok(())
    }

    /// Replaces the ensemble with a named preset (members and method name).
    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.ensemble = match preset {
            Preset::Proposed => EnsembleSpec::proposed(self.seed),
            Preset::Catal => EnsembleSpec::catal(self.seed),
        };
        self.method_name = preset.name().into();
        self
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path)?;
        let config: PipelineConfig = serde_json::from_str(&text).map_err(|e| {
            HarError::Config(format!(
                "cannot parse config {}: {}",
                path.as_ref().display(),
                e
            ))
        })?;
        Ok(config)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| HarError::Internal(format!("config serialization: {}", e)))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
