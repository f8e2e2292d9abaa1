//! Engine configuration: stream parameters, metric constants, and the
//! key-value file they load from.
//!
//! A configuration file is TOML with up to three tables. Every key is
//! optional and falls back to its default:
//!
//! ```toml
//! [stream]
//! sample_rate_hz = 256.0
//! lowpass_cutoff_hz = 45.0
//!
//! [metrics]
//! entropy_bin_width = 0.5
//!
//! [metrics.fsi]
//! theta_target = 0.35
//! weights = { theta = 0.30, alpha = 0.20, calm = 0.25, balance = 0.15, entropy = 0.10 }
//!
//! [metrics.kpi]
//! fatigue_scale = 0.25
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::fsi::FsiConfig;
use crate::metrics::kpi::KpiConfig;

/// Highest band edge the band decomposition needs below Nyquist.
const HIGHEST_BAND_EDGE_HZ: f64 = 40.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("failed to read config file: {0}")]
    Read(String),
    #[error("failed to parse config file: {0}")]
    Parse(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid { field, reason: reason.into() }
    }
}

/// Acquisition and spectral-analysis parameters for one stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    pub sample_rate_hz: f64,
    pub lowpass_cutoff_hz: f64,
    /// Butterworth order of the low-pass stage.
    pub lowpass_order: usize,
    pub max_repetition_run: usize,
    pub welch_segment_seconds: f64,
    pub welch_overlap_fraction: f64,
    /// Length of the analysis window each snapshot is computed over. Must
    /// hold at least one Welch segment.
    pub welch_window_seconds: f64,
    pub emit_hop_samples: usize,
    /// Frames with any channel beyond this magnitude are rejected.
    pub max_abs_microvolts: f64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 256.0,
            lowpass_cutoff_hz: 45.0,
            lowpass_order: 6,
            max_repetition_run: 8,
            welch_segment_seconds: 2.0,
            welch_overlap_fraction: 0.5,
            welch_window_seconds: 4.0,
            emit_hop_samples: 32,
            max_abs_microvolts: 5000.0,
        }
    }
}

impl StreamConfig {
    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    /// Welch segment length in samples.
    pub fn segment_len(&self) -> usize {
        (self.welch_segment_seconds * self.sample_rate_hz).round() as usize
    }

    /// Analysis window length in samples.
    pub fn window_len(&self) -> usize {
        (self.welch_window_seconds * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(ConfigError::invalid("sample_rate_hz", "must be a positive number"));
        }
        if self.nyquist_hz() < HIGHEST_BAND_EDGE_HZ {
            return Err(ConfigError::invalid(
                "sample_rate_hz",
                format!("Nyquist {} Hz is below the 40 Hz gamma edge", self.nyquist_hz()),
            ));
        }
        if !(self.lowpass_cutoff_hz.is_finite() && self.lowpass_cutoff_hz > 0.0) {
            return Err(ConfigError::invalid("lowpass_cutoff_hz", "must be a positive number"));
        }
        if self.lowpass_cutoff_hz >= self.nyquist_hz() {
            return Err(ConfigError::invalid(
                "lowpass_cutoff_hz",
                format!("{} Hz is not below Nyquist ({} Hz)", self.lowpass_cutoff_hz, self.nyquist_hz()),
            ));
        }
        if self.lowpass_order == 0 || self.lowpass_order > 12 {
            return Err(ConfigError::invalid("lowpass_order", "must be within 1..=12"));
        }
        if self.max_repetition_run == 0 {
            return Err(ConfigError::invalid("max_repetition_run", "must be positive"));
        }
        if !(self.welch_segment_seconds.is_finite() && self.welch_segment_seconds > 0.0) {
            return Err(ConfigError::invalid("welch_segment_seconds", "must be a positive number"));
        }
        if self.segment_len() < 32 {
            return Err(ConfigError::invalid(
                "welch_segment_seconds",
                format!("segment of {} samples is shorter than 32", self.segment_len()),
            ));
        }
        if !(0.0..1.0).contains(&self.welch_overlap_fraction) {
            return Err(ConfigError::invalid("welch_overlap_fraction", "must lie in [0, 1)"));
        }
        if !self.welch_window_seconds.is_finite() || self.window_len() < self.segment_len() {
            return Err(ConfigError::invalid(
                "welch_window_seconds",
                "analysis window must hold at least one Welch segment",
            ));
        }
        if self.emit_hop_samples == 0 {
            return Err(ConfigError::invalid("emit_hop_samples", "must be positive"));
        }
        if !(self.max_abs_microvolts.is_finite() && self.max_abs_microvolts > 0.0) {
            return Err(ConfigError::invalid("max_abs_microvolts", "must be a positive number"));
        }
        Ok(())
    }
}

/// Constants for entropy, the flow index, and the KPI reference formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    /// Quantization step, in µV, used to histogram samples for entropy.
    pub entropy_bin_width: f64,
    pub fsi: FsiConfig,
    pub kpi: KpiConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { entropy_bin_width: 0.5, fsi: FsiConfig::default(), kpi: KpiConfig::default() }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.entropy_bin_width.is_finite() && self.entropy_bin_width > 0.0) {
            return Err(ConfigError::invalid("entropy_bin_width", "must be a positive number"));
        }
        self.fsi.validate()?;
        self.kpi.validate()
    }
}

/// Everything a configuration file can set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub stream: StreamConfig,
    pub metrics: MetricConfig,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: EngineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.stream.validate()?;
        self.metrics.validate()
    }
}
