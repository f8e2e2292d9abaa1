use serde::{Deserialize, Serialize};

use crate::config::MetricConfig;
use crate::signal::ChannelId;
use crate::spectral::BandPowers;

use super::entropy::EntropyValue;
use super::fsi::{flow_index_from_components, fsi_components, FeatureVector, FsiComponents, FORMULA_VERSION};
use super::kpi::{kpi_set, KpiHistory, KpiSet};
use super::power::{hemisphere_power, non_delta_total, stress, ChannelPercentages};
use super::MetricError;

/// Spectral and entropy results for one channel over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelMetrics {
    pub channel: ChannelId,
    pub bands: BandPowers,
    pub entropy: EntropyValue,
    pub percentages: ChannelPercentages,
}

/// Every derived value at one point in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    /// Timestamp of the last frame in the window, seconds.
    pub time: f64,
    /// Sequence number of the last frame in the window.
    pub sequence: u64,
    pub channels: Vec<ChannelMetrics>,
    /// Mean of the AF7 and AF8 percentages.
    pub frontal: ChannelPercentages,
    pub features: FeatureVector,
    pub components: FsiComponents,
    pub kpis: KpiSet,
    pub fsi: f64,
    /// Mean AF7/AF8 non-delta power, µV².
    pub total_power: f64,
    pub formula_version: String,
}

impl MetricSnapshot {
    pub fn channel(&self, channel: ChannelId) -> Option<&ChannelMetrics> {
        self.channels.iter().find(|c| c.channel == channel)
    }
}

/// Builds a snapshot from per-channel results. AF7 and AF8 must be present.
pub fn assemble_snapshot(
    time: f64,
    sequence: u64,
    channels: Vec<ChannelMetrics>,
    history: &KpiHistory,
    config: &MetricConfig,
) -> Result<MetricSnapshot, MetricError> {
    let find = |ch: ChannelId| {
        channels.iter().find(|c| c.channel == ch).copied().ok_or(MetricError::MissingChannel(ch))
    };
    let (left, right) = (find(ChannelId::AF7)?, find(ChannelId::AF8)?);
    let frontal = ChannelPercentages::mean(&left.percentages, &right.percentages);
    let features = FeatureVector {
        af7_power: hemisphere_power(&left.bands),
        af8_power: hemisphere_power(&right.bands),
        alpha_pct: frontal.alpha_pct,
        theta_pct: frontal.theta_pct,
        beta_pct: frontal.beta_pct,
        stress: stress(&frontal),
        entropy_norm: (left.entropy.normalized + right.entropy.normalized) / 2.0,
    };
    if !features.is_finite() {
        return Err(MetricError::NonFinite);
    }
    let components = fsi_components(&features, &config.fsi);
    let fsi = flow_index_from_components(&components, &config.fsi.weights);
    let total_power = (non_delta_total(&left.bands) + non_delta_total(&right.bands)) / 2.0;
    let kpis = kpi_set(&features, &frontal, total_power, history, config);
    Ok(MetricSnapshot {
        time,
        sequence,
        channels,
        frontal,
        features,
        components,
        kpis,
        fsi,
        total_power,
        formula_version: FORMULA_VERSION.to_string(),
    })
}
