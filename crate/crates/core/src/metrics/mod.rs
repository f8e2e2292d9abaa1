//! Derived metrics: entropy, hemisphere powers, band percentages, stress,
//! KPIs, and the flow state index.

pub mod entropy;
pub mod fsi;
pub mod kpi;
pub mod power;
pub mod snapshot;

use thiserror::Error;

use crate::signal::ChannelId;

pub use entropy::{shannon_entropy, EntropyScratch, EntropyValue};
pub use fsi::{
    flow_index, flow_index_from_components, fsi_components, hemispheric_balance, triangular, FeatureVector,
    FsiComponents, FsiConfig, FsiWeights, FORMULA_VERSION,
};
pub use kpi::{kpi_set, HistoryEntry, KpiConfig, KpiHistory, KpiSet};
pub use power::{band_percentages, hemisphere_power, non_delta_total, stress, ChannelPercentages};
pub use snapshot::{assemble_snapshot, ChannelMetrics, MetricSnapshot};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("entropy needs at least one value")]
    EmptyInput,
    #[error("bin width {0} must be positive")]
    InvalidBinWidth(f64),
    #[error("all non-delta band powers are zero")]
    ZeroTotalPower,
    #[error("required channel {0} has no window")]
    MissingChannel(ChannelId),
    #[error("features are not finite")]
    NonFinite,
}
