//! Hand-built snapshots for tests and demos that need a metric series
//! without running the signal chain.

use crate::config::MetricConfig;
use crate::metrics::{
    assemble_snapshot, band_percentages, ChannelMetrics, EntropyValue, KpiHistory, MetricSnapshot,
};
use crate::signal::ChannelId;
use crate::spectral::BandPowers;

/// Snapshot assembled from explicit band powers for AF7 and AF8, with a
/// fixed normalized entropy.
pub fn snapshot_from_bands(time: f64, sequence: u64, af7: [f64; 6], af8: [f64; 6], entropy_norm: f64) -> MetricSnapshot {
    let channels = [(ChannelId::AF7, af7), (ChannelId::AF8, af8)]
        .into_iter()
        .map(|(channel, p)| {
            let bands = BandPowers::from_array(channel, time, p);
            ChannelMetrics {
                channel,
                bands,
                entropy: EntropyValue {
                    bits: entropy_norm * 4.0,
                    normalized: entropy_norm,
                    bin_width: 0.5,
                    sample_count: 1024,
                    occupied_bins: 16,
                },
                percentages: band_percentages(&bands).expect("fixture bands carry non-delta power"),
            }
        })
        .collect();
    assemble_snapshot(time, sequence, channels, &KpiHistory::new(30.0), &MetricConfig::default())
        .expect("fixture snapshot is well formed")
}

/// A neutral snapshot whose `fsi` field is overwritten with `fsi`.
pub fn snapshot_with_fsi(time: f64, fsi: f64) -> MetricSnapshot {
    let p = [1.0, 2.0, 2.0, 1.5, 1.0, 0.5];
    let mut s = snapshot_from_bands(time, (time * 256.0) as u64, p, p, 0.5);
    s.fsi = fsi;
    s
}
