//! Reference definitions of the seven performance KPIs. All values lie in
//! [0, 1]:
//!
//! - fog = θ / (θ + β + γ)
//! - sharpness = (α + β_low) · (1 − stress)
//! - cognitive load = (β + γ) / (θ + α + β + γ)
//! - mental fatigue = EWMA of θ · stress over the history, divided by
//!   `fatigue_scale`
//! - stress recovery = 0.5 + (oldest stress in history − current stress)
//! - energy consumption = mean non-delta power over the history divided by
//!   the session's running peak
//! - energy efficiency = mean FSI component score / energy consumption
//!
//! Percentages are the frontal (AF7/AF8 mean) ones. The four time-dependent
//! KPIs are 0.5 while the history is empty.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, MetricConfig};

use super::fsi::{fsi_components, FeatureVector};
use super::power::ChannelPercentages;
use super::snapshot::MetricSnapshot;

const EPS: f64 = 1e-9;
const NEUTRAL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiSet {
    pub fog: f64,
    pub sharpness: f64,
    pub stress_recovery: f64,
    pub cognitive_load: f64,
    pub mental_fatigue: f64,
    pub energy_efficiency: f64,
    pub energy_consumption: f64,
}

impl KpiSet {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.fog,
            self.sharpness,
            self.stress_recovery,
            self.cognitive_load,
            self.mental_fatigue,
            self.energy_efficiency,
            self.energy_consumption,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KpiConfig {
    /// Smoothing factor of the fatigue EWMA, in (0, 1].
    pub fatigue_ewma_alpha: f64,
    /// θ·stress level that maps to full fatigue.
    pub fatigue_scale: f64,
    /// Span of the history window.
    pub history_seconds: f64,
    /// Samples between history entries. History is sampled on this fixed
    /// cadence regardless of how often snapshots are emitted.
    pub history_stride_samples: usize,
}

impl Default for KpiConfig {
    fn default() -> Self {
        Self { fatigue_ewma_alpha: 0.1, fatigue_scale: 0.25, history_seconds: 30.0, history_stride_samples: 32 }
    }
}

impl KpiConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.fatigue_ewma_alpha > 0.0 && self.fatigue_ewma_alpha <= 1.0) {
            return Err(ConfigError::invalid("kpi.fatigue_ewma_alpha", "must lie in (0, 1]"));
        }
        if !(self.fatigue_scale.is_finite() && self.fatigue_scale > 0.0) {
            return Err(ConfigError::invalid("kpi.fatigue_scale", "must be positive"));
        }
        if !(self.history_seconds.is_finite() && self.history_seconds > 0.0) {
            return Err(ConfigError::invalid("kpi.history_seconds", "must be positive"));
        }
        if self.history_stride_samples == 0 {
            return Err(ConfigError::invalid("kpi.history_stride_samples", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub time: f64,
    pub stress: f64,
    pub theta_pct: f64,
    /// Mean frontal non-delta power, µV².
    pub total_power: f64,
}

impl From<&MetricSnapshot> for HistoryEntry {
    fn from(s: &MetricSnapshot) -> Self {
        Self { time: s.time, stress: s.features.stress, theta_pct: s.features.theta_pct, total_power: s.total_power }
    }
}

/// Recent history window plus the session-wide power peak.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KpiHistory {
    entries: VecDeque<HistoryEntry>,
    session_peak_power: f64,
    span_seconds: f64,
}

impl KpiHistory {
    pub fn new(span_seconds: f64) -> Self {
        Self { entries: VecDeque::new(), session_peak_power: 0.0, span_seconds }
    }

    pub fn from_snapshots(snapshots: &[MetricSnapshot], span_seconds: f64) -> Self {
        let mut h = Self::new(span_seconds);
        snapshots.iter().for_each(|s| h.push(s.into()));
        h
    }

    /// Appends an entry and evicts entries older than the span.
    pub fn push(&mut self, entry: HistoryEntry) {
        self.session_peak_power = self.session_peak_power.max(entry.total_power);
        self.entries.push_back(entry);
        while self.entries.front().is_some_and(|e| entry.time - e.time > self.span_seconds) {
            self.entries.pop_front();
        }
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &HistoryEntry> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn session_peak_power(&self) -> f64 {
        self.session_peak_power
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    (num / den.max(EPS)).clamp(0.0, 1.0)
}

/// `current_power` is the mean frontal non-delta power of the snapshot
/// being scored.
pub fn kpi_set(
    features: &FeatureVector,
    pct: &ChannelPercentages,
    current_power: f64,
    history: &KpiHistory,
    config: &MetricConfig,
) -> KpiSet {
    let (theta, alpha, beta, gamma) = (pct.theta_pct, pct.alpha_pct, pct.beta_pct, pct.gamma_pct);
    let stress = features.stress;
    let fog = ratio(theta, theta + beta + gamma);
    let sharpness = ((alpha + pct.beta_low_pct) * (1.0 - stress)).clamp(0.0, 1.0);
    let cognitive_load = ratio(beta + gamma, theta + alpha + beta + gamma);

    let (mental_fatigue, stress_recovery, energy_consumption, energy_efficiency) = if history.is_empty() {
        (NEUTRAL, NEUTRAL, NEUTRAL, NEUTRAL)
    } else {
        let k = &config.kpi;
        let mut entries = history.entries();
        let first = entries.next().expect("non-empty history");
        let mut ewma = first.theta_pct * first.stress;
        let mut power_sum = first.total_power;
        for e in entries {
            ewma += k.fatigue_ewma_alpha * (e.theta_pct * e.stress - ewma);
            power_sum += e.total_power;
        }
        ewma += k.fatigue_ewma_alpha * (theta * stress - ewma);
        let fatigue = ratio(ewma, k.fatigue_scale);

        let recovery = (NEUTRAL + (first.stress - stress)).clamp(0.0, 1.0);

        let peak = history.session_peak_power().max(current_power);
        let mean_power = (power_sum + current_power) / (history.len() + 1) as f64;
        let consumption = ratio(mean_power, peak);

        let component_mean = fsi_components(features, &config.fsi).mean();
        let efficiency = ratio(component_mean, consumption);
        (fatigue, recovery, consumption, efficiency)
    };

    KpiSet {
        fog,
        sharpness,
        stress_recovery,
        cognitive_load,
        mental_fatigue,
        energy_efficiency,
        energy_consumption,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(pct: &ChannelPercentages, stress: f64) -> FeatureVector {
        FeatureVector {
            af7_power: 10.0,
            af8_power: 10.0,
            alpha_pct: pct.alpha_pct,
            theta_pct: pct.theta_pct,
            beta_pct: pct.beta_pct,
            stress,
            entropy_norm: 0.5,
        }
    }

    fn entry(time: f64, stress: f64) -> HistoryEntry {
        HistoryEntry { time, stress, theta_pct: 0.2, total_power: 10.0 }
    }

    #[test]
    fn neutral_input_is_in_range() {
        let pct = ChannelPercentages::new(0.2, 0.2, 0.2, 0.2, 0.2);
        let f = features(&pct, 0.5);
        let cfg = MetricConfig::default();
        let empty = kpi_set(&f, &pct, 10.0, &KpiHistory::new(30.0), &cfg);
        assert_eq!(empty.mental_fatigue, 0.5);
        assert_eq!(empty.stress_recovery, 0.5);
        assert_eq!(empty.energy_consumption, 0.5);
        assert_eq!(empty.energy_efficiency, 0.5);

        let mut flat = KpiHistory::new(30.0);
        for i in 0..50 {
            flat.push(entry(i as f64 * 0.125, 0.5));
        }
        let k = kpi_set(&f, &pct, 10.0, &flat, &cfg);
        assert!(k.as_array().iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
        assert_eq!(k.stress_recovery, 0.5);
        assert_eq!(k.energy_consumption, 1.0);
        assert!((k.fog - 0.2 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn falling_stress_means_recovery() {
        let pct = ChannelPercentages::new(0.3, 0.3, 0.3, 0.06, 0.04);
        let mut h = KpiHistory::new(30.0);
        for i in 0..20 {
            h.push(entry(i as f64, 0.8 - 0.6 * i as f64 / 19.0));
        }
        let k = kpi_set(&features(&pct, 0.2), &pct, 10.0, &h, &MetricConfig::default());
        assert!(k.stress_recovery > 0.5);

        let mut rising = KpiHistory::new(30.0);
        rising.push(entry(0.0, 0.2));
        let k = kpi_set(&features(&pct, 0.8), &pct, 10.0, &rising, &MetricConfig::default());
        assert!(k.stress_recovery < 0.5);
    }

    #[test]
    fn fast_bands_raise_cognitive_load() {
        let cfg = MetricConfig::default();
        let h = KpiHistory::new(30.0);
        let busy = ChannelPercentages::new(0.05, 0.05, 0.3, 0.3, 0.3);
        let calm = ChannelPercentages::new(0.6, 0.2, 0.1, 0.05, 0.05);
        let a = kpi_set(&features(&busy, 0.5), &busy, 1.0, &h, &cfg);
        let b = kpi_set(&features(&calm, 0.33), &calm, 1.0, &h, &cfg);
        assert!(a.cognitive_load > b.cognitive_load);
        assert!(b.fog > a.fog);
    }

    #[test]
    fn history_evicts_by_time_but_keeps_peak() {
        let mut h = KpiHistory::new(2.0);
        h.push(HistoryEntry { time: 0.0, stress: 0.1, theta_pct: 0.1, total_power: 50.0 });
        for i in 1..=10 {
            h.push(HistoryEntry { time: i as f64, stress: 0.1, theta_pct: 0.1, total_power: 5.0 });
        }
        assert_eq!(h.len(), 3);
        assert_eq!(h.session_peak_power(), 50.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn always_in_unit_interval(
                raw in prop::array::uniform5(0.0f64..1.0),
                stress in 0.0f64..=1.0,
                hist in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..1e4), 0..60),
                power in 0.0f64..1e4,
            ) {
                let s: f64 = raw.iter().sum::<f64>().max(1e-6);
                let pct = ChannelPercentages::new(raw[0] / s, raw[1] / s, raw[2] / s, raw[3] / s, raw[4] / s);
                let mut h = KpiHistory::new(30.0);
                for (i, (st, th, p)) in hist.into_iter().enumerate() {
                    h.push(HistoryEntry { time: i as f64 * 0.125, stress: st, theta_pct: th, total_power: p });
                }
                let k = kpi_set(&features(&pct, stress), &pct, power, &h, &MetricConfig::default());
                for v in k.as_array() {
                    prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
