use std::fmt;

use serde::{Deserialize, Serialize};

use crate::signal::ChannelId;

use super::welch::PsdEstimate;
use super::SpectralError;

/// Canonical EEG frequency bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Delta,
    Theta,
    Alpha,
    BetaLow,
    BetaHigh,
    Gamma,
}

impl Band {
    pub const ALL: [Band; 6] = [Band::Delta, Band::Theta, Band::Alpha, Band::BetaLow, Band::BetaHigh, Band::Gamma];
    pub const NON_DELTA: [Band; 5] = [Band::Theta, Band::Alpha, Band::BetaLow, Band::BetaHigh, Band::Gamma];

    pub const fn lo(self) -> f64 {
        match self {
            Band::Delta => 0.5,
            Band::Theta => 4.0,
            Band::Alpha => 8.0,
            Band::BetaLow => 13.0,
            Band::BetaHigh => 22.0,
            Band::Gamma => 32.0,
        }
    }

    pub const fn hi(self) -> f64 {
        match self {
            Band::Delta => 4.0,
            Band::Theta => 8.0,
            Band::Alpha => 13.0,
            Band::BetaLow => 22.0,
            Band::BetaHigh => 32.0,
            Band::Gamma => 40.0,
        }
    }

    /// Half-open `[lo, hi)` membership, except gamma which includes 40 Hz.
    pub fn contains(self, freq: f64) -> bool {
        match self {
            Band::Gamma => (self.lo()..=self.hi()).contains(&freq),
            _ => (self.lo()..self.hi()).contains(&freq),
        }
    }

    /// Band a frequency falls in, if any.
    pub fn of(freq: f64) -> Option<Band> {
        Band::ALL.into_iter().find(|b| b.contains(freq))
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Band::Delta => "delta",
            Band::Theta => "theta",
            Band::Alpha => "alpha",
            Band::BetaLow => "beta_low",
            Band::BetaHigh => "beta_high",
            Band::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Absolute per-band power (µV²) of one channel over one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPowers {
    pub channel: ChannelId,
    pub window_end_time: f64,
    pub delta: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta_low: f64,
    pub beta_high: f64,
    pub gamma: f64,
}

impl BandPowers {
    pub fn from_array(channel: ChannelId, window_end_time: f64, p: [f64; 6]) -> Self {
        Self {
            channel,
            window_end_time,
            delta: p[0],
            theta: p[1],
            alpha: p[2],
            beta_low: p[3],
            beta_high: p[4],
            gamma: p[5],
        }
    }

    pub fn get(&self, band: Band) -> f64 {
        self.as_array()[band.index()]
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.delta, self.theta, self.alpha, self.beta_low, self.beta_high, self.gamma]
    }

    /// Theta, alpha, beta low, beta high, gamma.
    pub fn non_delta(&self) -> [f64; 5] {
        [self.theta, self.alpha, self.beta_low, self.beta_high, self.gamma]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_array(self.channel, self.window_end_time, self.as_array().map(|p| p * c))
    }
}

/// Six band integrals plus everything outside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPartition {
    pub bands: [f64; 6],
    /// Power below 0.5 Hz and above 40 Hz.
    pub residual: f64,
}

impl BandPartition {
    pub fn total(&self) -> f64 {
        self.bands.iter().sum::<f64>() + self.residual
    }
}

fn check_range(psd: &PsdEstimate, band: Band) -> Result<(), SpectralError> {
    if band.hi() > psd.nyquist() {
        return Err(SpectralError::BandOutOfRange { band, nyquist: psd.nyquist() });
    }
    Ok(())
}

/// Rectangle-rule integral of the PSD over the bins whose centers lie in
/// `band`.
pub fn band_power(psd: &PsdEstimate, band: Band) -> Result<f64, SpectralError> {
    check_range(psd, band)?;
    let df = psd.resolution();
    Ok(psd.freqs.iter().zip(&psd.power).filter(|(f, _)| band.contains(**f)).map(|(_, p)| p * df).sum())
}

/// Assigns every bin to exactly one band or to the residual.
pub fn band_partition(psd: &PsdEstimate) -> Result<BandPartition, SpectralError> {
    check_range(psd, Band::Gamma)?;
    let df = psd.resolution();
    let mut out = BandPartition { bands: [0.0; 6], residual: 0.0 };
    for (f, p) in psd.freqs.iter().zip(&psd.power) {
        match Band::of(*f) {
            Some(b) => out.bands[b.index()] += p * df,
            None => out.residual += p * df,
        }
    }
    Ok(out)
}

pub fn band_powers(psd: &PsdEstimate, channel: ChannelId, window_end_time: f64) -> Result<BandPowers, SpectralError> {
    Ok(BandPowers::from_array(channel, window_end_time, band_partition(psd)?.bands))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{welch_psd, Taper};
    use std::f64::consts::PI;

    fn spike_psd(at: f64) -> PsdEstimate {
        let freqs: Vec<f64> = (0..=256).map(|k| k as f64 * 0.5).collect();
        let power = freqs.iter().map(|f| if *f == at { 3.0 } else { 0.0 }).collect();
        PsdEstimate { freqs, power, segment_count: 1 }
    }

    #[test]
    fn edges_match_table() {
        let edges: Vec<(f64, f64)> = Band::ALL.iter().map(|b| (b.lo(), b.hi())).collect();
        assert_eq!(
            edges,
            vec![(0.5, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 22.0), (22.0, 32.0), (32.0, 40.0)]
        );
        for w in Band::ALL.windows(2) {
            assert_eq!(w[0].hi(), w[1].lo());
        }
        assert_eq!(Band::of(8.0), Some(Band::Alpha));
        assert_eq!(Band::of(13.0), Some(Band::BetaLow));
        assert_eq!(Band::of(40.0), Some(Band::Gamma));
        assert_eq!(Band::of(40.5), None);
        assert_eq!(Band::of(0.25), None);
    }

    #[test]
    fn single_bin_lands_in_alpha() {
        let psd = spike_psd(10.0);
        assert_eq!(band_power(&psd, Band::Alpha).unwrap(), 1.5);
        assert_eq!(band_power(&psd, Band::Theta).unwrap(), 0.0);
    }

    #[test]
    fn partition_sums_to_total() {
        let freqs: Vec<f64> = (0..=256).map(|k| k as f64 * 0.5).collect();
        let power: Vec<f64> = freqs.iter().map(|f| 1.0 / (1.0 + f * f) + 0.01 * (f * 0.3).sin().abs()).collect();
        let psd = PsdEstimate { freqs, power, segment_count: 1 };
        let part = band_partition(&psd).unwrap();
        let total = psd.total_power();
        assert!((part.total() - total).abs() <= 1e-9 * total);
        for b in Band::ALL {
            assert_eq!(part.bands[b.index()], band_power(&psd, b).unwrap());
        }
    }

    #[test]
    fn ten_hz_tone_dominates_alpha() {
        let fs = 256.0;
        let x: Vec<f64> = (0..1024).map(|i| (2.0 * PI * 10.0 * i as f64 / fs).sin()).collect();
        let psd = welch_psd(&x, fs, 512, 0.5, Taper::Hann).unwrap();
        let bp = band_powers(&psd, ChannelId::AF7, 4.0).unwrap();
        for b in Band::ALL {
            if b != Band::Alpha {
                assert!(bp.alpha >= 20.0 * bp.get(b), "{b}: {}", bp.get(b));
            }
        }
    }

    #[test]
    fn band_beyond_nyquist_is_rejected() {
        let freqs: Vec<f64> = (0..=32).map(|k| k as f64).collect();
        let psd = PsdEstimate { power: vec![0.0; freqs.len()], freqs, segment_count: 1 };
        assert!(matches!(band_power(&psd, Band::Gamma), Err(SpectralError::BandOutOfRange { band: Band::Gamma, .. })));
        assert!(band_power(&psd, Band::Alpha).is_ok());
    }
}
