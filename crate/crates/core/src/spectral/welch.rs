//! Welch power spectral density: mean-removed, tapered, overlapping
//! segments whose one-sided periodograms are averaged.
//!
//! Periodograms are scaled by `1 / (fs · Σw²)` so that the PSD integrates
//! (rectangle rule over the bin grid) to the variance of the segment.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Window function applied to each segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taper {
    #[default]
    Hann,
    Rectangular,
}

impl Taper {
    /// Periodic form of the window, as used for spectral estimation.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Taper::Hann => (0..len).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos()).collect(),
            Taper::Rectangular => vec![1.0; len],
        }
    }
}

/// One-sided PSD on a uniform grid from 0 to Nyquist.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Bin centers in Hz.
    pub freqs: Vec<f64>,
    /// Density in µV²/Hz.
    pub power: Vec<f64>,
    pub segment_count: usize,
}

impl PsdEstimate {
    /// Bin spacing in Hz.
    pub fn resolution(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    pub fn nyquist(&self) -> f64 {
        self.freqs.last().copied().unwrap_or(0.0)
    }

    /// Rectangle-rule integral over the whole grid, in µV².
    pub fn total_power(&self) -> f64 {
        let df = self.resolution();
        self.power.iter().map(|p| p * df).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchParams {
    pub sample_rate: f64,
    pub segment_len: usize,
    /// Fraction of each segment shared with the next, in [0, 1).
    pub overlap: f64,
    pub taper: Taper,
}

impl WelchParams {
    /// Distance between successive segment starts.
    pub fn step(&self) -> usize {
        self.segment_len - (self.overlap * self.segment_len as f64).floor() as usize
    }
}

/// Reusable Welch estimator holding an FFT plan and scratch buffers.
pub struct WelchEstimator {
    params: WelchParams,
    fft: Arc<dyn Fft<f64>>,
    taper: Vec<f64>,
    scale: f64,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    accum: Vec<f64>,
}

impl std::fmt::Debug for WelchEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WelchEstimator").field("params", &self.params).finish_non_exhaustive()
    }
}

impl WelchEstimator {
    pub fn new(params: WelchParams) -> Result<Self, SpectralError> {
        if !(params.sample_rate.is_finite() && params.sample_rate > 0.0) {
            return Err(SpectralError::Config("sample rate must be positive".into()));
        }
        if params.segment_len < 2 {
            return Err(SpectralError::Config("segment length must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&params.overlap) {
            return Err(SpectralError::Config(format!("overlap {} outside [0, 1)", params.overlap)));
        }
        let n = params.segment_len;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let taper = params.taper.coefficients(n);
        let window_energy: f64 = taper.iter().map(|w| w * w).sum();
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            params,
            fft,
            taper,
            scale: 1.0 / (params.sample_rate * window_energy),
            buf: vec![Complex::default(); n],
            scratch,
            accum: vec![0.0; n / 2 + 1],
        })
    }

    pub fn params(&self) -> &WelchParams {
        &self.params
    }

    pub fn estimate(&mut self, samples: &[f64]) -> Result<PsdEstimate, SpectralError> {
        let n = self.params.segment_len;
        if samples.len() < n {
            return Err(SpectralError::WindowTooShort { needed: n, got: samples.len() });
        }
        let step = self.params.step();
        let bins = n / 2 + 1;
        self.accum.iter_mut().for_each(|a| *a = 0.0);

        let mut segments = 0;
        let mut start = 0;
        while start + n <= samples.len() {
            let seg = &samples[start..start + n];
            let mean = seg.iter().sum::<f64>() / n as f64;
            for ((c, &x), &w) in self.buf.iter_mut().zip(seg).zip(&self.taper) {
                *c = Complex::new((x - mean) * w, 0.0);
            }
            self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
            for (a, c) in self.accum.iter_mut().zip(&self.buf[..bins]) {
                *a += c.norm_sqr();
            }
            segments += 1;
            start += step;
        }

        let norm = self.scale / segments as f64;
        let power = self
            .accum
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                // Interior bins fold in their negative-frequency twin.
                let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) { 1.0 } else { 2.0 };
                a * norm * one_sided
            })
            .collect();
        let df = self.params.sample_rate / n as f64;
        let freqs = (0..bins).map(|k| k as f64 * df).collect();
        Ok(PsdEstimate { freqs, power, segment_count: segments })
    }
}

/// One-shot Welch estimate; see [`WelchEstimator`] for repeated use.
pub fn welch_psd(
    window: &[f64],
    sample_rate: f64,
    segment_len: usize,
    overlap: f64,
    taper: Taper,
) -> Result<PsdEstimate, SpectralError> {
    WelchEstimator::new(WelchParams { sample_rate, segment_len, overlap, taper })?.estimate(window)
}
