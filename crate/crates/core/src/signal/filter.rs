//! Butterworth low-pass filtering as a cascade of second-order sections.
//!
//! Sections come from the bilinear transform with the cutoff pre-warped,
//! so the digital magnitude response is exactly
//! `1 / sqrt(1 + (tan(πf/fs) / tan(πfc/fs))^(2N))`.

use std::f64::consts::PI;

use crate::config::{ConfigError, StreamConfig};

use super::frame::{ChannelId, SampleFrame};

/// Second-order section in direct form II transposed, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn lowpass(k: f64, q: f64) -> Self {
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        Self { b0, b1: 2.0 * b0, b2: b0, a1: 2.0 * (k * k - 1.0) * norm, a2: (1.0 - k / q + k * k) * norm }
    }

    fn first_order_lowpass(k: f64) -> Self {
        let b0 = k / (1.0 + k);
        Self { b0, b1: b0, b2: 0.0, a1: (k - 1.0) / (k + 1.0), a2: 0.0 }
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Complex response at normalized angular frequency `w` (rad/sample),
    /// returned as (re, im).
    fn response(&self, w: f64) -> (f64, f64) {
        // H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        let d = den.0 * den.0 + den.1 * den.1;
        ((num.0 * den.0 + num.1 * den.1) / d, (num.1 * den.0 - num.0 * den.1) / d)
    }
}

/// Coefficients of an order-N Butterworth low-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthLowpass {
    sections: Vec<Biquad>,
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl ButterworthLowpass {
    pub fn design(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self, ConfigError> {
        if order == 0 {
            return Err(ConfigError::invalid("lowpass_order", "must be at least 1"));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(ConfigError::invalid(
                "lowpass_cutoff_hz",
                format!("{cutoff_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)", sample_rate_hz / 2.0),
            ));
        }
        let k = (PI * cutoff_hz / sample_rate_hz).tan();
        let n = order as f64;
        let mut sections = Vec::with_capacity(order.div_ceil(2));
        if order % 2 == 0 {
            for i in 0..order / 2 {
                let q = 1.0 / (2.0 * (PI * (2 * i + 1) as f64 / (2.0 * n)).cos());
                sections.push(Biquad::lowpass(k, q));
            }
        } else {
            sections.push(Biquad::first_order_lowpass(k));
            for i in 1..=order / 2 {
                let q = 1.0 / (2.0 * (PI * i as f64 / n).cos());
                sections.push(Biquad::lowpass(k, q));
            }
        }
        Ok(Self { sections, order, cutoff_hz, sample_rate_hz })
    }

    pub fn from_config(config: &StreamConfig) -> Result<Self, ConfigError> {
        Self::design(config.lowpass_order, config.lowpass_cutoff_hz, config.sample_rate_hz)
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    /// |H| at `freq_hz`, evaluated from the section coefficients.
    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                (re * re + im * im).sqrt()
            })
            .product()
    }

    pub fn state(&self) -> LowpassState {
        LowpassState { sections: self.sections.clone(), z: vec![[0.0; 2]; self.sections.len()], primed: false }
    }

    /// Causal filtering of a contiguous block.
    pub fn filter(&self, samples: &[f64]) -> Vec<f64> {
        let mut state = self.state();
        samples.iter().map(|&x| state.process(x)).collect()
    }

    /// Forward-backward (zero-phase) filtering of a contiguous block. The
    /// block is extended by odd reflection at both ends to damp edge
    /// transients, as is customary for offline filtering.
    pub fn filter_zero_phase(&self, samples: &[f64]) -> Vec<f64> {
        let n = samples.len();
        if n < 2 {
            return samples.to_vec();
        }
        let pad = (6 * self.order).min(n - 1);
        let (first, last) = (samples[0], samples[n - 1]);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * first - samples[i]));
        ext.extend_from_slice(samples);
        ext.extend((1..=pad).map(|i| 2.0 * last - samples[n - 1 - i]));

        let mut forward = self.filter(&ext);
        forward.reverse();
        let mut backward = self.filter(&forward);
        backward.reverse();
        backward[pad..pad + n].to_vec()
    }
}

/// Running state of a causal filter. The first sample initializes every
/// section at its steady state for that input level, so DC offsets do not
/// ring at stream start.
#[derive(Debug, Clone)]
pub struct LowpassState {
    sections: Vec<Biquad>,
    z: Vec<[f64; 2]>,
    primed: bool,
}

impl LowpassState {
    pub fn process(&mut self, x: f64) -> f64 {
        if !self.primed {
            self.prime(x);
        }
        let mut v = x;
        for (s, z) in self.sections.iter().zip(self.z.iter_mut()) {
            let y = s.b0 * v + z[0];
            z[0] = s.b1 * v - s.a1 * y + z[1];
            z[1] = s.b2 * v - s.a2 * y;
            v = y;
        }
        v
    }

    fn prime(&mut self, x: f64) {
        let mut level = x;
        for (s, z) in self.sections.iter().zip(self.z.iter_mut()) {
            let out = s.dc_gain() * level;
            z[1] = s.b2 * level - s.a2 * out;
            z[0] = s.b1 * level - s.a1 * out + z[1];
            level = out;
        }
        self.primed = true;
    }

    pub fn reset(&mut self) {
        self.z.iter_mut().for_each(|z| *z = [0.0; 2]);
        self.primed = false;
    }
}

/// Splits `frames` into runs of consecutive sequence numbers.
pub(crate) fn contiguous_runs(frames: &[SampleFrame]) -> impl Iterator<Item = &[SampleFrame]> {
    frames.chunk_by(|a, b| b.sequence == a.sequence + 1)
}

/// Applies `f` to every maximal stretch of present values of each channel
/// within each contiguous run.
fn filter_frames(frames: &[SampleFrame], f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<SampleFrame> {
    let mut out = frames.to_vec();
    let mut offset = 0;
    for run in contiguous_runs(frames) {
        for channel in ChannelId::ALL {
            let mut i = 0;
            while i < run.len() {
                if run[i].get(channel).is_none() {
                    i += 1;
                    continue;
                }
                let start = i;
                let mut values = Vec::new();
                while let Some(v) = run.get(i).and_then(|fr| fr.get(channel)) {
                    values.push(v);
                    i += 1;
                }
                for (j, y) in f(&values).into_iter().enumerate() {
                    out[offset + start + j].set(channel, Some(y));
                }
            }
        }
        offset += run.len();
    }
    out
}

/// Causal low-pass of cleaned frames. Filter state restarts at every gap
/// in the sequence numbers and at every missing value of a channel.
pub fn lowpass_filter(frames: &[SampleFrame], config: &StreamConfig) -> Result<Vec<SampleFrame>, ConfigError> {
    let design = ButterworthLowpass::from_config(config)?;
    Ok(filter_frames(frames, |x| design.filter(x)))
}

/// Zero-phase variant of [`lowpass_filter`] for offline analysis.
pub fn lowpass_filter_zero_phase(frames: &[SampleFrame], config: &StreamConfig) -> Result<Vec<SampleFrame>, ConfigError> {
    let design = ButterworthLowpass::from_config(config)?;
    Ok(filter_frames(frames, |x| design.filter_zero_phase(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed-form magnitude of the bilinear-transformed Butterworth.
    fn analytic_magnitude(order: usize, fc: f64, fs: f64, f: f64) -> f64 {
        let ratio = (PI * f / fs).tan() / (PI * fc / fs).tan();
        1.0 / (1.0 + ratio.powi(2 * order as i32)).sqrt()
    }

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    /// Steady-state output amplitude for a unit sinusoid: filters 4 s and
    /// measures the RMS of the last 2 s, scaled to amplitude.
    fn measured_gain(design: &ButterworthLowpass, fs: f64, f: f64) -> f64 {
        let n = (4.0 * fs) as usize;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * f * i as f64 / fs).sin()).collect();
        let y = design.filter(&x);
        let tail = &y[n / 2..];
        (2.0 * tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt()
    }

    #[test]
    fn coefficient_response_matches_closed_form() {
        for &(order, fc, fs) in &[(6, 45.0, 256.0), (4, 45.0, 256.0), (5, 30.0, 500.0), (1, 10.0, 256.0)] {
            let d = ButterworthLowpass::design(order, fc, fs).unwrap();
            for i in 1..40 {
                let f = i as f64 * fs / 2.0 / 41.0;
                let (got, want) = (d.magnitude(f), analytic_magnitude(order, fc, fs, f));
                assert!((got - want).abs() < 1e-9, "order {order} f {f}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn default_design_meets_attenuation_and_ripple() {
        let cfg = StreamConfig::default();
        let d = ButterworthLowpass::from_config(&cfg).unwrap();
        assert!(db(d.magnitude(1.5 * cfg.lowpass_cutoff_hz)) <= -20.0);
        for i in 0..=80 {
            let f = 0.8 * cfg.lowpass_cutoff_hz * i as f64 / 80.0;
            assert!(db(d.magnitude(f)) >= -1.0, "ripple at {f} Hz");
        }
    }

    #[test]
    fn measured_response_tracks_transfer_function() {
        let fs = 256.0;
        let d = ButterworthLowpass::design(6, 45.0, fs).unwrap();
        for i in 0..20 {
            let f = 2.0 + i as f64 * 3.0;
            let want = analytic_magnitude(6, 45.0, fs, f);
            let got = measured_gain(&d, fs, f);
            assert!((db(got) - db(want)).abs() <= 0.5, "{f} Hz: {} dB vs {} dB", db(got), db(want));
        }
    }

    #[test]
    fn sinusoid_examples() {
        let d = ButterworthLowpass::from_config(&StreamConfig::default()).unwrap();
        let pass = measured_gain(&d, 256.0, 10.0);
        assert!(db(pass).abs() <= 1.0, "10 Hz gain {pass}");
        let stop = measured_gain(&d, 256.0, 100.0);
        assert!(stop <= 0.1, "100 Hz gain {stop}");
    }

    #[test]
    fn constant_passes_unchanged() {
        let d = ButterworthLowpass::from_config(&StreamConfig::default()).unwrap();
        let y = d.filter(&vec![42.0; 600]);
        assert!(y.iter().all(|v| (v - 42.0).abs() < 1e-9));
        let y = d.filter_zero_phase(&vec![-3.0; 600]);
        assert!(y.iter().all(|v| (v + 3.0).abs() < 1e-9));
    }

    #[test]
    fn zero_phase_has_no_delay() {
        let fs = 256.0;
        let d = ButterworthLowpass::design(6, 45.0, fs).unwrap();
        let x: Vec<f64> = (0..1024).map(|i| (2.0 * PI * 5.0 * i as f64 / fs).sin()).collect();
        let y = d.filter_zero_phase(&x);
        let err = x[200..800].iter().zip(&y[200..800]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "max deviation {err}");
    }

    #[test]
    fn cutoff_above_nyquist_is_config_error() {
        let cfg = StreamConfig { lowpass_cutoff_hz: 130.0, ..Default::default() };
        assert!(lowpass_filter(&[], &cfg).is_err());
    }

    #[test]
    fn frames_filter_per_run_and_channel() {
        let cfg = StreamConfig::default();
        let d = ButterworthLowpass::from_config(&cfg).unwrap();
        let signal = |i: u64| (i as f64 * 0.37).sin() * 10.0;
        let mut frames: Vec<SampleFrame> =
            (0..100).map(|i| SampleFrame::complete(i as f64 / 256.0, i, [signal(i); 4])).collect();
        // Gap after frame 49 and a missing TP9 stretch.
        for f in frames.iter_mut().skip(50) {
            f.sequence += 5;
        }
        frames[20].set(ChannelId::TP9, None);
        let out = lowpass_filter(&frames, &cfg).unwrap();

        let a: Vec<f64> = (0..50).map(signal).collect();
        let b: Vec<f64> = (50..100).map(signal).collect();
        let want: Vec<f64> = d.filter(&a).into_iter().chain(d.filter(&b)).collect();
        for (f, w) in out.iter().zip(&want) {
            assert_eq!(f.get(ChannelId::AF7), Some(*w));
        }
        assert_eq!(out[20].get(ChannelId::TP9), None);
        assert_eq!(out[21].get(ChannelId::TP9), Some(d.filter(&[signal(21)])[0]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn filtering_is_linear(
                x in prop::collection::vec(-100.0f64..100.0, 1..300),
                a in -5.0f64..5.0,
                b in -5.0f64..5.0,
                seed in 0u64..1000,
            ) {
                let d = ButterworthLowpass::from_config(&StreamConfig::default()).unwrap();
                let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v * ((i as u64 + seed) as f64).cos()).collect();
                let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
                let (fx, fy, fm) = (d.filter(&x), d.filter(&y), d.filter(&mixed));
                let scale = x.iter().chain(&y).map(|v| v.abs()).fold(1.0, f64::max) * (a.abs() + b.abs() + 1.0);
                for i in 0..x.len() {
                    let want = a * fx[i] + b * fy[i];
                    prop_assert!((fm[i] - want).abs() <= 1e-9 * scale, "{} vs {}", fm[i], want);
                }
            }
        }
    }
}
