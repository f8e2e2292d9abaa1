//! Sliding analysis windows over a frame stream.
//!
//! Windows only ever hold consecutive frames: any jump in sequence numbers
//! (dropped, rejected, or invalid frames) restarts every window, and a
//! missing value on an optional channel restarts that channel alone.

use serde::{Deserialize, Serialize};

use crate::config::StreamConfig;
use crate::signal::{ChannelId, SampleFrame};

use super::bands::{band_powers, BandPowers};
use super::welch::{Taper, WelchEstimator, WelchParams};
use super::SpectralError;

/// Fixed-capacity ring buffer whose contents are always readable as one
/// contiguous slice (every sample is written twice).
#[derive(Debug, Clone)]
pub struct SampleWindow {
    buf: Vec<f64>,
    cap: usize,
    head: usize,
    len: usize,
}

impl SampleWindow {
    pub fn new(cap: usize) -> Self {
        assert!(cap > 0);
        Self { buf: vec![0.0; 2 * cap], cap, head: 0, len: 0 }
    }

    pub fn push(&mut self, x: f64) {
        self.buf[self.head] = x;
        self.buf[self.head + self.cap] = x;
        self.head = (self.head + 1) % self.cap;
        self.len = (self.len + 1).min(self.cap);
    }

    pub fn is_full(&self) -> bool {
        self.len == self.cap
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    /// Oldest-to-newest contents.
    pub fn as_slice(&self) -> &[f64] {
        let end = self.head + self.cap;
        &self.buf[end - self.len..end]
    }

    pub fn clear(&mut self) {
        self.head = 0;
        self.len = 0;
    }
}

/// Tracks whether each incoming valid frame continues the current run.
#[derive(Debug, Clone, Default)]
pub struct Contiguity {
    last: Option<u64>,
}

impl Contiguity {
    /// Returns `false` when `sequence` does not directly follow the last
    /// observed one, i.e. a new run starts.
    pub fn observe(&mut self, sequence: u64) -> bool {
        let continues = self.last.is_some_and(|l| sequence == l.wrapping_add(1));
        self.last = Some(sequence);
        continues
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}

/// Per-channel windows advanced in lock step for the valid frames of one
/// contiguous run.
#[derive(Debug, Clone)]
pub struct ChannelWindows {
    windows: [SampleWindow; 4],
    run_len: usize,
}

impl ChannelWindows {
    pub fn new(window_len: usize) -> Self {
        Self { windows: std::array::from_fn(|_| SampleWindow::new(window_len)), run_len: 0 }
    }

    pub fn window_len(&self) -> usize {
        self.windows[0].capacity()
    }

    /// Appends one valid frame. Optional channels that are missing restart.
    pub fn push(&mut self, frame: &SampleFrame) {
        for channel in ChannelId::ALL {
            let w = &mut self.windows[channel.index()];
            match frame.get(channel) {
                Some(v) => w.push(v),
                None => w.clear(),
            }
        }
        self.run_len += 1;
    }

    /// Frames since the run started.
    pub fn run_len(&self) -> usize {
        self.run_len
    }

    /// Number of frames since the required windows first filled, if they
    /// have.
    pub fn filled_offset(&self) -> Option<usize> {
        self.run_len.checked_sub(self.window_len())
    }

    pub fn window(&self, channel: ChannelId) -> Option<&[f64]> {
        let w = &self.windows[channel.index()];
        w.is_full().then(|| w.as_slice())
    }

    pub fn reset(&mut self) {
        self.windows.iter_mut().for_each(SampleWindow::clear);
        self.run_len = 0;
    }
}

/// Band powers of every available channel for the window ending at one
/// frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSnapshot {
    pub end_time: f64,
    pub end_sequence: u64,
    pub channels: Vec<BandPowers>,
}

pub fn welch_params(config: &StreamConfig) -> WelchParams {
    WelchParams {
        sample_rate: config.sample_rate_hz,
        segment_len: config.segment_len(),
        overlap: config.welch_overlap_fraction,
        taper: Taper::Hann,
    }
}

/// Band powers for a window ending at every `hop`-th frame of each
/// contiguous run, starting with the first full window. `frames` should
/// already be cleaned and filtered; invalid frames are skipped and break
/// the run.
pub fn sliding_band_series(
    frames: &[SampleFrame],
    config: &StreamConfig,
    hop: usize,
) -> Result<Vec<BandSnapshot>, SpectralError> {
    if hop == 0 {
        return Err(SpectralError::Config("hop must be positive".into()));
    }
    let mut welch = WelchEstimator::new(welch_params(config))?;
    let mut windows = ChannelWindows::new(config.window_len());
    let mut contiguity = Contiguity::default();
    let mut out = Vec::new();
    for frame in frames.iter().filter(|f| f.is_valid()) {
        if !contiguity.observe(frame.sequence) {
            windows.reset();
        }
        windows.push(frame);
        if !windows.filled_offset().is_some_and(|k| k % hop == 0) {
            continue;
        }
        let mut channels = Vec::with_capacity(4);
        for channel in ChannelId::ALL {
            if let Some(w) = windows.window(channel) {
                channels.push(band_powers(&welch.estimate(w)?, channel, frame.timestamp)?);
            }
        }
        out.push(BandSnapshot { end_time: frame.timestamp, end_sequence: frame.sequence, channels });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{band_powers, welch_psd};
    use std::f64::consts::PI;

    fn tone_frames(n: usize, fs: f64) -> Vec<SampleFrame> {
        (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                let v = |f: f64, p: f64| 10.0 * (2.0 * PI * f * t + p).sin() + 2.0 * (2.0 * PI * 25.0 * t).cos();
                SampleFrame::complete(t, i as u64, [v(6.0, 0.0), v(10.0, 0.3), v(11.0, 1.0), v(20.0, 2.0)])
            })
            .collect()
    }

    fn small_config() -> StreamConfig {
        StreamConfig { welch_segment_seconds: 0.5, welch_window_seconds: 1.0, ..Default::default() }
    }

    #[test]
    fn ring_window_is_contiguous_and_ordered() {
        let mut w = SampleWindow::new(4);
        for i in 0..3 {
            w.push(i as f64);
        }
        assert_eq!(w.as_slice(), &[0.0, 1.0, 2.0]);
        for i in 3..10 {
            w.push(i as f64);
        }
        assert!(w.is_full());
        assert_eq!(w.as_slice(), &[6.0, 7.0, 8.0, 9.0]);
        w.clear();
        assert!(w.is_empty());
    }

    #[test]
    fn hop_one_emits_every_full_window() {
        let cfg = small_config();
        let frames = tone_frames(400, 256.0);
        let series = sliding_band_series(&frames, &cfg, 1).unwrap();
        assert_eq!(series.len(), 400 - cfg.window_len() + 1);
        assert!(series.iter().all(|s| s.channels.len() == 4));
    }

    #[test]
    fn matches_direct_welch_on_each_window() {
        let cfg = small_config();
        let frames = tone_frames(340, 256.0);
        let w = cfg.window_len();
        let series = sliding_band_series(&frames, &cfg, 7).unwrap();
        for snap in &series {
            let end = snap.end_sequence as usize;
            let af8: Vec<f64> = frames[end + 1 - w..=end].iter().map(|f| f.get(ChannelId::AF8).unwrap()).collect();
            let psd = welch_psd(&af8, 256.0, cfg.segment_len(), 0.5, Taper::Hann).unwrap();
            let want = band_powers(&psd, ChannelId::AF8, snap.end_time).unwrap();
            assert_eq!(snap.channels[2], want);
        }
    }

    #[test]
    fn streaming_hop_equals_subsampled_batch() {
        let cfg = small_config();
        let frames = tone_frames(700, 256.0);
        let exact = sliding_band_series(&frames, &cfg, 1).unwrap();
        let coarse = sliding_band_series(&frames, &cfg, 32).unwrap();
        let sub: Vec<_> = exact.iter().step_by(32).cloned().collect();
        assert_eq!(sub.len(), coarse.len());
        for (a, b) in sub.iter().zip(&coarse) {
            assert_eq!(a.end_sequence, b.end_sequence);
            for (x, y) in a.channels.iter().zip(&b.channels) {
                for (p, q) in x.as_array().iter().zip(y.as_array()) {
                    assert!((p - q).abs() <= 1e-12 * p.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn gap_restarts_the_series() {
        let cfg = small_config();
        let w = cfg.window_len();
        let mut frames = tone_frames(1000, 256.0);
        // Remove a stretch longer than one window from the middle.
        frames.drain(400..400 + w + 10);
        let series = sliding_band_series(&frames, &cfg, 1).unwrap();
        assert_eq!(series.len(), (400 - w + 1) + (frames.len() - 400 - w + 1));
        for s in &series {
            let start = s.end_sequence + 1 - w as u64;
            assert!(s.end_sequence < 400 || start >= 400 + w as u64 + 10, "window spans the gap");
        }
    }

    #[test]
    fn missing_optional_channel_is_omitted_until_refilled() {
        let cfg = small_config();
        let mut frames = tone_frames(400, 256.0);
        frames[300].set(ChannelId::TP10, None);
        let series = sliding_band_series(&frames, &cfg, 1).unwrap();
        let w = cfg.window_len();
        for s in &series {
            let has_tp10 = s.channels.iter().any(|b| b.channel == ChannelId::TP10);
            let expect = s.end_sequence < 300 || s.end_sequence >= 300 + w as u64;
            assert_eq!(has_tp10, expect, "at {}", s.end_sequence);
        }
    }

    #[test]
    fn nothing_before_window_fills() {
        let cfg = small_config();
        let frames = tone_frames(cfg.window_len() - 1, 256.0);
        assert!(sliding_band_series(&frames, &cfg, 1).unwrap().is_empty());
    }
}
