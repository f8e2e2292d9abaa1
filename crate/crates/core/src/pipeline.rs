//! The full per-frame analysis chain: validation, repetition masking,
//! low-pass filtering, sliding windows, Welch band powers, entropy, and
//! metric assembly.
//!
//! Streaming and batch use the same [`Pipeline`]; only the hop differs.
//! Snapshots fall on window positions `k · hop` past the first full window
//! of each contiguous run, and the KPI history is sampled on its own fixed
//! stride, so a hop-1 run subsampled every `hop` frames reproduces a
//! streaming run exactly.

use thiserror::Error;

use crate::config::{ConfigError, EngineConfig};
use crate::metrics::{
    assemble_snapshot, band_percentages, EntropyScratch, EntropyValue, HistoryEntry, KpiHistory, MetricError,
    MetricSnapshot,
};
use crate::metrics::snapshot::ChannelMetrics;
use crate::signal::{
    drop_missing, lowpass_filter, lowpass_filter_zero_phase, remove_repetition_runs, ButterworthLowpass, ChannelId,
    FrameValidator, LowpassState, MalformedFrame, RepetitionTracker, SampleFrame,
};
use crate::spectral::{band_powers, welch_params, ChannelWindows, Contiguity, SpectralError, WelchEstimator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Running counters. All are monotone over the pipeline's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PipelineStats {
    pub frames_in: u64,
    pub rejected: u64,
    pub masked_values: u64,
    pub invalid_frames: u64,
    pub runs_started: u64,
    pub snapshots: u64,
    pub skipped_zero_power: u64,
}

pub struct Pipeline {
    config: EngineConfig,
    hop: usize,
    prefiltered: bool,
    validator: FrameValidator,
    repetitions: RepetitionTracker,
    filters: [LowpassState; 4],
    windows: ChannelWindows,
    contiguity: Contiguity,
    welch: WelchEstimator,
    entropy: EntropyScratch,
    history: KpiHistory,
    stats: PipelineStats,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline").field("hop", &self.hop).field("stats", &self.stats).finish_non_exhaustive()
    }
}

impl Pipeline {
    /// Streaming pipeline emitting every `emit_hop_samples` frames.
    pub fn new(config: &EngineConfig) -> Result<Self, PipelineError> {
        Self::with_hop(config, config.stream.emit_hop_samples)
    }

    pub fn with_hop(config: &EngineConfig, hop: usize) -> Result<Self, PipelineError> {
        config.validate()?;
        if hop == 0 {
            return Err(ConfigError::invalid("hop", "must be positive").into());
        }
        let design = ButterworthLowpass::from_config(&config.stream)?;
        Ok(Self {
            hop,
            prefiltered: false,
            validator: FrameValidator::new(&config.stream),
            repetitions: RepetitionTracker::new(config.stream.max_repetition_run),
            filters: std::array::from_fn(|_| design.state()),
            windows: ChannelWindows::new(config.stream.window_len()),
            contiguity: Contiguity::default(),
            welch: WelchEstimator::new(welch_params(&config.stream))?,
            entropy: EntropyScratch::default(),
            history: KpiHistory::new(config.metrics.kpi.history_seconds),
            stats: PipelineStats::default(),
            config: config.clone(),
        })
    }

    /// Pipeline for frames that were already validated, cleaned, and
    /// filtered (e.g. offline zero-phase filtering).
    fn prefiltered(config: &EngineConfig, hop: usize) -> Result<Self, PipelineError> {
        let mut p = Self::with_hop(config, hop)?;
        p.prefiltered = true;
        Ok(p)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn stats(&self) -> PipelineStats {
        self.stats
    }

    /// Feeds one frame. Returns a snapshot when one falls due, or the
    /// rejection if the frame is malformed.
    pub fn push(&mut self, mut frame: SampleFrame) -> Result<Option<MetricSnapshot>, MalformedFrame> {
        self.stats.frames_in += 1;
        if !self.prefiltered {
            if let Err(e) = self.validator.check(&mut frame) {
                self.stats.rejected += 1;
                return Err(e);
            }
            self.stats.masked_values += self.repetitions.apply(&mut frame) as u64;
        }
        if !frame.is_valid() {
            self.stats.invalid_frames += 1;
            return Ok(None);
        }
        if !self.contiguity.observe(frame.sequence) {
            self.windows.reset();
            self.filters.iter_mut().for_each(LowpassState::reset);
            self.stats.runs_started += 1;
        }
        if !self.prefiltered {
            for channel in ChannelId::ALL {
                let state = &mut self.filters[channel.index()];
                match frame.get(channel) {
                    Some(v) => frame.set(channel, Some(state.process(v))),
                    None => state.reset(),
                }
            }
        }
        self.windows.push(&frame);

        let Some(offset) = self.windows.filled_offset() else {
            return Ok(None);
        };
        let emit = offset % self.hop == 0;
        let record = offset % self.config.metrics.kpi.history_stride_samples == 0;
        if !emit && !record {
            return Ok(None);
        }
        let snapshot = match self.compute(&frame) {
            Ok(s) => s,
            Err(_) => {
                self.stats.skipped_zero_power += 1;
                return Ok(None);
            }
        };
        if record {
            self.history.push(HistoryEntry::from(&snapshot));
        }
        if !emit {
            return Ok(None);
        }
        self.stats.snapshots += 1;
        Ok(Some(snapshot))
    }

    fn compute(&mut self, last: &SampleFrame) -> Result<MetricSnapshot, MetricError> {
        let bin_width = self.config.metrics.entropy_bin_width;
        let mut channels = Vec::with_capacity(4);
        for channel in ChannelId::ALL {
            let Some(window) = self.windows.window(channel) else { continue };
            let psd = self.welch.estimate(window).expect("window holds a full segment");
            let bands = band_powers(&psd, channel, last.timestamp).expect("config keeps bands below Nyquist");
            let percentages = match band_percentages(&bands) {
                Ok(p) => p,
                Err(e) if channel.is_required() => return Err(e),
                Err(_) => continue,
            };
            let entropy = self.entropy.compute(window, bin_width)?;
            channels.push(ChannelMetrics { channel, bands, entropy, percentages });
        }
        assemble_snapshot(last.timestamp, last.sequence, channels, &self.history, &self.config.metrics)
    }
}

/// Result of a batch run.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub snapshots: Vec<MetricSnapshot>,
    pub rejected: Vec<MalformedFrame>,
    pub stats: PipelineStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Frames between snapshots; 1 reproduces every window position.
    pub hop: usize,
    /// Forward-backward filtering instead of the causal filter.
    pub zero_phase: bool,
}

impl BatchOptions {
    pub fn streaming(config: &EngineConfig) -> Self {
        Self { hop: config.stream.emit_hop_samples, zero_phase: false }
    }

    pub fn exact() -> Self {
        Self { hop: 1, zero_phase: false }
    }
}

/// Runs a whole recording through the pipeline. Deterministic: no clock
/// or randomness is involved.
pub fn run_batch(frames: &[SampleFrame], config: &EngineConfig, options: BatchOptions) -> Result<BatchOutput, PipelineError> {
    if !options.zero_phase {
        let mut pipeline = Pipeline::with_hop(config, options.hop)?;
        let mut snapshots = Vec::new();
        let mut rejected = Vec::new();
        for frame in frames {
            match pipeline.push(*frame) {
                Ok(Some(s)) => snapshots.push(s),
                Ok(None) => {}
                Err(e) => rejected.push(e),
            }
        }
        return Ok(BatchOutput { snapshots, rejected, stats: pipeline.stats() });
    }

    let (accepted, rejected) = validate_all(frames, config);
    let cleaned = remove_repetition_runs(&accepted, config.stream.max_repetition_run);
    let masked: u64 = accepted
        .iter()
        .zip(&cleaned)
        .map(|(a, b)| a.values.iter().zip(&b.values).filter(|(x, y)| x != y).count() as u64)
        .sum();
    let filtered = lowpass_filter_zero_phase(&drop_missing(&cleaned), &config.stream)?;
    let mut pipeline = Pipeline::prefiltered(config, options.hop)?;
    let snapshots: Vec<MetricSnapshot> =
        filtered.into_iter().filter_map(|f| pipeline.push(f).ok().flatten()).collect();
    let mut stats = pipeline.stats();
    stats.frames_in = frames.len() as u64;
    stats.rejected = rejected.len() as u64;
    stats.masked_values = masked;
    stats.invalid_frames = cleaned.iter().filter(|f| !f.is_valid()).count() as u64;
    Ok(BatchOutput { snapshots, rejected, stats })
}

fn validate_all(frames: &[SampleFrame], config: &EngineConfig) -> (Vec<SampleFrame>, Vec<MalformedFrame>) {
    let mut validator = FrameValidator::new(&config.stream);
    let mut accepted = Vec::with_capacity(frames.len());
    let mut rejected = Vec::new();
    for frame in frames {
        let mut f = *frame;
        match validator.check(&mut f) {
            Ok(()) => accepted.push(f),
            Err(e) => rejected.push(e),
        }
    }
    (accepted, rejected)
}

/// Entropy of each channel's entire cleaned, filtered column.
pub fn whole_column_entropy(
    frames: &[SampleFrame],
    config: &EngineConfig,
) -> Result<Vec<(ChannelId, EntropyValue)>, PipelineError> {
    let (accepted, _) = validate_all(frames, config);
    let cleaned = drop_missing(&remove_repetition_runs(&accepted, config.stream.max_repetition_run));
    let filtered = lowpass_filter(&cleaned, &config.stream)?;
    let mut scratch = EntropyScratch::default();
    let mut out = Vec::new();
    for channel in ChannelId::ALL {
        let column: Vec<f64> = filtered.iter().filter_map(|f| f.get(channel)).collect();
        if let Ok(e) = scratch.compute(&column, config.metrics.entropy_bin_width) {
            out.push((channel, e));
        }
    }
    Ok(out)
}
