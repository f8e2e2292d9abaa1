use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::StreamConfig;

/// Electrode positions of a four-channel prefrontal headband.
///
/// AF7 and AF8 are required for analysis; TP9 and TP10 are optional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChannelId {
    TP9,
    AF7,
    AF8,
    TP10,
}

impl ChannelId {
    /// Canonical order, also the default argument order on the wire.
    pub const ALL: [ChannelId; 4] = [ChannelId::TP9, ChannelId::AF7, ChannelId::AF8, ChannelId::TP10];
    pub const REQUIRED: [ChannelId; 2] = [ChannelId::AF7, ChannelId::AF8];

    pub const fn index(self) -> usize {
        match self {
            ChannelId::TP9 => 0,
            ChannelId::AF7 => 1,
            ChannelId::AF8 => 2,
            ChannelId::TP10 => 3,
        }
    }

    pub const fn is_required(self) -> bool {
        matches!(self, ChannelId::AF7 | ChannelId::AF8)
    }

    pub const fn name(self) -> &'static str {
        match self {
            ChannelId::TP9 => "TP9",
            ChannelId::AF7 => "AF7",
            ChannelId::AF8 => "AF8",
            ChannelId::TP10 => "TP10",
        }
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown channel `{0}`")]
pub struct UnknownChannel(pub String);

impl FromStr for ChannelId {
    type Err = UnknownChannel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ChannelId::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownChannel(s.to_string()))
    }
}

/// One timestamped multi-channel reading in µV. `None` marks a missing value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleFrame {
    /// Seconds since session start.
    pub timestamp: f64,
    pub sequence: u64,
    pub values: [Option<f64>; 4],
}

impl SampleFrame {
    pub fn new(timestamp: f64, sequence: u64, values: [Option<f64>; 4]) -> Self {
        Self { timestamp, sequence, values }
    }

    /// Frame with every channel present, in canonical channel order.
    pub fn complete(timestamp: f64, sequence: u64, values: [f64; 4]) -> Self {
        Self::new(timestamp, sequence, values.map(Some))
    }

    pub fn get(&self, channel: ChannelId) -> Option<f64> {
        self.values[channel.index()]
    }

    pub fn set(&mut self, channel: ChannelId, value: Option<f64>) {
        self.values[channel.index()] = value;
    }

    /// A frame is valid when every required channel carries a value.
    pub fn is_valid(&self) -> bool {
        ChannelId::REQUIRED.iter().all(|c| self.get(*c).is_some())
    }
}

/// An unchecked reading whose channels are still identified by name.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFrame {
    pub timestamp: f64,
    pub sequence: u64,
    pub values: Vec<(String, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefectKind {
    #[error("timestamp {got} precedes previous timestamp {previous}")]
    NonMonotonicTimestamp { previous: f64, got: f64 },
    #[error("timestamp is not finite")]
    NonFiniteTimestamp,
    #[error("sequence {got} does not follow {previous}")]
    NonIncreasingSequence { previous: u64, got: u64 },
    #[error("{channel} value {value} µV exceeds ±{bound} µV")]
    OutOfRange { channel: ChannelId, value: f64, bound: f64 },
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel {0} appears twice")]
    DuplicateChannel(ChannelId),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("malformed frame {sequence}: {defect}")]
pub struct MalformedFrame {
    pub sequence: u64,
    pub defect: DefectKind,
}

fn check_values(frame: &mut SampleFrame, bound: f64) -> Result<(), DefectKind> {
    if !frame.timestamp.is_finite() {
        return Err(DefectKind::NonFiniteTimestamp);
    }
    for channel in ChannelId::ALL {
        match frame.get(channel) {
            // NaN is how headbands report a dropped sample.
            Some(v) if v.is_nan() => frame.set(channel, None),
            Some(v) if v.abs() > bound => {
                return Err(DefectKind::OutOfRange { channel, value: v, bound });
            }
            _ => {}
        }
    }
    Ok(())
}

/// Resolves channel names and checks the value bound. Ordering against
/// earlier frames is checked by [`FrameValidator`].
pub fn validate_frame(raw: &CandidateFrame, config: &StreamConfig) -> Result<SampleFrame, MalformedFrame> {
    resolve(raw, config.max_abs_microvolts)
}

fn resolve(raw: &CandidateFrame, bound: f64) -> Result<SampleFrame, MalformedFrame> {
    let reject = |defect| MalformedFrame { sequence: raw.sequence, defect };
    let mut frame = SampleFrame::new(raw.timestamp, raw.sequence, [None; 4]);
    let mut seen = [false; 4];
    for (name, value) in &raw.values {
        let channel: ChannelId = name.parse().map_err(|_| reject(DefectKind::UnknownChannel(name.clone())))?;
        if std::mem::replace(&mut seen[channel.index()], true) {
            return Err(reject(DefectKind::DuplicateChannel(channel)));
        }
        frame.set(channel, *value);
    }
    check_values(&mut frame, bound).map_err(reject)?;
    Ok(frame)
}

/// Stateful validator for one stream: checks values and that timestamps
/// never decrease and sequence numbers strictly increase.
#[derive(Debug, Clone)]
pub struct FrameValidator {
    bound: f64,
    last: Option<(f64, u64)>,
}

impl FrameValidator {
    pub fn new(config: &StreamConfig) -> Self {
        Self { bound: config.max_abs_microvolts, last: None }
    }

    /// Checks a typed frame in place; NaN values become missing.
    pub fn check(&mut self, frame: &mut SampleFrame) -> Result<(), MalformedFrame> {
        let sequence = frame.sequence;
        let reject = |defect| MalformedFrame { sequence, defect };
        check_values(frame, self.bound).map_err(reject)?;
        if let Some((ts, seq)) = self.last {
            if frame.sequence <= seq {
                return Err(reject(DefectKind::NonIncreasingSequence { previous: seq, got: frame.sequence }));
            }
            if frame.timestamp < ts {
                return Err(reject(DefectKind::NonMonotonicTimestamp { previous: ts, got: frame.timestamp }));
            }
        }
        self.last = Some((frame.timestamp, frame.sequence));
        Ok(())
    }

    pub fn accept(&mut self, raw: &CandidateFrame) -> Result<SampleFrame, MalformedFrame> {
        let mut frame = resolve(raw, self.bound)?;
        self.check(&mut frame)?;
        Ok(frame)
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}
