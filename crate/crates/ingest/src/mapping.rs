//! Turning OSC messages into sample frames.

use std::fmt;
use std::str::FromStr;

use flowstate_core::signal::{ChannelId, SampleFrame};
use thiserror::Error;

use crate::osc::{OscArg, OscMessage};

/// Which address carries EEG and which argument feeds which channel.
/// `None` entries consume an argument without using it (e.g. an AUX
/// electrode some senders append).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMapping {
    pub address: String,
    pub order: Vec<Option<ChannelId>>,
}

impl Default for ChannelMapping {
    fn default() -> Self {
        Self { address: "/eeg".into(), order: ChannelId::ALL.map(Some).to_vec() }
    }
}

impl fmt::Display for ChannelMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.order.iter().map(|c| c.map_or("_", |c| c.name())).collect();
        write!(f, "{}:{}", self.address, names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid channel mapping {0:?}; expected e.g. /eeg:TP9,AF7,AF8,TP10")]
pub struct MappingParseError(String);

impl FromStr for ChannelMapping {
    type Err = MappingParseError;

    /// `"/eeg:TP9,AF7,AF8,TP10,_"`; the address part is optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || MappingParseError(s.to_string());
        let (address, list) = match s.split_once(':') {
            Some((a, l)) => (a.trim().to_string(), l),
            None => ("/eeg".to_string(), s),
        };
        if !address.starts_with('/') {
            return Err(bad());
        }
        let order = list
            .split(',')
            .map(|name| match name.trim() {
                "_" | "" => Ok(None),
                n => n.parse::<ChannelId>().map(Some).map_err(|_| bad()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = [false; 4];
        for ch in order.iter().flatten() {
            if std::mem::replace(&mut seen[ch.index()], true) {
                return Err(bad());
            }
        }
        if !seen[ChannelId::AF7.index()] || !seen[ChannelId::AF8.index()] {
            return Err(bad());
        }
        Ok(Self { address, order })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("{address} carries {got} arguments, mapping expects {want}")]
    ArityMismatch { address: String, got: usize, want: usize },
    #[error("argument {index} of {address} has non-numeric type '{tag}'")]
    NonNumeric { address: String, index: usize, tag: char },
}

/// Converts one message. Returns `Ok(None)` for addresses other than the
/// mapped one. NaN arguments become missing values.
pub fn osc_to_frame(
    msg: &OscMessage,
    mapping: &ChannelMapping,
    timestamp: f64,
    sequence: u64,
) -> Result<Option<SampleFrame>, FrameError> {
    if msg.address != mapping.address {
        return Ok(None);
    }
    if msg.args.len() != mapping.order.len() {
        return Err(FrameError::ArityMismatch {
            address: msg.address.clone(),
            got: msg.args.len(),
            want: mapping.order.len(),
        });
    }
    let mut frame = SampleFrame::new(timestamp, sequence, [None; 4]);
    for (index, (arg, channel)) in msg.args.iter().zip(&mapping.order).enumerate() {
        let value = match arg {
            OscArg::Nil => None,
            a => match a.as_f64() {
                Some(v) => Some(v).filter(|v| !v.is_nan()),
                None => {
                    return Err(FrameError::NonNumeric { address: msg.address.clone(), index, tag: a.tag() });
                }
            },
        };
        if let Some(ch) = channel {
            frame.set(*ch, value);
        }
    }
    Ok(Some(frame))
}
