//! Paced playback of recorded frames.

use std::fmt;
use std::str::FromStr;
use std::thread;
use std::time::{Duration, Instant};

use flowstate_core::signal::SampleFrame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    /// No pacing.
    Max,
    /// Recorded inter-frame gaps divided by this factor.
    Factor(f64),
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Max => f.write_str("max"),
            Self::Factor(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Speed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("max") {
            return Ok(Self::Max);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Self::Factor(v)),
            _ => Err(format!("speed must be a positive number or \"max\", got {s:?}")),
        }
    }
}

/// Iterator that yields each frame no earlier than its scaled offset from
/// the first frame. Deadlines are absolute, so sleep overshoot does not
/// accumulate.
pub struct Replay<I> {
    frames: I,
    speed: Speed,
    origin: Option<(Instant, f64)>,
}

pub fn replay<I: IntoIterator<Item = SampleFrame>>(frames: I, speed: Speed) -> Replay<I::IntoIter> {
    Replay { frames: frames.into_iter(), speed, origin: None }
}

impl<I: Iterator<Item = SampleFrame>> Iterator for Replay<I> {
    type Item = SampleFrame;

    fn next(&mut self) -> Option<SampleFrame> {
        let frame = self.frames.next()?;
        if let Speed::Factor(speed) = self.speed {
            let (start, t0) = *self.origin.get_or_insert_with(|| (Instant::now(), frame.timestamp));
            let offset = ((frame.timestamp - t0) / speed).max(0.0);
            let deadline = start + Duration::from_secs_f64(offset);
            let now = Instant::now();
            if deadline > now {
                thread::sleep(deadline - now);
            }
        }
        Some(frame)
    }
}
