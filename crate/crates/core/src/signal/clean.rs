//! Removal of stuck-value runs and frames lacking required channels.
//!
//! Repetition runs are tracked per channel. When a run on a channel grows
//! past `max_run` identical values, the surplus values are masked as
//! missing: on a required channel that invalidates the frame, on an
//! optional channel only that channel is dropped for the frame. Masked
//! values break runs, which makes the operation idempotent.

use super::frame::{ChannelId, SampleFrame};

/// Streaming form of [`remove_repetition_runs`].
#[derive(Debug, Clone)]
pub struct RepetitionTracker {
    max_run: usize,
    last: [Option<f64>; 4],
    run: [usize; 4],
}

impl RepetitionTracker {
    pub fn new(max_run: usize) -> Self {
        assert!(max_run > 0, "max_run must be positive");
        Self { max_run, last: [None; 4], run: [0; 4] }
    }

    /// Masks surplus repeated values in `frame`. Returns how many channel
    /// values were masked.
    pub fn apply(&mut self, frame: &mut SampleFrame) -> usize {
        let mut masked = 0;
        for channel in ChannelId::ALL {
            let i = channel.index();
            match frame.get(channel) {
                None => {
                    self.last[i] = None;
                    self.run[i] = 0;
                }
                Some(v) => {
                    if self.last[i] == Some(v) {
                        self.run[i] += 1;
                    } else {
                        self.last[i] = Some(v);
                        self.run[i] = 1;
                    }
                    if self.run[i] > self.max_run {
                        frame.set(channel, None);
                        masked += 1;
                    }
                }
            }
        }
        masked
    }

    pub fn reset(&mut self) {
        self.last = [None; 4];
        self.run = [0; 4];
    }
}

/// Masks every value beyond the first `max_run` of a run of identical
/// consecutive values. Frames are never reordered or dropped here; use
/// [`drop_missing`] to exclude the frames this invalidates.
pub fn remove_repetition_runs(frames: &[SampleFrame], max_run: usize) -> Vec<SampleFrame> {
    let mut tracker = RepetitionTracker::new(max_run);
    frames
        .iter()
        .map(|f| {
            let mut f = *f;
            tracker.apply(&mut f);
            f
        })
        .collect()
}

/// Keeps frames whose required channels are all present. No interpolation.
pub fn drop_missing(frames: &[SampleFrame]) -> Vec<SampleFrame> {
    frames.iter().filter(|f| f.is_valid()).copied().collect()
}
