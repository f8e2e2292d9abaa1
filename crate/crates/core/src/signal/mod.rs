//! Frame representation, cleaning, and low-pass filtering of raw EEG.

pub mod clean;
pub mod filter;
pub mod frame;

pub use clean::{drop_missing, remove_repetition_runs, RepetitionTracker};
pub use filter::{lowpass_filter, lowpass_filter_zero_phase, Biquad, ButterworthLowpass, LowpassState};
pub use frame::{validate_frame, CandidateFrame, ChannelId, DefectKind, FrameValidator, MalformedFrame, SampleFrame};
