//! Streaming EEG analysis for four-channel prefrontal headbands.
//!
//! Frames move through [`pipeline::Pipeline`]: validation, repetition
//! masking, Butterworth low-pass filtering, sliding Welch band powers,
//! entropy, and the derived metrics in [`metrics`]. Recorded sessions,
//! questionnaires, and grouped reports live in [`session`].

// `is_multiple_of` is newer than the minimum supported toolchain.
#![allow(clippy::manual_is_multiple_of)]

pub mod config;
pub mod fixtures;
pub mod metrics;
pub mod pipeline;
pub mod session;
pub mod signal;
pub mod spectral;

pub use config::{ConfigError, EngineConfig, MetricConfig, StreamConfig};
pub use metrics::{MetricSnapshot, FORMULA_VERSION};
pub use pipeline::{run_batch, BatchOptions, BatchOutput, Pipeline, PipelineError, PipelineStats};
pub use signal::{ChannelId, SampleFrame};
