//! Live service, batch commands and synthetic recordings.

pub mod api;
pub mod cli;
pub mod live;
pub mod simulate;
