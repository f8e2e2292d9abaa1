//! Frame acquisition: OSC over UDP from a live headband bridge, CSV
//! session files, and paced replay.

// `is_multiple_of` is newer than the minimum supported toolchain.
#![allow(clippy::manual_is_multiple_of)]

pub mod csv_session;
pub mod mapping;
pub mod osc;
pub mod queue;
pub mod replay;
pub mod udp;

pub use csv_session::{read_csv_from, read_csv_session, write_csv_session, CsvError, CsvOptions, CsvSession, RowError};
pub use mapping::{osc_to_frame, ChannelMapping, FrameError};
pub use osc::{encode_message, encode_packet, parse_osc_packet, parse_packet, MalformedPacket, OscArg, OscMessage, OscPacket};
pub use queue::DropOldestQueue;
pub use replay::{replay, Replay, Speed};
pub use udp::{listen_udp, BindError, IngestCounters, IngestStats, OscSender, UdpListener, DEFAULT_UDP_PORT};
