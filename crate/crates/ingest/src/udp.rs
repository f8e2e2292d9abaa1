//! UDP receiver and sender for OSC-encoded EEG frames.

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use flowstate_core::signal::{ChannelId, SampleFrame};
use thiserror::Error;

use crate::mapping::{osc_to_frame, ChannelMapping};
use crate::osc::{encode_message, parse_osc_packet, OscArg, OscMessage};
use crate::queue::DropOldestQueue;

pub const DEFAULT_UDP_PORT: u16 = 5000;

#[derive(Debug, Error)]
#[error("cannot bind UDP socket: {0}")]
pub struct BindError(#[from] pub io::Error);

/// Receiver counters; all monotone.
#[derive(Debug, Default)]
pub struct IngestCounters {
    pub packets: AtomicU64,
    pub malformed: AtomicU64,
    /// Messages on addresses other than the mapped EEG address.
    pub skipped: AtomicU64,
    /// EEG messages whose arguments did not fit the mapping.
    pub rejected: AtomicU64,
    pub frames: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub packets: u64,
    pub malformed: u64,
    pub skipped: u64,
    pub rejected: u64,
    pub frames: u64,
    pub dropped: u64,
}

impl IngestCounters {
    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
}

/// Background receiver thread. Frames are timestamped with local receipt
/// time in seconds since [`UdpListener::epoch`] and numbered in arrival
/// order.
pub struct UdpListener {
    local_addr: SocketAddr,
    epoch: Instant,
    counters: Arc<IngestCounters>,
    queue: Arc<DropOldestQueue<SampleFrame>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

pub fn listen_udp(
    addr: impl ToSocketAddrs,
    mapping: ChannelMapping,
    queue: Arc<DropOldestQueue<SampleFrame>>,
) -> Result<UdpListener, BindError> {
    let socket = UdpSocket::bind(addr)?;
    socket.set_read_timeout(Some(Duration::from_millis(50)))?;
    let local_addr = socket.local_addr()?;
    let epoch = Instant::now();
    let counters = Arc::new(IngestCounters::default());
    let stop = Arc::new(AtomicBool::new(false));
    let handle = {
        let (counters, queue, stop) = (Arc::clone(&counters), Arc::clone(&queue), Arc::clone(&stop));
        thread::Builder::new()
            .name("udp-ingest".into())
            .spawn(move || receive_loop(socket, mapping, epoch, &counters, &queue, &stop))?
    };
    Ok(UdpListener { local_addr, epoch, counters, queue, stop, handle: Some(handle) })
}

fn receive_loop(
    socket: UdpSocket,
    mapping: ChannelMapping,
    epoch: Instant,
    counters: &IngestCounters,
    queue: &DropOldestQueue<SampleFrame>,
    stop: &AtomicBool,
) {
    let mut buf = vec![0u8; 65_536];
    let mut sequence = 0u64;
    while !stop.load(Ordering::Relaxed) {
        let len = match socket.recv(&mut buf) {
            Ok(n) => n,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
            Err(_) => continue,
        };
        let received = epoch.elapsed().as_secs_f64();
        IngestCounters::bump(&counters.packets);
        let messages = match parse_osc_packet(&buf[..len]) {
            Ok(m) => m,
            Err(_) => {
                IngestCounters::bump(&counters.malformed);
                continue;
            }
        };
        for msg in &messages {
            match osc_to_frame(msg, &mapping, received, sequence) {
                Ok(Some(frame)) => {
                    sequence += 1;
                    IngestCounters::bump(&counters.frames);
                    queue.push(frame);
                }
                Ok(None) => IngestCounters::bump(&counters.skipped),
                Err(_) => IngestCounters::bump(&counters.rejected),
            }
        }
    }
}

impl UdpListener {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn epoch(&self) -> Instant {
        self.epoch
    }

    pub fn queue(&self) -> &Arc<DropOldestQueue<SampleFrame>> {
        &self.queue
    }

    pub fn stats(&self) -> IngestStats {
        let c = &self.counters;
        IngestStats {
            packets: c.packets.load(Ordering::Relaxed),
            malformed: c.malformed.load(Ordering::Relaxed),
            skipped: c.skipped.load(Ordering::Relaxed),
            rejected: c.rejected.load(Ordering::Relaxed),
            frames: c.frames.load(Ordering::Relaxed),
            dropped: self.queue.dropped(),
        }
    }

    pub fn counters(&self) -> Arc<IngestCounters> {
        Arc::clone(&self.counters)
    }

    /// Stops the receiver thread and closes the queue.
    pub fn shutdown(mut self) {
        self.stop_thread();
    }

    fn stop_thread(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
        self.queue.close();
    }
}

impl Drop for UdpListener {
    fn drop(&mut self) {
        self.stop_thread();
    }
}

/// Sends frames as single-message OSC datagrams. Missing values go out
/// as NaN.
pub struct OscSender {
    socket: UdpSocket,
    mapping: ChannelMapping,
}

impl OscSender {
    pub fn connect(target: impl ToSocketAddrs, mapping: ChannelMapping) -> io::Result<Self> {
        let socket = UdpSocket::bind(("127.0.0.1", 0)).or_else(|_| UdpSocket::bind(("0.0.0.0", 0)))?;
        socket.connect(target)?;
        Ok(Self { socket, mapping })
    }

    pub fn message_for(&self, frame: &SampleFrame) -> OscMessage {
        let args = self
            .mapping
            .order
            .iter()
            .map(|ch| OscArg::Float(ch.and_then(|c: ChannelId| frame.get(c)).map_or(f32::NAN, |v| v as f32)))
            .collect();
        OscMessage::new(self.mapping.address.clone(), args)
    }

    pub fn send(&self, frame: &SampleFrame) -> io::Result<()> {
        self.send_raw(&encode_message(&self.message_for(frame)))
    }

    pub fn send_raw(&self, bytes: &[u8]) -> io::Result<()> {
        self.socket.send(bytes).map(|_| ())
    }
}
