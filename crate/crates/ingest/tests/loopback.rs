use std::sync::Arc;
use std::time::{Duration, Instant};

use flowstate_core::signal::SampleFrame;
use flowstate_ingest::{listen_udp, ChannelMapping, DropOldestQueue, OscArg, OscMessage, OscSender, UdpListener};

fn frame(i: u64) -> SampleFrame {
    SampleFrame::complete(i as f64 / 256.0, i, [i as f64, i as f64 + 0.5, -(i as f64), 1.0])
}

fn collect(listener: &UdpListener, want: usize) -> Vec<SampleFrame> {
    let deadline = Instant::now() + Duration::from_secs(5);
    let mut got = Vec::new();
    while got.len() < want && Instant::now() < deadline {
        if let Some(f) = listener.queue().pop_timeout(Duration::from_millis(100)) {
            got.push(f);
        }
    }
    got
}

fn setup(capacity: usize) -> (UdpListener, OscSender) {
    let listener = listen_udp("127.0.0.1:0", ChannelMapping::default(), Arc::new(DropOldestQueue::new(capacity))).unwrap();
    let sender = OscSender::connect(listener.local_addr(), ChannelMapping::default()).unwrap();
    (listener, sender)
}

#[test]
fn hundred_packets_arrive_in_order() {
    let (listener, sender) = setup(1024);
    for i in 0..100 {
        sender.send(&frame(i)).unwrap();
        // Pace lightly so the kernel receive buffer is never the bottleneck.
        if i % 10 == 9 {
            std::thread::sleep(Duration::from_millis(1));
        }
    }
    let got = collect(&listener, 100);
    assert_eq!(got.len(), 100);
    for (i, f) in got.iter().enumerate() {
        assert_eq!(f.sequence, i as u64);
        assert_eq!(f.values, frame(i as u64).values);
    }
    assert!(got.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    let stats = listener.stats();
    assert_eq!((stats.packets, stats.frames, stats.malformed, stats.dropped), (100, 100, 0, 0));
}

#[test]
fn malformed_and_foreign_packets_are_counted() {
    let (listener, sender) = setup(1024);
    for i in 0..100 {
        if i == 50 {
            sender.send_raw(b"/eeg\0\0\0\0,ff\0\0\0\0\0").unwrap();
        } else {
            sender.send(&frame(i)).unwrap();
        }
    }
    sender.send_raw(&flowstate_ingest::encode_message(&OscMessage::new("/acc", vec![OscArg::Float(0.0); 3]))).unwrap();
    let got = collect(&listener, 99);
    assert_eq!(got.len(), 99);
    std::thread::sleep(Duration::from_millis(100));
    let stats = listener.stats();
    assert_eq!(stats.malformed, 1);
    assert_eq!(stats.skipped, 1);
    assert_eq!(stats.frames, 99);
    assert_eq!(stats.packets, 101);
}

#[test]
fn stalled_consumer_drops_oldest() {
    let (listener, sender) = setup(10);
    for i in 0..200 {
        sender.send(&frame(i)).unwrap();
        if i % 20 == 19 {
            std::thread::sleep(Duration::from_millis(1));
        }
    }
    let deadline = Instant::now() + Duration::from_secs(5);
    while listener.stats().frames < 200 && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(10));
    }
    let stats = listener.stats();
    assert_eq!(stats.frames, 200);
    assert_eq!(stats.dropped, 190);
    let kept: Vec<u64> = listener.queue().drain().iter().map(|f| f.values[0].unwrap() as u64).collect();
    assert_eq!(kept, (190..200).collect::<Vec<_>>());
}
