use std::f64::consts::PI;

use flowstate_core::{run_batch, BatchOptions, EngineConfig, SampleFrame};
use flowstate_ingest::{read_csv_session, write_csv_session, CsvOptions};

fn recording(seconds: usize) -> Vec<SampleFrame> {
    (0..seconds * 256)
        .map(|i| {
            let t = i as f64 / 256.0;
            let v = |f: f64, a: f64| a * (2.0 * PI * f * t).sin() + 0.3 * (2.0 * PI * 30.0 * t).cos();
            SampleFrame::complete(t, i as u64, [v(6.0, 8.0), v(10.0, 12.0), v(10.5, 11.0), v(5.0, 7.5)])
        })
        .collect()
}

#[test]
fn csv_file_gives_the_same_metrics_as_the_frames_it_holds() {
    let frames = recording(8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.csv");
    write_csv_session(std::fs::File::create(&path).unwrap(), &frames).unwrap();
    let session = read_csv_session(&path, CsvOptions { strict: true, ..Default::default() }).unwrap();
    assert_eq!(session.frames, frames);

    let cfg = EngineConfig::default();
    let direct = run_batch(&frames, &cfg, BatchOptions::streaming(&cfg)).unwrap();
    let from_file = run_batch(&session.frames, &cfg, BatchOptions::streaming(&cfg)).unwrap();
    assert_eq!(direct.snapshots, from_file.snapshots);
    assert_eq!(direct.snapshots.len(), (8 * 256 - 1024) / 32 + 1);
    // Reading twice is deterministic too.
    let again = read_csv_session(&path, CsvOptions::default()).unwrap();
    assert_eq!(run_batch(&again.frames, &cfg, BatchOptions::streaming(&cfg)).unwrap().snapshots, direct.snapshots);
}
