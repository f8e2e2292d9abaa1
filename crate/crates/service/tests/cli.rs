use std::path::Path;
use std::process::{Command, Output};

use flowstate_core::fixtures::snapshot_with_fsi;
use flowstate_core::session::{persist_session, EventKind, RecordConfig, SessionEvent, SessionRecord};

fn flowstate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowstate")).args(args).env_remove("FLOWSTATE_CONFIG").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = flowstate(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn mean_fsi(metrics_csv: &str) -> f64 {
    let mut r = csv::Reader::from_reader(metrics_csv.as_bytes());
    let col = r.headers().unwrap().iter().position(|h| h == "fsi").unwrap();
    let v: Vec<f64> = r.records().map(|row| row.unwrap()[col].parse().unwrap()).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn usage_errors_exit_2_and_data_errors_exit_1() {
    assert_eq!(flowstate(&[]).status.code(), Some(2));
    assert_eq!(flowstate(&["analyze"]).status.code(), Some(2));
    assert_eq!(flowstate(&["simulate", "--profile", "sleepy"]).status.code(), Some(2));
    assert_eq!(flowstate(&["report", "x.jsonl", "--group-by", "colour"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = flowstate(&["analyze", p(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "timestamp,AF7,AF8\n0,1,2\n0.1,x,2\n").unwrap();
    assert_eq!(flowstate(&["analyze", "--strict", p(&bad)]).status.code(), Some(1));
    assert_eq!(flowstate(&["analyze", p(&bad)]).status.code(), Some(0));

    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[stream]\nsample_rate_hz = 50.0\n").unwrap();
    let csv = dir.path().join("ok.csv");
    std::fs::write(&csv, "timestamp,AF7,AF8\n0,1,2\n").unwrap();
    assert_eq!(flowstate(&["--config", p(&config), "analyze", p(&csv)]).status.code(), Some(1));
}

#[test]
fn simulate_and_analyze_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let flow = dir.path().join("flow.csv");
    ok(&["simulate", "--profile", "flow", "--seconds", "10", "--output", p(&flow)]);
    assert_eq!(ok(&["simulate", "--profile", "flow", "--seconds", "10"]), std::fs::read_to_string(&flow).unwrap());

    let first = ok(&["analyze", p(&flow)]);
    assert_eq!(first, ok(&["analyze", p(&flow)]));
    let header = first.lines().next().unwrap();
    assert!(header.starts_with("time,sequence,fsi,"));
    assert!(header.ends_with(",formula_version"));
    assert_eq!(first.lines().count(), 1 + (2560 - 1024) / 32 + 1);

    let zero_phase = ok(&["analyze", "--zero-phase", p(&flow)]);
    assert_eq!(zero_phase.lines().count(), first.lines().count());
    assert_ne!(zero_phase, first);
}

#[test]
fn flow_scores_above_stress() {
    let dir = tempfile::tempdir().unwrap();
    let (flow, stress) = (dir.path().join("flow.csv"), dir.path().join("stress.csv"));
    ok(&["simulate", "--profile", "flow", "--seconds", "20", "--output", p(&flow)]);
    ok(&["simulate", "--profile", "stress", "--seconds", "20", "--output", p(&stress)]);
    let gap = mean_fsi(&ok(&["analyze", p(&flow)])) - mean_fsi(&ok(&["analyze", p(&stress)]));
    assert!(gap >= 0.2, "gap {gap}");
}

#[test]
fn config_file_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let flow = dir.path().join("flow.csv");
    ok(&["simulate", "--seconds", "6", "--output", p(&flow)]);
    let config = dir.path().join("engine.toml");
    std::fs::write(&config, "[stream]\nemit_hop_samples = 64\n").unwrap();
    let out = ok(&["--config", p(&config), "analyze", p(&flow)]);
    assert_eq!(out.lines().count(), 1 + (1536 - 1024) / 64 + 1);
    let env = Command::new(env!("CARGO_BIN_EXE_flowstate"))
        .args(["analyze", p(&flow)])
        .env("FLOWSTATE_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(String::from_utf8(env.stdout).unwrap(), out);
}

#[test]
fn report_over_session_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for (i, fsi) in [0.7, 0.74].into_iter().enumerate() {
        let mut r = SessionRecord::new(format!("s{i}"), RecordConfig::default());
        r.push_event(SessionEvent::new(0.0, EventKind::Execution)).unwrap();
        for k in 0..5 {
            r.push_snapshot(snapshot_with_fsi(k as f64, fsi)).unwrap();
        }
        let path = dir.path().join(format!("s{i}.jsonl"));
        persist_session(&r, &path).unwrap();
        paths.push(path);
    }
    let csv = ok(&["report", p(&paths[0]), p(&paths[1]), "--group-by", "kind"]);
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    let row = rows.records().next().unwrap().unwrap();
    assert_eq!(&row[1], "execution");
    assert!((row[4].parse::<f64>().unwrap() - 0.72).abs() < 1e-12);

    let json: serde_json::Value = serde_json::from_str(&ok(&["report", p(&paths[0]), "--format", "json"])).unwrap();
    assert_eq!(json["groups"][0]["key"], "execution");

    std::fs::write(dir.path().join("s0.jsonl"), "{}\n").unwrap();
    assert_eq!(flowstate(&["report", p(&paths[0])]).status.code(), Some(1));
}
