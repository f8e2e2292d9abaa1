//! Live session state shared by the HTTP handlers and the pipeline worker.
//!
//! Ingestion, the pipeline worker, and client delivery are decoupled: the
//! receiver feeds a drop-oldest queue, a single worker thread owns the
//! pipeline, and each published update replaces the previous one in a
//! `watch` channel. Slow WebSocket clients only ever skip updates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use flowstate_core::session::{load_session, persist_session, LikertAnswers, QuestionnaireResponse, SessionEvent, SessionRecord};
use flowstate_core::{EngineConfig, MetricSnapshot, Pipeline, SampleFrame};
use flowstate_ingest::{DropOldestQueue, IngestCounters};
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

/// Seconds since process start; shared with the UDP receiver so frame
/// timestamps and session clocks agree.
#[derive(Debug, Clone, Copy)]
pub struct Clock {
    epoch: Instant,
}

impl Clock {
    pub fn new(epoch: Instant) -> Self {
        Self { epoch }
    }

    pub fn now(&self) -> f64 {
        self.epoch.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamHealth {
    pub frames_per_second: f64,
    pub drop_count: u64,
    pub malformed_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveUpdate {
    pub session_id: String,
    pub snapshot: MetricSnapshot,
    pub stream_health: StreamHealth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Live,
    Finalized,
}

#[derive(Debug, Clone)]
pub struct SessionEntry {
    pub record: SessionRecord,
    pub state: SessionState,
    /// Clock reading at session start; session time is relative to it.
    pub started_at: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreError {
    NotFound,
    Conflict(String),
    Invalid(String),
    Io(String),
}

/// All sessions known to the service, optionally mirrored to a directory
/// of session files.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, SessionEntry>>,
    data_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        Self { sessions: RwLock::default(), data_dir }
    }

    /// Loads every `*.jsonl` session in `dir` as finalized. Unreadable
    /// files are returned with their error and left alone.
    pub fn open(dir: &Path) -> std::io::Result<(Self, Vec<(PathBuf, String)>)> {
        std::fs::create_dir_all(dir)?;
        let store = Self::new(Some(dir.to_path_buf()));
        let mut failures = Vec::new();
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        {
            let mut sessions = store.sessions.write().expect("store lock");
            for path in paths {
                match load_session(&path) {
                    Ok(record) => {
                        sessions.insert(
                            record.id.clone(),
                            SessionEntry { record, state: SessionState::Finalized, started_at: 0.0 },
                        );
                    }
                    Err(e) => failures.push((path, e.to_string())),
                }
            }
        }
        Ok((store, failures))
    }

    pub fn insert(&self, entry: SessionEntry) {
        self.sessions.write().expect("store lock").insert(entry.record.id.clone(), entry);
    }

    pub fn get(&self, id: &str) -> Option<SessionEntry> {
        self.sessions.read().expect("store lock").get(id).cloned()
    }

    pub fn list(&self) -> Vec<SessionEntry> {
        self.sessions.read().expect("store lock").values().cloned().collect()
    }

    pub fn live_id(&self) -> Option<String> {
        self.sessions
            .read()
            .expect("store lock")
            .values()
            .find(|e| e.state == SessionState::Live)
            .map(|e| e.record.id.clone())
    }

    pub fn finalized_records(&self) -> Vec<SessionRecord> {
        self.sessions
            .read()
            .expect("store lock")
            .values()
            .filter(|e| e.state == SessionState::Finalized)
            .map(|e| e.record.clone())
            .collect()
    }

    fn with_entry<T>(&self, id: &str, f: impl FnOnce(&mut SessionEntry) -> Result<T, StoreError>) -> Result<T, StoreError> {
        let mut sessions = self.sessions.write().expect("store lock");
        f(sessions.get_mut(id).ok_or(StoreError::NotFound)?)
    }

    pub fn add_event(&self, id: &str, event: SessionEvent) -> Result<SessionEvent, StoreError> {
        self.with_entry(id, |e| {
            if e.state != SessionState::Live {
                return Err(StoreError::Conflict("session is finalized".into()));
            }
            e.record.push_event(event.clone()).map_err(|err| StoreError::Invalid(err.to_string()))?;
            Ok(event)
        })
    }

    pub fn set_questionnaire(&self, id: &str, answers: LikertAnswers, completed_at: f64) -> Result<QuestionnaireResponse, StoreError> {
        let q = QuestionnaireResponse { answers, completed_at };
        let record = self.with_entry(id, |e| {
            if e.record.questionnaire.is_some() {
                return Err(StoreError::Conflict("questionnaire already submitted".into()));
            }
            e.record.questionnaire = Some(q);
            Ok((e.state == SessionState::Finalized).then(|| e.record.clone()))
        })?;
        if let Some(record) = record {
            self.persist(&record)?;
        }
        Ok(q)
    }

    pub fn append_snapshot(&self, id: &str, snapshot: MetricSnapshot) {
        let _ = self.with_entry(id, |e| {
            if e.state == SessionState::Live {
                let _ = e.record.push_snapshot(snapshot);
            }
            Ok(())
        });
    }

    pub fn finalize(&self, id: &str) -> Result<SessionEntry, StoreError> {
        let entry = self.with_entry(id, |e| {
            if e.state == SessionState::Finalized {
                return Err(StoreError::Conflict("session is already finalized".into()));
            }
            e.state = SessionState::Finalized;
            Ok(e.clone())
        })?;
        self.persist(&entry.record)?;
        Ok(entry)
    }

    fn persist(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        persist_session(record, &dir.join(format!("{}.jsonl", record.id))).map_err(|e| StoreError::Io(e.to_string()))
    }
}

/// Running counters the health block is computed from.
#[derive(Clone)]
pub struct FrameSource {
    pub queue: Arc<DropOldestQueue<SampleFrame>>,
    pub ingest: Option<Arc<IngestCounters>>,
}

impl FrameSource {
    fn malformed(&self) -> u64 {
        self.ingest.as_ref().map_or(0, |c| {
            c.malformed.load(std::sync::atomic::Ordering::Relaxed) + c.rejected.load(std::sync::atomic::Ordering::Relaxed)
        })
    }
}

struct LiveRun {
    session_id: String,
    pipeline: Pipeline,
    t0: f64,
    tx: watch::Sender<Option<Arc<str>>>,
    drop_base: u64,
    malformed_base: u64,
    rejected: u64,
    recent: std::collections::VecDeque<f64>,
}

impl LiveRun {
    fn frames_per_second(&mut self, t: f64) -> f64 {
        self.recent.push_back(t);
        while self.recent.front().is_some_and(|&f| t - f > 1.0) {
            self.recent.pop_front();
        }
        self.recent.len() as f64
    }
}

/// Owns the active pipeline run and the watch channel its updates go to.
pub struct Hub {
    run: Mutex<Option<LiveRun>>,
    store: Arc<SessionStore>,
    source: FrameSource,
}

impl Hub {
    pub fn new(store: Arc<SessionStore>, source: FrameSource) -> Self {
        Self { run: Mutex::new(None), store, source }
    }

    pub fn store(&self) -> &Arc<SessionStore> {
        &self.store
    }

    pub fn source(&self) -> &FrameSource {
        &self.source
    }

    /// Starts feeding frames stamped at or after `t0` into a fresh
    /// pipeline for `session_id`.
    pub fn start(&self, session_id: &str, config: &EngineConfig, t0: f64) -> Result<(), String> {
        let pipeline = Pipeline::new(config).map_err(|e| e.to_string())?;
        let (tx, _) = watch::channel(None);
        *self.run.lock().expect("hub lock") = Some(LiveRun {
            session_id: session_id.to_string(),
            pipeline,
            t0,
            tx,
            drop_base: self.source.queue.dropped(),
            malformed_base: self.source.malformed(),
            rejected: 0,
            recent: Default::default(),
        });
        Ok(())
    }

    /// Ends the run; subscribers observe the channel closing.
    pub fn stop(&self, session_id: &str) {
        let mut run = self.run.lock().expect("hub lock");
        if run.as_ref().is_some_and(|r| r.session_id == session_id) {
            *run = None;
        }
    }

    pub fn subscribe(&self, session_id: &str) -> Option<watch::Receiver<Option<Arc<str>>>> {
        let run = self.run.lock().expect("hub lock");
        run.as_ref().filter(|r| r.session_id == session_id).map(|r| r.tx.subscribe())
    }

    /// Runs one frame through the active pipeline, if any.
    pub fn process(&self, mut frame: SampleFrame) {
        let mut guard = self.run.lock().expect("hub lock");
        let Some(run) = guard.as_mut() else { return };
        frame.timestamp -= run.t0;
        if frame.timestamp < 0.0 {
            return;
        }
        let fps = run.frames_per_second(frame.timestamp);
        let snapshot = match run.pipeline.push(frame) {
            Ok(Some(s)) => s,
            Ok(None) => return,
            Err(_) => {
                run.rejected += 1;
                return;
            }
        };
        let update = LiveUpdate {
            session_id: run.session_id.clone(),
            stream_health: StreamHealth {
                frames_per_second: fps,
                drop_count: self.source.queue.dropped() - run.drop_base,
                malformed_count: self.source.malformed() - run.malformed_base + run.rejected,
            },
            snapshot,
        };
        let json: Arc<str> = serde_json::to_string(&update).expect("update serializes").into();
        self.store.append_snapshot(&run.session_id, update.snapshot);
        run.tx.send_replace(Some(json));
    }
}

/// Pulls frames off the queue until it is closed.
pub fn spawn_worker(hub: Arc<Hub>) -> JoinHandle<()> {
    thread::Builder::new()
        .name("pipeline".into())
        .spawn(move || {
            let queue = Arc::clone(&hub.source.queue);
            loop {
                match queue.pop_timeout(Duration::from_millis(100)) {
                    Some(frame) => hub.process(frame),
                    None if queue.is_closed() => break,
                    None => {}
                }
            }
        })
        .expect("spawn pipeline worker")
}
