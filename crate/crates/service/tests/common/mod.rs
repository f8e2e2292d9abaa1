#![allow(dead_code)]

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Instant;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use flowstate_core::{EngineConfig, SampleFrame};
use flowstate_ingest::{listen_udp, ChannelMapping, DropOldestQueue, UdpListener};
use flowstate_service::api::{router, AppState};
use flowstate_service::live::{spawn_worker, Clock, FrameSource, Hub, SessionStore};
use serde_json::Value;
use tower::ServiceExt;

pub struct TestServer {
    pub state: AppState,
    pub router: Router,
    pub queue: Arc<DropOldestQueue<SampleFrame>>,
    pub clock: Clock,
    pub udp: Option<UdpListener>,
    worker: Option<JoinHandle<()>>,
}

impl TestServer {
    /// Frames go straight into the queue; no UDP socket.
    pub fn new(store: SessionStore) -> Self {
        Self::build(store, false)
    }

    pub fn with_udp() -> Self {
        Self::build(SessionStore::new(None), true)
    }

    fn build(store: SessionStore, udp: bool) -> Self {
        let queue = Arc::new(DropOldestQueue::new(4096));
        let udp = udp.then(|| listen_udp("127.0.0.1:0", ChannelMapping::default(), Arc::clone(&queue)).unwrap());
        let clock = Clock::new(udp.as_ref().map_or_else(Instant::now, |u| u.epoch()));
        let source = FrameSource { queue: Arc::clone(&queue), ingest: udp.as_ref().map(|u| u.counters()) };
        let hub = Arc::new(Hub::new(Arc::new(store), source));
        let worker = spawn_worker(Arc::clone(&hub));
        let state = AppState::new(hub, clock, EngineConfig::default());
        Self { router: router(state.clone()), state, queue, clock, udp, worker: Some(worker) }
    }

    pub async fn call(&self, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
            .unwrap();
        let res = self.router.clone().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = axum::body::to_bytes(res.into_body(), usize::MAX).await.unwrap();
        (status, serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into())))
    }

    pub async fn create_session(&self) -> String {
        let (status, body) = self.call(Method::POST, "/sessions", None).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }

    /// Serves the router on an ephemeral port for WebSocket clients.
    pub async fn serve(&self) -> SocketAddr {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let app = self.router.clone();
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        addr
    }

    /// Queues frames with timestamps shifted onto the server clock.
    pub fn feed(&self, frames: &[SampleFrame]) {
        let t = self.clock.now();
        for f in frames {
            self.queue.push(SampleFrame { timestamp: t + f.timestamp, ..*f });
        }
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.queue.close();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}
