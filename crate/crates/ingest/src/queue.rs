//! Bounded hand-off queue that never blocks the producer: when full, the
//! oldest item is discarded and counted.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

#[derive(Debug)]
pub struct DropOldestQueue<T> {
    inner: Mutex<State<T>>,
    ready: Condvar,
    capacity: usize,
    dropped: AtomicU64,
}

#[derive(Debug)]
struct State<T> {
    items: VecDeque<T>,
    closed: bool,
}

impl<T> DropOldestQueue<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self {
            inner: Mutex::new(State { items: VecDeque::with_capacity(capacity), closed: false }),
            ready: Condvar::new(),
            capacity,
            dropped: AtomicU64::new(0),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Enqueues `item`, evicting the oldest entry when full. Returns
    /// whether an entry was evicted. Items pushed after `close` are
    /// discarded silently.
    pub fn push(&self, item: T) -> bool {
        let mut state = self.inner.lock().expect("queue lock poisoned");
        if state.closed {
            return false;
        }
        let evicted = state.items.len() == self.capacity;
        if evicted {
            state.items.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        state.items.push_back(item);
        drop(state);
        self.ready.notify_one();
        evicted
    }

    pub fn try_pop(&self) -> Option<T> {
        self.inner.lock().expect("queue lock poisoned").items.pop_front()
    }

    /// Waits up to `timeout` for an item. Returns `None` on timeout or
    /// when the queue is closed and drained.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<T> {
        let deadline = Instant::now() + timeout;
        let mut state = self.inner.lock().expect("queue lock poisoned");
        loop {
            if let Some(item) = state.items.pop_front() {
                return Some(item);
            }
            if state.closed {
                return None;
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            state = self.ready.wait_timeout(state, deadline - now).expect("queue lock poisoned").0;
        }
    }

    /// Blocks until an item arrives or the queue is closed and drained.
    pub fn pop(&self) -> Option<T> {
        let mut state = self.inner.lock().expect("queue lock poisoned");
        loop {
            if let Some(item) = state.items.pop_front() {
                return Some(item);
            }
            if state.closed {
                return None;
            }
            state = self.ready.wait(state).expect("queue lock poisoned");
        }
    }

    pub fn drain(&self) -> Vec<T> {
        self.inner.lock().expect("queue lock poisoned").items.drain(..).collect()
    }

    /// Wakes consumers; remaining items can still be popped.
    pub fn close(&self) {
        self.inner.lock().expect("queue lock poisoned").closed = true;
        self.ready.notify_all();
    }

    pub fn is_closed(&self) -> bool {
        self.inner.lock().expect("queue lock poisoned").closed
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("queue lock poisoned").items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}
