//! Single-owner job queue that keeps at most one job waiting.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use tokio::sync::oneshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejected {
    /// A newer job replaced this one before it started.
    Superseded,
    /// The job panicked.
    Aborted,
}

type Reply<R> = oneshot::Sender<Result<R, Rejected>>;

struct Slot<J, R> {
    pending: Option<(J, Reply<R>)>,
    running: bool,
}

struct Inner<J, R> {
    slot: Mutex<Slot<J, R>>,
    run: Box<dyn Fn(J) -> R + Send + Sync>,
    executed: AtomicUsize,
}

/// Runs jobs one at a time on the blocking pool. Submitting while a job is
/// queued (not yet started) rejects the queued one as superseded, so a burst
/// executes at most the in-flight job plus the latest arrival.
pub struct Coalescer<J, R> {
    inner: Arc<Inner<J, R>>,
}

impl<J, R> Clone for Coalescer<J, R> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
        }
    }
}

impl<J: Send + 'static, R: Send + 'static> Coalescer<J, R> {
    pub fn new(run: impl Fn(J) -> R + Send + Sync + 'static) -> Self {
        Self {
            inner: Arc::new(Inner {
                slot: Mutex::new(Slot {
                    pending: None,
                    running: false,
                }),
                run: Box::new(run),
                executed: AtomicUsize::new(0),
            }),
        }
    }

    /// Jobs that have started executing so far.
    pub fn executed(&self) -> usize {
        self.inner.executed.load(Ordering::SeqCst)
    }

    /// Must be called from within a tokio runtime.
    pub async fn submit(&self, job: J) -> Result<R, Rejected> {
        let (tx, rx) = oneshot::channel();
        let start_runner = {
            let mut slot = self.inner.slot.lock().unwrap();
            if let Some((_, old)) = slot.pending.replace((job, tx)) {
                let _ = old.send(Err(Rejected::Superseded));
            }
            !std::mem::replace(&mut slot.running, true)
        };
        if start_runner {
            tokio::spawn(drain(Arc::clone(&self.inner)));
        }
        rx.await.unwrap_or(Err(Rejected::Aborted))
    }
}

async fn drain<J: Send + 'static, R: Send + 'static>(inner: Arc<Inner<J, R>>) {
    loop {
        let (job, reply) = {
            let mut slot = inner.slot.lock().unwrap();
            match slot.pending.take() {
                Some(next) => next,
                None => {
                    slot.running = false;
                    return;
                }
            }
        };
        inner.executed.fetch_add(1, Ordering::SeqCst);
        let worker = Arc::clone(&inner);
        let outcome = tokio::task::spawn_blocking(move || (worker.run)(job)).await;
        // A dropped receiver means the client went away; nothing to do.
        let _ = reply.send(outcome.map_err(|_| Rejected::Aborted));
    }
}
