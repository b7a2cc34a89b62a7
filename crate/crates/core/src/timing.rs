//! Clocks used for stage timings.
//!
//! Per-worker stages (fetch, render) are measured on the calling thread's CPU
//! clock so that a worker's cost does not depend on how many other workers
//! share a core. Composite and merge are measured on the wall clock.

use std::time::{Duration, Instant};

/// CPU time consumed by the current thread.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Runs `f` and returns its result with the thread CPU time it consumed.
pub fn cpu_timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = thread_cpu_time();
    let out = f();
    (out, thread_cpu_time().saturating_sub(start))
}

/// Runs `f` and returns its result with the elapsed wall time.
pub fn wall_timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}
