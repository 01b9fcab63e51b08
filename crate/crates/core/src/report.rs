//! Periodic progress lines and final result rendering.
//!
//! The runtime bumps relaxed atomic counters in a shared [`Progress`]. A
//! dedicated [`Reporter`] thread samples them every period and writes one
//! status line per sample. Each counter is read atomically on its own; a
//! snapshot as a whole may mix values from slightly different instants.

use std::fmt::{self, Debug, Write as _};
use std::io::Write;
use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::prop::Phase;
use crate::runner::{RunReport, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProgressSnapshot {
    pub tests_passed: u64,
    pub tests_discarded: u64,
    pub phase: Phase,
    pub shrink_steps: u64,
    pub elapsed_ms: u64,
}

impl fmt::Display for ProgressSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = match self.phase {
            Phase::Testing => "testing",
            Phase::Shrinking => "shrinking",
        };
        write!(
            f,
            "[{}ms] {}: {} passed, {} discarded, {} shrinks",
            self.elapsed_ms, phase, self.tests_passed, self.tests_discarded, self.shrink_steps
        )
    }
}

/// Live counters shared between the runtime and the reporter.
#[derive(Debug)]
pub struct Progress {
    started: Instant,
    passed: AtomicU64,
    discarded: AtomicU64,
    shrink_steps: AtomicU64,
    phase: AtomicU8,
}

impl Default for Progress {
    fn default() -> Self {
        Progress::new()
    }
}

impl Progress {
    pub fn new() -> Self {
        Progress {
            started: Instant::now(),
            passed: AtomicU64::new(0),
            discarded: AtomicU64::new(0),
            shrink_steps: AtomicU64::new(0),
            phase: AtomicU8::new(0),
        }
    }

    pub fn add_passed(&self) {
        self.passed.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_discarded(&self) {
        self.discarded.fetch_add(1, Ordering::Relaxed);
    }

    pub fn set_shrink_steps(&self, steps: u64) {
        self.shrink_steps.fetch_max(steps, Ordering::Relaxed);
    }

    pub fn enter_shrinking(&self) {
        self.phase.store(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> ProgressSnapshot {
        ProgressSnapshot {
            tests_passed: self.passed.load(Ordering::Relaxed),
            tests_discarded: self.discarded.load(Ordering::Relaxed),
            phase: if self.phase.load(Ordering::Relaxed) == 0 {
                Phase::Testing
            } else {
                Phase::Shrinking
            },
            shrink_steps: self.shrink_steps.load(Ordering::Relaxed),
            elapsed_ms: self.started.elapsed().as_millis() as u64,
        }
    }
}

/// A running progress printer; stop it with [`Reporter::finish`].
pub struct Reporter {
    stop: Arc<(Mutex<bool>, Condvar)>,
    handle: Option<JoinHandle<u64>>,
}

impl Reporter {
    /// Emits `source()` to `sink` once per `period` until finished.
    ///
    /// A failing sink silences the reporter; the run is unaffected.
    pub fn spawn<F, W>(source: F, period: Duration, mut sink: W) -> Reporter
    where
        F: Fn() -> ProgressSnapshot + Send + 'static,
        W: Write + Send + 'static,
    {
        assert!(!period.is_zero(), "reporting period must be positive");
        let stop = Arc::new((Mutex::new(false), Condvar::new()));
        let signal = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            let (lock, cvar) = &*signal;
            let mut emitted = 0;
            let mut next = Instant::now() + period;
            let mut stopped = lock.lock().unwrap();
            loop {
                let now = Instant::now();
                if now < next {
                    stopped = cvar.wait_timeout(stopped, next - now).unwrap().0;
                    if *stopped {
                        return emitted;
                    }
                    continue;
                }
                next += period;
                // Whole lines only: format first, then a single write.
                let line = format!("{}\n", source());
                if sink.write_all(line.as_bytes()).and_then(|_| sink.flush()).is_err() {
                    log::warn!("progress sink failed; disabling progress output");
                    drop(stopped);
                    let mut s = lock.lock().unwrap();
                    while !*s {
                        s = cvar.wait(s).unwrap();
                    }
                    return emitted;
                }
                emitted += 1;
            }
        });
        Reporter { stop, handle: Some(handle) }
    }

    /// Stops the reporter and returns how many lines it emitted.
    pub fn finish(mut self) -> u64 {
        self.shutdown()
    }

    fn shutdown(&mut self) -> u64 {
        let (lock, cvar) = &*self.stop;
        *lock.lock().unwrap() = true;
        cvar.notify_all();
        self.handle.take().map(|h| h.join().unwrap_or(0)).unwrap_or(0)
    }
}

impl Drop for Reporter {
    fn drop(&mut self) {
        self.shutdown();
    }
}

/// Renders a final report in the familiar QuickCheck style.
pub fn render<T: Debug>(report: &RunReport<T>, per_tester: bool) -> String {
    let mut out = String::new();
    match &report.verdict {
        Verdict::Success => {
            let _ = writeln!(out, "+++ OK! Passed {} tests.", report.tests_run);
            if per_tester {
                for (i, n) in report.per_tester_counts.iter().enumerate() {
                    let _ = writeln!(out, "  tester {i}: {n}");
                }
            }
        }
        Verdict::GaveUp => {
            let _ = writeln!(
                out,
                "*** Gave up! Passed only {} tests; {} discarded tests.",
                report.tests_run, report.discarded
            );
        }
        Verdict::Failure => {
            let failure = report.failure.as_ref().expect("failure verdict carries details");
            let _ = writeln!(
                out,
                "*** Failed! Falsified (after {} tests and {} shrinks):",
                report.tests_run, failure.shrink.successful_shrinks
            );
            let _ = writeln!(out, "{:?}", failure.shrink.final_value);
            let _ = writeln!(out, "{}", failure.shrink.final_reason.as_deref().unwrap_or(&failure.reason));
            let _ = writeln!(out, "Replay: {} size {}", failure.seed, failure.size);
        }
        Verdict::InternalError(msg) => {
            let _ = writeln!(out, "*** Internal error: {msg}");
        }
    }
    out
}
