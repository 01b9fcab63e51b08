//! Properties, test outcomes, and cleanup on forced termination.
//!
//! A property body receives an [`EvalContext`] through which it can poll for
//! cancellation and register cleanup handlers with [`EvalContext::graceful`].
//! The runtime's termination request travels on its own channel, the
//! [`Aborted`] error, which user code can propagate but never construct.
//! Ordinary failures are either an [`Outcome::Fail`] or a panic.

use std::any::Any;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pass,
    Fail(String),
    /// A precondition was not met; the test does not count.
    Discard,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Outcome {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail("falsified".to_string())
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Outcome::Fail(_))
    }
}

impl From<bool> for Outcome {
    fn from(ok: bool) -> Self {
        Outcome::from_bool(ok)
    }
}

/// Discards unless `cond` holds, otherwise defers to `body`.
pub fn precondition(cond: bool, body: impl FnOnce() -> Outcome) -> Outcome {
    if cond {
        body()
    } else {
        Outcome::Discard
    }
}

/// The runtime's request to stop evaluating. Only the runtime creates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Aborted {
    _private: (),
}

impl Aborted {
    pub(crate) fn new() -> Self {
        Aborted { _private: () }
    }
}

impl fmt::Display for Aborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("evaluation aborted by the runtime")
    }
}

impl std::error::Error for Aborted {}

/// A source of stop requests, polled cooperatively.
pub trait Interrupt: Sync {
    fn interrupted(&self) -> bool;
}

/// Never interrupts.
pub struct Uninterrupted;

impl Interrupt for Uninterrupted {
    fn interrupted(&self) -> bool {
        false
    }
}

impl Interrupt for AtomicBool {
    fn interrupted(&self) -> bool {
        self.load(Ordering::Acquire)
    }
}

impl<I: Interrupt + Send> Interrupt for Arc<I> {
    fn interrupted(&self) -> bool {
        (**self).interrupted()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Testing,
    Shrinking,
}

/// Per-evaluation state handed to a property body.
pub struct EvalContext<'a> {
    interrupt: &'a dyn Interrupt,
    phase: Phase,
    registered: usize,
}

impl<'a> EvalContext<'a> {
    pub fn new(interrupt: &'a dyn Interrupt, phase: Phase) -> Self {
        EvalContext { interrupt, phase, registered: 0 }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_interrupted(&self) -> bool {
        self.interrupt.interrupted()
    }

    /// Returns `Err(Aborted)` once the runtime has asked this evaluation to stop.
    pub fn checkpoint(&self) -> Result<(), Aborted> {
        if self.is_interrupted() {
            Err(Aborted::new())
        } else {
            Ok(())
        }
    }

    /// Sleeps for `dur`, waking early with `Err(Aborted)` on interruption.
    pub fn pause(&self, dur: Duration) -> Result<(), Aborted> {
        let deadline = Instant::now() + dur;
        loop {
            self.checkpoint()?;
            let now = Instant::now();
            if now >= deadline {
                return Ok(());
            }
            std::thread::sleep((deadline - now).min(Duration::from_millis(1)));
        }
    }

    /// Number of handlers currently registered by enclosing `graceful` calls.
    pub fn registered_handlers(&self) -> usize {
        self.registered
    }

    /// Runs `action`; if the runtime aborts this evaluation while the action
    /// is in flight, runs `handler` exactly once and propagates the abort.
    ///
    /// A request that is already pending on entry counts as in flight, so the
    /// handler can release resources acquired before the call. When the
    /// action completes (even with a failing outcome) the handler is dropped
    /// without running. A panicking handler is logged and swallowed.
    pub fn graceful<R>(
        &mut self,
        action: impl FnOnce(&mut Self) -> Result<R, Aborted>,
        handler: impl FnOnce(),
    ) -> Result<R, Aborted> {
        self.registered += 1;
        let result = if self.is_interrupted() {
            Err(Aborted::new())
        } else {
            action(self)
        };
        self.registered -= 1;
        if result.is_err() {
            if let Err(payload) = catch_unwind(AssertUnwindSafe(handler)) {
                log::warn!("cleanup handler panicked: {}", panic_message(&*payload));
            }
        }
        result
    }
}

/// How a single evaluation ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evaluation {
    Completed(Outcome),
    Aborted,
}

type Check<T> = dyn Fn(&T, &mut EvalContext<'_>) -> Result<Outcome, Aborted> + Send + Sync;

/// A property over values of type `T`.
///
/// Effectful properties must be thread-safe: the runtime evaluates them
/// concurrently.
pub struct Property<T> {
    check: Arc<Check<T>>,
}

impl<T> Clone for Property<T> {
    fn clone(&self) -> Self {
        Property { check: Arc::clone(&self.check) }
    }
}

impl<T> fmt::Debug for Property<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Property")
    }
}

impl<T: 'static> Property<T> {
    pub fn new(
        check: impl Fn(&T, &mut EvalContext<'_>) -> Result<Outcome, Aborted> + Send + Sync + 'static,
    ) -> Self {
        Property { check: Arc::new(check) }
    }

    pub fn pure(check: impl Fn(&T) -> Outcome + Send + Sync + 'static) -> Self {
        Property::new(move |t, _| Ok(check(t)))
    }

    pub fn predicate(check: impl Fn(&T) -> bool + Send + Sync + 'static) -> Self {
        Property::new(move |t, _| Ok(Outcome::from_bool(check(t))))
    }

    /// Evaluates once. Panics in the body become failures.
    pub fn evaluate(&self, value: &T, interrupt: &dyn Interrupt, phase: Phase) -> Evaluation {
        let mut ctx = EvalContext::new(interrupt, phase);
        match catch_unwind(AssertUnwindSafe(|| (self.check)(value, &mut ctx))) {
            Ok(Ok(outcome)) => Evaluation::Completed(outcome),
            Ok(Err(Aborted { .. })) => Evaluation::Aborted,
            Err(payload) => Evaluation::Completed(Outcome::Fail(format!(
                "panicked: {}",
                panic_message(&*payload)
            ))),
        }
    }

    /// Evaluates without any possibility of interruption.
    pub fn outcome(&self, value: &T) -> Outcome {
        match self.evaluate(value, &Uninterrupted, Phase::Shrinking) {
            Evaluation::Completed(o) => o,
            Evaluation::Aborted => unreachable!("uninterruptible evaluation aborted"),
        }
    }
}

pub(crate) fn panic_message(payload: &(dyn Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "<non-string panic payload>".to_string()
    }
}
