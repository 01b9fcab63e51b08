//! The shared candidate board used by the parallel shrink strategies.
//!
//! A board hands out [`Job`]s, one per candidate index, and absorbs their
//! results. Each board level carries a unique epoch id; every job stamps the
//! id of the level it was claimed from together with a private cancel flag.
//! The board raises that flag whenever it stops caring about a job, and a
//! report for a flagged job never touches the board's outcome state.
//!
//! Boards are plain single-threaded state machines. [`drive`] runs one
//! behind a mutex with any number of worker threads; tests can also drive a
//! board by hand to script a particular interleaving.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use crate::prop::{panic_message, Evaluation, Outcome, Phase, Property};
use crate::report::Progress;
use crate::shrink::{ShrinkError, ShrinkReport};

/// One candidate evaluation handed to a worker.
#[derive(Debug, Clone)]
pub struct Job<T> {
    pub epoch: u64,
    pub index: usize,
    pub candidate: T,
    cancel: Arc<AtomicBool>,
}

impl<T> Job<T> {
    pub fn cancelled(&self) -> bool {
        self.cancel.load(Ordering::Acquire)
    }

    pub fn interrupt(&self) -> &AtomicBool {
        &self.cancel
    }
}

#[derive(Debug)]
pub enum Claim<T> {
    Job(Job<T>),
    /// Nothing to claim right now; results still pending elsewhere.
    Wait,
    Done,
}

impl<T> Claim<T> {
    pub fn job(self) -> Option<Job<T>> {
        match self {
            Claim::Job(j) => Some(j),
            _ => None,
        }
    }
}

/// A shrink search state machine.
pub trait ShrinkBoard<T> {
    fn claim(&mut self) -> Claim<T>;
    fn report(&mut self, job: &Job<T>, evaluation: Evaluation);
    fn successes(&self) -> u64;
    fn finish(self) -> ShrinkReport<T>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Pending,
    Passed,
    Failed(String),
}

/// One candidate list: the children of some counterexample.
#[derive(Debug)]
pub(crate) struct Level<T> {
    pub id: u64,
    pub candidates: Vec<T>,
    pub slots: Vec<Slot>,
    cursor: usize,
    requeued: Vec<usize>,
    in_flight: Vec<(usize, Arc<AtomicBool>)>,
    /// Lowest index known to fail; nothing at or beyond it is handed out.
    pub lowest_fail: Option<usize>,
}

impl<T: Clone> Level<T> {
    pub fn new(id: u64, candidates: Vec<T>) -> Self {
        let slots = vec![Slot::Pending; candidates.len()];
        Level {
            id,
            candidates,
            slots,
            cursor: 0,
            requeued: Vec::new(),
            in_flight: Vec::new(),
            lowest_fail: None,
        }
    }

    fn limit(&self) -> usize {
        self.lowest_fail.unwrap_or(self.candidates.len())
    }

    pub fn claim(&mut self) -> Option<Job<T>> {
        let limit = self.limit();
        self.requeued.retain(|&i| i < limit);
        let index = if let Some(i) = self.requeued.pop() {
            i
        } else if self.cursor < limit {
            self.cursor += 1;
            self.cursor - 1
        } else {
            return None;
        };
        let cancel = Arc::new(AtomicBool::new(false));
        self.in_flight.push((index, Arc::clone(&cancel)));
        Some(Job {
            epoch: self.id,
            index,
            candidate: self.candidates[index].clone(),
            cancel,
        })
    }

    pub fn has_in_flight(&self) -> bool {
        !self.in_flight.is_empty()
    }

    pub fn exhausted(&self) -> bool {
        self.requeued.is_empty() && self.cursor >= self.limit()
    }

    /// Every candidate ran and passed.
    pub fn all_passed(&self) -> bool {
        self.lowest_fail.is_none() && self.exhausted() && self.in_flight.is_empty()
    }

    pub fn prefix_passed(&self, end: usize) -> bool {
        self.slots[..end].iter().all(|s| *s == Slot::Passed)
    }

    fn release(&mut self, index: usize) {
        if let Some(pos) = self.in_flight.iter().position(|(i, _)| *i == index) {
            self.in_flight.swap_remove(pos);
        }
    }

    /// An abort reached a job the board still wanted; hand the index out again.
    pub fn requeue(&mut self, index: usize) {
        self.release(index);
        self.requeued.push(index);
    }

    pub fn settle(&mut self, index: usize, outcome: &Outcome) {
        self.release(index);
        self.slots[index] = match outcome {
            Outcome::Fail(reason) => Slot::Failed(reason.clone()),
            Outcome::Pass | Outcome::Discard => Slot::Passed,
        };
    }

    /// Records a failure at `index` and cancels in-flight work beyond it.
    /// Returns whether `index` is the new lowest failure.
    pub fn mark_failure(&mut self, index: usize) -> bool {
        if self.lowest_fail.is_some_and(|j| j <= index) {
            return false;
        }
        self.lowest_fail = Some(index);
        self.in_flight.retain(|(i, flag)| {
            if *i > index {
                flag.store(true, Ordering::Release);
                false
            } else {
                true
            }
        });
        true
    }

    /// Cancels every in-flight job.
    pub fn cancel_all(&mut self) {
        for (_, flag) in self.in_flight.drain(..) {
            flag.store(true, Ordering::Release);
        }
    }

    pub fn reason(&self, index: usize) -> String {
        match &self.slots[index] {
            Slot::Failed(r) => r.clone(),
            _ => String::new(),
        }
    }
}

/// How a report relates to the board it was claimed from.
pub(crate) enum Disposition {
    /// Cancelled or from a discarded level; only counted as abandoned.
    Abandoned,
    Live(Outcome),
}

pub(crate) fn classify<T>(
    job: &Job<T>,
    evaluation: Evaluation,
    live: bool,
    report: &mut ShrinkReport<T>,
) -> Option<Disposition> {
    if job.cancelled() || !live {
        report.abandoned_evaluations += 1;
        if evaluation == Evaluation::Aborted {
            report.aborted_evaluations += 1;
        }
        return Some(Disposition::Abandoned);
    }
    match evaluation {
        Evaluation::Completed(outcome) => {
            report.candidates_evaluated += 1;
            Some(Disposition::Live(outcome))
        }
        Evaluation::Aborted => None,
    }
}

struct Shared<B> {
    board: Mutex<B>,
    wake: Condvar,
    crashed: AtomicBool,
}

/// Runs a board to completion on `workers` threads (inline when 1).
pub(crate) fn drive<T, B>(
    board: B,
    prop: &Property<T>,
    workers: usize,
    progress: Option<&Progress>,
) -> Result<ShrinkReport<T>, ShrinkError>
where
    T: Clone + Send + Sync + 'static,
    B: ShrinkBoard<T> + Send,
{
    let shared = Shared {
        board: Mutex::new(board),
        wake: Condvar::new(),
        crashed: AtomicBool::new(false),
    };
    let workers = workers.max(1);
    let run = || {
        catch_unwind(AssertUnwindSafe(|| work(&shared, prop, progress))).map_err(|payload| {
            shared.crashed.store(true, Ordering::Release);
            shared.wake.notify_all();
            panic_message(&*payload)
        })
    };
    let results: Vec<Result<(), String>> = if workers == 1 {
        vec![run()]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers).map(|_| s.spawn(run)).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|p| Err(panic_message(&*p))))
                .collect()
        })
    };
    if let Some(Err(msg)) = results.into_iter().find(Result::is_err) {
        return Err(ShrinkError::WorkerCrashed(msg));
    }
    let board = shared
        .board
        .into_inner()
        .map_err(|_| ShrinkError::WorkerCrashed("board lock poisoned".into()))?;
    Ok(board.finish())
}

fn work<T, B>(shared: &Shared<B>, prop: &Property<T>, progress: Option<&Progress>)
where
    T: Clone + 'static,
    B: ShrinkBoard<T>,
{
    loop {
        let job = {
            let mut board = shared.board.lock().expect("board lock poisoned");
            loop {
                if shared.crashed.load(Ordering::Acquire) {
                    return;
                }
                match board.claim() {
                    Claim::Job(job) => break job,
                    Claim::Wait => board = shared.wake.wait(board).expect("board lock poisoned"),
                    Claim::Done => {
                        shared.wake.notify_all();
                        return;
                    }
                }
            }
        };
        let evaluation = prop.evaluate(&job.candidate, job.interrupt(), Phase::Shrinking);
        let mut board = shared.board.lock().expect("board lock poisoned");
        board.report(&job, evaluation);
        if let Some(p) = progress {
            p.set_shrink_steps(board.successes());
        }
        drop(board);
        shared.wake.notify_all();
    }
}
