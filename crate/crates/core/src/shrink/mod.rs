//! Counterexample shrinking.
//!
//! Three strategies share one report type:
//!
//! * [`shrink_sequential`] walks the candidate list left to right and
//!   restarts on the first failing candidate.
//! * [`shrink_deterministic`] evaluates candidates on several workers but
//!   only commits a failure once every earlier candidate is known to pass, so
//!   it always ends on the same counterexample as the sequential loop.
//! * [`shrink_greedy`] commits whichever failing candidate finishes first.
//!
//! The parallel strategies are state machines over a shared candidate board
//! (see [`board`]); worker threads only claim jobs and report results.

pub mod board;
mod deterministic;
mod greedy;


use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::Shrinker;
use crate::prop::{Outcome, Property};
use crate::report::Progress;

pub use board::{Claim, Job};
pub use deterministic::{shrink_deterministic, DeterministicBoard};
pub use greedy::{shrink_greedy, GreedyBoard};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkStrategy {
    #[default]
    #[serde(rename = "seq")]
    Sequential,
    #[serde(rename = "det")]
    Deterministic,
    Greedy,
}

impl fmt::Display for ShrinkStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShrinkStrategy::Sequential => "seq",
            ShrinkStrategy::Deterministic => "det",
            ShrinkStrategy::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShrinkError {
    #[error("successful shrinks ({successes}) exceed evaluated candidates ({evaluated})")]
    Inconsistent { successes: u64, evaluated: u64 },
    #[error("shrink worker crashed: {0}")]
    WorkerCrashed(String),
}

/// Successful shrinks over completed candidate evaluations.
#[derive(Clone, Copy, Debug, Eq, Serialize, Deserialize)]
pub struct Efficiency {
    pub successes: u64,
    pub evaluated: u64,
}

impl Efficiency {
    pub fn value(&self) -> f64 {
        self.successes as f64 / self.evaluated as f64
    }
}

impl PartialEq for Efficiency {
    // Compare as rationals.
    fn eq(&self, other: &Self) -> bool {
        u128::from(self.successes) * u128::from(other.evaluated)
            == u128::from(other.successes) * u128::from(self.evaluated)
    }
}

impl fmt::Display for Efficiency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.successes, self.evaluated)
    }
}

/// `successes / evaluated`, absent when nothing was evaluated.
pub fn efficiency(successes: u64, evaluated: u64) -> Result<Option<Efficiency>, ShrinkError> {
    if successes > evaluated {
        return Err(ShrinkError::Inconsistent { successes, evaluated });
    }
    Ok((evaluated > 0).then_some(Efficiency { successes, evaluated }))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShrinkReport<T> {
    pub final_value: T,
    /// Failure message of `final_value`; `None` when nothing was committed.
    pub final_reason: Option<String>,
    pub successful_shrinks: u64,
    /// Completed evaluations whose result was recorded.
    pub candidates_evaluated: u64,
    /// Evaluations cancelled or made irrelevant before their result counted.
    pub abandoned_evaluations: u64,
    /// Abandoned evaluations that actually stopped early through an abort.
    pub aborted_evaluations: u64,
    pub committed_path: Vec<T>,
}

impl<T> ShrinkReport<T> {
    pub(crate) fn start(c0: T) -> Self {
        ShrinkReport {
            final_value: c0,
            final_reason: None,
            successful_shrinks: 0,
            candidates_evaluated: 0,
            abandoned_evaluations: 0,
            aborted_evaluations: 0,
            committed_path: Vec::new(),
        }
    }

    pub fn efficiency(&self) -> Option<Efficiency> {
        efficiency(self.successful_shrinks, self.candidates_evaluated)
            .expect("commits are always evaluations")
    }
}

impl<T: Clone> ShrinkReport<T> {
    pub(crate) fn commit(&mut self, value: T, reason: String) {
        self.committed_path.push(value.clone());
        self.final_value = value;
        self.final_reason = Some(reason);
        self.successful_shrinks += 1;
    }
}

/// The classic loop: try candidates left to right, recurse on the first
/// failure, stop at a local minimum.
///
/// Discarded candidates count as evaluated and as not failing.
pub fn shrink_sequential<T>(prop: &Property<T>, shrinker: &Shrinker<T>, c0: T) -> ShrinkReport<T>
where
    T: Clone + 'static,
{
    sequential_with_progress(prop, shrinker, c0, None)
}

pub(crate) fn sequential_with_progress<T>(
    prop: &Property<T>,
    shrinker: &Shrinker<T>,
    c0: T,
    progress: Option<&Progress>,
) -> ShrinkReport<T>
where
    T: Clone + 'static,
{
    let mut report = ShrinkReport::start(c0);
    'descend: loop {
        for candidate in shrinker.candidates(&report.final_value) {
            let outcome = prop.outcome(&candidate);
            report.candidates_evaluated += 1;
            if let Outcome::Fail(reason) = outcome {
                report.commit(candidate, reason);
                if let Some(p) = progress {
                    p.set_shrink_steps(report.successful_shrinks);
                }
                continue 'descend;
            }
        }
        return report;
    }
}

/// Dispatches on the strategy. `workers` is ignored by the sequential loop.
pub fn shrink<T>(
    strategy: ShrinkStrategy,
    prop: &Property<T>,
    shrinker: &Shrinker<T>,
    c0: T,
    workers: usize,
) -> Result<ShrinkReport<T>, ShrinkError>
where
    T: Clone + Send + Sync + 'static,
{
    shrink_with_progress(strategy, prop, shrinker, c0, workers, None)
}

pub(crate) fn shrink_with_progress<T>(
    strategy: ShrinkStrategy,
    prop: &Property<T>,
    shrinker: &Shrinker<T>,
    c0: T,
    workers: usize,
    progress: Option<&Progress>,
) -> Result<ShrinkReport<T>, ShrinkError>
where
    T: Clone + Send + Sync + 'static,
{
    match strategy {
        ShrinkStrategy::Sequential => Ok(sequential_with_progress(prop, shrinker, c0, progress)),
        ShrinkStrategy::Deterministic => board::drive(
            DeterministicBoard::new(shrinker.clone(), c0),
            prop,
            workers,
            progress,
        ),
        ShrinkStrategy::Greedy => {
            board::drive(GreedyBoard::new(shrinker.clone(), c0), prop, workers, progress)
        }
    }
}
