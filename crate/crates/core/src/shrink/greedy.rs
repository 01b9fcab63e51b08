use crate::gen::Shrinker;
use crate::prop::{Evaluation, Outcome, Property};
use crate::shrink::board::{self, classify, Claim, Disposition, Job, Level, ShrinkBoard};
use crate::shrink::{ShrinkError, ShrinkReport};

/// First failure wins: any failing report commits at once and every other
/// in-flight evaluation is abandoned.
///
/// Reports are applied in the order the board receives them, so among
/// failures that finish together the one reported first commits.
pub struct GreedyBoard<T> {
    shrinker: Shrinker<T>,
    level: Level<T>,
    next_epoch: u64,
    report: ShrinkReport<T>,
}

impl<T: Clone + 'static> GreedyBoard<T> {
    pub fn new(shrinker: Shrinker<T>, c0: T) -> Self {
        let level = Level::new(0, shrinker.candidates(&c0));
        GreedyBoard { shrinker, level, next_epoch: 1, report: ShrinkReport::start(c0) }
    }

    pub fn epoch(&self) -> u64 {
        self.level.id
    }

    pub fn current(&self) -> &T {
        &self.report.final_value
    }
}

impl<T: Clone + 'static> ShrinkBoard<T> for GreedyBoard<T> {
    fn claim(&mut self) -> Claim<T> {
        match self.level.claim() {
            Some(job) => Claim::Job(job),
            None if self.level.has_in_flight() => Claim::Wait,
            None => Claim::Done,
        }
    }

    fn report(&mut self, job: &Job<T>, evaluation: Evaluation) {
        let live = job.epoch == self.level.id;
        match classify(job, evaluation, live, &mut self.report) {
            None => self.level.requeue(job.index),
            Some(Disposition::Abandoned) => {}
            Some(Disposition::Live(outcome)) => {
                self.level.settle(job.index, &outcome);
                if let Outcome::Fail(reason) = outcome {
                    self.level.cancel_all();
                    self.report.commit(job.candidate.clone(), reason);
                    let children = self.shrinker.candidates(&job.candidate);
                    self.level = Level::new(self.next_epoch, children);
                    self.next_epoch += 1;
                }
            }
        }
    }

    fn successes(&self) -> u64 {
        self.report.successful_shrinks
    }

    fn finish(self) -> ShrinkReport<T> {
        self.report
    }
}

/// Greedy parallel shrinking on `workers` threads.
///
/// The result is a local minimum but may differ from run to run.
pub fn shrink_greedy<T>(
    prop: &Property<T>,
    shrinker: &Shrinker<T>,
    c0: T,
    workers: usize,
) -> Result<ShrinkReport<T>, ShrinkError>
where
    T: Clone + Send + Sync + 'static,
{
    board::drive(GreedyBoard::new(shrinker.clone(), c0), prop, workers, None)
}
