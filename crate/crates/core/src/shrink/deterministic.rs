use crate::gen::Shrinker;
use crate::prop::{Evaluation, Outcome, Property};
use crate::shrink::board::{self, classify, Claim, Disposition, Job, Level, ShrinkBoard};
use crate::shrink::{ShrinkError, ShrinkReport};

/// Sequential-equivalent parallel shrinking.
///
/// A failure at index `j` of the main level commits only once every index
/// below `j` has passed. Until then idle workers speculate on the children of
/// candidate `j` (one level deep). A failure found below `j` discards the
/// speculation wholesale; when `j` does commit, the speculative level is
/// promoted with the results it already holds.
pub struct DeterministicBoard<T> {
    shrinker: Shrinker<T>,
    main: Level<T>,
    /// Children of `main.candidates[main.lowest_fail]`.
    speculation: Option<Level<T>>,
    next_epoch: u64,
    report: ShrinkReport<T>,
}

impl<T: Clone + 'static> DeterministicBoard<T> {
    pub fn new(shrinker: Shrinker<T>, c0: T) -> Self {
        let main = Level::new(0, shrinker.candidates(&c0));
        DeterministicBoard {
            shrinker,
            main,
            speculation: None,
            next_epoch: 1,
            report: ShrinkReport::start(c0),
        }
    }

    pub fn current(&self) -> &T {
        &self.report.final_value
    }

    /// Epoch of the speculative level, if one is open.
    pub fn speculation_epoch(&self) -> Option<u64> {
        self.speculation.as_ref().map(|l| l.id)
    }

    fn fresh_level(&mut self, parent: &T) -> Level<T> {
        let level = Level::new(self.next_epoch, self.shrinker.candidates(parent));
        self.next_epoch += 1;
        level
    }

    fn drop_speculation(&mut self) {
        if let Some(mut spec) = self.speculation.take() {
            spec.cancel_all();
        }
    }

    /// Commits as long as the lowest known failure has an all-pass prefix,
    /// then opens speculation on whatever failure remains pending.
    fn settle_commits(&mut self) {
        while let Some(j) = self.main.lowest_fail {
            if !self.main.prefix_passed(j) {
                break;
            }
            let winner = self.main.candidates[j].clone();
            let reason = self.main.reason(j);
            self.main.cancel_all();
            self.report.commit(winner.clone(), reason);
            self.main = match self.speculation.take() {
                Some(spec) => spec,
                None => self.fresh_level(&winner),
            };
        }
        if let (Some(j), None) = (self.main.lowest_fail, &self.speculation) {
            let anchor = self.main.candidates[j].clone();
            self.speculation = Some(self.fresh_level(&anchor));
        }
    }
}

impl<T: Clone + 'static> ShrinkBoard<T> for DeterministicBoard<T> {
    fn claim(&mut self) -> Claim<T> {
        if let Some(job) = self.main.claim() {
            return Claim::Job(job);
        }
        if let Some(job) = self.speculation.as_mut().and_then(Level::claim) {
            return Claim::Job(job);
        }
        if self.main.all_passed() {
            Claim::Done
        } else {
            Claim::Wait
        }
    }

    fn report(&mut self, job: &Job<T>, evaluation: Evaluation) {
        let on_main = job.epoch == self.main.id;
        let on_spec = self.speculation.as_ref().is_some_and(|s| s.id == job.epoch);
        let disposition = classify(job, evaluation, on_main || on_spec, &mut self.report);
        let outcome = match disposition {
            Some(Disposition::Abandoned) => return,
            Some(Disposition::Live(outcome)) => outcome,
            None => {
                let level = if on_main { &mut self.main } else { self.speculation.as_mut().unwrap() };
                level.requeue(job.index);
                return;
            }
        };
        if on_spec {
            let spec = self.speculation.as_mut().expect("checked above");
            spec.settle(job.index, &outcome);
            if outcome.is_fail() {
                spec.mark_failure(job.index);
            }
            return;
        }
        self.main.settle(job.index, &outcome);
        if let Outcome::Fail(_) = outcome {
            if self.main.mark_failure(job.index) {
                self.drop_speculation();
            }
        }
        self.settle_commits();
    }

    fn successes(&self) -> u64 {
        self.report.successful_shrinks
    }

    fn finish(self) -> ShrinkReport<T> {
        self.report
    }
}

/// Parallel shrinking that ends on exactly the sequential loop's result.
///
/// `final_value` and `committed_path` equal those of
/// [`shrink_sequential`](crate::shrink::shrink_sequential) for every worker
/// count; only the evaluation counts may differ.
pub fn shrink_deterministic<T>(
    prop: &Property<T>,
    shrinker: &Shrinker<T>,
    c0: T,
    workers: usize,
) -> Result<ShrinkReport<T>, ShrinkError>
where
    T: Clone + Send + Sync + 'static,
{
    board::drive(DeterministicBoard::new(shrinker.clone(), c0), prop, workers, None)
}
