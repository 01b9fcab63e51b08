//! The parallel tester pool.
//!
//! Each tester owns a private seed and a test budget held in a shared atomic
//! counter. A tester that exhausts its own budget may steal single tests
//! from its siblings. The first counterexample (or the discard limit) is
//! published to a single-assignment cell; every tester polls a stop flag
//! before starting each test and through its evaluation context while a
//! test runs.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

use crate::gen::{Gen, Shrinker};
use crate::prop::{Evaluation, Outcome, Phase, Property};
use crate::report::Progress;
use crate::runner::seq::finish_failure;
use crate::runner::{
    compute_size, Config, ConfigError, RunReport, SizeStrategy, TestKind, TestRecord, Verdict,
};
use crate::rng::Seed;

/// The size tester `index` uses for its next test.
pub fn assign_size(index: usize, local_passed: u64, local_discards: u64, cfg: &Config) -> u64 {
    let k = cfg.num_testers as u64;
    let i = index as u64;
    let effective = match cfg.size_strategy {
        SizeStrategy::Stride => i + local_passed * k,
        SizeStrategy::Offset => i * (cfg.max_success / k) + local_passed,
    };
    compute_size(effective, local_discards, cfg)
}

fn take_one(counter: &AtomicU64) -> bool {
    counter
        .fetch_update(Ordering::AcqRel, Ordering::Acquire, |n| n.checked_sub(1))
        .is_ok()
}

/// Takes one test from the first sibling with budget left, scanning from
/// `index + 1` round-robin. Returns whether a test was taken.
pub fn steal_one(index: usize, budgets: &[AtomicU64]) -> bool {
    let k = budgets.len();
    (1..k).any(|step| take_one(&budgets[(index + step) % k]))
}

/// Initial budgets: as even as possible, remainder to the lowest indices.
pub(crate) fn split_budget(total: u64, k: usize) -> Vec<u64> {
    let k64 = k as u64;
    (0..k64)
        .map(|i| total / k64 + u64::from(i < total % k64))
        .collect()
}

/// Tester seeds; a single tester keeps the root so it matches the
/// sequential loop exactly.
pub(crate) fn tester_seeds(root: Seed, k: usize) -> Vec<Seed> {
    let mut seeds = Vec::with_capacity(k);
    let mut rest = root;
    for _ in 1..k {
        let (child, next) = rest.split();
        seeds.push(child);
        rest = next;
    }
    seeds.push(rest);
    seeds
}

enum Stop<T> {
    Failed { tester: usize, seed: Seed, size: u64, value: T, reason: String },
    GaveUp,
}

struct Pool<'a, T> {
    cfg: &'a Config,
    prop: &'a Property<T>,
    gen: &'a Gen<T>,
    budgets: Vec<AtomicU64>,
    stop: AtomicBool,
    verdict: OnceLock<Stop<T>>,
    discards: AtomicU64,
    progress: Option<&'a Progress>,
}

#[derive(Default)]
struct TesterTally {
    counted: u64,
    stolen: u64,
    discarded: u64,
    abandoned: u64,
    aborted: u64,
    trace: Vec<TestRecord>,
}

impl<T: Clone + Send + Sync + 'static> Pool<'_, T> {
    fn publish(&self, stop: Stop<T>) -> bool {
        let won = self.verdict.set(stop).is_ok();
        if won {
            self.stop.store(true, Ordering::Release);
        }
        won
    }

    fn stopped(&self) -> bool {
        self.stop.load(Ordering::Acquire)
    }

    fn acquire(&self, index: usize, tally: &mut TesterTally) -> bool {
        if take_one(&self.budgets[index]) {
            return true;
        }
        if self.cfg.steal_enabled && steal_one(index, &self.budgets) {
            tally.stolen += 1;
            return true;
        }
        false
    }

    fn tester(&self, index: usize, mut seed: Seed) -> TesterTally {
        let mut tally = TesterTally::default();
        let mut local_passed = 0u64;
        let mut local_discards = 0u64;
        'budget: while self.acquire(index, &mut tally) {
            // Hold one unit of budget until a test passes.
            loop {
                if self.stopped() {
                    break 'budget;
                }
                let size = assign_size(index, local_passed, local_discards, self.cfg);
                let (test_seed, rest) = seed.split();
                seed = rest;
                let value = self.gen.run(test_seed, size as usize);
                let evaluation = self.prop.evaluate(&value, &self.stop, Phase::Testing);
                let record = |kind| TestRecord { tester: index, seed: test_seed, size, kind };
                let outcome = match evaluation {
                    Evaluation::Aborted => {
                        tally.abandoned += 1;
                        tally.aborted += 1;
                        break 'budget;
                    }
                    Evaluation::Completed(outcome) => outcome,
                };
                match outcome {
                    Outcome::Fail(reason) => {
                        let stop = Stop::Failed { tester: index, seed: test_seed, size, value, reason };
                        if self.publish(stop) {
                            tally.counted += 1;
                            tally.trace.push(record(TestKind::Failed));
                        } else {
                            tally.abandoned += 1;
                        }
                        break 'budget;
                    }
                    _ if self.stopped() => {
                        tally.abandoned += 1;
                        break 'budget;
                    }
                    Outcome::Pass => {
                        tally.counted += 1;
                        tally.trace.push(record(TestKind::Passed));
                        local_passed += 1;
                        local_discards = 0;
                        if let Some(p) = self.progress {
                            p.add_passed();
                        }
                        continue 'budget;
                    }
                    Outcome::Discard => {
                        tally.discarded += 1;
                        tally.trace.push(record(TestKind::Discarded));
                        local_discards += 1;
                        if let Some(p) = self.progress {
                            p.add_discarded();
                        }
                        let total = self.discards.fetch_add(1, Ordering::AcqRel) + 1;
                        if total >= self.cfg.discard_limit() {
                            self.publish(Stop::GaveUp);
                            break 'budget;
                        }
                    }
                }
            }
        }
        tally
    }
}

/// Runs `cfg.num_testers` concurrent testers, then shrinks any
/// counterexample once every tester has stopped.
pub fn run_parallel<T>(
    prop: &Property<T>,
    gen: &Gen<T>,
    shrinker: &Shrinker<T>,
    cfg: &Config,
) -> Result<RunReport<T>, ConfigError>
where
    T: Clone + Send + Sync + 'static,
{
    run_with_progress(prop, gen, shrinker, cfg, None)
}

pub(crate) fn run_with_progress<T>(
    prop: &Property<T>,
    gen: &Gen<T>,
    shrinker: &Shrinker<T>,
    cfg: &Config,
    progress: Option<&Progress>,
) -> Result<RunReport<T>, ConfigError>
where
    T: Clone + Send + Sync + 'static,
{
    cfg.validate()?;
    if cfg.replay.is_some() {
        return crate::runner::seq::replay_with_progress(prop, gen, shrinker, cfg, progress);
    }
    let k = cfg.num_testers;
    let root = cfg.root_seed();
    let pool = Pool {
        cfg,
        prop,
        gen,
        budgets: split_budget(cfg.max_success, k).into_iter().map(AtomicU64::new).collect(),
        stop: AtomicBool::new(false),
        verdict: OnceLock::new(),
        discards: AtomicU64::new(0),
        progress,
    };
    let started = Instant::now();
    let seeds = tester_seeds(root, k);
    let joined: Vec<std::thread::Result<TesterTally>> = std::thread::scope(|s| {
        let pool = &pool;
        let handles: Vec<_> = seeds
            .into_iter()
            .enumerate()
            .map(|(i, seed)| {
                s.spawn(move || {
                    let tally = catch_unwind(AssertUnwindSafe(|| pool.tester(i, seed)));
                    if tally.is_err() {
                        pool.stop.store(true, Ordering::Release);
                    }
                    tally
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().and_then(|t| t)).collect()
    });
    let testing_time = started.elapsed();

    let mut report = RunReport {
        verdict: Verdict::Success,
        tests_run: 0,
        discarded: 0,
        per_tester_counts: Vec::with_capacity(k),
        stolen_runs: Vec::with_capacity(k),
        abandoned_tests: 0,
        aborted_evaluations: 0,
        failure: None,
        trace: Vec::new(),
        root_seed: root,
        testing_time,
        shrinking_time: Default::default(),
    };
    for tally in joined {
        let tally = match tally {
            Ok(t) => t,
            Err(payload) => {
                report.verdict = Verdict::InternalError(format!(
                    "tester crashed: {}",
                    crate::prop::panic_message(&*payload)
                ));
                return Ok(report);
            }
        };
        report.tests_run += tally.counted;
        report.discarded += tally.discarded;
        report.per_tester_counts.push(tally.counted);
        report.stolen_runs.push(tally.stolen);
        report.abandoned_tests += tally.abandoned;
        report.aborted_evaluations += tally.aborted;
        report.trace.extend(tally.trace);
    }
    match pool.verdict.into_inner() {
        None => {
            if report.tests_run != cfg.max_success {
                report.verdict = Verdict::InternalError(format!(
                    "budget not conserved: ran {} of {}",
                    report.tests_run, cfg.max_success
                ));
            }
        }
        Some(Stop::GaveUp) => report.verdict = Verdict::GaveUp,
        Some(Stop::Failed { tester, seed, size, value, reason }) => {
            report.verdict = Verdict::Failure;
            finish_failure(&mut report, prop, shrinker, cfg, progress, seed, size, value, reason, tester);
        }
    }
    Ok(report)
}
