use std::time::Instant;

use crate::gen::{Gen, Shrinker};
use crate::prop::{Evaluation, Outcome, Phase, Property, Uninterrupted};
use crate::report::Progress;
use crate::runner::{
    compute_size, Config, ConfigError, Failure, RunReport, TestKind, TestRecord, Verdict,
};
use crate::rng::Seed;
use crate::shrink::shrink_with_progress;

/// The single-threaded test loop.
pub fn run_sequential<T>(
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
    let root = cfg.root_seed();
    let started = Instant::now();
    let mut seed = root;
    let mut passed = 0u64;
    let mut discards_since_pass = 0u64;
    let mut total_discards = 0u64;
    let mut trace = Vec::new();
    let mut found = None;

    let verdict = loop {
        if passed >= cfg.max_success {
            break Verdict::Success;
        }
        let size = compute_size(passed, discards_since_pass, cfg);
        let (test_seed, rest) = seed.split();
        seed = rest;
        let value = gen.run(test_seed, size as usize);
        let outcome = match prop.evaluate(&value, &Uninterrupted, Phase::Testing) {
            Evaluation::Completed(o) => o,
            Evaluation::Aborted => unreachable!("uninterruptible evaluation aborted"),
        };
        let record = |kind| TestRecord { tester: 0, seed: test_seed, size, kind };
        match outcome {
            Outcome::Pass => {
                trace.push(record(TestKind::Passed));
                passed += 1;
                discards_since_pass = 0;
                if let Some(p) = progress {
                    p.add_passed();
                }
            }
            Outcome::Discard => {
                trace.push(record(TestKind::Discarded));
                discards_since_pass += 1;
                total_discards += 1;
                if let Some(p) = progress {
                    p.add_discarded();
                }
                if total_discards >= cfg.discard_limit() {
                    break Verdict::GaveUp;
                }
            }
            Outcome::Fail(reason) => {
                trace.push(record(TestKind::Failed));
                found = Some((test_seed, size, value, reason));
                break Verdict::Failure;
            }
        }
    };
    let testing_time = started.elapsed();
    let tests_run = passed + u64::from(found.is_some());
    let mut report = RunReport {
        verdict,
        tests_run,
        discarded: total_discards,
        per_tester_counts: vec![tests_run],
        stolen_runs: vec![0],
        abandoned_tests: 0,
        aborted_evaluations: 0,
        failure: None,
        trace,
        root_seed: root,
        testing_time,
        shrinking_time: Default::default(),
    };
    if let Some((seed, size, value, reason)) = found {
        finish_failure(&mut report, prop, shrinker, cfg, progress, seed, size, value, reason, 0);
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_failure<T>(
    report: &mut RunReport<T>,
    prop: &Property<T>,
    shrinker: &Shrinker<T>,
    cfg: &Config,
    progress: Option<&Progress>,
    seed: Seed,
    size: u64,
    original: T,
    reason: String,
    tester: usize,
) where
    T: Clone + Send + Sync + 'static,
{
    if let Some(p) = progress {
        p.enter_shrinking();
    }
    let started = Instant::now();
    let shrunk = shrink_with_progress(
        cfg.shrink_strategy,
        prop,
        shrinker,
        original.clone(),
        cfg.num_testers,
        progress,
    );
    report.shrinking_time = started.elapsed();
    match shrunk {
        Ok(shrink) => {
            report.aborted_evaluations += shrink.aborted_evaluations;
            report.failure = Some(Failure { seed, size, original, reason, tester, shrink });
        }
        Err(e) => report.verdict = Verdict::InternalError(e.to_string()),
    }
}

/// Runs the single test identified by `cfg.replay`, shrinking on failure.
pub fn replay<T>(
    prop: &Property<T>,
    gen: &Gen<T>,
    shrinker: &Shrinker<T>,
    cfg: &Config,
) -> Result<RunReport<T>, ConfigError>
where
    T: Clone + Send + Sync + 'static,
{
    replay_with_progress(prop, gen, shrinker, cfg, None)
}

pub(crate) fn replay_with_progress<T>(
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
    let (seed, size) = cfg.replay.ok_or(ConfigError::NotPositive("replay"))?;
    let started = Instant::now();
    let value = gen.run(seed, size as usize);
    let outcome = prop.outcome(&value);
    let kind = match outcome {
        Outcome::Pass => TestKind::Passed,
        Outcome::Discard => TestKind::Discarded,
        Outcome::Fail(_) => TestKind::Failed,
    };
    let mut report = RunReport {
        verdict: match kind {
            TestKind::Passed => Verdict::Success,
            TestKind::Discarded => Verdict::GaveUp,
            TestKind::Failed => Verdict::Failure,
        },
        tests_run: u64::from(kind != TestKind::Discarded),
        discarded: u64::from(kind == TestKind::Discarded),
        per_tester_counts: vec![u64::from(kind != TestKind::Discarded)],
        stolen_runs: vec![0],
        abandoned_tests: 0,
        aborted_evaluations: 0,
        failure: None,
        trace: vec![TestRecord { tester: 0, seed, size, kind }],
        root_seed: seed,
        testing_time: started.elapsed(),
        shrinking_time: Default::default(),
    };
    if let Outcome::Fail(reason) = outcome {
        finish_failure(&mut report, prop, shrinker, cfg, progress, seed, size, value, reason, 0);
    }
    Ok(report)
}
