//! Test loops: the sequential oracle and the parallel tester pool.

mod par;
mod seq;

use std::fmt;
use std::io::Write;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::{Gen, Shrinker};
use crate::prop::Property;
use crate::report::{Progress, Reporter};
use crate::rng::Seed;
use crate::shrink::{ShrinkReport, ShrinkStrategy};

pub use par::{assign_size, run_parallel, steal_one};
pub use seq::{replay, run_sequential};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeStrategy {
    /// Tester `i` of `k` takes pass-ranks `i, i+k, i+2k, ...`.
    #[default]
    Stride,
    /// Tester `i` takes a contiguous block of pass-ranks.
    Offset,
}

impl fmt::Display for SizeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeStrategy::Stride => "stride",
            SizeStrategy::Offset => "offset",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub max_success: u64,
    pub max_size: u64,
    pub max_discard_ratio: u64,
    pub num_testers: usize,
    pub size_strategy: SizeStrategy,
    pub shrink_strategy: ShrinkStrategy,
    pub steal_enabled: bool,
    /// Root seed. When absent a fresh one is drawn from the clock.
    pub seed: Option<Seed>,
    pub replay: Option<(Seed, u64)>,
    pub chatty: bool,
    pub progress_period_ms: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_success: 100,
            max_size: 100,
            max_discard_ratio: 10,
            num_testers: 1,
            size_strategy: SizeStrategy::Stride,
            shrink_strategy: ShrinkStrategy::Sequential,
            steal_enabled: true,
            seed: None,
            replay: None,
            chatty: false,
            progress_period_ms: 200,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{testers} testers exceed the {max_success} test budget")]
    TooManyTesters { testers: usize, max_success: u64 },
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("max_success", self.max_success),
            ("max_size", self.max_size),
            ("max_discard_ratio", self.max_discard_ratio),
            ("num_testers", self.num_testers as u64),
            ("progress_period_ms", self.progress_period_ms),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::NotPositive(name));
        }
        if self.num_testers as u64 > self.max_success {
            return Err(ConfigError::TooManyTesters {
                testers: self.num_testers,
                max_success: self.max_success,
            });
        }
        Ok(())
    }

    pub fn discard_limit(&self) -> u64 {
        self.max_discard_ratio.saturating_mul(self.max_success)
    }

    fn root_seed(&self) -> Seed {
        self.seed.unwrap_or_else(Seed::from_entropy)
    }
}

/// The size for the next test.
///
/// Grows linearly with the number of passed tests so that `max_success`
/// passes visit every size in `0..max_size`, plus one for every ten
/// consecutive discards, capped at `max_size - 1`.
pub fn compute_size(passed: u64, discards_since_last_pass: u64, cfg: &Config) -> u64 {
    let linear = (u128::from(passed) * u128::from(cfg.max_size) / u128::from(cfg.max_success)) as u64;
    linear
        .saturating_add(discards_since_last_pass / 10)
        .min(cfg.max_size - 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Success,
    GaveUp,
    Failure,
    InternalError(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestKind {
    Passed,
    Discarded,
    Failed,
}

/// One executed test whose result counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TestRecord {
    pub tester: usize,
    pub seed: Seed,
    pub size: u64,
    pub kind: TestKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure<T> {
    /// Seed and size that reproduce `original` through the generator.
    pub seed: Seed,
    pub size: u64,
    pub original: T,
    pub reason: String,
    pub tester: usize,
    pub shrink: ShrinkReport<T>,
}

impl<T> Failure<T> {
    pub fn counterexample(&self) -> &T {
        &self.shrink.final_value
    }
}

#[derive(Clone, Debug)]
pub struct RunReport<T> {
    pub verdict: Verdict,
    /// Passing tests plus the failing one, if any.
    pub tests_run: u64,
    pub discarded: u64,
    pub per_tester_counts: Vec<u64>,
    pub stolen_runs: Vec<u64>,
    /// Tests in flight when the run stopped; their results were dropped.
    pub abandoned_tests: u64,
    /// Evaluations that stopped through the runtime's abort, testing and
    /// shrinking together.
    pub aborted_evaluations: u64,
    pub failure: Option<Failure<T>>,
    pub trace: Vec<TestRecord>,
    pub root_seed: Seed,
    pub testing_time: Duration,
    pub shrinking_time: Duration,
}

impl<T> RunReport<T> {
    pub fn sizes_used(&self) -> Vec<u64> {
        self.trace.iter().map(|r| r.size).collect()
    }

    pub fn is_success(&self) -> bool {
        self.verdict == Verdict::Success
    }
}

/// Runs `prop` under `cfg`: a single replayed test when `cfg.replay` is set,
/// the sequential loop for one tester, the parallel pool otherwise.
///
/// With `cfg.chatty`, progress lines go to stderr.
pub fn check<T>(
    prop: &Property<T>,
    gen: &Gen<T>,
    shrinker: &Shrinker<T>,
    cfg: &Config,
) -> Result<RunReport<T>, ConfigError>
where
    T: Clone + Send + Sync + 'static,
{
    check_with_sink(prop, gen, shrinker, cfg, std::io::stderr())
}

pub fn check_with_sink<T, W>(
    prop: &Property<T>,
    gen: &Gen<T>,
    shrinker: &Shrinker<T>,
    cfg: &Config,
    sink: W,
) -> Result<RunReport<T>, ConfigError>
where
    T: Clone + Send + Sync + 'static,
    W: Write + Send + 'static,
{
    cfg.validate()?;
    let progress = Arc::new(Progress::new());
    let reporter = cfg.chatty.then(|| {
        let p = Arc::clone(&progress);
        Reporter::spawn(
            move || p.snapshot(),
            Duration::from_millis(cfg.progress_period_ms),
            sink,
        )
    });
    let result = if cfg.replay.is_some() {
        seq::replay_with_progress(prop, gen, shrinker, cfg, Some(&progress))
    } else if cfg.num_testers == 1 {
        seq::run_with_progress(prop, gen, shrinker, cfg, Some(&progress))
    } else {
        par::run_with_progress(prop, gen, shrinker, cfg, Some(&progress))
    };
    if let Some(r) = reporter {
        r.finish();
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_examples() {
        let cfg = Config::default();
        assert_eq!(compute_size(0, 0, &cfg), 0);
        assert_eq!(compute_size(99, 0, &cfg), 99);
        assert_eq!(compute_size(10, 25, &cfg), 12);
        assert_eq!(compute_size(50, 0, &cfg), 50);
        assert_eq!(compute_size(99, 500, &cfg), 99);
    }

    #[test]
    fn sizes_cover_range_once() {
        let cfg = Config::default();
        let sizes: Vec<u64> = (0..100).map(|p| compute_size(p, 0, &cfg)).collect();
        assert_eq!(sizes, (0..100).collect::<Vec<_>>());
        let cfg = Config { max_success: 400, ..Config::default() };
        let mut seen: Vec<u64> = (0..400).map(|p| compute_size(p, 0, &cfg)).collect();
        seen.dedup();
        assert_eq!(seen, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn config_validation() {
        assert!(Config::default().validate().is_ok());
        assert_eq!(
            Config { max_success: 0, ..Config::default() }.validate(),
            Err(ConfigError::NotPositive("max_success"))
        );
        assert!(matches!(
            Config { num_testers: 101, ..Config::default() }.validate(),
            Err(ConfigError::TooManyTesters { .. })
        ));
    }
}
