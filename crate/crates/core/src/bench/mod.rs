//! Benchmark matrix, CSV rows and summaries.

pub mod cases;

use std::collections::HashSet;
use std::fmt::{self, Debug};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::Constructors;
use crate::runner::{check, replay, Config, ConfigError, SizeStrategy, Verdict};
use crate::rng::Seed;
use crate::shrink::{shrink, ShrinkStrategy};

pub use cases::{constant, effectful_tmp, expr_bug, slow_pure, BenchCase, ScratchStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchName {
    Constant,
    SlowPure,
    ExprBug,
    EffectfulTmp,
}

impl BenchName {
    pub const ALL: [BenchName; 4] =
        [BenchName::Constant, BenchName::SlowPure, BenchName::ExprBug, BenchName::EffectfulTmp];

    pub fn as_str(&self) -> &'static str {
        match self {
            BenchName::Constant => "constant",
            BenchName::SlowPure => "slow_pure",
            BenchName::ExprBug => "expr_bug",
            BenchName::EffectfulTmp => "effectful_tmp",
        }
    }
}

impl fmt::Display for BenchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchName {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| BenchError::UnknownBench(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchPhase {
    Test,
    FindBug,
    Shrink,
}

impl fmt::Display for BenchPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BenchPhase::Test => "test",
            BenchPhase::FindBug => "find_bug",
            BenchPhase::Shrink => "shrink",
        })
    }
}

/// One CSV row. Empty cells mean "not applicable".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub benchmark: BenchName,
    pub cores: usize,
    pub size_strategy: SizeStrategy,
    pub shrink_strategy: ShrinkStrategy,
    pub repetition: usize,
    pub phase: BenchPhase,
    pub wall_ms: f64,
    pub tests_run: Option<u64>,
    pub shrink_steps: Option<u64>,
    pub candidates_evaluated: Option<u64>,
    pub abandoned: Option<u64>,
    pub efficiency: Option<f64>,
    pub result_size: Option<usize>,
}

pub const CSV_HEADER: [&str; 13] = [
    "benchmark",
    "cores",
    "size_strategy",
    "shrink_strategy",
    "repetition",
    "phase",
    "wall_ms",
    "tests_run",
    "shrink_steps",
    "candidates_evaluated",
    "abandoned",
    "efficiency",
    "result_size",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark {0:?}")]
    UnknownBench(String),
    #[error("{bench}: no failing test found in {attempts} attempts; is the bug reachable?")]
    BugUnreachable { bench: BenchName, attempts: u64 },
    #[error("{bench}: a recorded failing seed {seed} size {size} no longer fails")]
    ReplayMismatch { bench: BenchName, seed: Seed, size: u64 },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// What to run.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub cores: Vec<usize>,
    pub shrink: ShrinkStrategy,
    pub size: SizeStrategy,
    pub reps: usize,
    pub seed: Seed,
    pub plant_bug: bool,
    /// Overrides each benchmark's own test count.
    pub tests: Option<u64>,
    pub chatty: bool,
}

impl Default for Matrix {
    fn default() -> Self {
        Matrix {
            cores: vec![1],
            shrink: ShrinkStrategy::Sequential,
            size: SizeStrategy::Stride,
            reps: 5,
            seed: Seed::new(0),
            plant_bug: false,
            tests: None,
            chatty: false,
        }
    }
}

/// A row plus the values behind it.
#[derive(Clone, Debug)]
pub struct Cell {
    pub row: BenchRow,
    /// Pretty-printed final counterexample, for shrink and find_bug rows.
    pub counterexample: Option<String>,
    /// `(seed, size)` of the counterexample before shrinking.
    pub replay: Option<(Seed, u64)>,
    pub internal_error: Option<String>,
}

impl Cell {
    pub fn counterexample_hash(&self) -> Option<u64> {
        self.counterexample.as_ref().map(|c| {
            let mut h = DefaultHasher::new();
            c.hash(&mut h);
            h.finish()
        })
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn rep_seeds(root: Seed, reps: usize) -> Vec<Seed> {
    root.children().take(reps).collect()
}

/// `n` distinct `(seed, size)` pairs that each fail on replay.
///
/// Candidate seeds come from splitting `root`; sizes cycle through
/// `0..max_size`.
pub fn collect_failing_seeds<T>(
    case: &BenchCase<T>,
    n: usize,
    root: Seed,
) -> Result<Vec<(Seed, u64)>, BenchError>
where
    T: 'static,
{
    let max_size = Config::default().max_size;
    let attempts = (n as u64).saturating_mul(1000).max(10_000);
    let mut found = Vec::with_capacity(n);
    let mut seen = HashSet::new();
    if n == 0 {
        return Ok(found);
    }
    for (i, seed) in root.children().take(attempts as usize).enumerate() {
        let size = i as u64 % max_size;
        let value = case.generator.run(seed, size as usize);
        if case.property.outcome(&value).is_fail() && seen.insert(seed) {
            found.push((seed, size));
            if found.len() == n {
                return Ok(found);
            }
        }
    }
    Err(BenchError::BugUnreachable { bench: case.name, attempts })
}

impl<T> BenchCase<T>
where
    T: Clone + Debug + Constructors + Send + Sync + 'static,
{
    fn config(&self, m: &Matrix, cores: usize, seed: Seed) -> Config {
        Config {
            max_success: m.tests.unwrap_or(self.default_tests),
            num_testers: cores,
            size_strategy: m.size,
            shrink_strategy: m.shrink,
            seed: Some(seed),
            chatty: m.chatty,
            ..Config::default()
        }
    }

    fn row(&self, m: &Matrix, cores: usize, rep: usize, phase: BenchPhase, wall: Duration) -> BenchRow {
        BenchRow {
            benchmark: self.name,
            cores,
            size_strategy: m.size,
            shrink_strategy: m.shrink,
            repetition: rep,
            phase,
            wall_ms: ms(wall),
            tests_run: None,
            shrink_steps: None,
            candidates_evaluated: None,
            abandoned: None,
            efficiency: None,
            result_size: None,
        }
    }

    /// Runs every cell of the matrix for this benchmark.
    pub fn run_matrix(&self, m: &Matrix) -> Result<Vec<Cell>, BenchError> {
        let planted = m.plant_bug && self.planted_bug;
        let seeds = rep_seeds(m.seed, m.reps);
        let failing = if planted { collect_failing_seeds(self, m.reps, m.seed)? } else { Vec::new() };
        let mut cells = Vec::new();
        for &cores in &m.cores {
            for (rep, &seed) in seeds.iter().enumerate() {
                if !planted {
                    cells.push(self.test_cell(m, cores, rep, seed)?);
                } else {
                    cells.push(self.find_bug_cell(m, cores, rep, seed)?);
                    cells.push(self.shrink_cell(m, cores, rep, failing[rep])?);
                }
            }
        }
        Ok(cells)
    }

    fn test_cell(&self, m: &Matrix, cores: usize, rep: usize, seed: Seed) -> Result<Cell, BenchError> {
        let cfg = self.config(m, cores, seed);
        let started = Instant::now();
        let report = check(&self.property, &self.generator, &self.shrinker, &cfg)?;
        let mut row = self.row(m, cores, rep, BenchPhase::Test, started.elapsed());
        row.tests_run = Some(report.tests_run);
        let internal_error = match &report.verdict {
            Verdict::InternalError(e) => Some(e.clone()),
            _ => None,
        };
        let failure = report.failure.as_ref();
        if let Some(f) = failure {
            row.shrink_steps = Some(f.shrink.successful_shrinks);
            row.candidates_evaluated = Some(f.shrink.candidates_evaluated);
            row.abandoned = Some(f.shrink.abandoned_evaluations);
            row.efficiency = f.shrink.efficiency().map(|e| e.value());
            row.result_size = Some(f.counterexample().constructors());
        }
        Ok(Cell {
            row,
            counterexample: failure.map(|f| format!("{:?}", f.counterexample())),
            replay: failure.map(|f| (f.seed, f.size)),
            internal_error,
        })
    }

    fn find_bug_cell(&self, m: &Matrix, cores: usize, rep: usize, seed: Seed) -> Result<Cell, BenchError> {
        let cfg = self.config(m, cores, seed);
        // Detection only; shrinking is measured from the recorded seeds.
        let no_shrink = crate::gen::Shrinker::none();
        let report = check(&self.property, &self.generator, &no_shrink, &cfg)?;
        let mut row = self.row(m, cores, rep, BenchPhase::FindBug, report.testing_time);
        row.tests_run = Some(report.tests_run);
        let failure = report.failure.as_ref();
        row.result_size = failure.map(|f| f.original.constructors());
        Ok(Cell {
            row,
            counterexample: failure.map(|f| format!("{:?}", f.original)),
            replay: failure.map(|f| (f.seed, f.size)),
            internal_error: match report.verdict {
                Verdict::InternalError(e) => Some(e),
                _ => None,
            },
        })
    }

    fn shrink_cell(
        &self,
        m: &Matrix,
        cores: usize,
        rep: usize,
        (seed, size): (Seed, u64),
    ) -> Result<Cell, BenchError> {
        let original = self.generator.run(seed, size as usize);
        if !self.property.outcome(&original).is_fail() {
            return Err(BenchError::ReplayMismatch { bench: self.name, seed, size });
        }
        let started = Instant::now();
        let shrunk = shrink(m.shrink, &self.property, &self.shrinker, original, cores);
        let wall = started.elapsed();
        let mut row = self.row(m, cores, rep, BenchPhase::Shrink, wall);
        match shrunk {
            Ok(r) => {
                row.shrink_steps = Some(r.successful_shrinks);
                row.candidates_evaluated = Some(r.candidates_evaluated);
                row.abandoned = Some(r.abandoned_evaluations);
                row.efficiency = r.efficiency().map(|e| e.value());
                row.result_size = Some(r.final_value.constructors());
                Ok(Cell {
                    row,
                    counterexample: Some(format!("{:?}", r.final_value)),
                    replay: Some((seed, size)),
                    internal_error: None,
                })
            }
            Err(e) => Ok(Cell {
                row,
                counterexample: None,
                replay: Some((seed, size)),
                internal_error: Some(e.to_string()),
            }),
        }
    }

    /// Replays one `(seed, size)` pair with full reporting.
    pub fn replay_report(&self, m: &Matrix, cores: usize, seed: Seed, size: u64) -> Result<String, BenchError> {
        let cfg = Config { replay: Some((seed, size)), ..self.config(m, cores, seed) };
        let report = replay(&self.property, &self.generator, &self.shrinker, &cfg)?;
        Ok(crate::report::render(&report, false))
    }
}

/// A type-erased benchmark.
pub trait Bench {
    fn name(&self) -> BenchName;
    fn run_matrix(&self, m: &Matrix) -> Result<Vec<Cell>, BenchError>;
    fn replay_report(&self, m: &Matrix, cores: usize, seed: Seed, size: u64) -> Result<String, BenchError>;
}

impl<T> Bench for BenchCase<T>
where
    T: Clone + Debug + Constructors + Send + Sync + 'static,
{
    fn name(&self) -> BenchName {
        self.name
    }

    fn run_matrix(&self, m: &Matrix) -> Result<Vec<Cell>, BenchError> {
        BenchCase::run_matrix(self, m)
    }

    fn replay_report(&self, m: &Matrix, cores: usize, seed: Seed, size: u64) -> Result<String, BenchError> {
        BenchCase::replay_report(self, m, cores, seed, size)
    }
}

/// Keeps an effectful case's scratch directory alive alongside it.
struct WithScratch<B> {
    case: B,
    _scratch: Arc<ScratchStats>,
}

impl<B: Bench> Bench for WithScratch<B> {
    fn name(&self) -> BenchName {
        self.case.name()
    }

    fn run_matrix(&self, m: &Matrix) -> Result<Vec<Cell>, BenchError> {
        self.case.run_matrix(m)
    }

    fn replay_report(&self, m: &Matrix, cores: usize, seed: Seed, size: u64) -> Result<String, BenchError> {
        self.case.replay_report(m, cores, seed, size)
    }
}

/// Builds a benchmark by name.
pub fn bench_case(name: BenchName, plant_bug: bool) -> Result<Box<dyn Bench>, BenchError> {
    Ok(match name {
        BenchName::Constant => Box::new(constant()),
        BenchName::SlowPure => Box::new(slow_pure(plant_bug)),
        BenchName::ExprBug => Box::new(expr_bug(plant_bug)),
        BenchName::EffectfulTmp => {
            let (case, scratch) = effectful_tmp(plant_bug)?;
            Box::new(WithScratch { case, _scratch: scratch })
        }
    })
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Median by sorting; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Median wall time per (benchmark, cores, strategies, phase), in first
/// appearance order.
pub fn summarize(rows: &[BenchRow]) -> Vec<(String, f64, usize)> {
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for r in rows {
        let key = format!(
            "{} cores={} size={} shrink={} phase={}",
            r.benchmark, r.cores, r.size_strategy, r.shrink_strategy, r.phase
        );
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.wall_ms),
            None => groups.push((key, vec![r.wall_ms])),
        }
    }
    groups
        .into_iter()
        .map(|(k, v)| {
            let n = v.len();
            (k, median(&v).expect("non-empty group"), n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_small_cases() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0]), Some(3.0));
        assert_eq!(median(&[5.0, 1.0, 3.0]), Some(3.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
    }

    proptest! {
        #[test]
        fn median_matches_reference(values in proptest::collection::vec(-1e6f64..1e6, 1..40)) {
            // Reference: count-based selection without sorting the input.
            let below = |x: f64| values.iter().filter(|&&v| v < x).count();
            let at_most = |x: f64| values.iter().filter(|&&v| v <= x).count();
            let n = values.len();
            let kth = |k: usize| *values.iter().find(|&&x| below(x) <= k && k < at_most(x)).unwrap();
            let expect = if n % 2 == 1 { kth(n / 2) } else { (kth(n / 2 - 1) + kth(n / 2)) / 2.0 };
            prop_assert_eq!(median(&values), Some(expect));
        }
    }

    #[test]
    fn csv_schema() {
        let row = BenchRow {
            benchmark: BenchName::ExprBug,
            cores: 4,
            size_strategy: SizeStrategy::Stride,
            shrink_strategy: ShrinkStrategy::Deterministic,
            repetition: 2,
            phase: BenchPhase::Shrink,
            wall_ms: 1.5,
            tests_run: None,
            shrink_steps: Some(3),
            candidates_evaluated: Some(8),
            abandoned: Some(1),
            efficiency: Some(0.375),
            result_size: Some(5),
        };
        let mut out = Vec::new();
        write_csv(&[row], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "expr_bug,4,stride,det,2,shrink,1.5,,3,8,1,0.375,5");
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn bench_names_parse() {
        for b in BenchName::ALL {
            assert_eq!(b.as_str().parse::<BenchName>().unwrap(), b);
        }
        assert!(matches!("nope".parse::<BenchName>(), Err(BenchError::UnknownBench(_))));
    }

    #[test]
    fn failing_seeds_replay_and_are_distinct() {
        let case = expr_bug(true);
        assert!(collect_failing_seeds(&case, 0, Seed::new(1)).unwrap().is_empty());
        let pairs = collect_failing_seeds(&case, 50, Seed::new(1)).unwrap();
        assert_eq!(pairs.len(), 50);
        let distinct: HashSet<_> = pairs.iter().collect();
        assert_eq!(distinct.len(), 50);
        for (seed, size) in pairs {
            assert!(case.property.outcome(&case.generator.run(seed, size as usize)).is_fail());
        }
    }

    #[test]
    fn unreachable_bug_is_reported() {
        let case = expr_bug(false);
        assert!(matches!(
            collect_failing_seeds(&case, 1, Seed::new(1)),
            Err(BenchError::BugUnreachable { .. })
        ));
    }
}
