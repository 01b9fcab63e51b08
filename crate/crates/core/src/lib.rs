//! A parallel property-based testing runtime.
//!
//! Properties are checked by a pool of concurrent testers, each with its own
//! split seed and a stealable share of the test budget. Failures are
//! minimized sequentially, deterministically in parallel (same result as the
//! sequential loop), or greedily in parallel (first failure wins).
//!
//! ```
//! use parqc::{check, gen_int, Config, Property, Seed, Shrinker, Verdict};
//!
//! let prop = Property::predicate(|n: &i64| *n < 500);
//! let cfg = Config { num_testers: 2, seed: Some(Seed::new(1)), ..Config::default() };
//! let report = check(&prop, &gen_int(0, 1000).unwrap(), &Shrinker::int(), &cfg).unwrap();
//! assert_eq!(report.verdict, Verdict::Failure);
//! assert_eq!(report.failure.unwrap().counterexample(), &500);
//! ```

pub mod bench;
pub mod expr;
pub mod gen;
pub mod prop;
pub mod report;
pub mod rng;
pub mod runner;
pub mod shrink;

pub use expr::{gen_expr, shrink_expr, Expr};
pub use gen::{gen_int, gen_list, shrink_int, shrink_list, Constructors, Gen, Shrinker};
pub use prop::{precondition, Aborted, EvalContext, Evaluation, Interrupt, Outcome, Phase, Property};
pub use report::{render, Progress, ProgressSnapshot, Reporter};
pub use rng::{Seed, SeedError};
pub use runner::{
    assign_size, check, check_with_sink, compute_size, replay, run_parallel, run_sequential,
    steal_one, Config, ConfigError, Failure, RunReport, SizeStrategy, TestKind, TestRecord, Verdict,
};
pub use shrink::{
    efficiency, shrink, shrink_deterministic, shrink_greedy, shrink_sequential, Efficiency,
    ShrinkError, ShrinkReport, ShrinkStrategy,
};
