//! The benchmark properties.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};

use crate::bench::BenchName;
use crate::expr::{gen_expr, shrink_expr, Expr};
use crate::gen::{gen_int, gen_list, Gen, Shrinker};
use crate::prop::{Outcome, Property};

/// A property with its generator and shrinker.
pub struct BenchCase<T> {
    pub name: BenchName,
    pub property: Property<T>,
    pub generator: Gen<T>,
    pub shrinker: Shrinker<T>,
    pub planted_bug: bool,
    pub default_tests: u64,
}

impl<T> Clone for BenchCase<T> {
    fn clone(&self) -> Self {
        BenchCase {
            name: self.name,
            property: self.property.clone(),
            generator: self.generator.clone(),
            shrinker: self.shrinker.clone(),
            planted_bug: self.planted_bug,
            default_tests: self.default_tests,
        }
    }
}

/// The cheapest possible property; measures pure runtime overhead.
pub fn constant() -> BenchCase<()> {
    BenchCase {
        name: BenchName::Constant,
        property: Property::predicate(|_: &()| true),
        generator: Gen::constant(()),
        shrinker: Shrinker::none(),
        planted_bug: false,
        default_tests: 10_000,
    }
}

const SLOW_TEST: Duration = Duration::from_millis(5);

fn spin(rounds: u64) -> u64 {
    let mut x = 0x2545_f491_4f6c_dd1du64;
    for i in 0..rounds {
        x = (x ^ (x >> 29)).wrapping_mul(0xbf58_476d_1ce4_e5b9).wrapping_add(i);
    }
    x
}

/// Rounds of [`spin`] that take about 5 ms on this machine, measured once.
pub fn slow_rounds() -> u64 {
    static ROUNDS: OnceLock<u64> = OnceLock::new();
    *ROUNDS.get_or_init(|| {
        let probe = 200_000u64;
        let mut best = Duration::MAX;
        for _ in 0..5 {
            let t = Instant::now();
            std::hint::black_box(spin(std::hint::black_box(probe)));
            best = best.min(t.elapsed());
        }
        let per_round = best.as_secs_f64() / probe as f64;
        ((SLOW_TEST.as_secs_f64() / per_round) as u64).max(1)
    })
}

fn sort_list(xs: &[i64], planted: bool) -> Vec<i64> {
    if planted {
        // Bug: a set drops duplicates.
        xs.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        let mut v = xs.to_vec();
        v.sort_unstable();
        v
    }
}

/// A CPU-bound property of about 5 ms per test checking a sort routine.
/// The planted bug loses duplicate elements.
pub fn slow_pure(planted_bug: bool) -> BenchCase<Vec<i64>> {
    let rounds = slow_rounds();
    BenchCase {
        name: BenchName::SlowPure,
        property: Property::predicate(move |xs: &Vec<i64>| {
            std::hint::black_box(spin(rounds));
            let sorted = sort_list(xs, planted_bug);
            sorted.len() == xs.len() && sorted.windows(2).all(|w| w[0] <= w[1])
        }),
        generator: gen_list(gen_int(0, 50).expect("valid range")),
        shrinker: Shrinker::list(Shrinker::int()),
        planted_bug,
        default_tests: 400,
    }
}

/// Bottom-up simplifier for [`Expr`]. With `planted`, it also rewrites
/// `x * (y + z)` to `x * y + z`.
pub fn simplify(e: &Expr, planted: bool) -> Expr {
    match e {
        Expr::Lit(_) | Expr::Var(_) => e.clone(),
        Expr::Add(a, b) => match (simplify(a, planted), simplify(b, planted)) {
            (Expr::Lit(x), Expr::Lit(y)) => Expr::Lit(x.wrapping_add(y)),
            (Expr::Lit(0), y) => y,
            (x, Expr::Lit(0)) => x,
            (x, y) => Expr::add(x, y),
        },
        Expr::Mul(a, b) => match (simplify(a, planted), simplify(b, planted)) {
            (Expr::Lit(x), Expr::Lit(y)) => Expr::Lit(x.wrapping_mul(y)),
            (Expr::Lit(0), _) | (_, Expr::Lit(0)) => Expr::Lit(0),
            (Expr::Lit(1), y) => y,
            (x, Expr::Lit(1)) => x,
            (x, Expr::Add(y, z)) if planted => Expr::add(Expr::mul(x, *y), *z),
            (x, y) => Expr::mul(x, y),
        },
        Expr::IfZero(c, t, f) => match simplify(c, planted) {
            Expr::Lit(0) => simplify(t, planted),
            Expr::Lit(_) => simplify(f, planted),
            c => Expr::if_zero(c, simplify(t, planted), simplify(f, planted)),
        },
    }
}

const ENVIRONMENTS: [[i64; 3]; 4] = [[0, 0, 0], [1, 2, 3], [-2, 5, 7], [3, -1, 0]];

/// Simplification must preserve meaning under every test environment.
pub fn expr_bug(planted_bug: bool) -> BenchCase<Expr> {
    BenchCase {
        name: BenchName::ExprBug,
        property: Property::pure(move |e: &Expr| {
            let s = simplify(e, planted_bug);
            match ENVIRONMENTS.iter().find(|env| e.eval(&env[..]) != s.eval(&env[..])) {
                None => Outcome::Pass,
                Some(env) => Outcome::Fail(format!("simplified to {s}, differs under {env:?}")),
            }
        }),
        generator: gen_expr(),
        shrinker: Shrinker::new(shrink_expr),
        planted_bug,
        default_tests: 1000,
    }
}

/// Files and handler bookkeeping for [`effectful_tmp`].
#[derive(Debug)]
pub struct ScratchStats {
    root: tempfile::TempDir,
    next_id: AtomicU64,
    evaluations: AtomicU64,
    handler_runs: Mutex<HashMap<u64, u32>>,
}

impl ScratchStats {
    pub fn root(&self) -> &Path {
        self.root.path()
    }

    /// Entries left behind under the scratch root.
    pub fn orphans(&self) -> Vec<PathBuf> {
        std::fs::read_dir(self.root())
            .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
            .unwrap_or_default()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::SeqCst)
    }

    /// Total handler invocations and the largest count for one evaluation.
    pub fn handler_runs(&self) -> (u64, u32) {
        let runs = self.handler_runs.lock().unwrap();
        (runs.values().map(|&n| u64::from(n)).sum(), runs.values().copied().max().unwrap_or(0))
    }

    pub fn reset_counts(&self) {
        self.handler_runs.lock().unwrap().clear();
        self.evaluations.store(0, Ordering::SeqCst);
    }

    fn record_handler(&self, id: u64) {
        *self.handler_runs.lock().unwrap().entry(id).or_insert(0) += 1;
    }
}

const SCRATCH_WORK: Duration = Duration::from_millis(2);

fn encode(xs: &[i64], planted: bool) -> Vec<u8> {
    if planted {
        // Bug: one byte per element.
        xs.iter().map(|&x| x as u8).collect()
    } else {
        xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",").into_bytes()
    }
}

fn decode(bytes: &[u8], planted: bool) -> Vec<i64> {
    if planted {
        bytes.iter().map(|&b| i64::from(b)).collect()
    } else {
        std::str::from_utf8(bytes)
            .expect("utf-8")
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().expect("number"))
            .collect()
    }
}

/// Round-trips a list through a file in a fresh per-evaluation directory.
/// Cleanup on abort goes through `graceful`. The planted bug truncates
/// elements to one byte.
pub fn effectful_tmp(planted_bug: bool) -> std::io::Result<(BenchCase<Vec<i64>>, Arc<ScratchStats>)> {
    let stats = Arc::new(ScratchStats {
        root: tempfile::Builder::new().prefix("parqc-scratch").tempdir()?,
        next_id: AtomicU64::new(0),
        evaluations: AtomicU64::new(0),
        handler_runs: Mutex::new(HashMap::new()),
    });
    let s = Arc::clone(&stats);
    let property = Property::new(move |xs: &Vec<i64>, ctx| {
        s.evaluations.fetch_add(1, Ordering::SeqCst);
        let id = s.next_id.fetch_add(1, Ordering::SeqCst);
        let dir = tempfile::Builder::new()
            .prefix("eval")
            .tempdir_in(s.root())
            .expect("scratch directory")
            .keep();
        let file = dir.join("input.bin");
        std::fs::write(&file, encode(xs, planted_bug)).expect("write scratch file");
        let cleanup_dir = dir.clone();
        let stats = Arc::clone(&s);
        ctx.graceful(
            |ctx| {
                ctx.pause(SCRATCH_WORK)?;
                let back = decode(&std::fs::read(&file).expect("read scratch file"), planted_bug);
                std::fs::remove_dir_all(&dir).expect("remove scratch directory");
                Ok(if &back == xs {
                    Outcome::Pass
                } else {
                    Outcome::Fail(format!("read back {back:?}"))
                })
            },
            move || {
                let _ = std::fs::remove_dir_all(&cleanup_dir);
                stats.record_handler(id);
            },
        )
    });
    let case = BenchCase {
        name: BenchName::EffectfulTmp,
        property,
        generator: gen_list(gen_int(0, 300).expect("valid range")),
        shrinker: Shrinker::list(Shrinker::int()),
        planted_bug,
        default_tests: 200,
    };
    Ok((case, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;

    #[test]
    fn correct_simplifier_preserves_meaning() {
        let case = expr_bug(false);
        for (s, size) in Seed::new(1).children().zip((0..100).cycle()).take(3000) {
            let e = case.generator.run(s, size);
            assert_eq!(case.property.outcome(&e), Outcome::Pass, "{e}");
        }
    }

    #[test]
    fn planted_simplifier_bug() {
        let e = Expr::mul(Expr::Var(1), Expr::add(Expr::Var(0), Expr::Var(2)));
        assert!(expr_bug(true).property.outcome(&e).is_fail());
        assert_eq!(expr_bug(false).property.outcome(&e), Outcome::Pass);
    }

    #[test]
    fn sort_bug_needs_duplicates() {
        assert_eq!(sort_list(&[3, 1, 2], true), vec![1, 2, 3]);
        assert_eq!(sort_list(&[2, 2], true), vec![2]);
        assert_eq!(decode(&encode(&[1, 300], false), false), vec![1, 300]);
        assert_eq!(decode(&encode(&[1, 300], true), true), vec![1, 44]);
    }

    #[test]
    fn scratch_files_are_removed() {
        let (case, stats) = effectful_tmp(false).unwrap();
        assert_eq!(case.property.outcome(&vec![1, 2, 3]), Outcome::Pass);
        assert!(stats.orphans().is_empty());
        assert_eq!(stats.evaluations(), 1);
        assert_eq!(stats.handler_runs(), (0, 0));
    }
}
