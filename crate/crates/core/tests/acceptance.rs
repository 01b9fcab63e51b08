//! End-to-end acceptance checks. Run with `cargo test -p parqc --test acceptance`.
//!
//! Each check prints one PASS/FAIL line; the process exits non-zero if any
//! check fails.

use std::collections::HashMap;
use std::io::{self, Write};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use parqc::bench::{collect_failing_seeds, constant, effectful_tmp, expr_bug, median, slow_pure};
use parqc::shrink::board::ShrinkBoard;
use parqc::shrink::{Claim, DeterministicBoard, GreedyBoard, Job};
use parqc::{
    check, check_with_sink, compute_size, replay, run_parallel, run_sequential, shrink_deterministic,
    shrink_greedy, shrink_sequential, Config, Evaluation, Gen, Outcome, Property, Seed, Shrinker,
    ShrinkStrategy, SizeStrategy, TestKind, Verdict,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn determinism_equivalence() -> Check {
    let case = expr_bug(true);
    let pairs = collect_failing_seeds(&case, 500, Seed::new(0xacce_0001)).map_err(|e| e.to_string())?;
    for (n, &(seed, size)) in pairs.iter().enumerate() {
        let c0 = case.generator.run(seed, size as usize);
        let seq = shrink_sequential(&case.property, &case.shrinker, c0.clone());
        for w in [2, 4, 8] {
            let det = shrink_deterministic(&case.property, &case.shrinker, c0.clone(), w)
                .map_err(|e| e.to_string())?;
            ensure(det.final_value == seq.final_value && det.committed_path == seq.committed_path, || {
                format!("case {n} (seed {seed} size {size}) w={w}: {} vs {}", det.final_value, seq.final_value)
            })?;
        }
    }
    Ok(format!("{} cases x w in {{2,4,8}} identical", pairs.len()))
}

fn greedy_local_minimality() -> Check {
    let case = expr_bug(true);
    let pairs = collect_failing_seeds(&case, 500, Seed::new(0xacce_0002)).map_err(|e| e.to_string())?;
    for (n, &(seed, size)) in pairs.iter().enumerate() {
        let w = [2, 4, 8][n % 3];
        let c0 = case.generator.run(seed, size as usize);
        let r = shrink_greedy(&case.property, &case.shrinker, c0, w).map_err(|e| e.to_string())?;
        ensure(case.property.outcome(&r.final_value).is_fail(), || format!("case {n}: final passes"))?;
        for c in case.shrinker.candidates(&r.final_value) {
            ensure(!case.property.outcome(&c).is_fail(), || {
                format!("case {n}: {} has failing candidate {c}", r.final_value)
            })?;
        }
    }
    Ok(format!("{} cases locally minimal", pairs.len()))
}

fn size_coverage() -> Check {
    let prop = Property::predicate(|_: &u64| true);
    let gen = Gen::new(|_, size| size as u64);
    for k in [1, 2, 4, 5] {
        let cfg = Config {
            num_testers: k,
            size_strategy: SizeStrategy::Stride,
            steal_enabled: false,
            seed: Some(Seed::new(k as u64)),
            ..Config::default()
        };
        let r = run_parallel(&prop, &gen, &Shrinker::none(), &cfg).map_err(|e| e.to_string())?;
        let mut sizes = r.sizes_used();
        sizes.sort_unstable();
        ensure(sizes == (0..100).collect::<Vec<_>>(), || format!("k={k}: sizes {sizes:?}"))?;
        let s = check(&prop, &gen, &Shrinker::none(), &cfg).map_err(|e| e.to_string())?;
        let mut sizes = s.sizes_used();
        sizes.sort_unstable();
        ensure(sizes == (0..100).collect::<Vec<_>>(), || format!("k={k} via check: {sizes:?}"))?;
    }
    Ok("k in {1,2,4,5}: sizes are exactly 0..=99".into())
}

/// Discards `plan[passes]` times before each pass.
fn discard_plan_run(plan: Vec<u64>) -> Result<Vec<(u64, TestKind)>, String> {
    let state = Arc::new(Mutex::new((0usize, 0u64)));
    let s = Arc::clone(&state);
    let prop = Property::pure(move |_: &u64| {
        let mut st = s.lock().unwrap();
        let (passes, discards) = *st;
        if discards < plan[passes] {
            st.1 += 1;
            Outcome::Discard
        } else {
            *st = (passes + 1, 0);
            Outcome::Pass
        }
    });
    let cfg = Config { seed: Some(Seed::new(4)), ..Config::default() };
    let r = run_sequential(&prop, &Gen::new(|_, size| size as u64), &Shrinker::none(), &cfg)
        .map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Success, || format!("verdict {:?}", r.verdict))?;
    Ok(r.trace.iter().map(|t| (t.size, t.kind)).collect())
}

fn discard_rule() -> Check {
    let mut seed = Seed::new(0xd15c);
    let plan: Vec<u64> = (0..100)
        .map(|_| {
            let (d, next) = seed.bounded(0, 9).unwrap();
            seed = next;
            d as u64
        })
        .collect();
    let injected: u64 = plan.iter().sum();
    let trace = discard_plan_run(plan.clone())?;
    let pass_sizes: Vec<u64> = trace.iter().filter(|t| t.1 == TestKind::Passed).map(|t| t.0).collect();
    ensure(pass_sizes == (0..100).collect::<Vec<_>>(), || format!("pass sizes {pass_sizes:?}"))?;
    // Every attempt between passes uses the size of the pass that follows.
    let mut i = 0;
    for (rank, &d) in plan.iter().enumerate() {
        for _ in 0..=d {
            ensure(trace[i].0 == rank as u64, || format!("attempt {i} at rank {rank}: size {}", trace[i].0))?;
            i += 1;
        }
    }

    // Exactly ten discards before pass-rank 40: the eleventh attempt is one larger.
    let mut plan = vec![0; 100];
    plan[40] = 10;
    let trace = discard_plan_run(plan)?;
    let at_rank: Vec<u64> = trace[40..51].iter().map(|t| t.0).collect();
    let mut expect = vec![40; 10];
    expect.push(41);
    ensure(at_rank == expect, || format!("sizes around rank 40: {at_rank:?}"))?;
    ensure(trace[51].0 == 41, || format!("rank 41 size {}", trace[51].0))?;
    let cfg = Config::default();
    ensure(
        (0..=9).all(|d| compute_size(40, d, &cfg) == 40) && compute_size(40, 10, &cfg) == 41,
        || "compute_size step".into(),
    )?;
    Ok(format!("{injected} injected discards left sizes unchanged; 10th bumps by 1"))
}

fn time<F: FnMut()>(mut f: F) -> Duration {
    let t = Instant::now();
    f();
    t.elapsed()
}

fn testing_speedup() -> Check {
    let case = slow_pure(false);
    let run = |k: usize, rep: u64| {
        let cfg = Config {
            max_success: 400,
            num_testers: k,
            seed: Some(Seed::new(rep)),
            ..Config::default()
        };
        time(|| {
            let r = check(&case.property, &case.generator, &case.shrinker, &cfg).unwrap();
            assert!(r.is_success());
        })
        .as_secs_f64()
    };
    let one: Vec<f64> = (0..5).map(|rep| run(1, rep)).collect();
    let four: Vec<f64> = (0..5).map(|rep| run(4, rep)).collect();
    let (m1, m4) = (median(&one).unwrap(), median(&four).unwrap());
    let speedup = m1 / m4;
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let detail = format!("k=1 {:.0} ms, k=4 {:.0} ms, speedup {speedup:.2}x on {cpus} cpu(s)", m1 * 1e3, m4 * 1e3);
    ensure(m4 <= m1 / 2.5, || detail.clone())?;
    Ok(detail)
}

fn loop_overhead() -> Check {
    let case = constant();
    let cfg = Config { max_success: 100_000, seed: Some(Seed::new(6)), ..Config::default() };
    let mut seq = Vec::new();
    let mut par = Vec::new();
    for _ in 0..5 {
        seq.push(time(|| assert!(run_sequential(&case.property, &case.generator, &case.shrinker, &cfg).unwrap().is_success())).as_secs_f64());
        par.push(time(|| assert!(run_parallel(&case.property, &case.generator, &case.shrinker, &cfg).unwrap().is_success())).as_secs_f64());
    }
    let (ms, mp) = (median(&seq).unwrap(), median(&par).unwrap());
    let detail = format!("sequential {:.1} ms, parallel k=1 {:.1} ms, ratio {:.2}", ms * 1e3, mp * 1e3, mp / ms);
    ensure(mp <= 2.5 * ms, || detail.clone())?;
    Ok(detail)
}

fn abort_cleanup() -> Check {
    let (case, stats) = effectful_tmp(true).map_err(|e| e.to_string())?;
    let mut aborted = 0;
    for run in 0..50u64 {
        stats.reset_counts();
        let cfg = Config {
            max_success: case.default_tests,
            num_testers: 8,
            shrink_strategy: if run % 2 == 0 { ShrinkStrategy::Greedy } else { ShrinkStrategy::Deterministic },
            seed: Some(Seed::new(700 + run)),
            ..Config::default()
        };
        let r = check(&case.property, &case.generator, &case.shrinker, &cfg).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Failure, || format!("run {run}: {:?}", r.verdict))?;
        let orphans = stats.orphans();
        ensure(orphans.is_empty(), || format!("run {run}: orphans {orphans:?}"))?;
        let (total, max) = stats.handler_runs();
        ensure(max <= 1, || format!("run {run}: a handler ran {max} times"))?;
        ensure(total == r.aborted_evaluations, || {
            format!("run {run}: {total} handler runs for {} aborted evaluations", r.aborted_evaluations)
        })?;
        aborted += r.aborted_evaluations;
    }
    Ok(format!("50 runs, no orphans, {aborted} aborted evaluations each cleaned up once"))
}

fn replay_fidelity() -> Check {
    let case = expr_bug(true);
    let mut checked = 0;
    let mut root = Seed::new(0x5eed);
    while checked < 100 {
        let (seed, rest) = root.split();
        root = rest;
        let k = [1, 4][checked % 2];
        let cfg = Config { num_testers: k, max_success: case.default_tests, seed: Some(seed), ..Config::default() };
        let r = check(&case.property, &case.generator, &case.shrinker, &cfg).map_err(|e| e.to_string())?;
        let Some(f) = r.failure else { continue };
        let wire = f.seed.to_string();
        let parsed: Seed = wire.parse().map_err(|e: parqc::SeedError| e.to_string())?;
        let again = case.generator.run(parsed, f.size as usize);
        ensure(format!("{:?}", again) == format!("{:?}", f.original) && again == f.original, || {
            format!("{wire} size {}: {again} vs {}", f.size, f.original)
        })?;
        let rcfg = Config { replay: Some((parsed, f.size)), ..Config::default() };
        let rr = replay(&case.property, &case.generator, &case.shrinker, &rcfg).map_err(|e| e.to_string())?;
        let rf = rr.failure.ok_or_else(|| format!("{wire}: replay passed"))?;
        ensure(rf.original == f.original && rf.counterexample() == f.counterexample(), || {
            format!("{wire}: replayed run differs")
        })?;
        checked += 1;
    }
    Ok("100 failures replayed byte-identically through state:gamma".into())
}

type Tree = HashMap<&'static str, Vec<&'static str>>;

fn tree_case(failing: &[&'static str], edges: &[(&'static str, &[&'static str])]) -> (Property<&'static str>, Shrinker<&'static str>) {
    let failing: Vec<&'static str> = failing.to_vec();
    let tree: Arc<Tree> = Arc::new(edges.iter().map(|&(n, kids)| (n, kids.to_vec())).collect());
    (
        Property::predicate(move |n: &&'static str| !failing.contains(n)),
        Shrinker::new(move |n: &&'static str| tree.get(n).cloned().unwrap_or_default()),
    )
}

enum Step {
    Claim(&'static str),
    Report(&'static str),
}

fn play<B: ShrinkBoard<&'static str>>(mut board: B, prop: &Property<&'static str>, steps: &[Step]) -> Result<B, String> {
    let mut flight: Vec<Job<&'static str>> = Vec::new();
    for step in steps {
        match *step {
            Step::Claim(name) => match board.claim() {
                Claim::Job(j) if j.candidate == name => flight.push(j),
                other => return Err(format!("expected to claim {name}, got {other:?}")),
            },
            Step::Report(name) => {
                let pos = flight.iter().position(|j| j.candidate == name).ok_or(format!("{name} not in flight"))?;
                let job = flight.remove(pos);
                board.report(&job, Evaluation::Completed(prop.outcome(&job.candidate)));
            }
        }
    }
    ensure(matches!(board.claim(), Claim::Done), || "board not done".into())?;
    Ok(board)
}

fn efficiency_accounting() -> Check {
    use Step::{Claim as C, Report as R};

    let (prop, sh) = tree_case(&["R", "B", "C", "D"], &[("R", &["A", "B"]), ("B", &["C"]), ("C", &["D"]), ("D", &["E"])]);
    let seq = shrink_sequential(&prop, &sh, "R").efficiency().ok_or("no evaluations")?;

    let (prop, sh) = tree_case(
        &["R", "A", "B", "D", "E"],
        &[("R", &["A", "B"]), ("B", &["X"]), ("A", &["C", "D"]), ("D", &["E"]), ("E", &["F"])],
    );
    let det = play(
        DeterministicBoard::new(sh, "R"),
        &prop,
        &[C("A"), C("B"), R("B"), C("X"), R("X"), R("A"), C("C"), C("D"), R("D"), C("E"), R("E"), R("C"), C("F"), R("F")],
    )?
    .finish()
    .efficiency()
    .ok_or("no evaluations")?;

    let (prop, sh) = tree_case(
        &["R", "B", "Y", "Q"],
        &[("R", &["A", "B"]), ("B", &["X", "Y", "Z"]), ("Y", &["P", "Q"]), ("Q", &["U", "V"])],
    );
    let greedy = play(
        GreedyBoard::new(sh, "R"),
        &prop,
        &[C("A"), C("B"), R("B"), C("X"), R("A"), C("Y"), R("X"), C("Z"), R("Z"), R("Y"), C("P"), C("Q"), R("P"), R("Q"), C("U"), C("V"), R("U"), R("V")],
    )?
    .finish()
    .efficiency()
    .ok_or("no evaluations")?;

    let detail = format!("sequential {seq} = {}, deterministic {det}, greedy {greedy} = {}", seq.value(), greedy.value());
    ensure(seq.value() == 0.6 && det.successes * 7 == det.evaluated * 3 && greedy.value() == 0.375, || detail.clone())?;
    Ok(detail)
}

#[derive(Clone, Default)]
struct Captured(Arc<Mutex<Vec<u8>>>);

impl Write for Captured {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

fn reporter_cadence() -> Check {
    let prop = Property::new(|_: &(), ctx| {
        ctx.pause(Duration::from_millis(10))?;
        Ok(Outcome::Pass)
    });
    let cfg = Config { chatty: true, seed: Some(Seed::new(10)), ..Config::default() };
    let sink = Captured::default();
    let started = Instant::now();
    let r = check_with_sink(&prop, &Gen::constant(()), &Shrinker::none(), &cfg, sink.clone()).map_err(|e| e.to_string())?;
    let wall = started.elapsed();
    let text = String::from_utf8(sink.0.lock().unwrap().clone()).map_err(|e| e.to_string())?;
    let lines = text.lines().count();
    ensure(r.is_success(), || format!("{:?}", r.verdict))?;
    ensure((5 - 2..=5 + 2).contains(&lines), || format!("{lines} lines in {wall:?}"))?;

    let case = expr_bug(true);
    for n in 0..20 {
        let base = Config { seed: Some(Seed::new(1000 + n)), max_success: case.default_tests, ..Config::default() };
        let quiet = check(&case.property, &case.generator, &case.shrinker, &base).map_err(|e| e.to_string())?;
        let loud_cfg = Config { chatty: true, progress_period_ms: 1, ..base };
        let loud = check_with_sink(&case.property, &case.generator, &case.shrinker, &loud_cfg, Captured::default())
            .map_err(|e| e.to_string())?;
        ensure(quiet.verdict == loud.verdict && quiet.trace == loud.trace, || format!("seed {n}: runs differ"))?;
        ensure(quiet.failure.as_ref().map(|f| f.counterexample()) == loud.failure.as_ref().map(|f| f.counterexample()), || {
            format!("seed {n}: counterexamples differ")
        })?;
    }
    Ok(format!("{lines} lines in {:.2} s; chatty runs identical to quiet ones", wall.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("deterministic shrink equals sequential", determinism_equivalence),
        ("greedy shrink is locally minimal", greedy_local_minimality),
        ("size coverage", size_coverage),
        ("discard rule", discard_rule),
        ("testing speedup k=4 vs k=1", testing_speedup),
        ("parallel loop overhead", loop_overhead),
        ("abort cleanup", abort_cleanup),
        ("replay fidelity", replay_fidelity),
        ("efficiency accounting", efficiency_accounting),
        ("reporter cadence and passivity", reporter_cadence),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{secs:.1} s]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail}) [{secs:.1} s]", n + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
