//! `parqc`: runs the benchmark matrix and writes CSV.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use parqc::bench::{bench_case, summarize, write_csv, BenchError, BenchName, Matrix};
use parqc::{Seed, ShrinkStrategy, SizeStrategy};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShrinkArg {
    Seq,
    Det,
    Greedy,
}

impl From<ShrinkArg> for ShrinkStrategy {
    fn from(a: ShrinkArg) -> Self {
        match a {
            ShrinkArg::Seq => ShrinkStrategy::Sequential,
            ShrinkArg::Det => ShrinkStrategy::Deterministic,
            ShrinkArg::Greedy => ShrinkStrategy::Greedy,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SizeArg {
    Stride,
    Offset,
}

impl From<SizeArg> for SizeStrategy {
    fn from(a: SizeArg) -> Self {
        match a {
            SizeArg::Stride => SizeStrategy::Stride,
            SizeArg::Offset => SizeStrategy::Offset,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "parqc", version, about = "Parallel property-based testing benchmarks")]
struct Args {
    /// Benchmark name, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_benches)]
    bench: Benches,
    /// Comma-separated tester / shrink-worker counts.
    #[arg(long, value_delimiter = ',', default_value = "1", value_parser = clap::value_parser!(u64).range(1..))]
    cores: Vec<u64>,
    #[arg(long, value_enum, default_value = "seq")]
    shrink: ShrinkArg,
    #[arg(long, value_enum, default_value = "stride")]
    size: SizeArg,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    /// Root seed as `state:gamma`.
    #[arg(long, env = "PARQC_SEED")]
    seed: Option<Seed>,
    /// Replay the single test `--seed` at this size instead of the matrix.
    #[arg(long, requires = "seed")]
    replay_size: Option<u64>,
    #[arg(long)]
    plant_bug: bool,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print progress lines to stderr while testing.
    #[arg(long)]
    chatty: bool,
    /// Tests per run, overriding each benchmark's default.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    tests: Option<u64>,
}

#[derive(Clone, Debug)]
struct Benches(Vec<BenchName>);

fn parse_benches(s: &str) -> Result<Benches, BenchError> {
    if s == "all" {
        return Ok(Benches(BenchName::ALL.to_vec()));
    }
    s.split(',').map(str::parse).collect::<Result<_, _>>().map(Benches)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(e @ BenchError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &Args) -> Result<ExitCode, BenchError> {
    let matrix = Matrix {
        cores: args.cores.iter().map(|&c| c as usize).collect(),
        shrink: args.shrink.into(),
        size: args.size.into(),
        reps: args.reps as usize,
        seed: args.seed.unwrap_or_else(Seed::from_entropy),
        plant_bug: args.plant_bug,
        tests: args.tests,
        chatty: args.chatty,
    };
    if let Some(size) = args.replay_size {
        for &name in &args.bench.0 {
            let case = bench_case(name, args.plant_bug)?;
            let text = case.replay_report(&matrix, matrix.cores[0], matrix.seed, size)?;
            println!("{name}: {text}");
        }
        return Ok(ExitCode::SUCCESS);
    }

    eprintln!("root seed {}", matrix.seed);
    let mut rows = Vec::new();
    let mut internal = false;
    for &name in &args.bench.0 {
        let case = bench_case(name, args.plant_bug)?;
        for cell in case.run_matrix(&matrix)? {
            let r = &cell.row;
            let label = format!("{} cores={} rep={} {}", r.benchmark, r.cores, r.repetition, r.phase);
            if let Some(e) = &cell.internal_error {
                eprintln!("{label}: internal error: {e}");
                internal = true;
            }
            if let (Some(cex), Some(hash), Some((seed, size))) =
                (&cell.counterexample, cell.counterexample_hash(), cell.replay)
            {
                eprintln!("{label}: hash {hash:016x} Replay: {seed} size {size}");
                eprintln!("  {cex}");
            }
            rows.push(cell.row);
        }
    }
    match &args.csv {
        Some(path) => write_csv(&rows, File::create(path)?)?,
        None => write_csv(&rows, io::stdout().lock())?,
    }
    let mut err = io::stderr().lock();
    for (key, median, n) in summarize(&rows) {
        writeln!(err, "median {key}: {median:.3} ms ({n} runs)")?;
    }
    Ok(if internal { ExitCode::from(1) } else { ExitCode::SUCCESS })
}
