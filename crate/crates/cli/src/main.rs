use clap::{Args, Parser, Subcommand};
use qbtree_cli::config::{Eval, ExperimentConfig, KeyMode, Mode};
use qbtree_cli::{checks, demo, runner};

/// Quantum B+ tree simulator: memory-access benchmarks against classical
/// baselines, invariant verification and a worked-example demo.
#[derive(Parser)]
#[command(name = "qbtree", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an IO-count experiment and emit CSV.
    Bench(BenchArgs),
    /// Run the invariant and oracle suites; exits non-zero on violation.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Walk the 14-pair worked example, printing each search stage.
    Demo {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Which structure pair to benchmark.
    #[arg(long, value_enum, default_value = "static")]
    mode: Mode,
    /// Dataset size (records).
    #[arg(long, default_value_t = 2_097_152)]
    n: usize,
    /// Branching factor; a power of two, at least 4.
    #[arg(long, default_value_t = 16)]
    b: u32,
    /// Query selectivity in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    selectivity: f64,
    /// Number of range queries per structure.
    #[arg(long, default_value_t = 10_000)]
    queries: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Generate a synthetic uniform-random dataset (the default).
    #[arg(long, conflicts_with = "dataset")]
    synthetic: bool,
    /// Check-in TSV file to ingest instead of synthetic data.
    #[arg(long)]
    dataset: Option<std::path::PathBuf>,
    /// How file records are keyed.
    #[arg(long, value_enum, default_value = "timestamp")]
    key_mode: KeyMode,
    /// Analytic (exact expectations, deterministic) or stochastic draws.
    #[arg(long, value_enum, default_value = "analytic")]
    eval: Eval,
    /// Write the CSV here as well as to stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Bench(args) => {
            let cfg = ExperimentConfig {
                mode: args.mode,
                n: args.n,
                b: args.b,
                selectivity: args.selectivity,
                query_count: args.queries,
                seed: args.seed,
                dataset: args.dataset,
                key_mode: args.key_mode,
                eval: args.eval,
            };
            let rows = runner::run_experiment(&cfg)?;
            let csv = qbtree_cli::config::to_csv(&rows);
            print!("{csv}");
            if let Some(path) = args.out {
                runner::write_csv(&rows, &path)?;
            }
            Ok(())
        }
        Command::Verify { seed } => {
            if checks::run_verify(seed) {
                println!("all checks passed");
                Ok(())
            } else {
                std::process::exit(1);
            }
        }
        Command::Demo { seed } => demo::run_demo(seed),
    }
}
