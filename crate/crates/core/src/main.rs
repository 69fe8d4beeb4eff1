use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use mlbcd::config::ExperimentConfig;
use mlbcd::numerics::Seed;
use mlbcd::runner;
use mlbcd::verify::{self, CheckStatus};
use std::path::PathBuf;

/// Multilevel block-coordinate descent trainer for sum-of-subnetwork PINNs
/// and Galerkin quadratic benchmarks.
#[derive(Parser)]
#[command(name = "mlbcd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config, writing one trace CSV per
    /// seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Override the config's seed list (comma separated).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads for the seed fan-out; defaults to MLBCD_THREADS
        /// or the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Aggregate traces into best-median-loss summaries per budget.
    Report {
        #[arg(long)]
        trace_dir: PathBuf,
        /// Budgets in cost units (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
        /// Also write the summary as CSV to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference oracles for one architecture on one problem.
    Gradcheck {
        #[arg(long)]
        architecture: String,
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Seeded verification suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Stepsize as a fraction of 1/L; values >= 1 skip the bound check.
        #[arg(long, default_value_t = 0.9)]
        alpha_frac: f64,
    },
    /// Re-run one seed and compare the trace byte-for-byte against a
    /// reference file.
    Replay {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        reference: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Galerkin,
    Complexity,
    All,
}

fn default_threads() -> usize {
    if let Ok(v) = std::env::var("MLBCD_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn problem_from_name(name: &str) -> anyhow::Result<mlbcd::pinn::PoissonProblem> {
    Ok(match name {
        "hier" => mlbcd::pinn::make_hier_problem(2, 4)?,
        "test1" => mlbcd::pinn::make_test_problem(1)?,
        "test2" => mlbcd::pinn::make_test_problem(2)?,
        "test3" => mlbcd::pinn::make_test_problem(3)?,
        "test4" => mlbcd::pinn::make_test_problem(4)?,
        other => bail!("unknown problem {other:?} (hier, test1..test4)"),
    })
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out_dir, seeds, threads } => {
            let config = ExperimentConfig::load(&config).context("loading config")?;
            let threads = threads.unwrap_or_else(default_threads);
            let summary = runner::cmd_run(&config, &out_dir, seeds, threads)?;
            let mut failures = 0;
            for (seed, failure) in &summary {
                match failure {
                    None => println!("seed {seed}: ok"),
                    Some(msg) => {
                        failures += 1;
                        println!("seed {seed}: FAILED ({msg})");
                    }
                }
            }
            println!("wrote {} trace(s) to {}", summary.len(), out_dir.display());
            if failures > 0 {
                bail!("{failures} run(s) aborted; partial traces and .failed markers written");
            }
        }
        Command::Report { trace_dir, budgets, out } => {
            let rows = mlbcd::report::cmd_report(&trace_dir, &budgets)?;
            print!("{}", mlbcd::report::rows_to_table(&rows));
            if let Some(path) = out {
                std::fs::write(&path, mlbcd::report::rows_to_csv(&rows))?;
                println!("summary CSV written to {}", path.display());
            }
        }
        Command::Gradcheck { architecture, problem, seed } => {
            let spec = mlbcd::architectures::named(&architecture)?;
            let problem = problem_from_name(&problem)?;
            let report = mlbcd::gradcheck::cmd_gradcheck(&spec, &problem, Seed(seed))?;
            println!(
                "laplacian: max rel err {:.3e} over {} points",
                report.max_laplacian_rel_err, report.points_checked
            );
            println!(
                "param gradient: max rel err {:.3e} over {} coordinates",
                report.max_gradient_rel_err, report.params_checked
            );
            if report.passed(1e-4) {
                println!("gradcheck: PASS (tolerance 1e-4)");
            } else {
                bail!("gradcheck: FAIL (tolerance 1e-4)");
            }
        }
        Command::Verify { suite, alpha_frac } => {
            let mut results = Vec::new();
            if matches!(suite, Suite::Galerkin | Suite::All) {
                results.extend(verify::verify_galerkin(50)?);
            }
            if matches!(suite, Suite::Complexity | Suite::All) {
                results.extend(verify::verify_complexity(20, &[1e-1, 1e-2, 1e-3], alpha_frac)?);
                results.push(verify::verify_threshold_error_path());
            }
            let mut failed = 0;
            for r in &results {
                println!("{}", r.line());
                if r.status == CheckStatus::Fail {
                    failed += 1;
                }
            }
            if failed > 0 {
                bail!("{failed} check(s) failed");
            }
        }
        Command::Replay { config, seed, reference } => {
            let config = ExperimentConfig::load(&config).context("loading config")?;
            let outcome = runner::run_config_seed(&config, seed)?;
            if let Some(msg) = outcome.failure {
                bail!("replay run aborted: {msg}");
            }
            let mut bytes = Vec::new();
            mlbcd::trace::write_trace(&outcome.trace, &mut bytes)?;
            let expected = std::fs::read(&reference)
                .with_context(|| format!("reading {}", reference.display()))?;
            if bytes == expected {
                println!(
                    "replay of seed {seed} reproduces {} byte-for-byte ({} bytes)",
                    reference.display(),
                    bytes.len()
                );
            } else {
                bail!(
                    "replay of seed {seed} differs from {} ({} vs {} bytes)",
                    reference.display(),
                    bytes.len(),
                    expected.len()
                );
            }
        }
    }
    Ok(())
}
