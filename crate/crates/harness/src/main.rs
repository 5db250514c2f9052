use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use susy_gci::par::Execution;
use susy_gci_harness::config::{generate_ensemble, MatrixSpec};
use susy_gci_harness::{run, RunConfig, Suite};

const EXIT_PASS: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "susy-gci", version, about = "Verify correlation inequalities and the identities behind them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured suites and write a TOML report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these suites (repeatable); overrides the config list.
        #[arg(long = "suite", value_parser = parse_suite)]
        suites: Vec<Suite>,
        /// Root seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path; overrides the config. Stdout if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads. 1 runs everything serially.
        #[arg(long, env = "SUSY_GCI_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
        jobs: Option<u32>,
    },
    /// Print a reproducible correlation ensemble as `[[matrices]]` entries.
    Ensemble {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        n1: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| {
        let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite {s:?}; expected one of {}", names.join(", "))
    })
}

#[derive(Serialize)]
struct EnsembleDoc {
    matrices: Vec<MatrixSpec>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    match cli.command {
        Command::Verify { config, suites, seed, out, jobs } => verify(config, suites, seed, out, jobs),
        Command::Ensemble { n, n1, count, seed } => {
            if n < 2 || n1 == 0 || n1 >= n || n > susy_gci::covariance::MAX_SUBSET_DIM {
                eprintln!("error: need 1 <= n1 < n <= {}", susy_gci::covariance::MAX_SUBSET_DIM);
                return ExitCode::from(EXIT_USAGE);
            }
            let doc = EnsembleDoc { matrices: generate_ensemble(n, n1, count, seed) };
            print!("{}", toml::to_string(&doc).expect("ensemble is serializable"));
            ExitCode::from(EXIT_PASS)
        }
    }
}

fn verify(path: PathBuf, suites: Vec<Suite>, seed: Option<u64>, out: Option<PathBuf>, jobs: Option<u32>) -> ExitCode {
    let (mut config, bytes): (RunConfig, Vec<u8>) = match RunConfig::load(&path) {
        Ok(x) => x,
        Err(e) => {
            eprint!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if !suites.is_empty() {
        config.suites = suites;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let out = out.or_else(|| config.out.clone());
    let exec = if jobs == Some(1) { Execution::Serial } else { Execution::Parallel };

    let result = match with_jobs(jobs, || run(&config, &bytes, exec)) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprint!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let text = report.to_toml();
    match &out {
        Some(p) => {
            if let Err(e) = fs::write(p, &text) {
                eprintln!("error: writing {}: {e}", p.display());
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    if let Some(p) = &config.profile_csv {
        if let Err(e) = fs::write(p, report.profiles_csv()) {
            eprintln!("error: writing {}: {e}", p.display());
            return ExitCode::from(EXIT_USAGE);
        }
    }
    for r in report.records.iter().filter(|r| !r.passed) {
        eprintln!("FAIL {} {}", r.name, r.error.as_deref().unwrap_or(""));
    }
    eprintln!("{} checks, {} failed", report.checks, report.failures);
    ExitCode::from(if report.passed { EXIT_PASS } else { EXIT_CHECK_FAILED })
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<u32>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match jobs {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build().map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T: Send>(_jobs: Option<u32>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    Ok(f())
}
