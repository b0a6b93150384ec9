use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use cbsa::harness::{
    contracts, discharge, emit_outputs, load_scenario, run_scenario, AssembleError, PropertySet, RunOptions,
    RunReport, Scenario, ScenarioError,
};

const EXIT_VIOLATION: u8 = 2;
const EXIT_INVALID: u8 = 3;

#[derive(Parser)]
#[command(name = "cbsa", version, about = "Simulate the rover under component-based Simplex assurance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace, events, summary and plot.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check a scenario file against the modelling assumptions.
    Validate { scenario: PathBuf },
    /// Statically discharge the assume-guarantee contracts of a scenario's wiring.
    Discharge { scenario: PathBuf },
    /// Run every `*.json` scenario in a directory.
    Batch {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Override the scenario's tick budget.
    #[arg(long)]
    ticks: Option<u64>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "CBSA_OUT_DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    no_plot: bool,
    /// Properties to check, comma separated.
    #[arg(long, default_value = "es,cf,mc")]
    check: PropertySet,
    /// Stop at the first violation.
    #[arg(long)]
    fail_fast: bool,
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, ScenarioError> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn summary_line(r: &RunReport) -> String {
    let visited = format!("{}/{}", r.visits.len(), r.targets_total);
    let verdict = if r.passed() {
        "ok".to_string()
    } else {
        let names: Vec<&str> = r.violation_counts.keys().map(String::as_str).collect();
        format!("VIOLATED {}", names.join(","))
    };
    format!("{}: {verdict} after {} ticks ({:?}), targets {visited}", r.name, r.ticks, r.stop)
}

/// Runs one scenario file end to end; returns the exit code and a status line.
fn run_one(path: &Path, args: &RunArgs) -> (u8, String) {
    let s = match load(path, args.seed) {
        Ok(s) => s,
        Err(e) => return (EXIT_INVALID, e.to_string()),
    };
    let opts = RunOptions { max_ticks: args.ticks, checks: args.check, fail_fast: args.fail_fast };
    let report = match run_scenario(&s, &opts) {
        Ok(r) => r,
        Err(e @ (AssembleError::Discharge(_) | AssembleError::Composition(_))) => {
            return (EXIT_INVALID, format!("{}: {e}", s.name))
        }
    };
    if let Err(e) = emit_outputs(&s, &report, &args.out, !args.no_plot) {
        return (1, e.to_string());
    }
    let code = if report.passed() { 0 } else { EXIT_VIOLATION };
    (code, summary_line(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, run } => {
            let (code, line) = run_one(&scenario, &run);
            if code == 0 {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
            ExitCode::from(code)
        }
        Command::Validate { scenario } => match load_scenario(&scenario) {
            Ok(s) => {
                println!("{}: valid", s.name);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_INVALID)
            }
        },
        Command::Discharge { scenario } => {
            let s = match load_scenario(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(EXIT_INVALID);
                }
            };
            let report = discharge(&contracts(&s));
            println!("{}:\n{report}", s.name);
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_INVALID)
            }
        }
        Command::Batch { dir, parallel, run } => {
            let mut files: Vec<PathBuf> = match std::fs::read_dir(&dir) {
                Ok(entries) => entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect(),
                Err(e) => {
                    eprintln!("cannot read {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            };
            files.sort();
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(parallel.max(1)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("cannot start worker pool: {e}");
                    return ExitCode::from(1);
                }
            };
            let results: Vec<(u8, String)> = pool.install(|| files.par_iter().map(|f| run_one(f, &run)).collect());
            for (_, line) in &results {
                println!("{line}");
            }
            ExitCode::from(results.iter().map(|r| r.0).max().unwrap_or(0))
        }
    }
}
