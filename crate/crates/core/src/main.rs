use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rsma_core::bench::{generate_channels, run_experiment, write_outputs, ExperimentSpec};
use rsma_core::oracle::{closed_form_special_cases, grid_certify};
use rsma_core::sit::Branching;
use rsma_core::{sit_solve, Error, Mode, ProblemInstance, SolveStatus, SolverConfig};
use serde_json::json;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_SOLVER_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "rsma", version, about = "Globally optimal rate-splitting precoding for the MISO downlink")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the result as JSON.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long, default_value = "rsma")]
        mode: Mode,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: u64,
        #[arg(long, value_enum, default_value = "absolute")]
        branching: BranchingArg,
        /// Write the node trace as line-delimited JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Process the two children of each iteration concurrently.
        #[arg(long)]
        parallel: bool,
        /// Start a rate-splitting search from the unicast-only optimum.
        #[arg(long)]
        warm_start: bool,
    },
    /// Run an experiment spec and write results.csv, results.jsonl and summary.json.
    Bench {
        experiment: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid oracle and closed-form value of an instance.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        #[arg(long, default_value = "unicast-only")]
        mode: Mode,
    },
    /// Print a random weighted-sum-rate instance.
    GenChannels {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        seed: u64,
        /// Power budget in dB.
        #[arg(long, default_value_t = 10.0)]
        power_db: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BranchingArg {
    Absolute,
    Relative,
}

impl From<BranchingArg> for Branching {
    fn from(b: BranchingArg) -> Self {
        match b {
            BranchingArg::Absolute => Branching::Absolute,
            BranchingArg::Relative => Branching::Relative,
        }
    }
}

fn read_instance(path: &Path) -> anyhow::Result<ProblemInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Solve { instance, eps, eta, mode, time_limit, max_iter, branching, trace, parallel, warm_start } => {
            let inst = read_instance(&instance)?;
            let config = SolverConfig {
                epsilon: eps,
                eta,
                max_iter,
                time_limit: time_limit.map(Duration::from_secs_f64),
                branching: branching.into(),
                mode,
                parallel,
                trace: trace.is_some(),
                warm_start,
                ..SolverConfig::default()
            };
            let result = match sit_solve(&inst, &config) {
                Ok(r) => r,
                Err(Error::Conic(e)) => {
                    eprintln!("solver failure: {e}");
                    return Ok(ExitCode::from(EXIT_SOLVER_FAILURE));
                }
                Err(e) => return Err(e.into()),
            };
            if let Some(path) = trace {
                let mut w = BufWriter::new(fs::File::create(&path)?);
                for record in &result.trace {
                    serde_json::to_writer(&mut w, record)?;
                    writeln!(w)?;
                }
                w.flush()?;
            }
            print_json(&result)?;
            Ok(match result.status {
                SolveStatus::Optimal => ExitCode::SUCCESS,
                SolveStatus::EpsilonEssentialInfeasible => ExitCode::from(EXIT_INFEASIBLE),
                SolveStatus::IterLimit | SolveStatus::TimeLimit => ExitCode::from(EXIT_LIMIT),
            })
        }
        Command::Bench { experiment, out } => {
            let text = fs::read_to_string(&experiment).with_context(|| format!("reading {}", experiment.display()))?;
            let spec: ExperimentSpec = serde_json::from_str(&text).context("parsing experiment spec")?;
            let result = run_experiment(&spec)?;
            write_outputs(&result, &out)?;
            println!("{}", result.summary);
            let failures = result.rows.iter().filter(|r| r.status == "solver-failure").count();
            if failures > 0 {
                eprintln!("{failures} instances hit a solver failure");
                return Ok(ExitCode::from(EXIT_SOLVER_FAILURE));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { instance, resolution, mode } => {
            let inst = read_instance(&instance)?;
            let cert = grid_certify(&inst, resolution, mode)?;
            print_json(&json!({
                "grid": cert,
                "closed_form": closed_form_special_cases(&inst),
            }))?;
            Ok(if cert.value.is_some() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INFEASIBLE) })
        }
        Command::GenChannels { k, m, seed, power_db } => {
            anyhow::ensure!(k >= 1 && m >= 1, "k and m must be at least 1");
            let inst = ProblemInstance::wsr(generate_channels(k, m, seed), rsma_core::bench::db_to_linear(power_db))?;
            print_json(&inst)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
