//! `rankbound`: rank-constrained matrix optimization from the command line.
//!
//! Subcommands: `certify` (witness + error-bound reports for a point),
//! `solve` (multi-stage convex relaxation with CSV trace), `penalty-check`
//! (desk-scale oracle comparison of the constrained and penalty problems)
//! and `project` (Euclidean projection onto the problem's set).
//!
//! stdout carries exactly one machine-parseable JSON document; human logs go
//! to stderr, filtered by the `RANKBOUND_LOG` environment variable.

mod commands;
mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CmdOutput;

#[derive(Parser)]
#[command(
    name = "rankbound",
    version,
    about = "Rank-constrained matrix optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the feasible witness and all error-bound reports for a point.
    Certify {
        /// Problem file (JSON).
        #[arg(long)]
        problem: PathBuf,
        /// Point file (JSON matrix).
        #[arg(long)]
        point: PathBuf,
    },
    /// Run the multi-stage convex relaxation solver.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Write the per-stage CSV trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override the initial penalty parameter.
        #[arg(long)]
        rho0: Option<f64>,
        /// Override the problem file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run N independent solves with per-run seeds and report all of
        /// them (the trace file gets the best run).
        #[arg(long, value_name = "N")]
        sweep: Option<usize>,
    },
    /// Compare brute-force minima of the constrained and penalty problems.
    PenaltyCheck {
        #[arg(long)]
        problem: PathBuf,
        /// Penalty parameter to test (default: 1.1 x threshold).
        #[arg(long)]
        rho0: Option<f64>,
    },
    /// Project a point onto the problem's set.
    Project {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        point: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RANKBOUND_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Certify { problem, point } => commands::cmd_certify(problem, point),
        Command::Solve {
            problem,
            trace,
            rho0,
            seed,
            sweep,
        } => commands::cmd_solve(problem, trace.as_deref(), *rho0, *seed, *sweep),
        Command::PenaltyCheck { problem, rho0 } => commands::cmd_penalty_check(problem, *rho0),
        Command::Project { problem, point } => commands::cmd_project(problem, point),
    };
    match outcome {
        Ok(CmdOutput { stdout, exit_code }) => {
            println!("{stdout}");
            ExitCode::from(exit_code as u8)
        }
        Err(err) => {
            log::error!("{}", err.message());
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
