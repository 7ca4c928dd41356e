//! Command implementations. Each returns the JSON document for stdout plus
//! the process exit code; failures map to the documented codes
//! (2 = schema violation, 3 = projection failure, 4 = solver failure,
//! 5 = unsupported size, 1 = I/O).

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rankbound_core::{
    bound_feasible_global, bound_feasible_local, bound_solution_global, bound_solution_local,
    brute_min_feasible, brute_min_penalty, exact_penalty_threshold, feasibility_certificate, mscr,
    tail_sum, Error as CoreError, MscrConfig, OracleConfig, Rho0, SmoothObjective, StartPoint,
    StopReason, TauSchedule,
};

use crate::problem::{parse_point, Problem, ProblemFile, Rho0Value};
use crate::report::{
    self, BoundOut, CertifyReport, PenaltyCheckReport, ProjectReport, SweepSummary, WitnessOut,
};

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Schema(String),
    Projection(String),
    Solver(String),
    Unsupported(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Schema(_) => 2,
            CliError::Projection(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Unsupported(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Io(m)
            | CliError::Schema(m)
            | CliError::Projection(m)
            | CliError::Solver(m)
            | CliError::Unsupported(m) => m,
        }
    }
}

fn map_core(e: CoreError) -> CliError {
    match &e {
        CoreError::ConvergenceFailure { .. } => CliError::Projection(e.to_string()),
        CoreError::NumericalFailure(_) => CliError::Solver(e.to_string()),
        CoreError::Unsupported(_) => CliError::Unsupported(e.to_string()),
        CoreError::InvalidInput(_) | CoreError::MissingConstant(_) => {
            CliError::Schema(e.to_string())
        }
    }
}

pub struct CmdOutput {
    pub stdout: String,
    pub exit_code: i32,
}

fn ok_json<T: serde::Serialize>(value: &T) -> CmdOutput {
    CmdOutput {
        stdout: serde_json::to_string_pretty(value).expect("report serialization"),
        exit_code: 0,
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<Problem, CliError> {
    let text = read_file(path)?;
    ProblemFile::parse(&text)
        .and_then(ProblemFile::validate)
        .map_err(CliError::Schema)
}

fn load_point(path: &Path, problem: &Problem) -> Result<DMatrix<f64>, CliError> {
    let text = read_file(path)?;
    let point = parse_point(&text).map_err(CliError::Schema)?;
    if point.shape() != problem.set.dims() {
        return Err(CliError::Schema(format!(
            "point is {}x{} but the set expects {}x{}",
            point.nrows(),
            point.ncols(),
            problem.set.dims().0,
            problem.set.dims().1
        )));
    }
    Ok(point)
}

pub fn cmd_certify(problem_path: &Path, point_path: &Path) -> Result<CmdOutput, CliError> {
    let problem = load_problem(problem_path)?;
    let point = load_point(point_path, &problem)?;
    let (set, k, objective) = (&problem.set, problem.kappa, &problem.objective);

    let cert = feasibility_certificate(&point, k, set).map_err(map_core)?;
    let feasible_local = bound_feasible_local(&point, k, set).map_err(map_core)?;
    let feasible_global = bound_feasible_global(&point, k, set).map_err(map_core)?;

    let mut notes = Vec::new();
    if !cert.input_in_omega {
        notes.push(
            "input point is outside omega: witness distance is reported raw and local \
             bounds are diagnostic"
                .to_string(),
        );
    }
    let (solution_local, solution_global) = if objective.rsc_theta().is_some() {
        match (
            bound_solution_local(&point, k, set, objective, None),
            bound_solution_global(&point, k, set, objective, None),
        ) {
            (Ok(l), Ok(g)) => (
                Some(BoundOut::from_report(&l)),
                Some(BoundOut::from_report(&g)),
            ),
            (Err(CoreError::MissingConstant(msg)), _)
            | (_, Err(CoreError::MissingConstant(msg))) => {
                log::warn!("solution-set bounds omitted: {msg}");
                notes.push(format!("solution-set bounds omitted: {msg}"));
                (None, None)
            }
            (Err(e), _) | (_, Err(e)) => return Err(map_core(e)),
        }
    } else {
        log::warn!("constants.theta not supplied; solution-set bounds omitted");
        notes.push("constants.theta not supplied; solution-set bounds omitted".to_string());
        (None, None)
    };

    let report = CertifyReport {
        witness: WitnessOut::from_certificate(&cert),
        feasible_local: BoundOut::from_report(&feasible_local),
        feasible_global: BoundOut::from_report(&feasible_global),
        solution_local,
        solution_global,
        notes,
    };
    Ok(ok_json(&report))
}

pub fn cmd_project(problem_path: &Path, point_path: &Path) -> Result<CmdOutput, CliError> {
    let problem = load_problem(problem_path)?;
    let point = load_point(point_path, &problem)?;
    let res = problem.set.project(&point).map_err(map_core)?;
    Ok(ok_json(&ProjectReport::from_result(&res)))
}

fn build_config<'a>(
    problem: &'a Problem,
    rho0_override: Option<f64>,
) -> Result<MscrConfig<'a, rankbound_core::ObjectiveModel>, CliError> {
    let mut config = MscrConfig::new(&problem.objective, problem.set.clone(), problem.kappa);
    config.rho0 = match (rho0_override, &problem.solver.rho0) {
        (Some(r), _) => {
            if !r.is_finite() || r <= 0.0 {
                return Err(CliError::Schema(format!(
                    "--rho0 must be positive, got {r}"
                )));
            }
            Rho0::Fixed(r)
        }
        (None, Rho0Value::Number(r)) => Rho0::Fixed(*r),
        (None, Rho0Value::Keyword(_)) => Rho0::Auto,
    };
    config.tau = TauSchedule::Constant(problem.solver.tau);
    config.max_stages = problem.solver.max_stages;
    config.feas_tol = problem.solver.tol;
    config.obj_tol = problem.solver.tol;
    config.stage_tol = problem.solver.tol;
    Ok(config)
}

fn write_trace(path: &Path, csv: &str) -> Result<(), CliError> {
    fs::write(path, csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_solve(
    problem_path: &Path,
    trace_path: Option<&Path>,
    rho0_override: Option<f64>,
    seed_override: Option<u64>,
    sweep: Option<usize>,
) -> Result<CmdOutput, CliError> {
    let problem = load_problem(problem_path)?;
    let seed = seed_override.unwrap_or(problem.solver.seed);
    let slack = 10.0 * problem.solver.tol;

    if let Some(runs) = sweep {
        if runs == 0 {
            return Err(CliError::Schema("--sweep must be at least 1".into()));
        }
        let mut summaries = Vec::with_capacity(runs);
        let mut best: Option<(usize, f64, String)> = None;
        let mut any_failed = false;
        for i in 0..runs {
            let run_seed = seed.wrapping_add(i as u64);
            let mut config = build_config(&problem, rho0_override)?;
            config.seed = run_seed;
            config.x0 = StartPoint::Given(jittered_start(&problem, run_seed));
            let trace = mscr::run(&config).map_err(map_core)?;
            if matches!(trace.stop, StopReason::NumericalFailure(_)) {
                any_failed = true;
            }
            let summary = report::solve_summary(&trace, run_seed, slack);
            let value = summary.best_value;
            if best.as_ref().is_none_or(|(_, b, _)| value < *b) {
                best = Some((i, value, report::trace_to_csv(&trace)));
            }
            log::info!("sweep run {i} (seed {run_seed}): best value {value:.6e}");
            summaries.push(summary);
        }
        let (best_idx, best_value, best_csv) = best.expect("at least one run");
        if let Some(path) = trace_path {
            write_trace(path, &best_csv)?;
        }
        let out = SweepSummary {
            best_seed: summaries[best_idx].seed,
            best_value,
            runs: summaries,
        };
        let mut output = ok_json(&out);
        if any_failed {
            output.exit_code = 4;
        }
        return Ok(output);
    }

    let mut config = build_config(&problem, rho0_override)?;
    config.seed = seed;
    let trace = mscr::run(&config).map_err(map_core)?;
    if let Some(path) = trace_path {
        write_trace(path, &report::trace_to_csv(&trace))?;
    }
    let summary = report::solve_summary(&trace, seed, slack);
    let mut output = ok_json(&summary);
    if matches!(trace.stop, StopReason::NumericalFailure(_)) {
        // partial trace was still written; the exit code flags the failure
        output.exit_code = 4;
    }
    Ok(output)
}

/// Deterministic per-seed starting point for sweep runs: a random ambient
/// matrix (symmetric when the set needs it), projected onto the set by the
/// solver entry.
fn jittered_start(problem: &Problem, seed: u64) -> DMatrix<f64> {
    let (r, c) = problem.set.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    if problem.set.requires_symmetric() {
        (&raw + raw.transpose()) * 0.5
    } else {
        raw
    }
}

pub fn cmd_penalty_check(
    problem_path: &Path,
    rho_override: Option<f64>,
) -> Result<CmdOutput, CliError> {
    let problem = load_problem(problem_path)?;
    let cfg = OracleConfig::new(problem.set.clone(), problem.kappa).map_err(map_core)?;
    let threshold = exact_penalty_threshold(&problem.objective, &problem.set).map_err(map_core)?;
    let rho = match rho_override {
        Some(r) => {
            if !r.is_finite() || r <= 0.0 {
                return Err(CliError::Schema(format!(
                    "--rho0 must be positive, got {r}"
                )));
            }
            r
        }
        None => 1.1 * threshold,
    };
    let (_, feasible_min) = brute_min_feasible(&problem.objective, &cfg).map_err(map_core)?;
    let (pen_point, penalty_min) =
        brute_min_penalty(&problem.objective, rho, &cfg).map_err(map_core)?;
    let tail = tail_sum(&pen_point, problem.kappa).map_err(map_core)?;
    let gap = (penalty_min - feasible_min).abs();
    let report = PenaltyCheckReport {
        threshold,
        rho,
        oracle_feasible_min: feasible_min,
        oracle_penalty_min: penalty_min,
        gap,
        penalty_minimizer_tail: tail,
        pass: gap <= 5e-3 && tail <= 5e-3,
    };
    Ok(ok_json(&report))
}
