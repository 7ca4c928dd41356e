//! JSON report shapes and the CSV trace writer.
//!
//! Reports go to stdout as single JSON documents; the solve trace goes to a
//! CSV file with one row per stage. All trace columns are deterministic for
//! a fixed problem file and seed, so reruns produce byte-identical files;
//! measured timing therefore lives in the JSON summary, and the CSV
//! `wall_ms` column is pinned to 0.

use rankbound_core::{
    BoundForm, BoundReport, BoundScope, BoundTarget, MscrTrace, ProjectionResult, Rigor,
    StopReason, WitnessCertificate,
};
use serde::Serialize;

use crate::problem::MatrixData;

pub fn rigor_name(r: Rigor) -> &'static str {
    match r {
        Rigor::Rigorous => "rigorous",
        Rigor::ConditionalOnThetaM => "conditional_on_theta_m",
        Rigor::Diagnostic => "diagnostic",
    }
}

fn bound_form_name(b: BoundForm) -> &'static str {
    match b {
        BoundForm::BallUnitarilyInvariant => "ball_unitarily_invariant",
        BoundForm::BallFrame => "ball_frame",
        BoundForm::DensityTwoTerm => "density_two_term",
        BoundForm::CorrelationRescaled => "correlation_rescaled",
        BoundForm::CorrelationFallback => "correlation_fallback",
    }
}

#[derive(Debug, Serialize)]
pub struct WitnessOut {
    pub witness: MatrixData,
    pub dist_upper: f64,
    pub tail: f64,
    pub constant_c: f64,
    pub bound_form: &'static str,
    pub input_in_omega: bool,
}

impl WitnessOut {
    pub fn from_certificate(cert: &WitnessCertificate) -> Self {
        Self {
            witness: MatrixData::from_matrix(&cert.witness),
            dist_upper: cert.dist_upper,
            tail: cert.tail,
            constant_c: cert.constant_c,
            bound_form: bound_form_name(cert.bound_form),
            input_in_omega: cert.input_in_omega,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TermOut {
    pub kind: &'static str,
    pub constant: f64,
    pub factor: f64,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundOut {
    pub target: &'static str,
    pub scope: &'static str,
    pub value: f64,
    pub rigor: &'static str,
    pub terms: Vec<TermOut>,
}

impl BoundOut {
    pub fn from_report(report: &BoundReport) -> Self {
        Self {
            target: match report.target {
                BoundTarget::FeasibleSet => "feasible_set",
                BoundTarget::SolutionSet => "solution_set",
            },
            scope: match report.scope {
                BoundScope::Local => "local",
                BoundScope::Global => "global",
            },
            value: report.value,
            rigor: rigor_name(report.rigor),
            terms: report
                .terms
                .iter()
                .map(|t| TermOut {
                    kind: t.kind.label(),
                    constant: t.constant,
                    factor: t.factor,
                    value: t.value(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CertifyReport {
    pub witness: WitnessOut,
    pub feasible_local: BoundOut,
    pub feasible_global: BoundOut,
    pub solution_local: Option<BoundOut>,
    pub solution_global: Option<BoundOut>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ProjectReport {
    pub point: MatrixData,
    pub distance: f64,
    pub iterations: usize,
}

impl ProjectReport {
    pub fn from_result(res: &ProjectionResult) -> Self {
        Self {
            point: MatrixData::from_matrix(&res.point),
            distance: res.distance,
            iterations: res.iterations,
        }
    }
}

/// Scalar view of one stage record, embedded in the solve summary as the
/// JSON form of the trace.
#[derive(Debug, Serialize)]
pub struct StageOut {
    pub k: usize,
    pub rho: f64,
    pub f_x: f64,
    pub f_witness: f64,
    pub tail: f64,
    pub penalty_value: f64,
    pub xi: Option<f64>,
    /// Hex fingerprint of the stage subgradient, for reproducibility checks.
    pub w_fingerprint: String,
    pub subsolver_iterations: usize,
    pub subsolver_converged: bool,
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub best_value: f64,
    pub best_point: MatrixData,
    pub stage_count: usize,
    pub stop_reason: String,
    /// Whether the recorded Ξ sequence is nonincreasing (absent when ϑ was
    /// not supplied).
    pub xi_monotone: Option<bool>,
    pub final_tail: f64,
    pub rho_threshold: f64,
    pub rho_final: f64,
    pub seed: u64,
    pub stages: Vec<StageOut>,
    /// Measured per-stage wall time; informational, not byte-reproducible.
    pub stage_wall_ms: Vec<f64>,
}

pub fn stop_reason_name(stop: &StopReason) -> String {
    match stop {
        StopReason::Converged => "converged".into(),
        StopReason::MaxStages => "max_stages".into(),
        StopReason::NumericalFailure(msg) => format!("numerical_failure: {msg}"),
    }
}

/// `xi_monotone` with the same slack the trace invariants use.
pub fn xi_is_monotone(trace: &MscrTrace, slack: f64) -> Option<bool> {
    let xis: Option<Vec<f64>> = trace.stages.iter().map(|s| s.xi).collect();
    xis.map(|xs| xs.windows(2).all(|w| w[1] <= w[0] + slack))
}

pub fn solve_summary(trace: &MscrTrace, seed: u64, slack: f64) -> SolveSummary {
    SolveSummary {
        best_value: trace.best_value,
        best_point: MatrixData::from_matrix(&trace.best_point),
        stage_count: trace.stages.len(),
        stop_reason: stop_reason_name(&trace.stop),
        xi_monotone: xi_is_monotone(trace, slack),
        final_tail: trace.stages.last().map(|s| s.tail).unwrap_or(0.0),
        rho_threshold: trace.rho_threshold,
        rho_final: trace.stages.last().map(|s| s.rho).unwrap_or(0.0),
        seed,
        stages: trace
            .stages
            .iter()
            .map(|s| StageOut {
                k: s.stage,
                rho: s.rho,
                f_x: s.f_x,
                f_witness: s.f_witness,
                tail: s.tail,
                penalty_value: s.penalty_value,
                xi: s.xi,
                w_fingerprint: format!("{:016x}", s.w_fingerprint),
                subsolver_iterations: s.subsolver_iterations,
                subsolver_converged: s.subsolver_converged,
            })
            .collect(),
        stage_wall_ms: trace.stages.iter().map(|s| s.wall_ms).collect(),
    }
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub runs: Vec<SolveSummary>,
    pub best_seed: u64,
    pub best_value: f64,
}

#[derive(Debug, Serialize)]
pub struct PenaltyCheckReport {
    pub threshold: f64,
    pub rho: f64,
    pub oracle_feasible_min: f64,
    pub oracle_penalty_min: f64,
    pub gap: f64,
    pub penalty_minimizer_tail: f64,
    /// `gap ≤ 5e-3` and `penalty_minimizer_tail ≤ 5e-3`.
    pub pass: bool,
}

/// One row per stage: `k,rho,f_Xk,f_Xhat,tail,penalty_value,xi,wall_ms`.
/// `xi` is empty when ϑ was not supplied; `wall_ms` is 0 by the determinism
/// contract (see the module docs).
pub fn trace_to_csv(trace: &MscrTrace) -> String {
    let mut out = String::from("k,rho,f_Xk,f_Xhat,tail,penalty_value,xi,wall_ms\n");
    for rec in &trace.stages {
        let xi = rec.xi.map(|x| format!("{x:e}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{},0\n",
            rec.stage, rec.rho, rec.f_x, rec.f_witness, rec.tail, rec.penalty_value, xi
        ));
    }
    out
}
