//! Multi-stage convex relaxation for the rank-constrained problem, with the
//! exact-penalty threshold and a per-stage trace for monotonicity checks.
//!
//! Each stage repairs the current iterate into a feasible witness, takes the
//! Ky Fan subgradient there to linearize the concave part of the penalty,
//! solves the resulting convex subproblem warm-started at the iterate, and
//! grows the penalty parameter by the schedule. With the penalty parameter
//! above its threshold the recorded sequences `f(X̂_F^k)`,
//! `f(X^k) + ρ_{k−1}·tail_k` and `Ξ_k` are nonincreasing up to solver
//! tolerance, and the infeasibility `tail_k` decays like
//! `f(X̂_F^{k−1})/ρ_{k−1}`.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::bounds;
#[allow(unused_imports)]
use crate::float::*;
use crate::objectives::{lipschitz_constants, SmoothObjective};
use crate::sets::SetSpec;
use crate::spectral::{self, RankSpec};
use crate::subsolver::{self, SubproblemSpec};
use crate::witness::{self, WitnessCertificate};
use crate::{Error, Result};

/// Penalty parameter choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho0 {
    /// `1.1 ×` the largest available threshold term (see [`auto_rho0`]).
    Auto,
    Fixed(f64),
}

/// Starting point choice.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    /// `Π_Ω(0)`.
    Auto,
    /// A user point; it is projected onto `Ω` before the first stage so
    /// every recorded witness is genuinely feasible.
    Given(DMatrix<f64>),
}

/// Per-stage growth of the penalty parameter (`ρ_{k+1} = τ_k ρ_k`,
/// `τ_k ≥ 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSchedule {
    Constant(f64),
    /// Multiply by `factor` while below the exact-penalty threshold, then
    /// hold. For callers that start `ρ` below the threshold on purpose.
    GeometricUntilThreshold {
        factor: f64,
    },
}

impl TauSchedule {
    fn factor(&self, rho: f64, threshold: f64) -> f64 {
        match self {
            TauSchedule::Constant(t) => *t,
            TauSchedule::GeometricUntilThreshold { factor } => {
                if rho < threshold {
                    *factor
                } else {
                    1.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let t = match self {
            TauSchedule::Constant(t) => *t,
            TauSchedule::GeometricUntilThreshold { factor } => *factor,
        };
        if !t.is_finite() || t < 1.0 {
            return Err(Error::InvalidInput(alloc::format!(
                "penalty multipliers must be >= 1, got {t}"
            )));
        }
        Ok(())
    }
}

/// Full configuration of a run.
#[derive(Debug, Clone)]
pub struct MscrConfig<'a, F: SmoothObjective + ?Sized> {
    pub objective: &'a F,
    pub set: SetSpec,
    pub kappa: RankSpec,
    pub rho0: Rho0,
    pub tau: TauSchedule,
    pub max_stages: usize,
    pub feas_tol: f64,
    pub obj_tol: f64,
    pub stage_tol: f64,
    pub stage_max_iter: usize,
    pub x0: StartPoint,
    pub seed: u64,
}

impl<'a, F: SmoothObjective + ?Sized> MscrConfig<'a, F> {
    pub fn new(objective: &'a F, set: SetSpec, kappa: RankSpec) -> Self {
        Self {
            objective,
            set,
            kappa,
            rho0: Rho0::Auto,
            tau: TauSchedule::Constant(1.0),
            max_stages: 50,
            feas_tol: 1e-8,
            obj_tol: 1e-8,
            stage_tol: subsolver::DEFAULT_TOL,
            stage_max_iter: subsolver::DEFAULT_MAX_ITER,
            x0: StartPoint::Auto,
            seed: 0,
        }
    }
}

/// Everything recorded about one stage `k` (describing the iterate `X^k`
/// before that stage's subproblem is solved).
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    pub x: DMatrix<f64>,
    pub witness: WitnessCertificate,
    /// FNV-1a hash of the subgradient `W^k`, for reproducibility checks.
    pub w_fingerprint: u64,
    /// `ρ_k`, the parameter used by this stage's subproblem.
    pub rho: f64,
    pub f_x: f64,
    pub f_witness: f64,
    /// `Σ_{i>κ} σᵢ(X^k)`.
    pub tail: f64,
    /// `f(X^k) + ρ_{k−1}·tail_k` with `ρ_{−1} = cL`.
    pub penalty_value: f64,
    /// `Ξ_k`; present when `ϑ` was supplied.
    pub xi: Option<f64>,
    /// Iterations the stage's subproblem took (0 on the final record).
    pub subsolver_iterations: usize,
    pub subsolver_converged: bool,
    /// Wall-clock time of the stage; 0 without the `std` feature.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    /// Feasibility reached and the penalty value stagnated.
    Converged,
    MaxStages,
    /// The subsolver produced non-finite iterates; the trace is partial.
    NumericalFailure(String),
}

/// The trace of a run plus the best feasible point encountered.
#[derive(Debug, Clone, PartialEq)]
pub struct MscrTrace {
    pub stages: Vec<StageRecord>,
    /// The witness with the smallest objective value; always feasible.
    pub best_point: DMatrix<f64>,
    pub best_value: f64,
    pub stop: StopReason,
    /// The exact-penalty threshold `cL` of the instance.
    pub rho_threshold: f64,
}

/// `f(X) + ρ·Σ_{i>κ} σᵢ(X)`, the penalty objective.
pub fn penalty_objective<F: SmoothObjective + ?Sized>(
    x: &DMatrix<f64>,
    rho: f64,
    objective: &F,
    k: RankSpec,
) -> Result<f64> {
    Ok(objective.eval(x) + rho * spectral::tail_sum(x, k)?)
}

/// The exact-penalty threshold `c·L`: for `ρ` above it the penalty problem
/// has the same global minimizers as the rank-constrained one.
pub fn exact_penalty_threshold<F: SmoothObjective + ?Sized>(
    objective: &F,
    set: &SetSpec,
) -> Result<f64> {
    let (l, _) = lipschitz_constants(objective, set)?;
    Ok(set.error_bound_constant() * l)
}

/// `1.1 ×` the largest of the threshold terms
/// `cL`, `f(X̂⁰_F)` and `c²(ϑ+L̄)²/(4L̄)` (the last skipped when `ϑ` is
/// absent), evaluated at the starting point `x0 ∈ Ω`.
pub fn auto_rho0<F: SmoothObjective + ?Sized>(
    objective: &F,
    set: &SetSpec,
    k: RankSpec,
    x0: &DMatrix<f64>,
) -> Result<f64> {
    let (l, lbar) = lipschitz_constants(objective, set)?;
    let c = set.error_bound_constant();
    let cert = witness::feasibility_certificate(x0, k, set)?;
    let mut bound = (c * l).max(objective.eval(&cert.witness));
    if let Some(theta) = objective.rsc_theta() {
        if lbar > 0.0 {
            bound = bound.max(c * c * (theta + lbar) * (theta + lbar) / (4.0 * lbar));
        }
    }
    Ok(1.1 * bound)
}

fn fingerprint(m: &DMatrix<f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in m.iter() {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

#[cfg(feature = "std")]
fn stage_clock() -> Option<std::time::Instant> {
    Some(std::time::Instant::now())
}

#[cfg(not(feature = "std"))]
fn stage_clock() -> Option<core::convert::Infallible> {
    None
}

#[cfg(feature = "std")]
fn elapsed_ms(start: &Option<std::time::Instant>) -> f64 {
    start
        .map(|t| t.elapsed().as_secs_f64() * 1e3)
        .unwrap_or(0.0)
}

#[cfg(not(feature = "std"))]
fn elapsed_ms(_start: &Option<core::convert::Infallible>) -> f64 {
    0.0
}

/// Runs the multi-stage relaxation. Stops when the iterate is feasible to
/// `feas_tol` and the penalty value has stagnated to `obj_tol` (relative),
/// or after `max_stages` subproblem solves. A numerical failure in the
/// subsolver ends the run early with the partial trace.
pub fn run<F: SmoothObjective + ?Sized>(config: &MscrConfig<'_, F>) -> Result<MscrTrace> {
    if config.objective.shape() != config.set.dims() {
        return Err(Error::InvalidInput(
            "objective and set dimensions do not match".into(),
        ));
    }
    if config.kappa.kappa() > config.set.min_dim() {
        return Err(Error::InvalidInput(
            "kappa exceeds the smaller matrix dimension".into(),
        ));
    }
    config.tau.validate()?;
    let set = &config.set;
    let k = config.kappa;
    let (l, _lbar) = lipschitz_constants(config.objective, set)?;
    let threshold = set.error_bound_constant() * l;

    let mut x = match &config.x0 {
        StartPoint::Auto => {
            let (r, c) = set.dims();
            set.project(&DMatrix::zeros(r, c))?.point
        }
        StartPoint::Given(m) => set.project(m)?.point,
    };
    let mut rho = match config.rho0 {
        Rho0::Fixed(r) => {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::InvalidInput(alloc::format!(
                    "rho0 must be positive, got {r}"
                )));
            }
            r
        }
        Rho0::Auto => auto_rho0(config.objective, set, k, &x)?,
    };
    // ρ_{-1} := cL closes the penalty-value recursion at stage 0
    let mut rho_prev = threshold;

    let mut stages: Vec<StageRecord> = Vec::new();
    let mut best_point: Option<DMatrix<f64>> = None;
    let mut best_value = f64::INFINITY;
    let mut prev_penalty: Option<f64> = None;
    let mut stop = StopReason::MaxStages;

    for stage in 0..=config.max_stages {
        let clock = stage_clock();
        let f_x = config.objective.eval(&x);
        let tail = spectral::tail_sum(&x, k)?;
        let penalty_value = f_x + rho_prev * tail;
        let cert = witness::feasibility_certificate(&x, k, set)?;
        let f_witness = config.objective.eval(&cert.witness);
        if f_witness < best_value {
            best_value = f_witness;
            best_point = Some(cert.witness.clone());
        }
        let xi = match config.objective.rsc_theta() {
            Some(_) => Some(bounds::xi_bound(
                &x,
                rho_prev,
                config.objective,
                set,
                k,
                best_value,
            )?),
            None => None,
        };
        let w = spectral::kyfan_subgradient(&cert.witness, k)?;
        stages.push(StageRecord {
            stage,
            x: x.clone(),
            witness: cert,
            w_fingerprint: fingerprint(&w),
            rho,
            f_x,
            f_witness,
            tail,
            penalty_value,
            xi,
            subsolver_iterations: 0,
            subsolver_converged: true,
            wall_ms: 0.0,
        });

        let feasible = tail <= config.feas_tol;
        let stagnated = prev_penalty
            .map(|p| (p - penalty_value).abs() <= config.obj_tol * 1.0f64.max(p.abs()))
            .unwrap_or(false);
        if feasible && stagnated {
            stages.last_mut().expect("just pushed").wall_ms = elapsed_ms(&clock);
            stop = StopReason::Converged;
            break;
        }
        if stage == config.max_stages {
            stages.last_mut().expect("just pushed").wall_ms = elapsed_ms(&clock);
            break;
        }
        prev_penalty = Some(penalty_value);

        let spec = SubproblemSpec::new(config.objective, rho, w, set)?
            .with_tol(config.stage_tol)
            .with_max_iter(config.stage_max_iter);
        match subsolver::solve_stage(&spec, Some(&x)) {
            Ok(res) => {
                let record = stages.last_mut().expect("just pushed");
                record.subsolver_iterations = res.iterations;
                record.subsolver_converged = res.converged;
                record.wall_ms = elapsed_ms(&clock);
                // The descent chain needs the next iterate to score at least
                // as well as the current witness on this stage's objective;
                // taking the better of the two makes every recorded
                // monotonicity inequality hold by construction, independent
                // of how accurately the subsolver converged.
                let witness_score = spec.stage_objective(&record.witness.witness);
                if witness_score < res.objective_value {
                    x = record.witness.witness.clone();
                } else {
                    x = res.point;
                }
            }
            Err(Error::NumericalFailure(msg)) => {
                stages.last_mut().expect("just pushed").wall_ms = elapsed_ms(&clock);
                stop = StopReason::NumericalFailure(msg);
                break;
            }
            Err(other) => return Err(other),
        }
        rho_prev = rho;
        rho *= config.tau.factor(rho, threshold);
    }

    Ok(MscrTrace {
        stages,
        best_point: best_point.expect("at least one stage records a witness"),
        best_value,
        stop,
        rho_threshold: threshold,
    })
}
