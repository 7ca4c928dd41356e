//! Rank-constrained matrix optimization toolkit.
//!
//! The problem treated here is `min f(X)` subject to `rank(X) ≤ κ` and
//! `X ∈ Ω`, where `Ω` is one of three compact convex families: a norm ball,
//! the density matrices (PSD, unit trace) or the correlation matrices (PSD,
//! unit diagonal). The crate provides
//!
//! - deterministic spectral decompositions and rank primitives ([`spectral`]),
//! - membership tests, exact Euclidean projections and distances for the
//!   three set families ([`sets`]),
//! - constructive feasible witnesses with rigorous distance certificates
//!   ([`witness`]),
//! - smooth convex objective models with the Lipschitz data the certificates
//!   consume ([`objectives`]),
//! - composite error-bound reports for the feasible and solution sets
//!   ([`bounds`]),
//! - a convex stage subproblem solver ([`subsolver`]) and the multi-stage
//!   convex relaxation driver with exact-penalty threshold ([`mscr`]),
//! - a desk-scale brute-force oracle for validating exact penalty claims
//!   ([`oracle`]).
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only adds wall-clock timing to solver traces.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bounds;
pub mod mscr;
pub mod objectives;
pub mod oracle;
pub mod sets;
pub mod spectral;
pub mod subsolver;
pub mod witness;

#[cfg(test)]
pub(crate) mod testutil;

mod float {
    // Under no_std, f64 math methods come from these traits instead of the
    // std inherent impls.
    #[allow(unused_imports)]
    pub(crate) use nalgebra::{ComplexField as _, RealField as _};
}

use alloc::boxed::Box;
use alloc::string::String;
use nalgebra::DMatrix;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violated a precondition (non-finite entries, dimension
    /// mismatch, asymmetry where symmetry is required, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An iterative projection hit its iteration cap. Carries the best
    /// iterate found and the residuals at exit.
    #[error(
        "projection did not converge after {iterations} iterations \
         (step delta {step_delta:.3e}, constraint residual {residual:.3e})"
    )]
    ConvergenceFailure {
        best: Box<DMatrix<f64>>,
        distance: f64,
        iterations: usize,
        step_delta: f64,
        residual: f64,
    },
    /// NaN or infinity showed up in solver iterates.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// An operation needed a user-supplied constant that was not provided.
    #[error("missing constant: {0}")]
    MissingConstant(&'static str),
    /// The requested configuration is outside the documented limits.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub use bounds::{
    bound_feasible_global, bound_feasible_local, bound_solution_global, bound_solution_local,
    xi_bound, BoundReport, BoundScope, BoundTarget, BoundTerm, Rigor, TermKind,
};
pub use mscr::{
    auto_rho0, exact_penalty_threshold, penalty_objective, MscrConfig, MscrTrace, Rho0,
    StageRecord, StartPoint, StopReason, TauSchedule,
};
pub use objectives::{lipschitz_constants, ObjectiveKind, ObjectiveModel, SmoothObjective};
pub use oracle::{brute_min_feasible, brute_min_penalty, OracleConfig};
pub use sets::{BallNorm, ProjectionResult, SetKind, SetSpec, SurrogateResidual};
pub use spectral::{
    decompose, kyfan_norm, kyfan_subgradient, tail_sum, truncate, truncate_symmetric, RankSpec,
    SpectralForm,
};
pub use subsolver::{solve_stage, svt, SubproblemResult, SubproblemSpec};
pub use witness::{
    feasibility_certificate, witness_ball, witness_correlation, witness_density, BoundForm,
    WitnessCertificate,
};
