//! Composite error-bound reports: distance to the feasible set or to the
//! solution set, locally (for `X ∈ Ω`) or globally (any `X`), assembled from
//! the tail sum, the distance to `Ω` and a gradient term.
//!
//! The exact nonconvex projection `Π_F` is never computed. Every bound that
//! would consume it is assembled from the constructive witness instead,
//! which only widens the certified value. Quantities that depend on the
//! unknown solution set — the restricted strong convexity constant `ϑ` and
//! the gradient cap `M` — are user-supplied; reports carry a [`Rigor`] label
//! saying exactly which class of claim they make.

use alloc::vec::Vec;

use nalgebra::DMatrix;

#[allow(unused_imports)]
use crate::float::*;
use crate::objectives::SmoothObjective;
use crate::sets::SetSpec;
use crate::spectral::{self, RankSpec};
use crate::witness::{self, MEMBERSHIP_TOL};
use crate::{Error, Result};

/// What a report can honestly claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rigor {
    /// Follows from supplied data alone.
    Rigorous,
    /// Valid provided the user-supplied `ϑ` (and `M`) are correct.
    ConditionalOnThetaM,
    /// A surrogate entered (best-known solution stand-in, or the input was
    /// outside `Ω`); the number is informative, not a certificate.
    Diagnostic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundTarget {
    FeasibleSet,
    SolutionSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundScope {
    /// Valid for inputs in `Ω`.
    Local,
    /// Valid for any input of matching shape.
    Global,
}

/// The quantity a term multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    /// `Σ_{i>κ} σᵢ(X)`.
    Tail,
    /// `dist(X, Ω)`.
    DistToOmega,
    /// A gradient-difference magnitude.
    Gradient,
}

impl TermKind {
    pub fn label(&self) -> &'static str {
        match self {
            TermKind::Tail => "tail",
            TermKind::DistToOmega => "dist_omega",
            TermKind::Gradient => "gradient",
        }
    }
}

/// One additive piece `constant · factor` of a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerm {
    pub kind: TermKind,
    pub constant: f64,
    pub factor: f64,
}

impl BoundTerm {
    pub fn value(&self) -> f64 {
        self.constant * self.factor
    }
}

/// An itemized error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub target: BoundTarget,
    pub scope: BoundScope,
    /// Sum of the terms.
    pub value: f64,
    pub terms: Vec<BoundTerm>,
    pub rigor: Rigor,
}

fn assemble(
    target: BoundTarget,
    scope: BoundScope,
    terms: Vec<BoundTerm>,
    rigor: Rigor,
) -> BoundReport {
    let value = terms.iter().map(BoundTerm::value).sum();
    BoundReport {
        target,
        scope,
        value,
        terms,
        rigor,
    }
}

/// `dist(X, F) ≤ c · Σ_{i>κ} σᵢ(X)` for `X ∈ Ω`; diagnostic otherwise.
pub fn bound_feasible_local(x: &DMatrix<f64>, k: RankSpec, set: &SetSpec) -> Result<BoundReport> {
    let tail = spectral::tail_sum(x, k)?;
    let in_omega = set.member(x, MEMBERSHIP_TOL)?;
    let rigor = if in_omega {
        Rigor::Rigorous
    } else {
        Rigor::Diagnostic
    };
    Ok(assemble(
        BoundTarget::FeasibleSet,
        BoundScope::Local,
        alloc::vec![BoundTerm {
            kind: TermKind::Tail,
            constant: set.error_bound_constant(),
            factor: tail,
        }],
        rigor,
    ))
}

/// `dist(X, F) ≤ (1 + c√n)·dist(X, Ω) + c·Σ_{i>κ} σᵢ(X)` for any `X`, using
/// the exact projection for the distance term.
pub fn bound_feasible_global(x: &DMatrix<f64>, k: RankSpec, set: &SetSpec) -> Result<BoundReport> {
    let tail = spectral::tail_sum(x, k)?;
    let dist = set.dist_to_omega(x)?;
    let c = set.error_bound_constant();
    let n = set.min_dim() as f64;
    Ok(assemble(
        BoundTarget::FeasibleSet,
        BoundScope::Global,
        alloc::vec![
            BoundTerm {
                kind: TermKind::DistToOmega,
                constant: 1.0 + c * n.sqrt(),
                factor: dist,
            },
            BoundTerm {
                kind: TermKind::Tail,
                constant: c,
                factor: tail,
            },
        ],
        Rigor::Rigorous,
    ))
}

/// Gradient term of the solution-set bounds, evaluated at a feasible point.
/// With the user's `M` it is `(‖∇f(X̂_F)‖ + M)/ϑ` (conditional on `ϑ, M`);
/// with only a solution surrogate it is `‖∇f(X̂_F) − ∇f(X̃*)‖/ϑ`
/// (diagnostic).
fn gradient_term<F: SmoothObjective + ?Sized>(
    objective: &F,
    feasible_point: &DMatrix<f64>,
    theta: f64,
    xstar_surrogate: Option<&DMatrix<f64>>,
) -> Result<(BoundTerm, Rigor)> {
    let grad_at_witness = objective.gradient(feasible_point);
    if let Some(m_grad) = objective.grad_bound() {
        Ok((
            BoundTerm {
                kind: TermKind::Gradient,
                constant: 1.0 / theta,
                factor: grad_at_witness.norm() + m_grad,
            },
            Rigor::ConditionalOnThetaM,
        ))
    } else if let Some(xs) = xstar_surrogate {
        Ok((
            BoundTerm {
                kind: TermKind::Gradient,
                constant: 1.0 / theta,
                factor: (grad_at_witness - objective.gradient(xs)).norm(),
            },
            Rigor::Diagnostic,
        ))
    } else {
        Err(Error::MissingConstant(
            "solution-set bounds need either grad_bound (M) or a solution surrogate",
        ))
    }
}

/// `dist(X, F*) ≤ c·Σ_{i>κ}σᵢ(X) + (1/ϑ)·g` for `X ∈ Ω`, with the gradient
/// term `g` evaluated at the constructive witness (a valid substitute for
/// `Π_F(X)` since the chain only needs some feasible point within
/// `c · tail` of `X`).
pub fn bound_solution_local<F: SmoothObjective + ?Sized>(
    x: &DMatrix<f64>,
    k: RankSpec,
    set: &SetSpec,
    objective: &F,
    xstar_surrogate: Option<&DMatrix<f64>>,
) -> Result<BoundReport> {
    let theta = objective.rsc_theta().ok_or(Error::MissingConstant(
        "rsc_theta is required for solution-set bounds",
    ))?;
    let cert = witness::feasibility_certificate(x, k, set)?;
    let tail = spectral::tail_sum(x, k)?;
    let (grad_term, grad_rigor) = gradient_term(objective, &cert.witness, theta, xstar_surrogate)?;
    let rigor = if cert.input_in_omega {
        grad_rigor
    } else {
        Rigor::Diagnostic
    };
    Ok(assemble(
        BoundTarget::SolutionSet,
        BoundScope::Local,
        alloc::vec![
            BoundTerm {
                kind: TermKind::Tail,
                constant: set.error_bound_constant(),
                factor: tail,
            },
            grad_term,
        ],
        rigor,
    ))
}

/// Global solution-set bound
/// `(1 + c√n)·dist(X, Ω) + c·Σ_{i>κ}σᵢ(X) + (1/ϑ)·g`, with the gradient
/// term evaluated at the witness of `Π_Ω(X)` so it always sits at a feasible
/// point.
pub fn bound_solution_global<F: SmoothObjective + ?Sized>(
    x: &DMatrix<f64>,
    k: RankSpec,
    set: &SetSpec,
    objective: &F,
    xstar_surrogate: Option<&DMatrix<f64>>,
) -> Result<BoundReport> {
    let theta = objective.rsc_theta().ok_or(Error::MissingConstant(
        "rsc_theta is required for solution-set bounds",
    ))?;
    let feasible_part = bound_feasible_global(x, k, set)?;
    let projected = set.project(x)?;
    let cert = witness::feasibility_certificate(&projected.point, k, set)?;
    let (grad_term, grad_rigor) = gradient_term(objective, &cert.witness, theta, xstar_surrogate)?;
    let mut terms = feasible_part.terms;
    terms.push(grad_term);
    Ok(assemble(
        BoundTarget::SolutionSet,
        BoundScope::Global,
        terms,
        grad_rigor,
    ))
}

/// The stagewise solution-distance bound
/// `Ξ = (2√(2L̄)/ϑ) · √(f(X) + ρ_prev·Σ_{i>κ}σᵢ(X) + f*)`.
///
/// `fstar_surrogate` stands in for the unknown optimal value `f(X*)`; the
/// expression is monotone in it, so any upper bound (e.g. the best feasible
/// value seen) keeps `Ξ` a valid upper bound.
pub fn xi_bound<F: SmoothObjective + ?Sized>(
    x: &DMatrix<f64>,
    rho_prev: f64,
    objective: &F,
    set: &SetSpec,
    k: RankSpec,
    fstar_surrogate: f64,
) -> Result<f64> {
    if x.shape() != set.dims() {
        return Err(Error::InvalidInput(
            "matrix dimensions do not match the set".into(),
        ));
    }
    let theta = objective.rsc_theta().ok_or(Error::MissingConstant(
        "rsc_theta is required for xi bounds",
    ))?;
    let lbar = objective.grad_lipschitz();
    let tail = spectral::tail_sum(x, k)?;
    let inner = (objective.eval(x) + rho_prev * tail + fstar_surrogate).max(0.0);
    Ok(2.0 * (2.0 * lbar).sqrt() / theta * inner.sqrt())
}
