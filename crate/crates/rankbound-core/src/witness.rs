//! Constructive feasible witnesses and the distance certificates they carry.
//!
//! For `X ∈ Ω` a witness `X̂_F ∈ F = Ω ∩ {rank ≤ κ}` is built by repairing
//! the rank-κ truncation `Π_R(X)`: rescaling into the ball, normalizing the
//! trace for density matrices, or renormalizing the diagonal (with an
//! all-ones fallback) for correlation matrices. Each construction comes with
//! a rigorous upper bound on `dist(X, F)` driven by the truncation residual,
//! with the set-dependent constant
//!
//! - ball, unitarily invariant norm: `‖X − Π_R(X)‖_F`,
//! - ball, general norm: `√(1 + c_u²/c_l²) · ‖X − Π_R(X)‖_F`,
//! - density: `√(‖X − Π_R(X)‖_F² + ‖X − Π_R(X)‖_*²)`,
//! - correlation: `(1 + 2n) · ‖X − Π_R(X)‖_*`.

use alloc::format;

use nalgebra::DMatrix;

#[allow(unused_imports)]
use crate::float::*;
use crate::sets::{SetKind, SetSpec};
use crate::spectral::{self, RankSpec, SpectralForm};
use crate::{Error, Result};

/// Membership tolerance deciding whether the input counts as lying in `Ω`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// Below this, a diagonal entry of `Π_R(X)` triggers the all-ones fallback
/// of the correlation witness (the rescaling matrix would blow up).
pub const DIAG_POSITIVITY_TOL: f64 = 1e-12;

/// Which construction produced the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundForm {
    /// Truncate, rescale into the ball if needed; constant 1.
    BallUnitarilyInvariant,
    /// Same witness, frame constant `√(1 + c_u²/c_l²)`.
    BallFrame,
    /// Trace-normalized truncation, two-term bound.
    DensityTwoTerm,
    /// Diagonally rescaled truncation `D Π_R(X) D`.
    CorrelationRescaled,
    /// All-ones matrix fallback when the truncated diagonal degenerates.
    CorrelationFallback,
}

/// A feasible point together with a certified distance bound.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessCertificate {
    /// The constructed `X̂_F ∈ F` (feasible by construction when the input
    /// lies in `Ω`).
    pub witness: DMatrix<f64>,
    /// Upper bound on `dist(X, F)`; when `input_in_omega` is false this is
    /// just the raw `‖X − witness‖_F` and certifies nothing.
    pub dist_upper: f64,
    /// `Σ_{i>κ} σᵢ(X)`.
    pub tail: f64,
    /// The set's error-bound constant `c`, so `dist_upper ≤ c · tail` for
    /// inputs in `Ω`.
    pub constant_c: f64,
    pub bound_form: BoundForm,
    pub input_in_omega: bool,
}

fn check_kappa(k: RankSpec, set: &SetSpec) -> Result<()> {
    if k.kappa() > set.min_dim() {
        return Err(Error::InvalidInput(format!(
            "kappa = {} exceeds min dimension {}",
            k.kappa(),
            set.min_dim()
        )));
    }
    Ok(())
}

/// Singular-value tail of a symmetric matrix from its signed eigenvalues:
/// the sum of the `n − κ` smallest magnitudes.
fn sigma_tail_of_eigen(form: &SpectralForm, k: RankSpec) -> f64 {
    let mut mags: alloc::vec::Vec<f64> = form.values().iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    mags.into_iter().skip(k.kappa()).sum()
}

/// Witness for a ball set: `X̂_F = γ/max(γ, |||Π_R(X)|||) · Π_R(X)`.
pub fn witness_ball(x: &DMatrix<f64>, k: RankSpec, set: &SetSpec) -> Result<WitnessCertificate> {
    let SetKind::Ball { norm, gamma } = set.kind() else {
        return Err(Error::InvalidInput("witness_ball needs a ball set".into()));
    };
    check_kappa(k, set)?;
    let input_in_omega = set.member(x, MEMBERSHIP_TOL)?;
    let form = spectral::decompose(x, false)?;
    let truncated = form.truncated(k);
    let norm_of_truncation = norm.eval(&truncated);
    let witness = if norm_of_truncation > *gamma {
        &truncated * (gamma / norm_of_truncation)
    } else {
        truncated
    };
    let tail = form.tail_sum(k);
    let fro_residual = form.tail_frobenius(k);
    let (bound_form, constant) = if norm.is_unitarily_invariant() {
        (BoundForm::BallUnitarilyInvariant, 1.0)
    } else {
        let (cl, cu) = norm.frame_constants(set.dims());
        (BoundForm::BallFrame, (1.0 + (cu / cl) * (cu / cl)).sqrt())
    };
    let dist_upper = if input_in_omega {
        constant * fro_residual
    } else {
        (x - &witness).norm()
    };
    Ok(WitnessCertificate {
        witness,
        dist_upper,
        tail,
        constant_c: set.error_bound_constant(),
        bound_form,
        input_in_omega,
    })
}

/// Witness for the density set: `X̂_F = Π_R(X) / tr(Π_R(X))` with the
/// eigen-path truncation.
pub fn witness_density(x: &DMatrix<f64>, k: RankSpec) -> Result<WitnessCertificate> {
    let set = SetSpec::density(x.nrows())?;
    check_kappa(k, &set)?;
    let input_in_omega = set.member(x, MEMBERSHIP_TOL)?;
    let form = spectral::decompose(x, true)?;
    let truncated = form.truncated(k);
    let trace = truncated.trace();
    if trace <= 1e-14 {
        // impossible for a density matrix (λ₁ ≥ 1/n); guards corrupted input
        return Err(Error::InvalidInput(format!(
            "trace of the rank-{} truncation is {trace:.3e}; not a density matrix",
            k.kappa()
        )));
    }
    let witness = &truncated / trace;
    let fro_residual = form.tail_frobenius(k);
    let nuc_residual = form.tail_nuclear(k);
    let dist_upper = if input_in_omega {
        (fro_residual * fro_residual + nuc_residual * nuc_residual).sqrt()
    } else {
        (x - &witness).norm()
    };
    Ok(WitnessCertificate {
        witness,
        dist_upper,
        tail: sigma_tail_of_eigen(&form, k),
        constant_c: set.error_bound_constant(),
        bound_form: BoundForm::DensityTwoTerm,
        input_in_omega,
    })
}

/// Witness for the correlation set: `D Π_R(X) D` with
/// `D = Diag(1/√diag(Π_R(X)))` when the truncated diagonal stays positive,
/// the all-ones matrix otherwise.
pub fn witness_correlation(x: &DMatrix<f64>, k: RankSpec) -> Result<WitnessCertificate> {
    let n = x.nrows();
    let set = SetSpec::correlation(n)?;
    check_kappa(k, &set)?;
    let input_in_omega = set.member(x, MEMBERSHIP_TOL)?;
    let form = spectral::decompose(x, true)?;
    let truncated = form.truncated(k);
    let min_diag = (0..n).fold(f64::INFINITY, |a, i| a.min(truncated[(i, i)]));
    let (witness, bound_form) = if min_diag > DIAG_POSITIVITY_TOL {
        let mut w = truncated.clone();
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] /= (truncated[(i, i)] * truncated[(j, j)]).sqrt();
            }
        }
        // unit diagonal holds algebraically; pin it exactly
        for i in 0..n {
            w[(i, i)] = 1.0;
        }
        (w, BoundForm::CorrelationRescaled)
    } else {
        (
            DMatrix::from_element(n, n, 1.0),
            BoundForm::CorrelationFallback,
        )
    };
    let nuc_residual = form.tail_nuclear(k);
    let constant_c = set.error_bound_constant();
    let dist_upper = if input_in_omega {
        constant_c * nuc_residual
    } else {
        (x - &witness).norm()
    };
    Ok(WitnessCertificate {
        witness,
        dist_upper,
        tail: sigma_tail_of_eigen(&form, k),
        constant_c,
        bound_form,
        input_in_omega,
    })
}

/// Dispatches to the witness constructor matching the set family.
pub fn feasibility_certificate(
    x: &DMatrix<f64>,
    k: RankSpec,
    set: &SetSpec,
) -> Result<WitnessCertificate> {
    if x.shape() != set.dims() {
        return Err(Error::InvalidInput(format!(
            "matrix is {}x{} but the set expects {}x{}",
            x.nrows(),
            x.ncols(),
            set.dims().0,
            set.dims().1
        )));
    }
    match set.kind() {
        SetKind::Ball { .. } => witness_ball(x, k, set),
        SetKind::Density => witness_density(x, k),
        SetKind::Correlation => witness_correlation(x, k),
    }
}
