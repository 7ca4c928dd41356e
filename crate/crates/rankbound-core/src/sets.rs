//! The three convex set families `Ω`: norm balls, density matrices and
//! correlation matrices, with membership tests, exact Euclidean projections
//! and `dist(X, Ω)`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use crate::float::*;
use crate::spectral::{self, SYMMETRY_TOL};
use crate::{Error, Result};

/// Stops the correlation projection when successive iterates differ by less
/// than this.
pub const DYKSTRA_STEP_TOL: f64 = 1e-10;
/// Constraint residuals required of the correlation projection at exit.
pub const DYKSTRA_RESIDUAL_TOL: f64 = 1e-9;
/// Default iteration cap for the correlation projection.
pub const DYKSTRA_MAX_ITER: usize = 100_000;

/// Matrix norm defining a ball set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallNorm {
    Frobenius,
    /// Largest singular value.
    Spectral,
    /// Sum of singular values.
    Nuclear,
    /// Largest entry magnitude.
    EntrywiseInf,
}

impl BallNorm {
    /// `(c_l, c_u)` with `c_l‖·‖_F ≤ |||·||| ≤ c_u‖·‖_F` on `n₁×n₂`
    /// matrices, the tightest standard constants.
    pub fn frame_constants(&self, dims: (usize, usize)) -> (f64, f64) {
        let n = dims.0.min(dims.1) as f64;
        match self {
            BallNorm::Frobenius => (1.0, 1.0),
            BallNorm::Spectral => (1.0 / n.sqrt(), 1.0),
            BallNorm::Nuclear => (1.0, n.sqrt()),
            BallNorm::EntrywiseInf => (1.0 / ((dims.0 * dims.1) as f64).sqrt(), 1.0),
        }
    }

    /// Unitarily invariant norms admit the constant-1 feasibility bound.
    pub fn is_unitarily_invariant(&self) -> bool {
        !matches!(self, BallNorm::EntrywiseInf)
    }

    pub fn eval(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            BallNorm::Frobenius => x.norm(),
            BallNorm::Spectral => singular_values(x)[0],
            BallNorm::Nuclear => singular_values(x).iter().sum(),
            BallNorm::EntrywiseInf => x.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        }
    }
}

fn singular_values(x: &DMatrix<f64>) -> DVector<f64> {
    let mut sv = x.clone().singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
    for (i, val) in v.into_iter().enumerate() {
        sv[i] = val;
    }
    sv
}

/// One of the three convex families.
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    Ball {
        norm: BallNorm,
        gamma: f64,
    },
    /// PSD with unit trace.
    Density,
    /// PSD with unit diagonal.
    Correlation,
}

/// A concrete set `Ω` with its dimensions and derived constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SetSpec {
    kind: SetKind,
    dims: (usize, usize),
}

impl SetSpec {
    pub fn ball(norm: BallNorm, gamma: f64, rows: usize, cols: usize) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "ball radius must be a positive finite number, got {gamma}"
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(
                "matrix dimensions must be positive".into(),
            ));
        }
        Ok(Self {
            kind: SetKind::Ball { norm, gamma },
            dims: (rows, cols),
        })
    }

    pub fn density(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "matrix dimensions must be positive".into(),
            ));
        }
        Ok(Self {
            kind: SetKind::Density,
            dims: (n, n),
        })
    }

    pub fn correlation(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "matrix dimensions must be positive".into(),
            ));
        }
        Ok(Self {
            kind: SetKind::Correlation,
            dims: (n, n),
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn min_dim(&self) -> usize {
        self.dims.0.min(self.dims.1)
    }

    /// Whether members live in the symmetric matrices.
    pub fn requires_symmetric(&self) -> bool {
        matches!(self.kind, SetKind::Density | SetKind::Correlation)
    }

    /// The feasibility error-bound constant `c` with
    /// `dist(X, Ω ∩ R) ≤ c · Σ_{i>κ} σᵢ(X)` for all `X ∈ Ω`:
    /// `1` for unitarily invariant balls, `√(1 + c_u²/c_l²)` for other
    /// balls, `√2` for density, `1 + 2n` for correlation.
    pub fn error_bound_constant(&self) -> f64 {
        match &self.kind {
            SetKind::Ball { norm, .. } => {
                if norm.is_unitarily_invariant() {
                    1.0
                } else {
                    let (cl, cu) = norm.frame_constants(self.dims);
                    (1.0 + (cu / cl) * (cu / cl)).sqrt()
                }
            }
            SetKind::Density => 2.0f64.sqrt(),
            SetKind::Correlation => 1.0 + 2.0 * self.dims.0 as f64,
        }
    }

    /// An upper bound on `‖X‖_F` over `Ω`.
    pub fn radius_bound(&self) -> f64 {
        match &self.kind {
            SetKind::Ball { norm, gamma } => {
                let (cl, _) = norm.frame_constants(self.dims);
                gamma / cl
            }
            // ‖X‖_F ≤ tr(X) on the PSD cone
            SetKind::Density => 1.0,
            SetKind::Correlation => self.dims.0 as f64,
        }
    }

    fn check_dims(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.shape() != self.dims {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{} but the set expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.dims.0,
                self.dims.1
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(())
    }

    /// True iff every defining constraint holds within `tol`.
    pub fn member(&self, x: &DMatrix<f64>, tol: f64) -> Result<bool> {
        self.check_dims(x)?;
        match &self.kind {
            SetKind::Ball { norm, gamma } => Ok(norm.eval(x) <= gamma + tol),
            SetKind::Density => {
                if max_abs_asymmetry(x) > tol.max(SYMMETRY_TOL) {
                    return Ok(false);
                }
                let sym = symmetrize(x);
                let eigs = spectral::decompose(&sym, true)?;
                let lambda_min = eigs.values()[eigs.values().len() - 1];
                Ok(lambda_min >= -tol && (sym.trace() - 1.0).abs() <= tol)
            }
            SetKind::Correlation => {
                if max_abs_asymmetry(x) > tol.max(SYMMETRY_TOL) {
                    return Ok(false);
                }
                let sym = symmetrize(x);
                let eigs = spectral::decompose(&sym, true)?;
                let lambda_min = eigs.values()[eigs.values().len() - 1];
                let diag_ok = (0..sym.nrows()).all(|i| (sym[(i, i)] - 1.0).abs() <= tol);
                Ok(lambda_min >= -tol && diag_ok)
            }
        }
    }

    /// Euclidean projection onto `Ω` with the default options.
    pub fn project(&self, x: &DMatrix<f64>) -> Result<ProjectionResult> {
        self.project_with(x, &ProjectionOptions::default())
    }

    /// Euclidean projection with an explicit iteration cap.
    pub fn project_with_iteration_cap(
        &self,
        x: &DMatrix<f64>,
        cap: usize,
    ) -> Result<ProjectionResult> {
        self.project_with(
            x,
            &ProjectionOptions {
                max_iter: cap,
                ..ProjectionOptions::default()
            },
        )
    }

    /// Euclidean projection; the options only matter for the correlation
    /// set, whose projection is iterative (Dykstra between the PSD cone and
    /// the unit-diagonal subspace).
    pub fn project_with(
        &self,
        x: &DMatrix<f64>,
        options: &ProjectionOptions,
    ) -> Result<ProjectionResult> {
        self.check_dims(x)?;
        match &self.kind {
            SetKind::Ball { norm, gamma } => Ok(project_ball(x, *norm, *gamma)),
            SetKind::Density => {
                let sym = require_symmetric(x)?;
                let form = spectral::decompose(&sym, true)?;
                let lambdas: Vec<f64> = form.values().iter().copied().collect();
                let projected = project_onto_scaled_simplex(&lambdas, 1.0);
                let point = rebuild_symmetric(&form, &projected);
                let distance = (x - &point).norm();
                Ok(ProjectionResult {
                    point,
                    distance,
                    iterations: 1,
                })
            }
            SetKind::Correlation => {
                let sym = require_symmetric(x)?;
                project_correlation(x, &sym, options)
            }
        }
    }

    /// `dist(X, Ω) = ‖X − Π_Ω(X)‖_F`.
    pub fn dist_to_omega(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(self.project(x)?.distance)
    }

    /// The residual-based surrogate for `dist(X, Ω)`: exact for balls
    /// (`max(|||X||| − γ, 0)/c_l` is a true upper bound), but for density and
    /// correlation sets the underlying inequality involves an unknown
    /// Hoffman constant `ν ≥ 1` which is fixed to 1 here, so the value is a
    /// diagnostic, not a certificate.
    pub fn residual_surrogate(&self, x: &DMatrix<f64>) -> Result<SurrogateResidual> {
        self.check_dims(x)?;
        match &self.kind {
            SetKind::Ball { norm, gamma } => {
                let (cl, _) = norm.frame_constants(self.dims);
                Ok(SurrogateResidual {
                    value: (norm.eval(x) - gamma).max(0.0) / cl,
                    rigorous: true,
                })
            }
            SetKind::Density => {
                let sym = require_symmetric(x)?;
                let n = self.dims.0 as f64;
                let trace_term = (1.0 - sym.trace()).abs() / n.sqrt();
                Ok(SurrogateResidual {
                    value: trace_term + dist_to_psd(&sym)?,
                    rigorous: false,
                })
            }
            SetKind::Correlation => {
                let sym = require_symmetric(x)?;
                let diag_term: f64 = (0..sym.nrows())
                    .map(|i| (1.0 - sym[(i, i)]) * (1.0 - sym[(i, i)]))
                    .sum::<f64>()
                    .sqrt();
                Ok(SurrogateResidual {
                    value: diag_term + dist_to_psd(&sym)?,
                    rigorous: false,
                })
            }
        }
    }
}

/// Tolerances and iteration cap for iterative projections. Callers that
/// feed projections into a tighter outer loop (the stage solver) shrink the
/// tolerances so projection error stays below their own target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub max_iter: usize,
    /// Successive-iterate stopping tolerance.
    pub step_tol: f64,
    /// Constraint residual required at exit.
    pub residual_tol: f64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        Self {
            max_iter: DYKSTRA_MAX_ITER,
            step_tol: DYKSTRA_STEP_TOL,
            residual_tol: DYKSTRA_RESIDUAL_TOL,
        }
    }
}

/// Outcome of a projection onto `Ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// The nearest point of `Ω`.
    pub point: DMatrix<f64>,
    /// `‖X − point‖_F`.
    pub distance: f64,
    /// Iterations spent (1 for closed forms).
    pub iterations: usize,
}

/// Value of a Remark-style residual expression for `dist(X, Ω)`.
/// `rigorous` is false whenever the unknown Hoffman constant entered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateResidual {
    pub value: f64,
    pub rigorous: bool,
}

fn max_abs_asymmetry(x: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.nrows() {
        for j in (i + 1)..x.ncols() {
            worst = worst.max((x[(i, j)] - x[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

fn require_symmetric(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let asym = max_abs_asymmetry(x);
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "this set needs a symmetric matrix: max |X - X^T| entry = {asym:.3e}"
        )));
    }
    Ok(symmetrize(x))
}

fn rebuild_symmetric(form: &spectral::SpectralForm, values: &[f64]) -> DMatrix<f64> {
    let mut scaled = form.left_vectors().clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= values[j];
    }
    let raw = &scaled * form.left_vectors().transpose();
    // the product is symmetric up to rounding; make it exact
    symmetrize(&raw)
}

fn dist_to_psd(sym: &DMatrix<f64>) -> Result<f64> {
    let form = spectral::decompose(sym, true)?;
    Ok(form
        .values()
        .iter()
        .map(|&l| l.min(0.0) * l.min(0.0))
        .sum::<f64>()
        .sqrt())
}

/// Projection of `v` onto `{ x ≥ 0, Σx = target }` by sorting and
/// thresholding.
pub(crate) fn project_onto_scaled_simplex(v: &[f64], target: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - target) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Soft-thresholds a nonnegative vector onto `{ Σx ≤ target }` (identity if
/// already inside).
fn project_onto_l1_ball_nonneg(v: &[f64], target: f64) -> Vec<f64> {
    if v.iter().sum::<f64>() <= target {
        return v.to_vec();
    }
    project_onto_scaled_simplex(v, target)
}

fn project_ball(x: &DMatrix<f64>, norm: BallNorm, gamma: f64) -> ProjectionResult {
    let point = match norm {
        BallNorm::Frobenius => {
            let nx = x.norm();
            if nx <= gamma {
                x.clone()
            } else {
                x * (gamma / nx)
            }
        }
        BallNorm::EntrywiseInf => x.map(|v| v.clamp(-gamma, gamma)),
        BallNorm::Spectral | BallNorm::Nuclear => {
            let form = spectral::decompose(x, false).expect("finite checked by caller");
            let sigmas: Vec<f64> = form.values().iter().copied().collect();
            let clipped: Vec<f64> = match norm {
                BallNorm::Spectral => sigmas.iter().map(|&s| s.min(gamma)).collect(),
                _ => project_onto_l1_ball_nonneg(&sigmas, gamma),
            };
            let mut scaled = form.left_vectors().clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= clipped[j];
            }
            &scaled * form.right_vectors().transpose()
        }
    };
    let distance = (x - &point).norm();
    ProjectionResult {
        point,
        distance,
        iterations: 1,
    }
}

/// Dykstra's alternating projections with correction terms between the PSD
/// cone and the unit-diagonal affine subspace. Plain alternation would find
/// *a* point of the intersection; the corrections make it the nearest one.
fn project_correlation(
    original: &DMatrix<f64>,
    sym: &DMatrix<f64>,
    options: &ProjectionOptions,
) -> Result<ProjectionResult> {
    let n = sym.nrows();
    let step_tol = options.step_tol.min(DYKSTRA_STEP_TOL);
    let residual_tol = options.residual_tol.min(DYKSTRA_RESIDUAL_TOL);
    let mut x = sym.clone();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DMatrix::zeros(n, n);
    let mut step_delta = f64::INFINITY;
    let mut psd_residual = f64::INFINITY;
    for it in 1..=options.max_iter {
        // PSD half-step with correction p
        let form = spectral::decompose(&(&x + &p), true)?;
        let clamped: Vec<f64> = form.values().iter().map(|&l| l.max(0.0)).collect();
        let y = rebuild_symmetric(&form, &clamped);
        p = &x + &p - &y;
        let diag_residual = (0..n).fold(0.0f64, |a, i| a.max((y[(i, i)] - 1.0).abs()));
        // unit-diagonal half-step with correction q
        let mut xn = &y + &q;
        for i in 0..n {
            xn[(i, i)] = 1.0;
        }
        q = &y + &q - &xn;
        step_delta = (&xn - &x).norm();
        x = xn;
        if step_delta <= step_tol {
            psd_residual = -spectral::decompose(&x, true)?
                .values()
                .iter()
                .fold(f64::INFINITY, |a, &l| a.min(l))
                .min(0.0);
            if psd_residual <= residual_tol && diag_residual <= residual_tol {
                return Ok(ProjectionResult {
                    distance: (original - &x).norm(),
                    point: x,
                    iterations: it,
                });
            }
        }
    }
    let distance = (original - &x).norm();
    Err(Error::ConvergenceFailure {
        best: alloc::boxed::Box::new(x),
        distance,
        iterations: options.max_iter,
        step_delta,
        residual: psd_residual,
    })
}
