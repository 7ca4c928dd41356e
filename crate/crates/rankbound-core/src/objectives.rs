//! Smooth convex objective models and the Lipschitz data the error bounds
//! consume.
//!
//! Two kinds are built in: `½‖X − M‖_F²` (matrix fitting) and
//! `½‖A(X) − b‖²` for a dense linear map `A` acting on the row-major
//! vectorization of `X` (matrix sensing). Anything else can plug in through
//! [`SmoothObjective`] under the same contracts.

use alloc::format;

use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use crate::float::*;
use crate::sets::SetSpec;
use crate::{Error, Result};

/// A nonnegative smooth convex function of a matrix.
///
/// Contract: `eval` is convex and nonnegative, `gradient` is its exact
/// gradient with Lipschitz constant `grad_lipschitz()` (an upper bound is
/// fine), and the dimensions of every argument match `shape()`. The
/// restricted-strong-convexity constant `ϑ` and the solution-set gradient
/// bound `M` quantify behavior over sets no algorithm can see, so they are
/// supplied, never estimated; certificates consuming them say so.
pub trait SmoothObjective {
    fn shape(&self) -> (usize, usize);
    fn eval(&self, x: &DMatrix<f64>) -> f64;
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// Lipschitz constant of the gradient (`L̄`).
    fn grad_lipschitz(&self) -> f64;
    /// Restricted strong convexity constant `ϑ`, if the user supplied one.
    fn rsc_theta(&self) -> Option<f64> {
        None
    }
    /// `M = max over solutions of ‖∇f‖_F`, if the user supplied one.
    fn grad_bound(&self) -> Option<f64> {
        None
    }
    /// User override for the Lipschitz constant of `f` over `Ω`.
    fn lipschitz_f_override(&self) -> Option<f64> {
        None
    }
}

/// The built-in objective kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    /// `f(X) = ½‖X − M‖_F²`.
    MatrixDistance { target: DMatrix<f64> },
    /// `f(X) = ½‖A·vec(X) − b‖²` with `vec` row-major.
    Quadratic {
        operator: DMatrix<f64>,
        rhs: DVector<f64>,
        shape: (usize, usize),
    },
}

/// A built-in objective together with its user-supplied constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveModel {
    kind: ObjectiveKind,
    theta: Option<f64>,
    grad_bound: Option<f64>,
    lipschitz_f: Option<f64>,
    grad_lipschitz: f64,
}

impl ObjectiveModel {
    pub fn matrix_distance(target: DMatrix<f64>) -> Result<Self> {
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("target has non-finite entries".into()));
        }
        Ok(Self {
            kind: ObjectiveKind::MatrixDistance { target },
            theta: None,
            grad_bound: None,
            lipschitz_f: None,
            grad_lipschitz: 1.0,
        })
    }

    pub fn quadratic(
        operator: DMatrix<f64>,
        rhs: DVector<f64>,
        shape: (usize, usize),
    ) -> Result<Self> {
        if operator.ncols() != shape.0 * shape.1 {
            return Err(Error::InvalidInput(format!(
                "operator has {} columns but vec of a {}x{} matrix has length {}",
                operator.ncols(),
                shape.0,
                shape.1,
                shape.0 * shape.1
            )));
        }
        if rhs.len() != operator.nrows() {
            return Err(Error::InvalidInput(format!(
                "rhs length {} does not match operator rows {}",
                rhs.len(),
                operator.nrows()
            )));
        }
        if operator.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "operator or rhs has non-finite entries".into(),
            ));
        }
        // ‖AᵀA‖₂ = σ_max(A)²
        let sigma_max = operator
            .clone()
            .singular_values()
            .iter()
            .fold(0.0f64, |a, &s| a.max(s));
        Ok(Self {
            kind: ObjectiveKind::Quadratic {
                operator,
                rhs,
                shape,
            },
            theta: None,
            grad_bound: None,
            lipschitz_f: None,
            grad_lipschitz: sigma_max * sigma_max,
        })
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn with_grad_bound(mut self, m: f64) -> Self {
        self.grad_bound = Some(m);
        self
    }

    pub fn with_lipschitz_f(mut self, l: f64) -> Self {
        self.lipschitz_f = Some(l);
        self
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }
}

fn vec_row_major(x: &DMatrix<f64>) -> DVector<f64> {
    let (r, c) = x.shape();
    DVector::from_fn(r * c, |i, _| x[(i / c, i % c)])
}

fn unvec_row_major(v: &DVector<f64>, shape: (usize, usize)) -> DMatrix<f64> {
    DMatrix::from_fn(shape.0, shape.1, |i, j| v[i * shape.1 + j])
}

impl SmoothObjective for ObjectiveModel {
    fn shape(&self) -> (usize, usize) {
        match &self.kind {
            ObjectiveKind::MatrixDistance { target } => target.shape(),
            ObjectiveKind::Quadratic { shape, .. } => *shape,
        }
    }

    fn eval(&self, x: &DMatrix<f64>) -> f64 {
        debug_assert_eq!(x.shape(), self.shape());
        match &self.kind {
            ObjectiveKind::MatrixDistance { target } => {
                let d = x - target;
                0.5 * d.norm_squared()
            }
            ObjectiveKind::Quadratic { operator, rhs, .. } => {
                let r = operator * vec_row_major(x) - rhs;
                0.5 * r.norm_squared()
            }
        }
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(x.shape(), self.shape());
        match &self.kind {
            ObjectiveKind::MatrixDistance { target } => x - target,
            ObjectiveKind::Quadratic {
                operator,
                rhs,
                shape,
            } => {
                let r = operator * vec_row_major(x) - rhs;
                unvec_row_major(&(operator.transpose() * r), *shape)
            }
        }
    }

    fn grad_lipschitz(&self) -> f64 {
        self.grad_lipschitz
    }

    fn rsc_theta(&self) -> Option<f64> {
        self.theta
    }

    fn grad_bound(&self) -> Option<f64> {
        self.grad_bound
    }

    fn lipschitz_f_override(&self) -> Option<f64> {
        self.lipschitz_f
    }
}

/// Analytic Lipschitz constants `(L, L̄)` of `f` and `∇f` over `Ω`:
/// `L̄` from the model and `L = L̄·R + ‖∇f(0)‖_F` where `R` bounds `‖X‖_F`
/// on `Ω`, so `‖∇f(X)‖_F ≤ L` everywhere on the set.
pub fn lipschitz_constants<F: SmoothObjective + ?Sized>(
    objective: &F,
    set: &SetSpec,
) -> Result<(f64, f64)> {
    if objective.shape() != set.dims() {
        return Err(Error::InvalidInput(format!(
            "objective is over {}x{} matrices but the set is {}x{}",
            objective.shape().0,
            objective.shape().1,
            set.dims().0,
            set.dims().1
        )));
    }
    let lbar = objective.grad_lipschitz();
    let l = match objective.lipschitz_f_override() {
        Some(l) => l,
        None => {
            let zero = DMatrix::zeros(set.dims().0, set.dims().1);
            lbar * set.radius_bound() + objective.gradient(&zero).norm()
        }
    };
    Ok((l, lbar))
}
