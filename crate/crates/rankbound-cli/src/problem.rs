//! Problem-file and point-file schemas.
//!
//! Problem files are JSON documents with a `set`, a rank bound `kappa`, an
//! `objective`, optional user `constants` and optional `solver` settings.
//! Matrices are dense row-major arrays with explicit dimensions. Unknown
//! keys are rejected everywhere.

use nalgebra::{DMatrix, DVector};
use rankbound_core::{BallNorm, ObjectiveModel, RankSpec, SetSpec};
use serde::{Deserialize, Serialize};

/// Dense row-major matrix payload used in files and reports.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MatrixData {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixData {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix data has {} entries but rows*cols = {}",
                self.data.len(),
                self.rows * self.cols
            ));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormName {
    Frobenius,
    Spectral,
    Nuclear,
    EntrywiseInf,
}

impl From<NormName> for BallNorm {
    fn from(n: NormName) -> Self {
        match n {
            NormName::Frobenius => BallNorm::Frobenius,
            NormName::Spectral => BallNorm::Spectral,
            NormName::Nuclear => BallNorm::Nuclear,
            NormName::EntrywiseInf => BallNorm::EntrywiseInf,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SetSection {
    Ball {
        norm: NormName,
        gamma: f64,
        n: usize,
    },
    Density {
        n: usize,
    },
    Correlation {
        n: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSection {
    MatrixDistance {
        #[serde(rename = "M")]
        m: MatrixData,
    },
    Quadratic {
        #[serde(rename = "A")]
        a: MatrixData,
        b: Vec<f64>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub theta: Option<f64>,
    #[serde(rename = "M_grad")]
    pub m_grad: Option<f64>,
}

/// `rho0` accepts a positive number or the string `"auto"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Rho0Value {
    Number(f64),
    Keyword(String),
}

impl Default for Rho0Value {
    fn default() -> Self {
        Rho0Value::Keyword("auto".into())
    }
}

fn default_tau() -> f64 {
    1.0
}

fn default_max_stages() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub rho0: Rho0Value,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_max_stages")]
    pub max_stages: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            rho0: Rho0Value::default(),
            tau: default_tau(),
            max_stages: default_max_stages(),
            tol: default_tol(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub set: SetSection,
    pub kappa: usize,
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub constants: ConstantsSection,
    #[serde(default)]
    pub solver: SolverSection,
}

/// A parsed and validated problem.
#[derive(Debug)]
pub struct Problem {
    pub set: SetSpec,
    pub kappa: RankSpec,
    pub objective: ObjectiveModel,
    pub solver: SolverSection,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("problem file: {e}"))
    }

    pub fn validate(self) -> Result<Problem, String> {
        let set = match &self.set {
            SetSection::Ball { norm, gamma, n } => {
                SetSpec::ball((*norm).into(), *gamma, *n, *n).map_err(|e| e.to_string())?
            }
            SetSection::Density { n } => SetSpec::density(*n).map_err(|e| e.to_string())?,
            SetSection::Correlation { n } => SetSpec::correlation(*n).map_err(|e| e.to_string())?,
        };
        let kappa = RankSpec::new(self.kappa).map_err(|e| e.to_string())?;
        if kappa.kappa() > set.min_dim() {
            return Err(format!(
                "kappa = {} exceeds the set dimension {}",
                kappa.kappa(),
                set.min_dim()
            ));
        }
        let mut objective = match &self.objective {
            ObjectiveSection::MatrixDistance { m } => {
                let target = m.to_matrix()?;
                if target.shape() != set.dims() {
                    return Err(format!(
                        "objective target is {}x{} but the set is {}x{}",
                        target.nrows(),
                        target.ncols(),
                        set.dims().0,
                        set.dims().1
                    ));
                }
                ObjectiveModel::matrix_distance(target).map_err(|e| e.to_string())?
            }
            ObjectiveSection::Quadratic { a, b } => {
                let operator = a.to_matrix()?;
                let rhs = DVector::from_vec(b.clone());
                ObjectiveModel::quadratic(operator, rhs, set.dims()).map_err(|e| e.to_string())?
            }
        };
        if let Some(theta) = self.constants.theta {
            if !theta.is_finite() || theta <= 0.0 {
                return Err(format!("constants.theta must be positive, got {theta}"));
            }
            objective = objective.with_theta(theta);
        }
        if let Some(m_grad) = self.constants.m_grad {
            if m_grad < 0.0 {
                return Err(format!(
                    "constants.M_grad must be nonnegative, got {m_grad}"
                ));
            }
            objective = objective.with_grad_bound(m_grad);
        }
        match &self.solver.rho0 {
            Rho0Value::Number(r) if !r.is_finite() || *r <= 0.0 => {
                return Err(format!("solver.rho0 must be positive, got {r}"));
            }
            Rho0Value::Keyword(k) if k != "auto" => {
                return Err(format!(
                    "solver.rho0 must be a number or \"auto\", got {k:?}"
                ));
            }
            _ => {}
        }
        if !self.solver.tau.is_finite() || self.solver.tau < 1.0 {
            return Err(format!("solver.tau must be >= 1, got {}", self.solver.tau));
        }
        if !self.solver.tol.is_finite() || self.solver.tol <= 0.0 {
            return Err(format!(
                "solver.tol must be positive, got {}",
                self.solver.tol
            ));
        }
        Ok(Problem {
            set,
            kappa,
            objective,
            solver: self.solver,
        })
    }
}

/// Loads a point file (`MatrixData` JSON).
pub fn parse_point(text: &str) -> Result<DMatrix<f64>, String> {
    let data: MatrixData = serde_json::from_str(text).map_err(|e| format!("point file: {e}"))?;
    data.to_matrix()
}
