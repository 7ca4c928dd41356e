//! Desk-scale brute-force minimization over the feasible set and over `Ω`,
//! used to validate exact-penalty claims and planted-solution bounds.
//!
//! Everything here is grid search over an explicit low-dimensional
//! parametrization plus deterministic pattern-search refinement, so the
//! returned values are upper bounds on the true minima with roughly
//! grid-resolution error before refinement. Limits are intentionally tight:
//! `n ≤ 3`, `κ = 1`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use crate::float::*;
use crate::mscr::penalty_objective;
use crate::objectives::SmoothObjective;
use crate::sets::{SetKind, SetSpec};
use crate::spectral::RankSpec;
use crate::{Error, Result};

/// Configuration for the brute-force searches.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    set: SetSpec,
    kappa: RankSpec,
    grid_density: usize,
    refine_rounds: usize,
}

impl OracleConfig {
    /// Enforces the documented limits: `n ≤ 3` in every dimension, `κ = 1`.
    pub fn new(set: SetSpec, kappa: RankSpec) -> Result<Self> {
        let (r, c) = set.dims();
        if r > 3 || c > 3 {
            return Err(Error::Unsupported(format!(
                "oracle supports matrices up to 3x3, got {r}x{c}"
            )));
        }
        if kappa.kappa() != 1 {
            return Err(Error::Unsupported(format!(
                "oracle supports kappa = 1 only, got {}",
                kappa.kappa()
            )));
        }
        Ok(Self {
            set,
            kappa,
            grid_density: 200,
            refine_rounds: 3,
        })
    }

    /// Grid points per parameter (default 200). The total grid is capped at
    /// ~2·10⁷ points; refinement recovers the lost resolution.
    pub fn with_grid_density(mut self, density: usize) -> Self {
        self.grid_density = density.max(2);
        self
    }

    pub fn with_refine_rounds(mut self, rounds: usize) -> Self {
        self.refine_rounds = rounds;
        self
    }

    pub fn set(&self) -> &SetSpec {
        &self.set
    }

    pub fn kappa(&self) -> RankSpec {
        self.kappa
    }
}

type BuildFn<'a> = alloc::boxed::Box<dyn Fn(&[f64]) -> DMatrix<f64> + 'a>;

/// A low-dimensional parametrization with box bounds.
struct Chart<'a> {
    lower: Vec<f64>,
    upper: Vec<f64>,
    build: BuildFn<'a>,
}

impl Chart<'_> {
    fn dims(&self) -> usize {
        self.lower.len()
    }
}

/// Unit vector from hyperspherical angles (1 angle for R², 2 for R³).
fn unit_vector(dim: usize, angles: &[f64]) -> DVector<f64> {
    match dim {
        1 => DVector::from_vec(alloc::vec![1.0]),
        2 => DVector::from_vec(alloc::vec![angles[0].cos(), angles[0].sin()]),
        3 => DVector::from_vec(alloc::vec![
            angles[0].sin() * angles[1].cos(),
            angles[0].sin() * angles[1].sin(),
            angles[0].cos(),
        ]),
        _ => unreachable!("oracle dimensions are at most 3"),
    }
}

fn sphere_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
    match dim {
        1 => (Vec::new(), Vec::new()),
        2 => (alloc::vec![0.0], alloc::vec![2.0 * core::f64::consts::PI]),
        3 => (
            alloc::vec![0.0, 0.0],
            alloc::vec![core::f64::consts::PI, 2.0 * core::f64::consts::PI],
        ),
        _ => unreachable!(),
    }
}

/// Lexicographic grid scan; strict improvement keeps the first minimizer, so
/// ties break deterministically on parameter order.
fn grid_scan(
    chart: &Chart<'_>,
    value_of: &dyn Fn(&DMatrix<f64>) -> f64,
    density: usize,
) -> (Vec<f64>, f64) {
    let d = chart.dims();
    if d == 0 {
        let x = (chart.build)(&[]);
        return (Vec::new(), value_of(&x));
    }
    // cap the total number of grid points
    let mut per_dim = density;
    while (per_dim as f64).powi(d as i32) > 2e7 && per_dim > 4 {
        per_dim -= 1;
    }
    let mut index = alloc::vec![0usize; d];
    let mut params = alloc::vec![0.0f64; d];
    let mut best_params = Vec::new();
    let mut best_value = f64::INFINITY;
    loop {
        for i in 0..d {
            let t = index[i] as f64 / (per_dim - 1) as f64;
            params[i] = chart.lower[i] + t * (chart.upper[i] - chart.lower[i]);
        }
        let x = (chart.build)(&params);
        let v = value_of(&x);
        if v < best_value {
            best_value = v;
            best_params = params.clone();
        }
        // odometer increment
        let mut carry = true;
        for slot in index.iter_mut().rev() {
            if carry {
                *slot += 1;
                if *slot >= per_dim {
                    *slot = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }
    (best_params, best_value)
}

/// Pattern-search refinement with shrinking steps, clamped to the chart box.
/// Never increases the value.
fn refine(
    chart: &Chart<'_>,
    value_of: &dyn Fn(&DMatrix<f64>) -> f64,
    start: (Vec<f64>, f64),
    initial_step: f64,
    rounds: usize,
) -> (Vec<f64>, f64) {
    let d = chart.dims();
    if d == 0 || rounds == 0 {
        return start;
    }
    let (mut params, mut value) = start;
    let mut step = initial_step;
    // each round walks the step down by 2^12
    for _ in 0..rounds * 12 {
        loop {
            let mut improved = false;
            for i in 0..d {
                for sign in [1.0f64, -1.0] {
                    let mut cand = params.clone();
                    cand[i] = (cand[i] + sign * step).clamp(chart.lower[i], chart.upper[i]);
                    let v = value_of(&(chart.build)(&cand));
                    if v < value {
                        value = v;
                        params = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
        if step < 1e-12 {
            break;
        }
    }
    (params, value)
}

fn grid_then_refine(
    chart: &Chart<'_>,
    value_of: &dyn Fn(&DMatrix<f64>) -> f64,
    cfg: &OracleConfig,
) -> (DMatrix<f64>, f64) {
    let start = grid_scan(chart, value_of, cfg.grid_density);
    let spacing = chart
        .lower
        .iter()
        .zip(chart.upper.iter())
        .map(|(l, u)| (u - l) / cfg.grid_density as f64)
        .fold(0.0f64, f64::max);
    let (params, value) = refine(chart, value_of, start, spacing.max(1e-6), cfg.refine_rounds);
    ((chart.build)(&params), value)
}

/// Rank-1 correlation matrices are exactly the sign patterns `vvᵀ`,
/// `vᵢ ∈ {±1}`; enumerate them (fixing `v₁ = +1` since `v` and `−v` agree).
fn enumerate_sign_patterns(n: usize, f: &dyn Fn(&DMatrix<f64>) -> f64) -> (DMatrix<f64>, f64) {
    let mut best: Option<(DMatrix<f64>, f64)> = None;
    for bits in 0..(1usize << (n - 1)) {
        let mut v = DVector::from_element(n, 1.0);
        for i in 1..n {
            if bits & (1 << (i - 1)) != 0 {
                v[i] = -1.0;
            }
        }
        let x = &v * v.transpose();
        let val = f(&x);
        if best.as_ref().is_none_or(|(_, b)| val < *b) {
            best = Some((x, val));
        }
    }
    best.expect("at least one sign pattern")
}

/// Chart of the rank-1 slice of `Ω`.
fn feasible_chart<'a>(cfg: &'a OracleConfig) -> Result<Chart<'a>> {
    let (r, c) = cfg.set.dims();
    match cfg.set.kind() {
        SetKind::Density => {
            let (lo, up) = sphere_bounds(r);
            Ok(Chart {
                lower: lo,
                upper: up,
                build: alloc::boxed::Box::new(move |p| {
                    let u = unit_vector(r, p);
                    &u * u.transpose()
                }),
            })
        }
        SetKind::Ball { norm, gamma } => {
            let (ulo, uup) = sphere_bounds(r);
            let (vlo, vup) = sphere_bounds(c);
            let mut lower = ulo;
            let mut upper = uup;
            let split = lower.len();
            lower.extend(vlo);
            upper.extend(vup);
            lower.push(0.0);
            upper.push(1.0);
            let norm = *norm;
            let gamma = *gamma;
            Ok(Chart {
                lower,
                upper,
                build: alloc::boxed::Box::new(move |p| {
                    let u = unit_vector(r, &p[..split]);
                    let v = unit_vector(c, &p[split..p.len() - 1]);
                    let t = p[p.len() - 1];
                    let direction = &u * v.transpose();
                    let reach = gamma / norm.eval(&direction);
                    direction * (t * reach)
                }),
            })
        }
        SetKind::Correlation => Err(Error::Unsupported(
            "rank-1 correlation matrices are enumerated, not gridded".into(),
        )),
    }
}

/// Approximate global minimum of `f` over `F = Ω ∩ {rank ≤ 1}`.
pub fn brute_min_feasible<F: SmoothObjective + ?Sized>(
    objective: &F,
    cfg: &OracleConfig,
) -> Result<(DMatrix<f64>, f64)> {
    if objective.shape() != cfg.set.dims() {
        return Err(Error::InvalidInput(
            "objective and oracle set dimensions do not match".into(),
        ));
    }
    let value_of = |x: &DMatrix<f64>| objective.eval(x);
    match cfg.set.kind() {
        SetKind::Correlation => Ok(enumerate_sign_patterns(cfg.set.dims().0, &value_of)),
        _ => {
            let chart = feasible_chart(cfg)?;
            Ok(grid_then_refine(&chart, &value_of, cfg))
        }
    }
}

/// Chart of all of `Ω` (only desk-scale cases are supported: `Density(2)`,
/// `Correlation(2)`, and balls with at most 3 entries).
fn omega_chart<'a>(cfg: &'a OracleConfig) -> Result<Chart<'a>> {
    let (r, c) = cfg.set.dims();
    match cfg.set.kind() {
        SetKind::Density if r == 2 => Ok(Chart {
            // eigenvalue split t and rotation angle
            lower: alloc::vec![0.0, 0.0],
            upper: alloc::vec![1.0, core::f64::consts::PI],
            build: alloc::boxed::Box::new(|p| {
                let (t, theta) = (p[0], p[1]);
                let u = DVector::from_vec(alloc::vec![theta.cos(), theta.sin()]);
                let w = DVector::from_vec(alloc::vec![-theta.sin(), theta.cos()]);
                &u * u.transpose() * t + &w * w.transpose() * (1.0 - t)
            }),
        }),
        SetKind::Correlation if r == 2 => Ok(Chart {
            lower: alloc::vec![-1.0],
            upper: alloc::vec![1.0],
            build: alloc::boxed::Box::new(|p| {
                DMatrix::from_row_slice(2, 2, &[1.0, p[0], p[0], 1.0])
            }),
        }),
        SetKind::Ball { norm, gamma } if r * c <= 3 => {
            let reach = gamma / norm.frame_constants((r, c)).0;
            let norm = *norm;
            let gamma = *gamma;
            Ok(Chart {
                lower: alloc::vec![-reach; r * c],
                upper: alloc::vec![reach; r * c],
                build: alloc::boxed::Box::new(move |p| {
                    let x = DMatrix::from_fn(r, c, |i, j| p[i * c + j]);
                    // clip back into the ball so every chart point is feasible
                    let v = norm.eval(&x);
                    if v > gamma {
                        x * (gamma / v)
                    } else {
                        x
                    }
                }),
            })
        }
        _ => Err(Error::Unsupported(format!(
            "penalty oracle supports Density(2), Correlation(2) and balls with \
             at most 3 entries; got {:?} at {}x{}",
            cfg.set.kind(),
            r,
            c
        ))),
    }
}

/// Approximate global minimum of the penalty objective
/// `f(X) + ρ·Σ_{i>κ}σᵢ(X)` over all of `Ω`.
pub fn brute_min_penalty<F: SmoothObjective + ?Sized>(
    objective: &F,
    rho: f64,
    cfg: &OracleConfig,
) -> Result<(DMatrix<f64>, f64)> {
    if objective.shape() != cfg.set.dims() {
        return Err(Error::InvalidInput(
            "objective and oracle set dimensions do not match".into(),
        ));
    }
    let k = cfg.kappa;
    let value_of =
        |x: &DMatrix<f64>| penalty_objective(x, rho, objective, k).unwrap_or(f64::INFINITY);
    let chart = omega_chart(cfg)?;
    Ok(grid_then_refine(&chart, &value_of, cfg))
}
