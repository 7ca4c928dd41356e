//! Sampling helpers shared by the unit tests.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::sets::{BallNorm, SetKind, SetSpec};

pub(crate) fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub(crate) fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n);
    (&g + g.transpose()) * 0.5
}

/// One spec per family at size `n`, covering all four ball norms.
pub(crate) fn representative_sets(n: usize) -> Vec<SetSpec> {
    alloc::vec![
        SetSpec::ball(BallNorm::Frobenius, 1.0, n, n).unwrap(),
        SetSpec::ball(BallNorm::Spectral, 1.0, n, n).unwrap(),
        SetSpec::ball(BallNorm::Nuclear, 1.5, n, n).unwrap(),
        SetSpec::ball(BallNorm::EntrywiseInf, 0.8, n, n).unwrap(),
        SetSpec::density(n).unwrap(),
        SetSpec::correlation(n).unwrap(),
    ]
}

/// A random point of `Ω`.
pub(crate) fn random_member(rng: &mut ChaCha8Rng, set: &SetSpec) -> DMatrix<f64> {
    let (r, c) = set.dims();
    match set.kind() {
        SetKind::Ball { norm, gamma } => {
            let x = random_matrix(rng, r, c);
            let v = norm.eval(&x);
            if v == 0.0 {
                return x;
            }
            let shrink: f64 = rng.random_range(0.0..1.0);
            x * (gamma * shrink / v)
        }
        SetKind::Density => {
            let g = random_matrix(rng, r, r);
            let a = &g * g.transpose();
            let a = &a / a.trace();
            exact_symmetrized(&a)
        }
        SetKind::Correlation => {
            let g = random_matrix(rng, r, r);
            let a = &g * g.transpose() + DMatrix::<f64>::identity(r, r) * 1e-6;
            rescale_to_unit_diagonal(&a)
        }
    }
}

/// A random point of `Ω` with rank at most `kappa` (exactly `kappa` almost
/// surely).
pub(crate) fn random_low_rank_member(
    rng: &mut ChaCha8Rng,
    set: &SetSpec,
    kappa: usize,
) -> DMatrix<f64> {
    let (r, c) = set.dims();
    match set.kind() {
        SetKind::Ball { norm, gamma } => {
            let a = random_matrix(rng, r, kappa);
            let b = random_matrix(rng, kappa, c);
            let x = &a * &b;
            let v = norm.eval(&x);
            if v == 0.0 {
                return x;
            }
            let shrink: f64 = rng.random_range(0.0..1.0);
            x * (gamma * shrink / v)
        }
        SetKind::Density => {
            let g = random_matrix(rng, r, kappa);
            let a = &g * g.transpose();
            let a = &a / a.trace();
            exact_symmetrized(&a)
        }
        SetKind::Correlation => {
            // rows of g must be nonzero so the diagonal stays positive
            let mut g = random_matrix(rng, r, kappa);
            for i in 0..r {
                while g.row(i).norm() < 1e-3 {
                    for j in 0..kappa {
                        g[(i, j)] = rng.random_range(-1.0..1.0);
                    }
                }
            }
            let a = &g * g.transpose();
            rescale_to_unit_diagonal(&a)
        }
    }
}

/// An arbitrary ambient point with the symmetry the set requires.
pub(crate) fn random_ambient_point(rng: &mut ChaCha8Rng, set: &SetSpec) -> DMatrix<f64> {
    let (r, c) = set.dims();
    if set.requires_symmetric() {
        random_symmetric(rng, r) * 2.0
    } else {
        random_matrix(rng, r, c) * 2.0
    }
}

fn exact_symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn rescale_to_unit_diagonal(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut x = a.clone();
    let scale: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] /= scale[i] * scale[j];
        }
    }
    let mut x = exact_symmetrized(&x);
    for i in 0..n {
        x[(i, i)] = 1.0;
    }
    x
}
