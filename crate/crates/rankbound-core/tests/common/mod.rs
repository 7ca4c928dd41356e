//! Sampling helpers for the integration tests.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rankbound_core::{BallNorm, SetKind, SetSpec};

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

pub fn all_families(n: usize) -> Vec<SetSpec> {
    vec![
        SetSpec::ball(BallNorm::Frobenius, 1.0, n, n).unwrap(),
        SetSpec::ball(BallNorm::EntrywiseInf, 1.0, n, n).unwrap(),
        SetSpec::density(n).unwrap(),
        SetSpec::correlation(n).unwrap(),
    ]
}

pub fn random_member(rng: &mut ChaCha8Rng, set: &SetSpec) -> DMatrix<f64> {
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
            (&a + a.transpose()) * 0.5
        }
        SetKind::Correlation => {
            let g = random_matrix(rng, r, r);
            let a = &g * g.transpose() + DMatrix::<f64>::identity(r, r) * 1e-6;
            let mut x = a.clone();
            for i in 0..r {
                for j in 0..r {
                    x[(i, j)] = a[(i, j)] / (a[(i, i)] * a[(j, j)]).sqrt();
                }
            }
            let mut x = (&x + x.transpose()) * 0.5;
            for i in 0..r {
                x[(i, i)] = 1.0;
            }
            x
        }
    }
}
