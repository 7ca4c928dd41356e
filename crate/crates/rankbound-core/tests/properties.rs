//! Property tests for the structural invariants that must hold on arbitrary
//! inputs, not just the hand-picked examples.

mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rankbound_core::{
    decompose, feasibility_certificate, kyfan_norm, penalty_objective, svt, tail_sum, truncate,
    ObjectiveModel, RankSpec, SmoothObjective,
};

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-10.0f64..10.0, rows * cols)
        .prop_map(move |v| DMatrix::from_row_slice(rows, cols, &v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn truncation_residual_norm_ordering(x in matrix_strategy(4, 5), kappa in 1usize..=4) {
        let k = RankSpec::new(kappa).unwrap();
        let t = truncate(&x, k).unwrap();
        let fro = (&x - &t).norm();
        let nuclear = tail_sum(&x, k).unwrap();
        prop_assert!(fro <= nuclear + 1e-9 * (1.0 + nuclear));
    }

    #[test]
    fn kyfan_triangle_inequality(
        x in matrix_strategy(4, 4),
        y in matrix_strategy(4, 4),
        kappa in 1usize..=4,
    ) {
        let k = RankSpec::new(kappa).unwrap();
        let lhs = kyfan_norm(&(&x + &y), k).unwrap();
        let rhs = kyfan_norm(&x, k).unwrap() + kyfan_norm(&y, k).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn decomposition_reconstructs(x in matrix_strategy(5, 3)) {
        let form = decompose(&x, false).unwrap();
        let resid = (&x - form.reconstruct()).norm();
        prop_assert!(resid <= 1e-10 * (1.0 + x.norm()));
    }

    #[test]
    fn svt_solves_its_prox_problem(
        x in matrix_strategy(3, 3),
        tau in 0.01f64..3.0,
        z in matrix_strategy(3, 3),
    ) {
        let out = svt(&x, tau).unwrap();
        let prox_obj = |m: &DMatrix<f64>| {
            0.5 * (m - &x).norm_squared() + tau * m.clone().singular_values().sum()
        };
        prop_assert!(prox_obj(&out) <= prox_obj(&z) + 1e-9 * (1.0 + prox_obj(&z)));
    }

    #[test]
    fn penalty_recomputes_from_parts(x in matrix_strategy(3, 3), rho in 0.0f64..5.0) {
        let target = DMatrix::zeros(3, 3);
        let objective = ObjectiveModel::matrix_distance(target).unwrap();
        let k = RankSpec::new(2).unwrap();
        let v = penalty_objective(&x, rho, &objective, k).unwrap();
        let expected = objective.eval(&x) + rho * tail_sum(&x, k).unwrap();
        prop_assert!((v - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
    }
}

#[test]
fn witness_bound_holds_across_families_and_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [2usize, 5, 10] {
        for set in common::all_families(n) {
            for kappa in [1usize, n.div_ceil(4)] {
                let k = RankSpec::new(kappa).unwrap();
                for _ in 0..25 {
                    let x = common::random_member(&mut rng, &set);
                    let cert = feasibility_certificate(&x, k, &set).unwrap();
                    assert!(cert.input_in_omega, "sampler must land in omega");
                    assert!(set.member(&cert.witness, 1e-8).unwrap());
                    assert!(tail_sum(&cert.witness, k).unwrap() <= 1e-9);
                    let dist = (&x - &cert.witness).norm();
                    assert!(dist <= cert.dist_upper + 1e-9);
                    assert!(cert.dist_upper <= cert.constant_c * cert.tail + 1e-8);
                }
            }
        }
    }
}

#[test]
fn projections_are_idempotent_and_nonexpansive() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for set in common::all_families(5) {
        for _ in 0..10 {
            let scale = 3.0;
            let x = if set.requires_symmetric() {
                let g = common::random_matrix(&mut rng, 5, 5) * scale;
                (&g + g.transpose()) * 0.5
            } else {
                common::random_matrix(&mut rng, 5, 5) * scale
            };
            let y = if set.requires_symmetric() {
                let g = common::random_matrix(&mut rng, 5, 5) * scale;
                (&g + g.transpose()) * 0.5
            } else {
                common::random_matrix(&mut rng, 5, 5) * scale
            };
            let px = set.project(&x).unwrap();
            let py = set.project(&y).unwrap();
            let again = set.project(&px.point).unwrap();
            assert!((&px.point - &again.point).norm() <= 1e-9);
            assert!((&px.point - &py.point).norm() <= (&x - &y).norm() + 1e-8);
        }
    }
}
