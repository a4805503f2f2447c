mod common;

use common::{alphas, check_kkt, dual_objective, q_matrix, qp_oracle, rng, separable_problem};
use dynscene::svm::{kernel_eval, train_binary, GramMatrix, KernelKind, SvmParams, DEFAULT_TOL};
use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn hik_gram_is_positive_semidefinite_on_nonnegative_data() {
    let mut r = rng(5);
    for _ in 0..10 {
        let x = Array2::from_shape_fn((20, 16), |_| r.random_range(0.0..1.0f64).powi(2));
        let g = GramMatrix::compute(KernelKind::Hik, x.view());
        let m = DMatrix::from_fn(20, 20, |i, j| g.get(i, j));
        let min = SymmetricEigen::new(m).eigenvalues.min();
        assert!(min >= -1e-8, "min eigenvalue {min}");
    }
}

#[test]
fn dual_objective_matches_qp_oracle_on_small_problems() {
    let mut r = rng(21);
    for trial in 0..10 {
        let n = 8 + trial;
        let x = Array2::from_shape_fn((n, 3), |_| r.random_range(-1.0..1.0));
        let y: Vec<f64> = (0..n)
            .map(|i| {
                if (x[[i, 0]] + 0.3 * x[[i, 1]] > 0.0) ^ (i % 5 == 0) {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        if y.iter().all(|&v| v == y[0]) {
            continue;
        }
        let params = SvmParams::new(KernelKind::Linear, 1.0);
        let model = train_binary(x.view(), &y, &params).unwrap();
        let q = q_matrix(KernelKind::Linear, x.view(), &y);
        let (_, oracle) = qp_oracle(&q, &y, 1.0, 20_000);
        let ours = dual_objective(&q, &alphas(&model, &y));
        assert!((ours - model.summary.objective).abs() < 1e-9 * ours.abs().max(1.0));
        assert!(
            (ours - oracle).abs() <= 1e-4,
            "trial {trial}: {ours} vs {oracle}"
        );
        check_kkt(&model, x.view(), &y, DEFAULT_TOL + 1e-9).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separable_problems_are_fit_exactly(seed in any::<u64>(), n in 4usize..40) {
        let mut r = rng(seed);
        let (x, y) = separable_problem(&mut r, n, 3, 0.05);
        let model = train_binary(x.view(), &y, &SvmParams::new(KernelKind::Linear, 1e3)).unwrap();
        for (i, &yi) in y.iter().enumerate() {
            prop_assert!(yi * model.decision(x.row(i)).unwrap() > 0.0);
        }
        check_kkt(&model, x.view(), &y, DEFAULT_TOL + 1e-9).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn kkt_holds_on_noisy_hik_problems(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = Array2::from_shape_fn((25, 4), |_| r.random_range(0.0..1.0));
        let y: Vec<f64> = (0..25).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let model = train_binary(x.view(), &y, &SvmParams::new(KernelKind::Hik, 2.0)).unwrap();
        check_kkt(&model, x.view(), &y, DEFAULT_TOL + 1e-9).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn kernels_are_symmetric(a in prop::collection::vec(-5.0f64..5.0, 6), b in prop::collection::vec(-5.0f64..5.0, 6)) {
        let (a, b) = (Array1::from(a), Array1::from(b));
        for k in [KernelKind::Linear, KernelKind::Hik] {
            prop_assert_eq!(kernel_eval(k, a.view(), b.view()).unwrap(), kernel_eval(k, b.view(), a.view()).unwrap());
        }
    }
}
