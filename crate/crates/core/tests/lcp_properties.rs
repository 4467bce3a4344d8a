mod common;

use heston_adi::lcp::{complementarity_residual, it_update, psor_solve, PsorOptions};
use heston_adi::linalg::CsrMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vectors(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-10.0..10.0f64, len),
        prop::collection::vec(0.0..10.0f64, len),
        prop::collection::vec(-10.0..10.0f64, len),
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn it_update_invariants((u_bar, lambda_bar, u0) in (1usize..20).prop_flat_map(vectors), dt in 1e-4..2.0f64) {
        let s = it_update(&u_bar, &lambda_bar, &u0, dt).unwrap();
        for l in 0..u_bar.len() {
            let scale = 1.0 + u_bar[l].abs() + u0[l].abs() + dt * lambda_bar[l];
            prop_assert!(s.lambda_hat[l] >= 0.0);
            prop_assert!(s.u_hat[l] >= u0[l]);
            prop_assert!(((s.u_hat[l] - u0[l]) * s.lambda_hat[l]).abs() <= 1e-10 * scale * (1.0 + s.lambda_hat[l]));
            // linkage: Û − Ū = Δt (λ̂ − λ̄)
            let lhs = s.u_hat[l] - u_bar[l];
            let rhs = dt * (s.lambda_hat[l] - lambda_bar[l]);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{} vs {}", lhs, rhs);
        }
        let r = complementarity_residual(&s.u_hat, &s.lambda_hat, &u0).unwrap();
        prop_assert!(r.min_lambda >= 0.0 && r.min_gap >= 0.0);
    }

    #[test]
    fn it_update_is_identity_when_constraint_inactive(u0 in prop::collection::vec(-5.0..5.0f64, 1..10), gap in 0.0..3.0f64, dt in 1e-3..1.0f64) {
        let u_bar: Vec<f64> = u0.iter().map(|x| x + gap).collect();
        let zeros = vec![0.0; u0.len()];
        let s = it_update(&u_bar, &zeros, &u0, dt).unwrap();
        prop_assert_eq!(s.u_hat, u_bar);
        prop_assert_eq!(s.lambda_hat, zeros);
    }

    #[test]
    fn psor_matches_active_set_enumeration(seed in any::<u64>(), m in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = common::random_spd(&mut rng, m, 0.5);
        let b: Vec<f64> = (0..m).map(|_| rand::Rng::gen_range(&mut rng, -2.0..2.0)).collect();
        let u0: Vec<f64> = (0..m).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
        let exact = common::enumerate_lcp(&q, &b, &u0).expect("SPD LCP has a solution");
        let opts = PsorOptions { omega: 1.2, tol: 1e-14, max_iter: Some(2_000_000) };
        let sol = psor_solve(&CsrMatrix::from_dense(&q).unwrap(), &b, &u0, None, opts).unwrap();
        for k in 0..m {
            prop_assert!((sol.u[k] - exact[k]).abs() < 1e-8, "{:?} vs {:?}", sol.u, exact);
        }
    }
}

#[test]
fn psor_six_by_six_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let q = common::random_spd(&mut rng, 6, 1.0);
    let b = [1.0, -0.5, 0.25, 2.0, -1.0, 0.0];
    let u0 = [0.2, 0.0, -0.3, 0.1, 0.0, 0.5];
    let exact = common::enumerate_lcp(&q, &b, &u0).unwrap();
    let sol = psor_solve(&CsrMatrix::from_dense(&q).unwrap(), &b, &u0, None, PsorOptions::default()).unwrap();
    for k in 0..6 {
        assert!((sol.u[k] - exact[k]).abs() < 1e-8);
        assert!(sol.slack[k] >= -1e-9);
        assert!(((sol.u[k] - u0[k]) * sol.slack[k]).abs() < 1e-8);
    }
}

#[test]
fn psor_warm_start_reaches_same_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let q = common::random_spd(&mut rng, 5, 1.0);
    let qc = CsrMatrix::from_dense(&q).unwrap();
    let b = [0.3, 0.1, -0.2, 0.4, 0.0];
    let u0 = [0.0; 5];
    let cold = psor_solve(&qc, &b, &u0, None, PsorOptions::default()).unwrap();
    let warm = psor_solve(&qc, &b, &u0, Some(&cold.u), PsorOptions::default()).unwrap();
    assert!(warm.iterations <= 2);
    for k in 0..5 {
        assert!((warm.u[k] - cold.u[k]).abs() < 1e-9);
    }
}
