mod common;

use heston_adi::analysis::global_temporal_error;
use heston_adi::discretization::assemble;
use heston_adi::lcp::ItState;
use heston_adi::mesh::{SMeshSpec, SpatialGrid, VMeshSpec};
use heston_adi::pricing::{discretize, price_surface, reference_solution, CasePreset, OptionKind};
use heston_adi::stepper::{adi_it_step, run, theta_it_step, Scheme, SchemeConfig, StageFactors, ThetaFactors};
use heston_adi::Discretization;

fn small_disc(case: &str, rho_zero: bool, m1: usize, m2: usize) -> Discretization {
    let p = CasePreset::named(case, rho_zero).unwrap().params;
    let grid = SpatialGrid::new(&SMeshSpec::vanilla(m1, p.strike, p.maturity), &VMeshSpec::standard(m2)).unwrap();
    assemble(&p, &grid, p.strike).unwrap()
}

/// Exact flow of `U' = A U + g` over `dt`, from the exponential of the
/// augmented matrix `[[A, g], [0, 0]]`.
fn exact_flow(disc: &Discretization, start: &[f64], dt: f64) -> Vec<f64> {
    let m = disc.size();
    let dense = disc.a.to_dense();
    let mut aug = vec![vec![0.0; m + 1]; m + 1];
    for r in 0..m {
        for c in 0..m {
            aug[r][c] = dt * dense[r][c];
        }
        aug[r][m] = dt * disc.g[r];
    }
    let e = common::expm(&aug);
    (0..m).map(|r| (0..m).map(|c| e[r][c] * start[c]).sum::<f64>() + e[r][m]).collect()
}

#[test]
fn adi_local_error_is_third_order_without_obstacle() {
    let mut disc = small_disc("A", false, 8, 4);
    disc.u0 = vec![-1e100; disc.size()];
    let start: Vec<f64> = (0..disc.size())
        .map(|l| {
            let (i, j) = disc.grid.node(l);
            let (s, v) = (disc.grid.s()[i], disc.grid.v()[j]);
            100.0 * (-((s - 100.0) / 60.0).powi(2)).exp() * (1.0 + 0.3 * v)
        })
        .collect();
    for scheme in [Scheme::McsIt, Scheme::HvIt] {
        let theta = scheme.default_theta();
        let local = |dt: f64| {
            let f = StageFactors::new(&disc, theta, dt).unwrap();
            let state = ItState { u_hat: start.clone(), lambda_hat: vec![0.0; disc.size()] };
            let next = adi_it_step(&state, &disc, scheme, &f).unwrap();
            let exact = exact_flow(&disc, &start, dt);
            next.u_hat.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let dts = [4e-4, 2e-4, 1e-4, 5e-5];
        let errs: Vec<f64> = dts.iter().map(|&dt| local(dt)).collect();
        let slope = common::loglog_slope(&dts, &errs);
        // at least third order; HV at its default θ is one order better on
        // this linear autonomous problem
        assert!((2.7..4.3).contains(&slope), "{scheme}: slope {slope}, errors {errs:?}");
        let ratio = errs[errs.len() - 2] / errs[errs.len() - 1];
        assert!(ratio >= 6.0, "{scheme}: halving ratio {ratio}");
    }
}

#[test]
fn cs_equals_do_without_correlation() {
    let disc = small_disc("B", true, 20, 10);
    assert!(disc.a0.is_zero());
    let f = StageFactors::new(&disc, 0.5, 0.05).unwrap();
    let mut state = ItState::initial(&disc.u0);
    for _ in 0..5 {
        let d = adi_it_step(&state, &disc, Scheme::DoIt, &f).unwrap();
        let c = adi_it_step(&state, &disc, Scheme::CsIt, &f).unwrap();
        for l in 0..disc.size() {
            assert!((d.u_hat[l] - c.u_hat[l]).abs() <= 1e-14 * (1.0 + d.u_hat[l].abs()));
            assert!((d.lambda_hat[l] - c.lambda_hat[l]).abs() <= 1e-12 * (1.0 + d.lambda_hat[l].abs()));
        }
        state = d;
    }
}

#[test]
fn zero_operator_reduces_to_it_update() {
    let mut disc = small_disc("C", false, 8, 4);
    let m = disc.size();
    disc.a0 = heston_adi::linalg::CsrMatrix::zeros(m, m);
    disc.a1.sub.iter_mut().chain(disc.a1.diag.iter_mut()).chain(disc.a1.sup.iter_mut()).for_each(|x| *x = 0.0);
    disc.a2.sub.iter_mut().chain(disc.a2.diag.iter_mut()).chain(disc.a2.sup.iter_mut()).for_each(|x| *x = 0.0);
    disc.a = heston_adi::linalg::CsrMatrix::zeros(m, m);
    disc.g = vec![0.0; m];
    let dt = 0.1;
    let state = ItState {
        u_hat: disc.u0.iter().map(|x| x + 0.5).collect(),
        lambda_hat: (0..m).map(|l| (l % 5) as f64).collect(),
    };
    let u_bar: Vec<f64> = state.u_hat.iter().zip(&state.lambda_hat).map(|(u, l)| u + dt * l).collect();
    let expect = heston_adi::lcp::it_update(&u_bar, &state.lambda_hat, &disc.u0, dt).unwrap();
    for scheme in Scheme::ADI {
        let f = StageFactors::new(&disc, scheme.default_theta(), dt).unwrap();
        assert_eq!(adi_it_step(&state, &disc, scheme, &f).unwrap(), expect, "{scheme}");
    }
    let f = ThetaFactors::new(&disc, 1.0, dt).unwrap();
    assert_eq!(theta_it_step(&state, &disc, &f).unwrap(), expect);
}

#[test]
fn every_emitted_state_is_complementary() {
    let disc = small_disc("D", false, 20, 10);
    for scheme in Scheme::ALL {
        let cfg = SchemeConfig::new(scheme, 20, 10.0).with_damping(true);
        let res = run(&disc, &cfg, true).unwrap();
        assert!(res.diagnostics.final_residual.holds(1e-10), "{scheme}");
        assert_eq!(res.lambda_history.as_ref().unwrap().len(), 20);
        assert!(res.lambda_hat.iter().all(|&x| x >= 0.0));
        // exercised points sit on the obstacle
        for l in 0..disc.size() {
            if res.lambda_hat[l] > 0.0 {
                assert!((res.u_hat[l] - disc.u0[l]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn mcs_errors_decrease_on_case_a() {
    let preset = CasePreset::named("A", false).unwrap();
    let reference = reference_solution(&preset, OptionKind::VanillaPut, 50, &SchemeConfig::new(Scheme::McsIt, 4000, 1.0), None).unwrap();
    let disc = discretize(&preset, OptionKind::VanillaPut, 50).unwrap();
    let roi = OptionKind::VanillaPut.region_of_interest(100.0);
    let errs: Vec<f64> = [10, 20, 40]
        .iter()
        .map(|&n| {
            let res = run(&disc, &SchemeConfig::new(Scheme::McsIt, n, 1.0), false).unwrap();
            global_temporal_error(&reference.u_hat, &res.u_hat, &disc.grid, &roi).unwrap()
        })
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn damping_reduces_crank_nicolson_error() {
    let preset = CasePreset::named("A", true).unwrap();
    let disc = discretize(&preset, OptionKind::VanillaPut, 50).unwrap();
    let reference = run(&disc, &SchemeConfig::new(Scheme::CnIt, 2000, 1.0).with_damping(true), false).unwrap();
    let roi = OptionKind::VanillaPut.region_of_interest(100.0);
    let err = |damping| {
        let res = run(&disc, &SchemeConfig::new(Scheme::CnIt, 10, 1.0).with_damping(damping), false).unwrap();
        global_temporal_error(&reference.u_hat, &res.u_hat, &disc.grid, &roi).unwrap()
    };
    let (plain, damped) = (err(false), err(true));
    assert!(plain > damped, "undamped {plain} vs damped {damped}");
}

#[test]
fn adi_cost_per_unknown_is_flat() {
    let preset = CasePreset::named("A", false).unwrap();
    let per_unknown = |m: usize| {
        let cfg = SchemeConfig::new(Scheme::McsIt, 10, 1.0);
        (0..3)
            .map(|_| {
                let s = price_surface(&preset, OptionKind::VanillaPut, m, &cfg, false).unwrap();
                s.wall_time.as_secs_f64() / (10.0 * s.u_hat.len() as f64)
            })
            .fold(f64::INFINITY, f64::min)
    };
    // M ≈ 5e3, 2e4, 8e4
    let costs: Vec<f64> = [50, 100, 200].iter().map(|&m| per_unknown(m)).collect();
    let (lo, hi) = costs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi / lo < 2.0, "{costs:?}");
}
