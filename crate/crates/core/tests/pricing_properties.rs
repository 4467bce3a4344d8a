use heston_adi::pricing::{
    price_surface, reference_config, reference_solution, surface_csv, CasePreset, OptionKind, PriceSurface,
};
use heston_adi::stepper::{Scheme, SchemeConfig};
use heston_adi::Error;
use proptest::prelude::*;

fn linear_surface(f: impl Fn(f64, f64) -> f64) -> PriceSurface {
    let preset = CasePreset::named("A", false).unwrap();
    let cfg = SchemeConfig::new(Scheme::McsIt, 1, 1.0);
    let mut surface = price_surface(&preset, OptionKind::VanillaPut, 8, &cfg, false).unwrap();
    let grid = surface.grid.clone();
    for l in 0..grid.unknown_count() {
        let (i, j) = grid.node(l);
        surface.u_hat[l] = f(grid.s()[i], grid.v()[j]);
    }
    surface.left_column = grid.v().iter().map(|&v| f(grid.s()[0], v)).collect();
    surface
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn linear_surfaces_are_reproduced(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, s0 in 0.0..1400.0f64, v0 in 0.0..5.0f64) {
        let surface = linear_surface(|s, v| a * s + b * v + c);
        let got = surface.interpolate(s0, v0).unwrap();
        let expect = a * s0 + b * v0 + c;
        prop_assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs() + 1400.0 * a.abs()), "{} vs {}", got, expect);
    }

    #[test]
    fn grid_nodes_are_reproduced(i in 0usize..=16, j in 0usize..=8) {
        let surface = linear_surface(|s, v| (s / 50.0).sin() + v * v);
        let g = &surface.grid;
        let got = surface.interpolate(g.s()[i], g.v()[j]).unwrap();
        prop_assert!((got - surface.node_value(i, j)).abs() <= 1e-12);
    }
}

#[test]
fn linear_example() {
    let surface = linear_surface(|s, v| 2.0 * s + 3.0 * v);
    assert!((surface.interpolate(97.3, 0.0625).unwrap() - (2.0 * 97.3 + 3.0 * 0.0625)).abs() < 1e-10);
}

#[test]
fn out_of_domain_queries_are_rejected() {
    let surface = linear_surface(|s, _| s);
    assert!(matches!(surface.interpolate(-1.0, 0.1), Err(Error::OutOfDomain { .. })));
    assert!(matches!(surface.interpolate(100.0, 6.0), Err(Error::OutOfDomain { .. })));
}

#[test]
fn surfaces_are_feasible_and_vanish_far_out() {
    for (name, kind) in [("A", OptionKind::VanillaPut), ("C", OptionKind::CappedPut { cap: 80.0 })] {
        let preset = CasePreset::named(name, name == "A").unwrap();
        let cfg = SchemeConfig::new(Scheme::McsIt, 100, preset.params.maturity);
        let s = price_surface(&preset, kind, 50, &cfg, false).unwrap();
        let k = preset.params.strike;
        assert!(s.min_obstacle_gap() >= -1e-10 * k);
        let m1 = s.grid.m1();
        // a put deep out of the money still has value when the variance is large
        for j in (0..=s.grid.m2()).filter(|&j| s.grid.v()[j] <= 1.0) {
            assert!(s.node_value(m1, j).abs() <= 1e-4 * k, "{name}: {}", s.node_value(m1, j));
        }
    }
}

#[test]
fn capped_put_boundary_value() {
    let preset = CasePreset::named("C", false).unwrap();
    let cfg = SchemeConfig::new(Scheme::McsIt, 20, preset.params.maturity);
    let s = price_surface(&preset, OptionKind::CappedPut { cap: 80.0 }, 20, &cfg, false).unwrap();
    assert_eq!(s.grid.s()[0], 80.0);
    for j in 0..=s.grid.m2() {
        assert_eq!(s.node_value(0, j), 20.0);
        assert_eq!(s.interpolate(80.0, s.grid.v()[j]).unwrap(), 20.0);
    }
}

#[test]
fn table_two_probe_at_coarse_resolution() {
    let preset = CasePreset::named("VAL1", false).unwrap();
    let cfg = SchemeConfig::new(Scheme::McsIt, 25, 0.25);
    let s = price_surface(&preset, OptionKind::VanillaPut, 50, &cfg, false).unwrap();
    assert!((s.interpolate(9.0, 0.0625).unwrap() - 1.1088).abs() < 5e-3);
    // grid nodes around (10, 0.0625)
    let j = s.grid.nearest_v_index(0.0625);
    let i = s.grid.s().iter().position(|&x| x >= 10.0).unwrap();
    assert!((s.node_value(i, j) - 0.52).abs() < 0.1);
}

#[test]
fn refinement_at_table_probes_is_monotone() {
    let preset = CasePreset::named("VAL1", false).unwrap();
    let price = |m: usize| {
        let cfg = SchemeConfig::new(Scheme::McsIt, m / 2, 0.25);
        let s = price_surface(&preset, OptionKind::VanillaPut, m, &cfg, false).unwrap();
        [8.0, 9.0, 10.0, 11.0, 12.0].map(|x| s.interpolate(x, 0.0625).unwrap())
    };
    let (p50, p100, p200) = (price(50), price(100), price(200));
    let d1: f64 = p50.iter().zip(&p100).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let d2: f64 = p100.iter().zip(&p200).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d2 < d1, "{d1} then {d2}");
}

#[test]
fn reference_cache_round_trip_and_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let preset = CasePreset::named("C", false).unwrap();
    let cfg = reference_config(&preset.params, 200);
    let fresh = reference_solution(&preset, OptionKind::VanillaPut, 10, &cfg, Some(dir.path())).unwrap();
    let again = reference_solution(&preset, OptionKind::VanillaPut, 10, &cfg, None).unwrap();
    assert_eq!(fresh.u_hat, again.u_hat);
    let cached = reference_solution(&preset, OptionKind::VanillaPut, 10, &cfg, Some(dir.path())).unwrap();
    assert_eq!(cached.u_hat, fresh.u_hat);
    assert_eq!(surface_csv(&cached), surface_csv(&fresh));

    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(files.iter().any(|p| p.extension().is_some_and(|e| e == "csv")));
    let bin = files.iter().find(|p| p.extension().is_some_and(|e| e == "bin")).unwrap();
    let mut bytes = std::fs::read(bin).unwrap();
    let n = bytes.len();
    bytes.truncate(n - 3);
    std::fs::write(bin, &bytes).unwrap();
    let recovered = reference_solution(&preset, OptionKind::VanillaPut, 10, &cfg, Some(dir.path())).unwrap();
    assert_eq!(recovered.u_hat, fresh.u_hat);
    assert_eq!(std::fs::read(bin).unwrap().len(), n);
}

#[test]
fn references_agree_across_schemes() {
    // uncorrelated case A: CN-IT and MCS-IT references with many steps
    let preset = CasePreset::named("A", true).unwrap();
    let cn = reference_solution(&preset, OptionKind::VanillaPut, 50, &reference_config(&preset.params, 20_000), None).unwrap();
    let mcs_cfg = SchemeConfig::new(Scheme::McsIt, 20_000, 1.0);
    let mcs = reference_solution(&preset, OptionKind::VanillaPut, 50, &mcs_cfg, None).unwrap();
    let roi = OptionKind::VanillaPut.region_of_interest(100.0);
    let err = heston_adi::analysis::global_temporal_error(&cn.u_hat, &mcs.u_hat, &cn.grid, &roi).unwrap();
    assert!(err <= 1e-4 * 100.0, "{err}");

    let run = |n| {
        let cfg = SchemeConfig::new(Scheme::CnIt, n, 1.0).with_damping(true);
        price_surface(&preset, OptionKind::VanillaPut, 50, &cfg, false).unwrap()
    };
    let e_fine = heston_adi::analysis::global_temporal_error(&cn.u_hat, &run(10_000).u_hat, &cn.grid, &roi).unwrap();
    let e_coarse = heston_adi::analysis::global_temporal_error(&cn.u_hat, &run(1_000).u_hat, &cn.grid, &roi).unwrap();
    assert!(e_fine <= e_coarse, "{e_fine} vs {e_coarse}");
}
