use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn heston(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heston-adi"))
        .args(args)
        .env("HESTON_ADI_CACHE", cache)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn price_probe_near_reference_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let run = heston(&["price", "--case", "A", "--m", "50", "--scheme", "mcs-it", "--N", "100", "--probe", "100,0.05", "--out", &out], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = read_rows(&dir.path().join("A_mcs-it_m50_n100_probes.csv"));
    assert_eq!(rows.len(), 1);
    let price: f64 = rows[0][2].parse().unwrap();
    assert!((price - 11.94).abs() <= 5e-2, "{price}");
    let surface = read_rows(&dir.path().join("A_mcs-it_m50_n100_surface.csv"));
    assert_eq!(surface.len(), 101 * 51);
}

#[test]
fn capped_put_boundary_row_is_cap_payoff() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let run = heston(&["price", "--case", "C", "--cap", "80", "--m", "50", "--scheme", "hv-it", "--N", "100", "--out", &out], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = read_rows(&dir.path().join("C-cap80_hv-it_m50_n100_surface.csv"));
    let left: Vec<_> = rows.iter().filter(|r| r[0] == "80").collect();
    assert_eq!(left.len(), 51);
    assert!(left.iter().all(|r| r[2] == "20"));
}

#[test]
fn malformed_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["price", "--bogus"][..], &["price", "--m", "many"], &["price", "--probe", "100"], &["price", "--scheme", "rk4"]] {
        let run = heston(args, dir.path());
        assert_eq!(run.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
    }
}

#[test]
fn unknown_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let run = heston(&["tables", "--id", "T9", "--out", &out_arg(dir.path())], dir.path());
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("unknown table"));
}

#[test]
fn boundary_requires_lambda_recording() {
    let dir = tempfile::tempdir().unwrap();
    let run = heston(&["boundary", "--record-lambda", "false", "--out", &out_arg(dir.path())], dir.path());
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("record-lambda"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn boundary_curves_lie_below_strike() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let run = heston(&["boundary", "--case", "A", "--m", "20", "--N", "20", "--out", &out], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = read_rows(&dir.path().join("boundary_A_mcs-it_m20_n20.csv"));
    assert_eq!(rows.len(), 5 * 21);
    assert_eq!(rows[0][0], "0");
    for r in rows.iter().filter(|r| !r[2].is_empty()) {
        assert!(r[2].parse::<f64>().unwrap() < 100.0, "{r:?}");
    }
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# coarse run\ncase = B\nm = 10\nN = 8   # steps\nscheme = do-it\nout = {out}\n")).unwrap();
    let run = heston(&["price", "--config", cfg.to_str().unwrap(), "--N", "12"], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.path().join("B_do-it_m10_n12_surface.csv").exists());
    assert!(!dir.path().join("B_do-it_m10_n8_surface.csv").exists());

    fs::write(&cfg, "colour = blue\n").unwrap();
    let run = heston(&["price", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let run = heston(&["price", "--case", "D", "--m", "12", "--N", "10", "--probe", "100,0.1", "--out", &out_arg(d)], dir.path());
        assert!(run.status.success());
    }
    for name in ["D_mcs-it_m12_n10_surface.csv", "D_mcs-it_m12_n10_probes.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
    }
}

#[test]
fn converge_writes_one_file_per_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let args =
        ["converge", "--case", "A", "--rho-zero", "--m", "10", "--scheme", "be-it,mcs-it", "--dt-min", "0.05", "--count", "4", "--ref-steps", "400", "--jobs", "2", "--out", &out];
    let run = heston(&args, dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    for scheme in ["be-it", "mcs-it"] {
        let rows = read_rows(&dir.path().join(format!("converge_A-rho0_{scheme}_m10.csv")));
        assert_eq!(rows.len(), 4);
        let errors: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
        assert!(errors[3] < errors[0], "{scheme}: {errors:?}");
    }
    // the reference landed in the cache
    assert!(fs::read_dir(dir.path()).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".bin")));
}

#[test]
fn theorem_reports_first_order_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let run = heston(&["theorem", "--case", "A", "--rho-zero", "--m", "8", "--steps", "8,16,32", "--out", &out], dir.path());
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = read_rows(&dir.path().join("theorem_A-rho0_m8.csv"));
    assert_eq!(rows.len(), 3);
    for r in &rows[1..] {
        let ratio: f64 = r[5].parse().unwrap();
        assert!((0.3..=0.8).contains(&ratio), "{ratio}");
    }
}
