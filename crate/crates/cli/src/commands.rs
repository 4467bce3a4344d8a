use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use heston_adi::analysis::{extract_free_boundary, splitting_error_experiment, BOUNDARY_V_LEVELS};
use heston_adi::lcp::PsorOptions;
use heston_adi::pricing::{
    cache_dir_from_env, convergence_sweep, discretize, fmt_sig, log_spaced_steps, price_surface, reference_config,
    reference_solution, reproduce_table, surface_csv, sweep_order, table_csv, write_atomic, CasePreset, OptionKind,
};
use heston_adi::stepper::{Scheme, SchemeConfig};

use crate::config::RunConfig;
use crate::CliError;

/// Slopes are fitted over step sizes in this range.
const FIT_RANGE: (f64, f64) = (1e-3, 1e-1);

fn tag(preset: &CasePreset, kind: OptionKind) -> String {
    match kind {
        OptionKind::VanillaPut => preset.label(),
        OptionKind::CappedPut { cap } => format!("{}-cap{}", preset.label(), fmt_sig(cap)),
    }
}

fn scheme_config(cfg: &RunConfig, scheme: Scheme, maturity: f64) -> SchemeConfig {
    let sc = SchemeConfig::new(scheme, cfg.steps, maturity).with_damping(cfg.damping);
    match cfg.theta {
        Some(t) => sc.with_theta(t),
        None => sc,
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(heston_adi::Error::from)?;
    write_atomic(&dir.join(name), contents.as_bytes())?;
    Ok(())
}

/// Applies `f` to every item on up to `jobs` threads, keeping input order.
fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                slots.lock().expect("result slots")[k] = Some(r);
            });
        }
    });
    slots.into_inner().expect("result slots").into_iter().map(|r| r.expect("every item ran")).collect()
}

pub fn price(cfg: &RunConfig) -> Result<(), CliError> {
    for preset in &cfg.cases {
        for &scheme in &cfg.schemes {
            let sc = scheme_config(cfg, scheme, preset.params.maturity);
            sc.validate()?;
            let surface = price_surface(preset, cfg.kind, cfg.m, &sc, false)?;
            let stem = format!("{}_{}_m{}_n{}", tag(preset, cfg.kind), scheme.name(), cfg.m, cfg.steps);
            write(&cfg.out, &format!("{stem}_surface.csv"), &surface_csv(&surface))?;
            if !cfg.probes.is_empty() {
                let mut csv = String::from("S0,V0,price\n");
                for p in &cfg.probes {
                    let value = surface.interpolate(p.s, p.v)?;
                    println!("{} {} S0={} V0={} price={}", tag(preset, cfg.kind), scheme, fmt_sig(p.s), fmt_sig(p.v), fmt_sig(value));
                    csv.push_str(&format!("{},{},{}\n", fmt_sig(p.s), fmt_sig(p.v), fmt_sig(value)));
                }
                write(&cfg.out, &format!("{stem}_probes.csv"), &csv)?;
            }
        }
    }
    Ok(())
}

pub fn converge(cfg: &RunConfig) -> Result<(), CliError> {
    let dts = log_spaced_steps(cfg.dt_range.0, cfg.dt_range.1, cfg.dt_count)?;
    let cache = cache_dir_from_env();
    let references = parallel_map(&cfg.cases, cfg.jobs, |preset| {
        let rc = reference_config(&preset.params, cfg.ref_steps);
        reference_solution(preset, cfg.kind, cfg.m, &rc, cache.as_deref())
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let entries: Vec<(usize, Scheme)> =
        (0..cfg.cases.len()).flat_map(|c| cfg.schemes.iter().map(move |&s| (c, s))).collect();
    let sweeps = parallel_map(&entries, cfg.jobs, |&(c, scheme)| {
        convergence_sweep(&cfg.cases[c], cfg.kind, cfg.m, scheme, cfg.damping, &dts, &references[c])
    });
    for (&(c, scheme), points) in entries.iter().zip(sweeps) {
        let points = points?;
        let mut csv = String::from("N,dt,error\n");
        for p in &points {
            csv.push_str(&format!("{},{},{}\n", p.steps, fmt_sig(p.dt), fmt_sig(p.error)));
        }
        let damped = if cfg.damping { "_damped" } else { "" };
        let name = tag(&cfg.cases[c], cfg.kind);
        write(&cfg.out, &format!("converge_{name}_{}{damped}_m{}.csv", scheme.name(), cfg.m), &csv)?;
        match sweep_order(&points, FIT_RANGE.0, FIT_RANGE.1) {
            Ok(order) => println!(
                "{name} {scheme}{damped} slope={} filtered_slope={}",
                fmt_sig(order.ls_slope),
                fmt_sig(order.filtered_ls_slope)
            ),
            Err(e) => println!("{name} {scheme}{damped} slope unavailable: {e}"),
        }
    }
    Ok(())
}

pub fn boundary(cfg: &RunConfig) -> Result<(), CliError> {
    if !cfg.record_lambda {
        return Err(CliError::Usage(format!(
            "{} (set record-lambda=true or pass --record-lambda)",
            heston_adi::Error::MissingLambdaHistory
        )));
    }
    for preset in &cfg.cases {
        for &scheme in &cfg.schemes {
            let sc = scheme_config(cfg, scheme, preset.params.maturity);
            sc.validate()?;
            let surface = price_surface(preset, cfg.kind, cfg.m, &sc, true)?;
            let history = surface.lambda_history.as_ref().ok_or(heston_adi::Error::MissingLambdaHistory)?;
            let fb = extract_free_boundary(history, &surface.times, &surface.grid)?;
            let mut csv = String::from("t,v_level,s_boundary\n");
            for level in BOUNDARY_V_LEVELS {
                let j = surface.grid.nearest_v_index(level);
                let cell = |b: Option<f64>| b.map(fmt_sig).unwrap_or_default();
                // t = 0 carries the exercise region of the first step
                csv.push_str(&format!("0,{},{}\n", fmt_sig(level), cell(fb.boundary[0][j])));
                for (t, b) in fb.curve(j) {
                    csv.push_str(&format!("{},{},{}\n", fmt_sig(t), fmt_sig(level), cell(b)));
                }
            }
            let name = format!("boundary_{}_{}_m{}_n{}.csv", tag(preset, cfg.kind), scheme.name(), cfg.m, cfg.steps);
            write(&cfg.out, &name, &csv)?;
            println!("{name}: {} time levels", fb.times.len() + 1);
        }
    }
    Ok(())
}

pub fn tables(cfg: &RunConfig) -> Result<(), CliError> {
    let id = cfg.table.ok_or_else(|| CliError::Usage("tables needs --id (T2, T3, T4 or T5)".into()))?;
    let rows = reproduce_table(id)?;
    for r in &rows {
        println!(
            "{} ({},{},{}) S0={} V0={} value={} published={} diff={}",
            r.case,
            r.m1,
            r.m2,
            r.steps,
            fmt_sig(r.s0),
            fmt_sig(r.v0),
            fmt_sig(r.value),
            fmt_sig(r.published),
            fmt_sig(r.abs_diff)
        );
    }
    write(&cfg.out, &format!("table_{id}.csv"), &table_csv(&rows))
}

pub fn theorem(cfg: &RunConfig) -> Result<(), CliError> {
    for preset in &cfg.cases {
        let disc = discretize(preset, cfg.kind, cfg.m)?;
        let report =
            splitting_error_experiment(&disc, preset.params.maturity, &cfg.theorem_steps, None, PsorOptions::default())?;
        let mut csv = String::from("N,dt,max_error,nu,bound,ratio,psor_iterations\n");
        for (k, r) in report.rows.iter().enumerate() {
            let ratio = if k == 0 { String::new() } else { fmt_sig(report.ratios[k - 1]) };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.steps,
                fmt_sig(r.dt),
                fmt_sig(r.max_error),
                fmt_sig(r.nu),
                fmt_sig(r.bound()),
                ratio,
                r.max_psor_iterations
            ));
        }
        let name = format!("theorem_{}_m{}.csv", tag(preset, cfg.kind), cfg.m);
        write(&cfg.out, &name, &csv)?;
        println!("{name}: error ratios {:?}", report.ratios.iter().map(|q| fmt_sig(*q)).collect::<Vec<_>>());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        let out = parallel_map(&items, 4, |x| x * x);
        assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
    }
}
