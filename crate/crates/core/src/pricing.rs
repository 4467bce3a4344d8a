//! End-to-end pricing of vanilla and capped American puts: parameter presets,
//! price surfaces with spline interpolation, cached reference solutions,
//! convergence sweeps and table reproduction.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::analysis::{estimate_order, global_temporal_error, OrderEstimate, RegionOfInterest};
use crate::discretization::{assemble, Discretization, HestonParams};
use crate::error::{Error, Result};
use crate::mesh::{SMeshSpec, SpatialGrid, VMeshSpec};
use crate::stepper::{run, Scheme, SchemeConfig};

/// Named parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct CasePreset {
    pub name: String,
    pub params: HestonParams,
    /// `ρ` replaced by zero.
    pub rho_zero_variant: bool,
}

const TABLE1: [(&str, [f64; 7]); 6] = [
    ("A", [3.0, 0.12, 0.04, 0.6, 0.01, 1.0, 100.0]),
    ("B", [0.6067, 0.0707, 0.2928, -0.7571, 0.03, 3.0, 100.0]),
    ("C", [2.5, 0.06, 0.5, -0.1, 0.0507, 0.25, 100.0]),
    ("D", [0.5, 0.04, 1.0, -0.9, 0.05, 10.0, 100.0]),
    ("E", [0.3, 0.04, 0.9, -0.5, 0.04, 15.0, 100.0]),
    ("F", [1.0, 0.09, 1.0, -0.3, 0.03, 5.0, 100.0]),
];

const VALIDATION: [(&str, [f64; 7]); 2] = [
    ("VAL1", [5.0, 0.16, 0.9, 0.1, 0.1, 0.25, 10.0]),
    ("VAL2", [1.15, 0.0348, 0.39, -0.64, 0.04, 0.25, 100.0]),
];

fn params_from(p: [f64; 7]) -> HestonParams {
    HestonParams { kappa: p[0], eta: p[1], sigma: p[2], rho: p[3], r: p[4], maturity: p[5], strike: p[6] }
}

impl CasePreset {
    /// Cases `A`..`F` and the validation sets `VAL1`, `VAL2` (case-insensitive).
    pub fn named(name: &str, rho_zero: bool) -> Result<Self> {
        let upper = name.to_ascii_uppercase();
        let (n, p) = TABLE1
            .iter()
            .chain(VALIDATION.iter())
            .find(|(n, _)| *n == upper)
            .ok_or_else(|| Error::Unknown { kind: "case", name: name.to_string() })?;
        let mut params = params_from(*p);
        if rho_zero {
            params = params.uncorrelated();
        }
        Ok(CasePreset { name: n.to_string(), params, rho_zero_variant: rho_zero })
    }

    /// The six benchmark cases in order.
    pub fn benchmark_cases(rho_zero: bool) -> Vec<CasePreset> {
        TABLE1.iter().map(|(n, _)| Self::named(n, rho_zero).expect("table entry")).collect()
    }

    /// Preset with user-supplied parameters.
    pub fn custom(params: HestonParams) -> Result<Self> {
        params.validate()?;
        Ok(CasePreset { name: "custom".into(), params, rho_zero_variant: params.rho == 0.0 })
    }

    pub fn label(&self) -> String {
        if self.rho_zero_variant {
            format!("{}-rho0", self.name)
        } else {
            self.name.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptionKind {
    VanillaPut,
    /// Put with payoff `min(K − B, max(K − s, 0))`; only `s > B` is solved for.
    CappedPut { cap: f64 },
}

impl OptionKind {
    /// Value imposed on the left boundary of the `s`-mesh.
    pub fn left_value(self, strike: f64) -> f64 {
        match self {
            OptionKind::VanillaPut => strike,
            OptionKind::CappedPut { cap } => strike - cap,
        }
    }

    pub fn region_of_interest(self, strike: f64) -> RegionOfInterest {
        match self {
            OptionKind::VanillaPut => RegionOfInterest::standard(strike),
            OptionKind::CappedPut { cap } => RegionOfInterest::capped(strike, cap),
        }
    }

    fn validate(self, strike: f64) -> Result<()> {
        if let OptionKind::CappedPut { cap } = self {
            if !(cap > 0.0 && cap < strike) {
                return Err(Error::InvalidParams(format!("cap must lie in (0, K), got {cap}")));
            }
        }
        Ok(())
    }

    fn key(self) -> String {
        match self {
            OptionKind::VanillaPut => "vanilla".into(),
            OptionKind::CappedPut { cap } => format!("capped{:016x}", cap.to_bits()),
        }
    }
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptionKind::VanillaPut => write!(f, "vanilla put"),
            OptionKind::CappedPut { cap } => write!(f, "capped put (B={cap})"),
        }
    }
}

/// Spatial grid with `m1 = 2m`, `m2 = m` for the given option.
pub fn default_grid(params: &HestonParams, kind: OptionKind, m: usize) -> Result<SpatialGrid> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("m must be at least 4, got {m}")));
    }
    kind.validate(params.strike)?;
    let s_spec = match kind {
        OptionKind::VanillaPut => SMeshSpec::vanilla(2 * m, params.strike, params.maturity),
        OptionKind::CappedPut { cap } => SMeshSpec::capped(2 * m, params.strike, params.maturity, cap),
    };
    SpatialGrid::new(&s_spec, &VMeshSpec::standard(m))
}

/// Semidiscrete system for `preset` on the default grid.
pub fn discretize(preset: &CasePreset, kind: OptionKind, m: usize) -> Result<Discretization> {
    preset.params.validate()?;
    let grid = default_grid(&preset.params, kind, m)?;
    assemble(&preset.params, &grid, kind.left_value(preset.params.strike))
}

/// Natural cubic spline through `(x_k, y_k)` with strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        crate::error::check_len(x.len(), y.len())?;
        let n = x.len();
        if n < 2 {
            return Err(Error::InvalidArgument("a spline needs at least two knots".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("spline knots must increase strictly".into()));
        }
        let mut second = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut sub = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut sup = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                let (h0, h1) = (x[r + 1] - x[r], x[r + 2] - x[r + 1]);
                sub[r] = h0;
                diag[r] = 2.0 * (h0 + h1);
                sup[r] = h1;
                rhs[r] = 6.0 * ((y[r + 2] - y[r + 1]) / h1 - (y[r + 1] - y[r]) / h0);
            }
            let f = crate::linalg::tridiag_factor(&sub, &diag, &sup)?;
            f.solve_in_place(&mut rhs);
            second[1..n - 1].copy_from_slice(&rhs);
        }
        Ok(NaturalSpline { x: x.to_vec(), y: y.to_vec(), second })
    }

    /// Value at `t` inside `[x_0, x_last]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let n = self.x.len();
        if !(t >= self.x[0] && t <= self.x[n - 1]) {
            return Err(Error::InvalidArgument(format!("{t} outside spline range")));
        }
        let k = match self.x.partition_point(|&xk| xk <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        Ok(a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.second[k] + (b * b * b - b) * self.second[k + 1]) * h * h / 6.0)
    }
}

/// Final price surface of a run.
#[derive(Debug, Clone)]
pub struct PriceSurface {
    pub grid: SpatialGrid,
    /// `Û_N` on the unknowns.
    pub u_hat: Vec<f64>,
    pub payoff: Vec<f64>,
    pub kind: OptionKind,
    /// Values on the `s = s_0` boundary line, one per `v`-node.
    pub left_column: Vec<f64>,
    pub config: SchemeConfig,
    pub times: Vec<f64>,
    pub lambda_history: Option<Vec<Vec<f64>>>,
    pub wall_time: Duration,
}

impl PriceSurface {
    /// Value at node `(i, j)`, including the Dirichlet column `i = 0`.
    pub fn node_value(&self, i: usize, j: usize) -> f64 {
        if i == 0 {
            self.left_column[j]
        } else {
            self.u_hat[self.grid.index(i, j)]
        }
    }

    /// Rows `(s, v, value)` over the full grid, `s` fastest.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity((self.grid.m1() + 1) * (self.grid.m2() + 1));
        for j in 0..=self.grid.m2() {
            for i in 0..=self.grid.m1() {
                out.push((self.grid.s()[i], self.grid.v()[j], self.node_value(i, j)));
            }
        }
        out
    }

    /// Spline interpolation along `s` on every `v`-line, then along `v`.
    pub fn interpolate(&self, s0: f64, v0: f64) -> Result<f64> {
        let (s, v) = (self.grid.s(), self.grid.v());
        let inside = s0 >= s[0] && s0 <= s[s.len() - 1] && v0 >= v[0] && v0 <= v[v.len() - 1];
        if !inside {
            return Err(Error::OutOfDomain { s: s0, v: v0 });
        }
        let mut line = vec![0.0; s.len()];
        let mut along_v = Vec::with_capacity(v.len());
        for j in 0..v.len() {
            for (i, x) in line.iter_mut().enumerate() {
                *x = self.node_value(i, j);
            }
            along_v.push(NaturalSpline::new(s, &line)?.eval(s0)?);
        }
        NaturalSpline::new(v, &along_v)?.eval(v0)
    }

    /// `min (Û − U0)`; nonnegative for a feasible surface.
    pub fn min_obstacle_gap(&self) -> f64 {
        self.u_hat.iter().zip(&self.payoff).map(|(u, p)| u - p).fold(f64::INFINITY, f64::min)
    }
}

/// Runs `config` on the default `m`-grid of `preset`.
pub fn price_surface(
    preset: &CasePreset,
    kind: OptionKind,
    m: usize,
    config: &SchemeConfig,
    record_lambda: bool,
) -> Result<PriceSurface> {
    config.validate()?;
    let disc = discretize(preset, kind, m)?;
    surface_from(disc, kind, config, record_lambda)
}

fn surface_from(disc: Discretization, kind: OptionKind, config: &SchemeConfig, record_lambda: bool) -> Result<PriceSurface> {
    let res = run(&disc, config, record_lambda)?;
    Ok(PriceSurface {
        u_hat: res.u_hat,
        payoff: disc.u0,
        kind,
        left_column: vec![disc.left_value; disc.grid.m2() + 1],
        config: *config,
        times: res.times,
        lambda_history: res.lambda_history,
        wall_time: res.wall_time,
        grid: disc.grid,
    })
}

/// Step count used for reference solutions.
pub const REFERENCE_STEPS: usize = 20_000;

/// Reference scheme: CN-IT with damping for uncorrelated runs, MCS-IT otherwise.
pub fn reference_config(params: &HestonParams, steps: usize) -> SchemeConfig {
    if params.rho == 0.0 {
        SchemeConfig::new(Scheme::CnIt, steps, params.maturity).with_damping(true)
    } else {
        SchemeConfig::new(Scheme::McsIt, steps, params.maturity)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

const CACHE_MAGIC: &[u8; 8] = b"HADIREF1";

fn cache_key(params: &HestonParams, kind: OptionKind, m: usize, config: &SchemeConfig) -> String {
    let p = [params.kappa, params.eta, params.sigma, params.rho, params.r, params.maturity, params.strike];
    let bits: Vec<String> = p.iter().map(|x| format!("{:016x}", x.to_bits())).collect();
    format!(
        "{}|{}|m{}|{}|th{:016x}|d{}|n{}",
        bits.join(","),
        kind.key(),
        m,
        config.scheme.name(),
        config.theta.to_bits(),
        config.damping as u8,
        config.steps
    )
}

fn read_cache(path: &Path, key: &str, len: usize) -> Option<Vec<f64>> {
    let bytes = fs::read(path).ok()?;
    let key_bytes = key.as_bytes();
    let head = 8 + 8 + 8 + key_bytes.len();
    if bytes.len() != head + 8 * len || &bytes[..8] != CACHE_MAGIC {
        return None;
    }
    let hash = u64::from_le_bytes(bytes[8..16].try_into().ok()?);
    let key_len = u64::from_le_bytes(bytes[16..24].try_into().ok()?) as usize;
    if hash != fnv1a(key_bytes) || key_len != key_bytes.len() || &bytes[24..head] != key_bytes {
        return None;
    }
    let payload = &bytes[head..];
    let values: Vec<f64> =
        payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    if values.iter().all(|x| x.is_finite()) {
        Some(values)
    } else {
        None
    }
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_cache(dir: &Path, stem: &str, key: &str, surface: &PriceSurface) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(24 + key.len() + 8 * surface.u_hat.len());
    bytes.extend_from_slice(CACHE_MAGIC);
    bytes.extend_from_slice(&fnv1a(key.as_bytes()).to_le_bytes());
    bytes.extend_from_slice(&(key.len() as u64).to_le_bytes());
    bytes.extend_from_slice(key.as_bytes());
    for x in &surface.u_hat {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    write_atomic(&dir.join(format!("{stem}.bin")), &bytes)?;
    write_atomic(&dir.join(format!("{stem}.csv")), surface_csv(surface).as_bytes())
}

/// Cache directory from `HESTON_ADI_CACHE`, if set.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os("HESTON_ADI_CACHE").filter(|s| !s.is_empty()).map(PathBuf::from)
}

/// High-resolution-in-time surface, read from or written to `cache_dir` when given.
/// Unreadable or mismatching cache files are recomputed and overwritten.
pub fn reference_solution(
    preset: &CasePreset,
    kind: OptionKind,
    m: usize,
    config: &SchemeConfig,
    cache_dir: Option<&Path>,
) -> Result<PriceSurface> {
    config.validate()?;
    let disc = discretize(preset, kind, m)?;
    let key = cache_key(&preset.params, kind, m, config);
    let stem = format!("ref_{}_{}_m{}_n{}_{:016x}", preset.label(), config.scheme.name(), m, config.steps, fnv1a(key.as_bytes()));
    if let Some(dir) = cache_dir {
        if let Some(u_hat) = read_cache(&dir.join(format!("{stem}.bin")), &key, disc.size()) {
            return Ok(PriceSurface {
                u_hat,
                payoff: disc.u0,
                kind,
                left_column: vec![disc.left_value; disc.grid.m2() + 1],
                config: *config,
                times: (1..=config.steps).map(|n| n as f64 * config.dt()).collect(),
                lambda_history: None,
                wall_time: Duration::ZERO,
                grid: disc.grid,
            });
        }
    }
    let surface = surface_from(disc, kind, config, false)?;
    if let Some(dir) = cache_dir {
        write_cache(dir, &stem, &key, &surface)?;
    }
    Ok(surface)
}

/// Formats `x` with 10 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.9e}", x);
    let parsed: f64 = s.parse().expect("formatted float");
    let exp = parsed.abs().log10().floor() as i32;
    if (-5..=15).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        let t = format!("{:.*}", decimals, parsed);
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        }
    } else {
        s
    }
}

/// CSV `s,v,value` of a surface.
pub fn surface_csv(surface: &PriceSurface) -> String {
    let mut out = String::from("s,v,value\n");
    for (s, v, u) in surface.rows() {
        out.push_str(&format!("{},{},{}\n", fmt_sig(s), fmt_sig(v), fmt_sig(u)));
    }
    out
}

/// `count` log-spaced step sizes from `dt_max` down to `dt_min`.
pub fn log_spaced_steps(dt_min: f64, dt_max: f64, count: usize) -> Result<Vec<f64>> {
    if !(dt_min > 0.0 && dt_max >= dt_min) || count < 2 {
        return Err(Error::InvalidArgument("need 0 < dt_min <= dt_max and at least two sizes".into()));
    }
    let (a, b) = (dt_max.ln(), dt_min.ln());
    Ok((0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect())
}

/// Step count hitting `T` with steps no larger than `dt`.
pub fn steps_for(maturity: f64, dt: f64) -> usize {
    ((maturity / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub steps: usize,
    /// Actual step `T / N`.
    pub dt: f64,
    pub error: f64,
    pub wall_time: Duration,
}

/// Temporal errors of `scheme` against `reference` for each nominal step size.
pub fn convergence_sweep(
    preset: &CasePreset,
    kind: OptionKind,
    m: usize,
    scheme: Scheme,
    damping: bool,
    dts: &[f64],
    reference: &PriceSurface,
) -> Result<Vec<SweepPoint>> {
    let disc = discretize(preset, kind, m)?;
    crate::error::check_len(disc.size(), reference.u_hat.len())?;
    let roi = kind.region_of_interest(preset.params.strike);
    let t = preset.params.maturity;
    let mut out = Vec::with_capacity(dts.len());
    for &dt in dts {
        let steps = steps_for(t, dt);
        let cfg = SchemeConfig::new(scheme, steps, t).with_damping(damping);
        let res = run(&disc, &cfg, false)?;
        let error = global_temporal_error(&reference.u_hat, &res.u_hat, &disc.grid, &roi)?;
        out.push(SweepPoint { steps, dt: cfg.dt(), error, wall_time: res.wall_time });
    }
    Ok(out)
}

/// Order estimate from the sweep points with `dt_lo <= Δt <= dt_hi`.
pub fn sweep_order(points: &[SweepPoint], dt_lo: f64, dt_hi: f64) -> Result<OrderEstimate> {
    let (dts, errors): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.dt >= dt_lo * (1.0 - 1e-9) && p.dt <= dt_hi * (1.0 + 1e-9))
        .map(|p| (p.dt, p.error))
        .unzip();
    estimate_order(&errors, &dts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableId {
    T2,
    T3,
    T4,
    T5,
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T2" | "2" => Ok(TableId::T2),
            "T3" | "3" => Ok(TableId::T3),
            "T4" | "4" => Ok(TableId::T4),
            "T5" | "5" => Ok(TableId::T5),
            _ => Err(Error::Unknown { kind: "table", name: s.to_string() }),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One MCS-IT configuration of a published table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub case: &'static str,
    pub m: usize,
    pub steps: usize,
    pub v0: f64,
    pub s0: Vec<f64>,
    pub published: Vec<f64>,
    /// Independent benchmark values for the same probes, where published.
    pub benchmark: Option<Vec<f64>>,
}

pub fn table_configs(id: TableId) -> Vec<TableConfig> {
    let val1 = |m, steps, v0, published: [f64; 5]| TableConfig {
        case: "VAL1",
        m,
        steps,
        v0,
        s0: vec![8.0, 9.0, 10.0, 11.0, 12.0],
        published: published.to_vec(),
        benchmark: None,
    };
    match id {
        TableId::T2 => vec![
            val1(50, 25, 0.0625, [2.0001, 1.1088, 0.5209, 0.2152, 0.0836]),
            val1(100, 50, 0.0625, [2.0000, 1.1083, 0.5206, 0.2146, 0.0830]),
            val1(150, 75, 0.0625, [2.0000, 1.1081, 0.5204, 0.2143, 0.0827]),
        ],
        TableId::T3 => vec![
            val1(50, 25, 0.25, [2.0793, 1.3342, 0.7963, 0.4488, 0.2438]),
            val1(100, 50, 0.25, [2.0789, 1.3340, 0.7963, 0.4487, 0.2435]),
            val1(150, 75, 0.25, [2.0788, 1.3339, 0.7962, 0.4486, 0.2433]),
        ],
        TableId::T4 => [
            (20, [9.9984, 3.2121, 0.9301], [9.9784, 3.2047, 0.9274]),
            (40, [10.0015, 3.2125, 0.9304], [9.9916, 3.2073, 0.9281]),
            (60, [10.0039, 3.2126, 0.9305], [9.9958, 3.2079, 0.9280]),
        ]
        .into_iter()
        .map(|(steps, ours, cos)| TableConfig {
            case: "VAL2",
            m: 150,
            steps,
            v0: 0.0348,
            s0: vec![90.0, 100.0, 110.0],
            published: ours.to_vec(),
            benchmark: Some(cos.to_vec()),
        })
        .collect(),
        TableId::T5 => [
            ("A", [16.9245, 11.9442, 8.2270]),
            ("B", [16.0470, 12.4326, 9.8746]),
            ("C", [10.4054, 3.9235, 1.1784]),
            ("D", [10.9554, 8.6273, 7.4999]),
            ("E", [12.8442, 9.8116, 8.4312]),
            ("F", [18.9325, 15.6696, 13.2838]),
        ]
        .into_iter()
        .map(|(case, vals)| TableConfig {
            case,
            m: 250,
            steps: 125,
            v0: 0.05,
            s0: vec![90.0, 100.0, 110.0],
            published: vals.to_vec(),
            benchmark: None,
        })
        .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub case: String,
    pub m1: usize,
    pub m2: usize,
    pub steps: usize,
    pub s0: f64,
    pub v0: f64,
    pub value: f64,
    pub published: f64,
    pub abs_diff: f64,
    pub benchmark: Option<f64>,
}

/// Prices the probes of one table configuration with undamped MCS-IT.
pub fn run_table_config(cfg: &TableConfig) -> Result<Vec<TableRow>> {
    let preset = CasePreset::named(cfg.case, false)?;
    let sc = SchemeConfig::new(Scheme::McsIt, cfg.steps, preset.params.maturity);
    let surface = price_surface(&preset, OptionKind::VanillaPut, cfg.m, &sc, false)?;
    cfg.s0
        .iter()
        .enumerate()
        .map(|(k, &s0)| {
            let value = surface.interpolate(s0, cfg.v0)?;
            Ok(TableRow {
                case: cfg.case.to_string(),
                m1: 2 * cfg.m,
                m2: cfg.m,
                steps: cfg.steps,
                s0,
                v0: cfg.v0,
                value,
                published: cfg.published[k],
                abs_diff: (value - cfg.published[k]).abs(),
                benchmark: cfg.benchmark.as_ref().map(|b| b[k]),
            })
        })
        .collect()
}

pub fn reproduce_table(id: TableId) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for cfg in table_configs(id) {
        rows.extend(run_table_config(&cfg)?);
    }
    Ok(rows)
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("case,m1,m2,N,S0,V0,value,published,abs_diff,benchmark\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.case,
            r.m1,
            r.m2,
            r.steps,
            fmt_sig(r.s0),
            fmt_sig(r.v0),
            fmt_sig(r.value),
            fmt_sig(r.published),
            fmt_sig(r.abs_diff),
            r.benchmark.map(fmt_sig).unwrap_or_default()
        ));
    }
    out
}
