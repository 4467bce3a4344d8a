use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use heston_adi::pricing::{CasePreset, OptionKind, TableId, REFERENCE_STEPS};
use heston_adi::stepper::Scheme;

use crate::CliError;

/// A probe point `s,v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub s: f64,
    pub v: f64,
}

impl FromStr for Probe {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let (s, v) = text.split_once(',').ok_or_else(|| format!("expected s,v but got '{text}'"))?;
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad probe coordinate '{x}': {e}"));
        Ok(Probe { s: parse(s)?, v: parse(v)? })
    }
}

/// Options shared by every subcommand. Each may also come from the config file
/// under the same name; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// key=value file with `#` comments
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Case name (A..F, VAL1, VAL2), a comma-separated list, or `all`
    #[arg(long)]
    pub case: Option<String>,
    /// Use the uncorrelated variant of the case
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rho_zero: Option<bool>,
    /// Up-and-out cap B; omit for the vanilla put
    #[arg(long)]
    pub cap: Option<f64>,
    /// Grid parameter: m1 = 2m, m2 = m
    #[arg(long)]
    pub m: Option<usize>,
    /// Scheme name (be-it, cn-it, do-it, cs-it, mcs-it, hv-it), a list, or `all`
    #[arg(long)]
    pub scheme: Option<String>,
    /// Override the scheme's default theta
    #[arg(long)]
    pub theta: Option<f64>,
    /// Replace the first step by two backward Euler half-steps
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub damping: Option<bool>,
    /// Number of time steps
    #[arg(long = "N")]
    pub steps: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Parallel entries for sweep commands
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Time steps of the reference solution
    #[arg(long)]
    pub ref_steps: Option<usize>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub strike: Option<f64>,
}

/// Extra options of `price`.
#[derive(Debug, Clone, Default, Args)]
pub struct PriceArgs {
    /// Probe point `s,v`; repeatable
    #[arg(long)]
    pub probe: Vec<Probe>,
}

/// Extra options of `converge`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub dt_min: Option<f64>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Number of log-spaced step sizes
    #[arg(long)]
    pub count: Option<usize>,
}

/// Extra options of `boundary`.
#[derive(Debug, Clone, Default, Args)]
pub struct BoundaryArgs {
    /// Keep the multiplier history (required for boundary extraction)
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub record_lambda: Option<bool>,
}

/// Extra options of `tables`.
#[derive(Debug, Clone, Default, Args)]
pub struct TablesArgs {
    /// Table id (T2, T3, T4, T5)
    #[arg(long)]
    pub id: Option<String>,
}

/// Extra options of `theorem`.
#[derive(Debug, Clone, Default, Args)]
pub struct TheoremArgs {
    /// Comma-separated step counts
    #[arg(long = "steps")]
    pub step_counts: Option<String>,
}

/// Flat `key=value` settings read from a config file.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", n + 1)))?;
            let key = k.trim().replace('_', "-");
            values.entry(key).or_default().push(v.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    fn take_all(&mut self, key: &str) -> Vec<String> {
        self.values.remove(key).unwrap_or_default()
    }

    /// Flag value if given, otherwise the (last) file value.
    fn pick<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.take_all(key).pop();
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|v| v.parse::<T>().map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))))
            .transpose()
    }

    fn finish(self) -> Result<(), CliError> {
        match self.values.keys().next() {
            Some(k) => Err(CliError::Usage(format!("unknown config key '{k}'"))),
            None => Ok(()),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub cases: Vec<CasePreset>,
    pub kind: OptionKind,
    pub m: usize,
    pub schemes: Vec<Scheme>,
    pub theta: Option<f64>,
    pub damping: bool,
    pub steps: usize,
    pub out: PathBuf,
    pub jobs: usize,
    pub ref_steps: usize,
    pub probes: Vec<Probe>,
    pub dt_range: (f64, f64),
    pub dt_count: usize,
    pub record_lambda: bool,
    pub table: Option<TableId>,
    pub theorem_steps: Vec<usize>,
}

/// Command-specific fields that are merged along with the common ones.
#[derive(Debug, Clone, Default)]
pub struct Extra {
    pub price: PriceArgs,
    pub converge: ConvergeArgs,
    pub boundary: BoundaryArgs,
    pub tables: TablesArgs,
    pub theorem: TheoremArgs,
}

fn usage<E: Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn parse_cases(spec: &str, rho_zero: bool) -> Result<Vec<CasePreset>, CliError> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(CasePreset::benchmark_cases(rho_zero));
    }
    spec.split(',').map(|name| CasePreset::named(name.trim(), rho_zero).map_err(usage)).collect()
}

fn parse_schemes(spec: &str) -> Result<Vec<Scheme>, CliError> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Scheme::ALL.to_vec());
    }
    spec.split(',').map(|s| s.parse::<Scheme>().map_err(usage)).collect()
}

impl RunConfig {
    /// Merges flags over the optional config file and validates the result.
    /// `default_schemes` is used when no scheme is given.
    pub fn resolve(common: CommonArgs, extra: Extra, default_schemes: &str) -> Result<Self, CliError> {
        let mut file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let rho_zero = file.pick("rho-zero", common.rho_zero)?.unwrap_or(false);
        let case = file.pick("case", common.case)?.unwrap_or_else(|| "A".into());
        let mut cases = parse_cases(&case, rho_zero)?;

        let overrides = [
            ("kappa", file.pick("kappa", common.kappa)?),
            ("eta", file.pick("eta", common.eta)?),
            ("sigma", file.pick("sigma", common.sigma)?),
            ("rho", file.pick("rho", common.rho)?),
            ("r", file.pick("r", common.r)?),
            ("maturity", file.pick("maturity", common.maturity)?),
            ("strike", file.pick("strike", common.strike)?),
        ];
        if overrides.iter().any(|(_, v)| v.is_some()) {
            for preset in &mut cases {
                let mut p = preset.params;
                for (name, value) in overrides {
                    if let Some(x) = value {
                        match name {
                            "kappa" => p.kappa = x,
                            "eta" => p.eta = x,
                            "sigma" => p.sigma = x,
                            "rho" => p.rho = x,
                            "r" => p.r = x,
                            "maturity" => p.maturity = x,
                            _ => p.strike = x,
                        }
                    }
                }
                *preset = CasePreset::custom(p).map_err(usage)?;
            }
        }

        let kind = match file.pick::<f64>("cap", common.cap)? {
            Some(cap) => OptionKind::CappedPut { cap },
            None => OptionKind::VanillaPut,
        };
        let m = file.pick("m", common.m)?.unwrap_or(50);
        let scheme_spec = file.pick("scheme", common.scheme)?.unwrap_or_else(|| default_schemes.into());
        let schemes = parse_schemes(&scheme_spec)?;
        let theta = file.pick("theta", common.theta)?;
        let damping = file.pick("damping", common.damping)?.unwrap_or(false);
        let steps = file.pick("N", common.steps)?.unwrap_or(100);
        let out = file.pick("out", common.out)?.unwrap_or_else(|| PathBuf::from("."));
        let jobs = file.pick("jobs", common.jobs)?.unwrap_or(1);
        let ref_steps = file.pick("ref-steps", common.ref_steps)?.unwrap_or(REFERENCE_STEPS);

        let file_probes = file.take_all("probe");
        let probes = if extra.price.probe.is_empty() {
            file_probes.iter().map(|p| p.parse::<Probe>().map_err(usage)).collect::<Result<_, _>>()?
        } else {
            extra.price.probe
        };
        let dt_min = file.pick("dt-min", extra.converge.dt_min)?.unwrap_or(1e-3);
        let dt_max = file.pick("dt-max", extra.converge.dt_max)?.unwrap_or(1.0);
        let dt_count = file.pick("count", extra.converge.count)?.unwrap_or(20);
        let record_lambda = file.pick("record-lambda", extra.boundary.record_lambda)?.unwrap_or(true);
        let table = file.pick::<String>("id", extra.tables.id)?.map(|id| id.parse::<TableId>().map_err(usage)).transpose()?;
        let theorem_steps = match file.pick::<String>("steps", extra.theorem.step_counts)? {
            Some(list) => list.split(',').map(|x| x.trim().parse::<usize>().map_err(usage)).collect::<Result<_, _>>()?,
            None => vec![8, 16, 32, 64, 128],
        };
        file.finish()?;

        let cfg = RunConfig {
            cases,
            kind,
            m,
            schemes,
            theta,
            damping,
            steps,
            out,
            jobs,
            ref_steps,
            probes,
            dt_range: (dt_min, dt_max),
            dt_count,
            record_lambda,
            table,
            theorem_steps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Usage(msg.to_string()));
        if self.m < 4 {
            return bad("m must be at least 4");
        }
        if self.steps == 0 || self.ref_steps == 0 {
            return bad("step counts must be positive");
        }
        if self.jobs == 0 {
            return bad("jobs must be positive");
        }
        if let Some(t) = self.theta {
            if !(t > 0.0 && t <= 1.0) {
                return bad("theta must lie in (0, 1]");
            }
        }
        if let OptionKind::CappedPut { cap } = self.kind {
            if !(cap > 0.0 && cap.is_finite()) {
                return bad("cap must be positive");
            }
            if self.cases.iter().any(|c| cap >= c.params.strike) {
                return bad("cap must lie below the strike");
            }
        }
        let (lo, hi) = self.dt_range;
        if !(lo > 0.0 && hi >= lo) || self.dt_count < 2 {
            return bad("need 0 < dt-min <= dt-max and count >= 2");
        }
        if self.theorem_steps.is_empty() || self.theorem_steps.contains(&0) {
            return bad("theorem step counts must be positive");
        }
        if self.probes.iter().any(|p| !(p.s.is_finite() && p.v.is_finite())) {
            return bad("probe coordinates must be finite");
        }
        Ok(())
    }
}
