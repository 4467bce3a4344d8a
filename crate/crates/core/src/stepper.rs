//! Time stepping of the semidiscrete complementarity problem.
//!
//! Every method advances `(Û, λ̂)` in two stages: a linear stage producing
//! `Ū_n` (a θ-method step or an ADI step with the extra `Δt λ̄_n` source),
//! followed by the explicit IT update. `λ̄_n = λ̂_{n−1}` with `λ̂_0 = 0`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::discretization::Discretization;
use crate::error::{check_len, Error, Result};
use crate::lcp::{complementarity_residual, it_update_into, ComplementarityResidual, ItState};
use crate::linalg::{BandedLu, CsrMatrix, LineFactors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    BeIt,
    CnIt,
    DoIt,
    CsIt,
    McsIt,
    HvIt,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [Scheme::BeIt, Scheme::CnIt, Scheme::DoIt, Scheme::CsIt, Scheme::McsIt, Scheme::HvIt];
    pub const ADI: [Scheme; 4] = [Scheme::DoIt, Scheme::CsIt, Scheme::McsIt, Scheme::HvIt];

    /// Recommended θ for each method.
    pub fn default_theta(self) -> f64 {
        match self {
            Scheme::BeIt => 1.0,
            Scheme::CnIt | Scheme::DoIt | Scheme::CsIt => 0.5,
            Scheme::McsIt => 1.0 / 3.0,
            Scheme::HvIt => 0.5 + 3f64.sqrt() / 6.0,
        }
    }

    pub fn is_adi(self) -> bool {
        !matches!(self, Scheme::BeIt | Scheme::CnIt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::BeIt => "be-it",
            Scheme::CnIt => "cn-it",
            Scheme::DoIt => "do-it",
            Scheme::CsIt => "cs-it",
            Scheme::McsIt => "mcs-it",
            Scheme::HvIt => "hv-it",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Scheme::ALL
            .iter()
            .copied()
            .find(|sch| sch.name() == key || sch.name().trim_end_matches("-it") == key)
            .ok_or_else(|| Error::Unknown { kind: "scheme", name: s.to_string() })
    }
}

/// Time-integration policy for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub theta: f64,
    /// Start with two BE-IT substeps of `Δt/2`.
    pub damping: bool,
    pub steps: usize,
    pub maturity: f64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, steps: usize, maturity: f64) -> Self {
        SchemeConfig { scheme, theta: scheme.default_theta(), damping: false, steps, maturity }
    }

    pub fn with_damping(mut self, damping: bool) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn dt(&self) -> f64 {
        self.maturity / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("step count must be at least 1".into()));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::InvalidArgument(format!("maturity must be positive, got {}", self.maturity)));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::InvalidArgument(format!("theta must be positive, got {}", self.theta)));
        }
        Ok(())
    }
}

/// Factors of `I − θΔt A` plus the explicit operator `I + (1 − θ)Δt A`.
#[derive(Debug, Clone)]
pub struct ThetaFactors {
    lu: BandedLu,
    /// `order[p]` is the unknown stored at band position `p`, when the
    /// factorization uses `v`-fastest ordering to shrink the bandwidth.
    order: Option<Vec<usize>>,
    explicit: CsrMatrix,
    dt: f64,
}

impl ThetaFactors {
    pub fn new(disc: &Discretization, theta: f64, dt: f64) -> Result<Self> {
        let eye = CsrMatrix::identity(disc.size());
        let implicit = eye.linear_combination(1.0, &disc.a, -theta * dt)?;
        let explicit = eye.linear_combination(1.0, &disc.a, (1.0 - theta) * dt)?;
        let (m1, lines) = (disc.grid.m1(), disc.grid.m2() + 1);
        let (lu, order) = if lines < m1 {
            let order: Vec<usize> = (1..=m1).flat_map(|i| (0..lines).map(move |j| disc.grid.index(i, j))).collect();
            let mut pos = vec![0; order.len()];
            for (p, &l) in order.iter().enumerate() {
                pos[l] = p;
            }
            let permuted = CsrMatrix::from_triplets(
                implicit.nrows(),
                implicit.ncols(),
                implicit.triplets().map(|(r, c, v)| (pos[r], pos[c], v)),
            )?;
            (BandedLu::factor(&permuted)?, Some(order))
        } else {
            (BandedLu::factor(&implicit)?, None)
        };
        Ok(ThetaFactors { lu, order, explicit, dt })
    }

    fn solve_in_place(&self, x: &mut [f64], scratch: &mut [f64]) {
        match &self.order {
            Some(order) => {
                for (p, &l) in order.iter().enumerate() {
                    scratch[p] = x[l];
                }
                self.lu.solve_in_place(scratch);
                for (p, &l) in order.iter().enumerate() {
                    x[l] = scratch[p];
                }
            }
            None => self.lu.solve_in_place(x),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Per-line factors of `I − θΔt A1` and `I − θΔt A2` for a fixed step.
#[derive(Debug, Clone)]
pub struct StageFactors {
    s_lines: LineFactors,
    v_lines: LineFactors,
    theta: f64,
    dt: f64,
}

impl StageFactors {
    pub fn new(disc: &Discretization, theta: f64, dt: f64) -> Result<Self> {
        Ok(StageFactors {
            s_lines: disc.a1.factor_shifted(theta * dt)?,
            v_lines: disc.a2.factor_shifted(theta * dt)?,
            theta,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Preallocated stage buffers.
struct Workspace {
    au0: Vec<f64>,
    au1: Vec<f64>,
    au2: Vec<f64>,
    y0: Vec<f64>,
    y: Vec<f64>,
    yt: Vec<f64>,
    d: Vec<f64>,
    tmp: Vec<f64>,
    tmp2: Vec<f64>,
    tmp3: Vec<f64>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        let z = || vec![0.0; m];
        Workspace { au0: z(), au1: z(), au2: z(), y0: z(), y: z(), yt: z(), d: z(), tmp: z(), tmp2: z(), tmp3: z() }
    }
}

fn theta_step_into(
    disc: &Discretization,
    f: &ThetaFactors,
    u: &[f64],
    lambda: &mut [f64],
    u_next: &mut [f64],
    ws: &mut Workspace,
) {
    let dt = f.dt;
    f.explicit.matvec_into(u, &mut ws.y);
    for l in 0..u.len() {
        ws.y[l] += dt * (disc.g[l] + lambda[l]);
    }
    f.solve_in_place(&mut ws.y, &mut ws.tmp);
    it_update_into(&ws.y, &disc.u0, dt, u_next, lambda);
}

/// `out -= c * a_u`, then apply the line solve.
#[inline]
fn correct_and_solve(out: &mut [f64], c: f64, a_u: &[f64], lines: &LineFactors) {
    for (o, a) in out.iter_mut().zip(a_u) {
        *o -= c * a;
    }
    lines.solve_in_place(out);
}

fn adi_step_into(
    disc: &Discretization,
    scheme: Scheme,
    f: &StageFactors,
    u: &[f64],
    lambda: &mut [f64],
    u_next: &mut [f64],
    ws: &mut Workspace,
) {
    let (dt, th) = (f.dt, f.theta);
    let m = u.len();
    disc.a0.matvec_into(u, &mut ws.au0);
    disc.a1.matvec_into(u, &mut ws.au1);
    disc.a2.matvec_into(u, &mut ws.au2);
    for l in 0..m {
        ws.y0[l] = u[l] + dt * (ws.au0[l] + ws.au1[l] + ws.au2[l] + disc.g[l]) + dt * lambda[l];
    }
    ws.y.copy_from_slice(&ws.y0);
    correct_and_solve(&mut ws.y, th * dt, &ws.au1, &f.s_lines);
    correct_and_solve(&mut ws.y, th * dt, &ws.au2, &f.v_lines);

    if scheme != Scheme::DoIt {
        for l in 0..m {
            ws.d[l] = ws.y[l] - u[l];
        }
        disc.a0.matvec_into(&ws.d, &mut ws.tmp);
        match scheme {
            Scheme::CsIt => {
                for l in 0..m {
                    ws.yt[l] = ws.y0[l] + 0.5 * dt * ws.tmp[l];
                }
            }
            Scheme::McsIt => {
                disc.a1.matvec_into(&ws.d, &mut ws.tmp2);
                disc.a2.matvec_into(&ws.d, &mut ws.tmp3);
                for l in 0..m {
                    let ad = ws.tmp[l] + ws.tmp2[l] + ws.tmp3[l];
                    ws.yt[l] = ws.y0[l] + th * dt * ws.tmp[l] + (0.5 - th) * dt * ad;
                }
            }
            Scheme::HvIt => {
                disc.a1.matvec_into(&ws.d, &mut ws.tmp2);
                disc.a2.matvec_into(&ws.d, &mut ws.tmp3);
                for l in 0..m {
                    ws.yt[l] = ws.y0[l] + 0.5 * dt * (ws.tmp[l] + ws.tmp2[l] + ws.tmp3[l]);
                    // second sweep is anchored at Y2: A_j Y2 = A_j U + A_j (Y2 - U)
                    ws.au1[l] += ws.tmp2[l];
                    ws.au2[l] += ws.tmp3[l];
                }
            }
            _ => unreachable!("non-ADI scheme in ADI step"),
        }
        correct_and_solve(&mut ws.yt, th * dt, &ws.au1, &f.s_lines);
        correct_and_solve(&mut ws.yt, th * dt, &ws.au2, &f.v_lines);
        std::mem::swap(&mut ws.y, &mut ws.yt);
    }
    it_update_into(&ws.y, &disc.u0, dt, u_next, lambda);
}

/// One θ-IT step with `λ̄_n = state.lambda_hat`.
pub fn theta_it_step(state: &ItState, disc: &Discretization, factors: &ThetaFactors) -> Result<ItState> {
    check_len(disc.size(), state.u_hat.len())?;
    check_len(disc.size(), state.lambda_hat.len())?;
    let mut ws = Workspace::new(disc.size());
    let mut next = ItState { u_hat: vec![0.0; disc.size()], lambda_hat: state.lambda_hat.clone() };
    theta_step_into(disc, factors, &state.u_hat, &mut next.lambda_hat, &mut next.u_hat, &mut ws);
    Ok(next)
}

/// One ADI-IT step of the given scheme with `λ̄_n = state.lambda_hat`.
pub fn adi_it_step(state: &ItState, disc: &Discretization, scheme: Scheme, factors: &StageFactors) -> Result<ItState> {
    if !scheme.is_adi() {
        return Err(Error::InvalidArgument(format!("{scheme} is not an ADI scheme")));
    }
    check_len(disc.size(), state.u_hat.len())?;
    check_len(disc.size(), state.lambda_hat.len())?;
    let mut ws = Workspace::new(disc.size());
    let mut next = ItState { u_hat: vec![0.0; disc.size()], lambda_hat: state.lambda_hat.clone() };
    adi_step_into(disc, scheme, factors, &state.u_hat, &mut next.lambda_hat, &mut next.u_hat, &mut ws);
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Number of grid points with `λ̂_n > 0` after each step `n = 1..N`.
    pub exercised_counts: Vec<usize>,
    pub final_residual: ComplementarityResidual,
}

#[derive(Debug, Clone)]
pub struct TimeSteppingResult {
    pub u_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    /// `t_n` for `n = 1..N`.
    pub times: Vec<f64>,
    /// `λ̂_n` for `n = 1..N`, when recorded.
    pub lambda_history: Option<Vec<Vec<f64>>>,
    pub wall_time: Duration,
    pub diagnostics: StepDiagnostics,
}

/// Marches from `Û_0 = U0`, `λ̂_0 = 0` to `t = T`.
pub fn run(disc: &Discretization, config: &SchemeConfig, record_lambda: bool) -> Result<TimeSteppingResult> {
    config.validate()?;
    let start = Instant::now();
    let m = disc.size();
    let dt = config.dt();
    let mut ws = Workspace::new(m);
    let mut u = disc.u0.clone();
    let mut u_next = vec![0.0; m];
    let mut lambda = vec![0.0; m];
    let mut history = record_lambda.then(|| Vec::with_capacity(config.steps));
    let mut counts = Vec::with_capacity(config.steps);
    let mut record = |lambda: &[f64], history: &mut Option<Vec<Vec<f64>>>| {
        counts.push(lambda.iter().filter(|&&x| x > 0.0).count());
        if let Some(h) = history.as_mut() {
            h.push(lambda.to_vec());
        }
    };

    let mut first = 0;
    if config.damping {
        let be = ThetaFactors::new(disc, 1.0, 0.5 * dt)?;
        for _ in 0..2 {
            theta_step_into(disc, &be, &u, &mut lambda, &mut u_next, &mut ws);
            std::mem::swap(&mut u, &mut u_next);
        }
        record(&lambda, &mut history);
        first = 1;
    }
    if first < config.steps {
        if config.scheme.is_adi() {
            let f = StageFactors::new(disc, config.theta, dt)?;
            for _ in first..config.steps {
                adi_step_into(disc, config.scheme, &f, &u, &mut lambda, &mut u_next, &mut ws);
                std::mem::swap(&mut u, &mut u_next);
                record(&lambda, &mut history);
            }
        } else {
            let f = ThetaFactors::new(disc, config.theta, dt)?;
            for _ in first..config.steps {
                theta_step_into(disc, &f, &u, &mut lambda, &mut u_next, &mut ws);
                std::mem::swap(&mut u, &mut u_next);
                record(&lambda, &mut history);
            }
        }
    }
    let final_residual = complementarity_residual(&u, &lambda, &disc.u0)?;
    let times = (1..=config.steps).map(|n| n as f64 * dt).collect();
    Ok(TimeSteppingResult {
        u_hat: u,
        lambda_hat: lambda,
        times,
        lambda_history: history,
        wall_time: start.elapsed(),
        diagnostics: StepDiagnostics { exercised_counts: counts, final_residual },
    })
}
