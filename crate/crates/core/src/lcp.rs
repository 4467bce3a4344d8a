//! Linear complementarity pieces: the explicit Ikonen–Toivanen update, a
//! projected SOR solver for the exact LCP, and complementarity diagnostics.

use crate::error::{check_len, Error, Result};
use crate::linalg::CsrMatrix;

/// Value vector and multiplier after an IT update.
#[derive(Debug, Clone, PartialEq)]
pub struct ItState {
    pub u_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
}

impl ItState {
    /// Initial state `Û_0 = U0`, `λ̂_0 = 0`.
    pub fn initial(u0: &[f64]) -> Self {
        ItState { u_hat: u0.to_vec(), lambda_hat: vec![0.0; u0.len()] }
    }
}

/// Componentwise `Û = max(Ū − Δt λ̄, U0)`, `λ̂ = max(0, λ̄ + (U0 − Ū)/Δt)`.
pub fn it_update(u_bar: &[f64], lambda_bar: &[f64], u0: &[f64], dt: f64) -> Result<ItState> {
    check_len(u_bar.len(), lambda_bar.len())?;
    check_len(u_bar.len(), u0.len())?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let mut state = ItState { u_hat: vec![0.0; u_bar.len()], lambda_hat: lambda_bar.to_vec() };
    it_update_into(u_bar, u0, dt, &mut state.u_hat, &mut state.lambda_hat);
    Ok(state)
}

/// In-place form: `lambda` holds `λ̄` on entry and `λ̂` on exit.
#[inline]
pub(crate) fn it_update_into(u_bar: &[f64], u0: &[f64], dt: f64, u_hat: &mut [f64], lambda: &mut [f64]) {
    for l in 0..u_bar.len() {
        let lb = lambda[l];
        u_hat[l] = f64::max(u_bar[l] - dt * lb, u0[l]);
        lambda[l] = f64::max(0.0, lb + (u0[l] - u_bar[l]) / dt);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorOptions {
    pub omega: f64,
    /// Stopping tolerance on the update size, relative to `max(‖b‖∞, 1)`.
    pub tol: f64,
    /// `None` means `max(20 * M, 10_000)`.
    pub max_iter: Option<usize>,
}

impl Default for PsorOptions {
    fn default() -> Self {
        PsorOptions { omega: 1.5, tol: 1e-10, max_iter: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsorSolution {
    pub u: Vec<f64>,
    /// `Q U − b`; the caller scales it into a multiplier.
    pub slack: Vec<f64>,
    pub iterations: usize,
}

/// Solves `Q U ≥ b`, `U ≥ U0`, `(U − U0)ᵀ(Q U − b) = 0` by projected SOR,
/// starting from `max(start, U0)` (or `U0` when no start is given).
pub fn psor_solve(
    q: &CsrMatrix,
    b: &[f64],
    u0: &[f64],
    start: Option<&[f64]>,
    opts: PsorOptions,
) -> Result<PsorSolution> {
    let m = q.nrows();
    check_len(m, q.ncols())?;
    check_len(m, b.len())?;
    check_len(m, u0.len())?;
    if !(opts.omega > 0.0 && opts.omega < 2.0) {
        return Err(Error::InvalidArgument(format!("omega must lie in (0, 2), got {}", opts.omega)));
    }
    let diag: Vec<f64> = (0..m).map(|r| q.get(r, r)).collect();
    if let Some(r) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!("PSOR needs a positive diagonal (row {r})")));
    }
    let mut u: Vec<f64> = match start {
        Some(x) => {
            check_len(m, x.len())?;
            x.iter().zip(u0).map(|(a, b)| a.max(*b)).collect()
        }
        None => u0.to_vec(),
    };
    let scale = b.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let max_iter = opts.max_iter.unwrap_or((20 * m).max(10_000));
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        change = 0.0;
        for r in 0..m {
            let qu: f64 = q.row(r).map(|(c, v)| v * u[c]).sum();
            let next = f64::max(u0[r], u[r] + opts.omega * (b[r] - qu) / diag[r]);
            change = change.max((next - u[r]).abs());
            u[r] = next;
        }
        if change <= opts.tol * scale {
            let qu = q.matvec(&u)?;
            let slack = qu.iter().zip(b).map(|(a, b)| a - b).collect();
            return Ok(PsorSolution { u, slack, iterations: it });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: change })
}

/// Violation measures of `λ ≥ 0`, `U ≥ U0`, `(U − U0) λ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementarityResidual {
    /// `min λ` (negative means violated).
    pub min_lambda: f64,
    /// `min (U − U0)` (negative means violated).
    pub min_gap: f64,
    /// `max |(U − U0) λ|`.
    pub max_abs_product: f64,
}

impl ComplementarityResidual {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_lambda >= -tol && self.min_gap >= -tol && self.max_abs_product <= tol
    }
}

pub fn complementarity_residual(u: &[f64], lambda: &[f64], u0: &[f64]) -> Result<ComplementarityResidual> {
    check_len(u.len(), lambda.len())?;
    check_len(u.len(), u0.len())?;
    let mut res = ComplementarityResidual {
        min_lambda: f64::INFINITY,
        min_gap: f64::INFINITY,
        max_abs_product: 0.0,
    };
    for l in 0..u.len() {
        let gap = u[l] - u0[l];
        res.min_lambda = res.min_lambda.min(lambda[l]);
        res.min_gap = res.min_gap.min(gap);
        res.max_abs_product = res.max_abs_product.max((gap * lambda[l]).abs());
    }
    Ok(res)
}
