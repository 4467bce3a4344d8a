//! Post-processing: temporal error on the region of interest, convergence
//! orders, free boundaries, matrix structure checks and the BE-IT vs exact
//! LCP comparison.

use crate::discretization::Discretization;
use crate::error::{check_len, Error, Result};
use crate::lcp::{psor_solve, PsorOptions};
use crate::linalg::{dense_inverse, CsrMatrix};
use crate::mesh::SpatialGrid;
use crate::stepper::{theta_it_step, ThetaFactors};
use crate::lcp::ItState;

/// Open rectangle `(s_lo, s_hi) x (v_lo, v_hi)` on which errors are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionOfInterest {
    pub s_range: (f64, f64),
    pub v_range: (f64, f64),
}

impl RegionOfInterest {
    /// `(K/2, 3K/2) x (0, 1)`.
    pub fn standard(strike: f64) -> Self {
        RegionOfInterest { s_range: (0.5 * strike, 1.5 * strike), v_range: (0.0, 1.0) }
    }

    /// Standard region truncated at the cap `B`.
    pub fn capped(strike: f64, cap: f64) -> Self {
        let mut roi = Self::standard(strike);
        roi.s_range.0 = roi.s_range.0.max(cap);
        roi
    }

    pub fn contains(&self, s: f64, v: f64) -> bool {
        self.s_range.0 < s && s < self.s_range.1 && self.v_range.0 < v && v < self.v_range.1
    }

    /// Unknown indices of grid points strictly inside the region.
    pub fn indices(&self, grid: &SpatialGrid) -> Vec<usize> {
        (0..grid.unknown_count())
            .filter(|&l| {
                let (i, j) = grid.node(l);
                self.contains(grid.s()[i], grid.v()[j])
            })
            .collect()
    }
}

/// `max |U_ref − Û|` over grid points inside the region.
pub fn global_temporal_error(u_ref: &[f64], u_hat: &[f64], grid: &SpatialGrid, roi: &RegionOfInterest) -> Result<f64> {
    check_len(grid.unknown_count(), u_ref.len())?;
    check_len(grid.unknown_count(), u_hat.len())?;
    let idx = roi.indices(grid);
    if idx.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(idx.iter().map(|&l| (u_ref[l] - u_hat[l]).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// Slope between each consecutive pair of points.
    pub pair_slopes: Vec<f64>,
    /// Least-squares slope of `log e` against `log Δt` over all points.
    pub ls_slope: f64,
    /// Least-squares slope with the largest quarter of step sizes dropped.
    pub filtered_ls_slope: f64,
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Log-log slopes of `errors` against `dts`. Points are sorted by step size.
pub fn estimate_order(errors: &[f64], dts: &[f64]) -> Result<OrderEstimate> {
    check_len(errors.len(), dts.len())?;
    if errors.len() < 2 {
        return Err(Error::InvalidArgument("need at least two points to estimate an order".into()));
    }
    if errors.iter().chain(dts).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("errors and step sizes must be positive".into()));
    }
    let mut pts: Vec<(f64, f64)> = dts.iter().zip(errors).map(|(d, e)| (d.ln(), e.ln())).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pair_slopes = pts.windows(2).map(|w| (w[0].1 - w[1].1) / (w[0].0 - w[1].0)).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let drop = pts.len() / 4;
    let filtered = if pts.len() - drop >= 2 { ls_slope(&x[drop..], &y[drop..]) } else { ls_slope(&x, &y) };
    Ok(OrderEstimate { pair_slopes, ls_slope: ls_slope(&x, &y), filtered_ls_slope: filtered })
}

/// Exercise regions read off the multiplier history.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundary {
    pub times: Vec<f64>,
    /// `boundary[n][j]`: right end of the first run of nodes with `λ̂ > 0` on
    /// the `v_j` line at `times[n]`, `None` when that line has no exercised point.
    pub boundary: Vec<Vec<Option<f64>>>,
    /// `masks[n][l]`: whether unknown `l` is exercised at `times[n]`.
    pub masks: Vec<Vec<bool>>,
}

impl FreeBoundary {
    /// Boundary curve `(t, s)` on the `v`-line `j`.
    pub fn curve(&self, j: usize) -> Vec<(f64, Option<f64>)> {
        self.times.iter().zip(&self.boundary).map(|(&t, b)| (t, b[j])).collect()
    }
}

pub fn extract_free_boundary(lambda_history: &[Vec<f64>], times: &[f64], grid: &SpatialGrid) -> Result<FreeBoundary> {
    check_len(lambda_history.len(), times.len())?;
    let (m1, m2) = (grid.m1(), grid.m2());
    let mut boundary = Vec::with_capacity(times.len());
    let mut masks = Vec::with_capacity(times.len());
    for lam in lambda_history {
        check_len(grid.unknown_count(), lam.len())?;
        let mask: Vec<bool> = lam.iter().map(|&x| x > 0.0).collect();
        let per_line = (0..=m2)
            .map(|j| {
                // end of the first exercised run; isolated far-field hits are ignored
                let first = (1..=m1).find(|&i| mask[grid.index(i, j)])?;
                let last = (first..=m1).take_while(|&i| mask[grid.index(i, j)]).last()?;
                Some(grid.s()[last])
            })
            .collect();
        boundary.push(per_line);
        masks.push(mask);
    }
    Ok(FreeBoundary { times: times.to_vec(), boundary, masks })
}

/// Default `v`-levels for boundary plots.
pub const BOUNDARY_V_LEVELS: [f64; 5] = [0.0021, 0.0093, 0.0484, 0.0972, 0.2392];

/// Positive diagonal scaling defining `‖x‖_D = sqrt(xᵀ D x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledNorm {
    d: Vec<f64>,
}

impl ScaledNorm {
    pub fn new(d: Vec<f64>) -> Result<Self> {
        if d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("scaling entries must be positive".into()));
        }
        Ok(ScaledNorm { d })
    }

    pub fn identity(m: usize) -> Self {
        ScaledNorm { d: vec![1.0; m] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.d
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.d).map(|(a, d)| d * a * a).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixDiagnostics {
    /// `−A` has nonpositive off-diagonal entries.
    pub is_z_matrix: bool,
    /// `(−A)⁻¹ ≥ 0` entrywise; only checked for `M ≤ 200`.
    pub m_matrix_verified: Option<bool>,
    /// Largest eigenvalue of `D A + Aᵀ D`; `≤ 0` means negative semidefinite.
    pub d_negsemidef_residual: f64,
}

/// Largest eigenvalue of a symmetric matrix by shifted power iteration.
pub fn largest_symmetric_eigenvalue(s: &CsrMatrix) -> f64 {
    let m = s.nrows();
    if m == 0 {
        return 0.0;
    }
    // Gershgorin bound makes S + cI positive semidefinite
    let shift = (0..m).map(|r| s.row(r).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    if shift == 0.0 {
        return 0.0;
    }
    let mut x: Vec<f64> = (0..m).map(|k| 1.0 + 0.1 * ((k * 7919) % 13) as f64).collect();
    let nrm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    x.iter_mut().for_each(|a| *a /= nrm);
    let mut y = vec![0.0; m];
    let mut est = f64::NEG_INFINITY;
    for _ in 0..50_000 {
        s.matvec_into(&x, &mut y);
        for (yk, xk) in y.iter_mut().zip(&x) {
            *yk += shift * xk;
        }
        let rq: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        let nrm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return -shift;
        }
        for (xk, yk) in x.iter_mut().zip(&y) {
            *xk = yk / nrm;
        }
        if (rq - est).abs() <= 1e-13 * shift {
            est = rq;
            break;
        }
        est = rq;
    }
    est - shift
}

pub fn matrix_diagnostics(disc: &Discretization, scaling: Option<&ScaledNorm>) -> Result<MatrixDiagnostics> {
    let a = &disc.a;
    let m = a.nrows();
    let is_z_matrix = a.triplets().all(|(r, c, v)| r == c || v >= 0.0);
    let m_matrix_verified = if m <= 200 {
        let neg: Vec<Vec<f64>> = a.to_dense().into_iter().map(|row| row.into_iter().map(|x| -x).collect()).collect();
        Some(is_z_matrix && dense_inverse(&neg).map(|inv| inv.iter().flatten().all(|&x| x >= 0.0)).unwrap_or(false))
    } else {
        None
    };
    let identity = ScaledNorm::identity(m);
    let d = scaling.unwrap_or(&identity);
    check_len(m, d.weights().len())?;
    let da = CsrMatrix::from_triplets(m, m, a.triplets().map(|(r, c, v)| (r, c, d.weights()[r] * v)))?;
    let sym = da.linear_combination(1.0, &da.transpose(), 1.0)?;
    Ok(MatrixDiagnostics { is_z_matrix, m_matrix_verified, d_negsemidef_residual: largest_symmetric_eigenvalue(&sym) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingErrorRow {
    pub steps: usize,
    pub dt: f64,
    /// `max_n ‖U_n − Û_n‖_D`.
    pub max_error: f64,
    /// `‖λ_1‖_D + Σ ‖λ_n − λ_{n−1}‖_D` of the exact LCP sequence.
    pub nu: f64,
    pub max_psor_iterations: usize,
}

impl SplittingErrorRow {
    pub fn bound(&self) -> f64 {
        self.nu * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingErrorReport {
    pub rows: Vec<SplittingErrorRow>,
    /// `max_error(Δt/2) / max_error(Δt)` for consecutive rows.
    pub ratios: Vec<f64>,
    /// Largest eigenvalue of `D A + Aᵀ D`.
    pub negsemidef_residual: f64,
}

/// Compares BE-IT against the exact backward Euler LCP sequence (solved by
/// PSOR) for each step count in `step_counts`.
pub fn splitting_error_experiment(
    disc: &Discretization,
    maturity: f64,
    step_counts: &[usize],
    scaling: Option<&ScaledNorm>,
    psor: PsorOptions,
) -> Result<SplittingErrorReport> {
    let m = disc.size();
    let identity = ScaledNorm::identity(m);
    let d = scaling.unwrap_or(&identity);
    check_len(m, d.weights().len())?;
    let mut rows = Vec::with_capacity(step_counts.len());
    for &n_steps in step_counts {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("step count must be positive".into()));
        }
        let dt = maturity / n_steps as f64;
        let q = CsrMatrix::identity(m).linear_combination(1.0, &disc.a, -dt)?;
        let factors = ThetaFactors::new(disc, 1.0, dt)?;
        let mut exact = disc.u0.clone();
        let mut prev_lambda = vec![0.0; m];
        let mut it_state = ItState::initial(&disc.u0);
        let mut max_error: f64 = 0.0;
        let mut nu = 0.0;
        let mut max_iter = 0;
        for _ in 0..n_steps {
            let b: Vec<f64> = exact.iter().zip(&disc.g).map(|(u, g)| u + dt * g).collect();
            let sol = psor_solve(&q, &b, &disc.u0, Some(&exact), psor)?;
            max_iter = max_iter.max(sol.iterations);
            let lambda: Vec<f64> = sol.slack.iter().map(|x| x / dt).collect();
            let jump: Vec<f64> = lambda.iter().zip(&prev_lambda).map(|(a, b)| a - b).collect();
            nu += d.norm(&jump);
            prev_lambda = lambda;
            exact = sol.u;

            it_state = theta_it_step(&it_state, disc, &factors)?;
            let diff: Vec<f64> = exact.iter().zip(&it_state.u_hat).map(|(a, b)| a - b).collect();
            max_error = max_error.max(d.norm(&diff));
        }
        rows.push(SplittingErrorRow { steps: n_steps, dt, max_error, nu, max_psor_iterations: max_iter });
    }
    let ratios = rows.windows(2).map(|w| w[1].max_error / w[0].max_error).collect();
    let diag = matrix_diagnostics(disc, Some(d))?;
    Ok(SplittingErrorReport { rows, ratios, negsemidef_residual: diag.d_negsemidef_residual })
}
