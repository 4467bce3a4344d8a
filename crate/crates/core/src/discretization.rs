//! Finite-difference semidiscretization of the Heston operator
//!
//! ```text
//! A u = ½ s² v u_ss + ρσ s v u_sv + ½ σ² v u_vv + r s u_s + κ(η − v) u_v − r u
//! ```
//!
//! on a [`SpatialGrid`], split as `A = A0 + A1 + A2`: `A0` holds the mixed
//! derivative, `A1` every `s`-derivative and `A2` every `v`-derivative, each
//! of the latter two carrying `−r/2` on its diagonal.

use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrMatrix, LineBands};
use crate::mesh::SpatialGrid;

/// Heston model and contract parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HestonParams {
    pub kappa: f64,
    pub eta: f64,
    pub sigma: f64,
    pub rho: f64,
    pub r: f64,
    pub maturity: f64,
    pub strike: f64,
}

impl HestonParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa, self.eta, self.sigma, self.rho, self.r, self.maturity, self.strike];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        let positive = [
            ("kappa", self.kappa),
            ("eta", self.eta),
            ("sigma", self.sigma),
            ("maturity", self.maturity),
            ("strike", self.strike),
        ];
        for (name, x) in positive {
            if x <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {x}")));
            }
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::InvalidParams(format!("rho must lie in [-1, 1], got {}", self.rho)));
        }
        Ok(())
    }

    /// Same parameters with `ρ = 0`.
    pub fn uncorrelated(&self) -> Self {
        HestonParams { rho: 0.0, ..*self }
    }

    /// Feller condition `2κη > σ²`.
    pub fn satisfies_feller(&self) -> bool {
        2.0 * self.kappa * self.eta > self.sigma * self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdKind {
    Central1,
    Central2,
    Forward1,
    Backward1,
}

/// Three-point finite-difference weights on offsets `{-1, 0, +1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCoeffs {
    pub kind: FdKind,
    pub weights: [f64; 3],
}

/// Weights of the FD scheme `kind` for left width `delta_left = x_i − x_{i−1}`
/// and right width `delta_right = x_{i+1} − x_i`.
pub fn fd_coefficients(kind: FdKind, delta_left: f64, delta_right: f64) -> Result<FdCoeffs> {
    let need_left = matches!(kind, FdKind::Central1 | FdKind::Central2 | FdKind::Backward1);
    let need_right = matches!(kind, FdKind::Central1 | FdKind::Central2 | FdKind::Forward1);
    let bad = |w: f64| !(w.is_finite() && w > 0.0);
    if (need_left && bad(delta_left)) || (need_right && bad(delta_right)) {
        return Err(Error::InvalidArgument(format!(
            "{kind:?} stencil needs positive widths, got ({delta_left}, {delta_right})"
        )));
    }
    let (l, r) = (delta_left, delta_right);
    let weights = match kind {
        FdKind::Central1 => [-r / (l * (l + r)), (r - l) / (l * r), l / (r * (l + r))],
        FdKind::Central2 => [2.0 / (l * (l + r)), -2.0 / (l * r), 2.0 / (r * (l + r))],
        FdKind::Forward1 => [0.0, -1.0 / r, 1.0 / r],
        FdKind::Backward1 => [-1.0 / l, 1.0 / l, 0.0],
    };
    Ok(FdCoeffs { kind, weights })
}

/// Cell average of `max(K − s, 0)` over `[a, b]`.
fn put_cell_average(strike: f64, a: f64, b: f64) -> f64 {
    let h = b - a;
    if strike <= a {
        0.0
    } else if strike >= b {
        strike - 0.5 * (a + b)
    } else {
        (strike - a) * (strike - a) / (2.0 * h)
    }
}

/// Put payoff on the unknowns, with the value at the node nearest to the
/// strike replaced by its cell average. Ties go to the left node.
pub fn smooth_payoff(s: &[f64], v: &[f64], strike: f64) -> Result<Vec<f64>> {
    let m1 = s.len().checked_sub(1).filter(|&m| m >= 2).ok_or_else(|| {
        Error::InvalidMesh("need at least three s nodes to smooth the payoff".into())
    })?;
    if !(s[0] < strike && strike < s[m1]) {
        return Err(Error::InvalidArgument(format!(
            "strike {strike} outside mesh interior ({}, {})",
            s[0], s[m1]
        )));
    }
    let mut nearest = 1;
    for i in 1..m1 {
        if (s[i] - strike).abs() < (s[nearest] - strike).abs() {
            nearest = i;
        }
    }
    let line: Vec<f64> = (1..=m1)
        .map(|i| {
            if i == nearest {
                let a = 0.5 * (s[i - 1] + s[i]);
                let b = 0.5 * (s[i] + s[i + 1]);
                put_cell_average(strike, a, b)
            } else {
                (strike - s[i]).max(0.0)
            }
        })
        .collect();
    Ok(std::iter::repeat_n(line, v.len()).flatten().collect())
}

/// The semidiscrete problem `U' ≥ A U + g`, `U ≥ U0` with its operator split.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: SpatialGrid,
    /// Mixed-derivative part.
    pub a0: CsrMatrix,
    /// `s`-direction part, tridiagonal along each `v`-level.
    pub a1: LineBands,
    /// `v`-direction part, tridiagonal along each `s`-line.
    pub a2: LineBands,
    /// `A0 + A1 + A2`.
    pub a: CsrMatrix,
    pub g: Vec<f64>,
    pub u0: Vec<f64>,
    /// Dirichlet value carried by the `i = 0` column.
    pub left_value: f64,
}

impl Discretization {
    /// Assembles from arbitrary parts; `a1` and `a2` must use the grid's
    /// line layouts.
    pub fn from_parts(
        grid: SpatialGrid,
        a0: CsrMatrix,
        a1: LineBands,
        a2: LineBands,
        g: Vec<f64>,
        u0: Vec<f64>,
        left_value: f64,
    ) -> Result<Self> {
        let m = grid.unknown_count();
        let (m1, m2) = (grid.m1(), grid.m2());
        check_len(m, a0.nrows())?;
        check_len(m, a0.ncols())?;
        check_len(m, g.len())?;
        check_len(m, u0.len())?;
        let s_layout = (m2 + 1, m1, m1, 1);
        let v_layout = (m1, m2 + 1, 1, m1);
        if (a1.lines, a1.len, a1.line_stride, a1.elem_stride) != s_layout {
            return Err(Error::InvalidArgument("A1 does not follow the s-line layout".into()));
        }
        if (a2.lines, a2.len, a2.line_stride, a2.elem_stride) != v_layout {
            return Err(Error::InvalidArgument("A2 does not follow the v-line layout".into()));
        }
        let a = a0
            .linear_combination(1.0, &a1.to_csr(), 1.0)?
            .linear_combination(1.0, &a2.to_csr(), 1.0)?;
        Ok(Discretization { grid, a0, a1, a2, a, g, u0, left_value })
    }

    pub fn size(&self) -> usize {
        self.g.len()
    }

    /// `A x` into `y`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.a.matvec_into(x, y);
    }
}

/// Assembles the split operator, boundary vector and smoothed payoff.
///
/// `left_value` is the Dirichlet value at `s = s_0`: `K` for a vanilla put
/// and `K − B` for a put capped at `B`.
pub fn assemble(params: &HestonParams, grid: &SpatialGrid, left_value: f64) -> Result<Discretization> {
    params.validate()?;
    if !left_value.is_finite() {
        return Err(Error::InvalidArgument("non-finite Dirichlet value".into()));
    }
    let (m1, m2) = (grid.m1(), grid.m2());
    if m1 < 2 {
        return Err(Error::InvalidMesh("m1 must be at least 2".into()));
    }
    let s = grid.s();
    let v = grid.v();
    let ds = grid.ds();
    let dv = grid.dv();
    if !(s[0] < params.strike && params.strike < s[m1]) {
        return Err(Error::InvalidArgument(format!(
            "strike {} not inside the s-mesh ({}, {})",
            params.strike, s[0], s[m1]
        )));
    }
    let m = grid.unknown_count();
    let half_r = 0.5 * params.r;
    let mut g = vec![0.0; m];

    // s-direction
    let mut a1 = LineBands::zeros(m2 + 1, m1, m1, 1);
    for j in 0..=m2 {
        for i in 1..=m1 {
            let p = grid.index(i, j);
            let mut w = [0.0; 3];
            let diffusion = 0.5 * s[i] * s[i] * v[j];
            if i < m1 {
                let c2 = fd_coefficients(FdKind::Central2, ds[i - 1], ds[i])?.weights;
                let f1 = fd_coefficients(FdKind::Forward1, ds[i - 1], ds[i])?.weights;
                for k in 0..3 {
                    w[k] = diffusion * c2[k] + params.r * s[i] * f1[k];
                }
            } else {
                // Neumann: zero slope, virtual node mirrors the last width and
                // carries the boundary value.
                let c2 = fd_coefficients(FdKind::Central2, ds[i - 1], ds[i - 1])?.weights;
                w[0] = diffusion * c2[0];
                w[1] = diffusion * (c2[1] + c2[2]);
            }
            w[1] -= half_r;
            if i == 1 {
                g[p] += w[0] * left_value;
            } else {
                a1.sub[p] = w[0];
            }
            a1.diag[p] = w[1];
            a1.sup[p] = w[2];
        }
    }

    // v-direction
    let mut a2 = LineBands::zeros(m1, m2 + 1, 1, m1);
    for i in 1..=m1 {
        for j in 0..=m2 {
            let p = grid.index(i, j);
            let drift = params.kappa * (params.eta - v[j]);
            let mut w = [0.0; 3];
            if j == 0 {
                let f1 = fd_coefficients(FdKind::Forward1, 0.0, dv[0])?.weights;
                for k in 0..3 {
                    w[k] = drift * f1[k];
                }
            } else if j < m2 {
                let diffusion = 0.5 * params.sigma * params.sigma * v[j];
                let c2 = fd_coefficients(FdKind::Central2, dv[j - 1], dv[j])?.weights;
                let conv = if v[j] <= params.eta {
                    fd_coefficients(FdKind::Forward1, dv[j - 1], dv[j])?.weights
                } else {
                    fd_coefficients(FdKind::Backward1, dv[j - 1], dv[j])?.weights
                };
                for k in 0..3 {
                    w[k] = diffusion * c2[k] + drift * conv[k];
                }
            } else {
                let diffusion = 0.5 * params.sigma * params.sigma * v[j];
                let c2 = fd_coefficients(FdKind::Central2, dv[j - 1], dv[j - 1])?.weights;
                w[0] = diffusion * c2[0];
                w[1] = diffusion * (c2[1] + c2[2]);
            }
            w[1] -= half_r;
            a2.sub[p] = w[0];
            a2.diag[p] = w[1];
            a2.sup[p] = w[2];
        }
    }

    // mixed derivative: vanishes on v = 0, v = V_max and s = S_max
    let mut trips = Vec::new();
    if params.rho != 0.0 {
        for j in 1..m2 {
            let bv = fd_coefficients(FdKind::Central1, dv[j - 1], dv[j])?.weights;
            for i in 1..m1 {
                let bs = fd_coefficients(FdKind::Central1, ds[i - 1], ds[i])?.weights;
                let coef = params.rho * params.sigma * s[i] * v[j];
                let p = grid.index(i, j);
                for (a, ws) in bs.iter().enumerate() {
                    for (b, wv) in bv.iter().enumerate() {
                        let w = coef * ws * wv;
                        let (ii, jj) = (i + a - 1, j + b - 1);
                        if ii == 0 {
                            g[p] += w * left_value;
                        } else {
                            trips.push((p, grid.index(ii, jj), w));
                        }
                    }
                }
            }
        }
    }
    let a0 = CsrMatrix::from_triplets(m, m, trips)?;
    let u0 = smooth_payoff(s, v, params.strike)?;
    Discretization::from_parts(grid.clone(), a0, a1, a2, g, u0, left_value)
}
