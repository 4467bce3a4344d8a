//! Nonuniform spatial meshes in the asset (`s`) and variance (`v`) directions.
//!
//! The `s`-mesh is uniform on `[s_left, s_right]` and stretched by `sinh`
//! maps outside it, so most points sit around the strike. The `v`-mesh is a
//! single `sinh` stretch that clusters points near the degenerate boundary
//! `v = 0`.

use crate::error::{Error, Result};

/// Rate used in the default `s_left = max(1/2, exp(-rate * T)) * K` recipe.
///
/// This is a fixed mesh constant and not the model's interest rate.
pub const DEFAULT_MESH_RATE: f64 = 0.25;

/// Parameters of the piecewise sinh/linear/sinh asset mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMeshSpec {
    pub m1: usize,
    pub strike: f64,
    pub s_max: f64,
    pub d1: f64,
    pub s_left: f64,
    pub s_right: f64,
    /// Lower end of the mesh: 0 for a vanilla put, the cap `B` for a capped put.
    pub floor: f64,
}

impl SMeshSpec {
    /// Default mesh for a vanilla put: `d1 = K/20`, `S_max = 14K`, `S_right = K`.
    pub fn vanilla(m1: usize, strike: f64, maturity: f64) -> Self {
        Self::vanilla_with_rate(m1, strike, maturity, DEFAULT_MESH_RATE)
    }

    pub fn vanilla_with_rate(m1: usize, strike: f64, maturity: f64, mesh_rate: f64) -> Self {
        SMeshSpec {
            m1,
            strike,
            s_max: 14.0 * strike,
            d1: strike / 20.0,
            s_left: f64::max(0.5, (-mesh_rate * maturity).exp()) * strike,
            s_right: strike,
            floor: 0.0,
        }
    }

    /// Default mesh for a capped put with cap `B < K`; the mesh starts at `B`.
    pub fn capped(m1: usize, strike: f64, maturity: f64, cap: f64) -> Self {
        let mut spec = Self::vanilla(m1, strike, maturity);
        spec.floor = cap;
        spec.s_left = spec.s_left.max(cap);
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [self.strike, self.s_max, self.d1, self.s_left, self.s_right, self.floor];
        if fields.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite s-mesh parameter".into()));
        }
        if self.m1 < 1 {
            return Err(Error::InvalidMesh("m1 must be at least 1".into()));
        }
        if self.d1 <= 0.0 {
            return Err(Error::InvalidMesh(format!("d1 must be positive, got {}", self.d1)));
        }
        if !(self.floor <= self.s_left && self.s_left < self.s_right && self.s_right <= self.s_max) {
            return Err(Error::InvalidMesh(format!(
                "require floor <= s_left < s_right <= s_max, got {} / {} / {} / {}",
                self.floor, self.s_left, self.s_right, self.s_max
            )));
        }
        if !(self.s_left <= self.strike && self.strike <= self.s_right) {
            return Err(Error::InvalidMesh(format!(
                "strike {} outside [s_left, s_right] = [{}, {}]",
                self.strike, self.s_left, self.s_right
            )));
        }
        Ok(())
    }

    fn xi_bounds(&self) -> (f64, f64, f64) {
        let xi_min = ((self.floor - self.s_left) / self.d1).asinh();
        let xi_int = (self.s_right - self.s_left) / self.d1;
        let xi_max = xi_int + ((self.s_max - self.s_right) / self.d1).asinh();
        (xi_min, xi_int, xi_max)
    }

    fn phi(&self, xi: f64, xi_int: f64) -> f64 {
        if xi < 0.0 {
            self.s_left + self.d1 * xi.sinh()
        } else if xi <= xi_int {
            self.s_left + self.d1 * xi
        } else {
            self.s_right + self.d1 * (xi - xi_int).sinh()
        }
    }
}

/// Parameters of the variance mesh `v_j = d2 * sinh(j * dpsi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMeshSpec {
    pub m2: usize,
    pub v_max: f64,
    pub d2: f64,
}

impl VMeshSpec {
    /// Default mesh: `V_max = 5`, `d2 = V_max / 500`.
    pub fn standard(m2: usize) -> Self {
        VMeshSpec { m2, v_max: 5.0, d2: 5.0 / 500.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m2 < 1 {
            return Err(Error::InvalidMesh("m2 must be at least 1".into()));
        }
        if !(self.d2.is_finite() && self.d2 > 0.0) {
            return Err(Error::InvalidMesh(format!("d2 must be positive, got {}", self.d2)));
        }
        if !(self.v_max.is_finite() && self.v_max > 0.0) {
            return Err(Error::InvalidMesh(format!("v_max must be positive, got {}", self.v_max)));
        }
        Ok(())
    }

    fn dpsi(&self) -> f64 {
        (self.v_max / self.d2).asinh() / self.m2 as f64
    }
}

/// Builds the `m1 + 1` asset nodes. Endpoints are exactly `floor` and `s_max`.
pub fn build_s_mesh(spec: &SMeshSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let (xi_min, xi_int, xi_max) = spec.xi_bounds();
    let dxi = (xi_max - xi_min) / spec.m1 as f64;
    let mut s: Vec<f64> = (0..=spec.m1)
        .map(|i| spec.phi(xi_min + i as f64 * dxi, xi_int))
        .collect();
    s[0] = spec.floor;
    s[spec.m1] = spec.s_max;
    Ok(s)
}

/// Builds the `m2 + 1` variance nodes. Endpoints are exactly `0` and `v_max`.
pub fn build_v_mesh(spec: &VMeshSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let dpsi = spec.dpsi();
    let mut v: Vec<f64> = (0..=spec.m2)
        .map(|j| spec.d2 * (j as f64 * dpsi).sinh())
        .collect();
    v[0] = 0.0;
    v[spec.m2] = spec.v_max;
    Ok(v)
}

/// Cartesian grid over `[s_0, S_max] x [0, V_max]` together with its widths.
///
/// Unknowns live on `i = 1..=m1`, `j = 0..=m2`; the `i = 0` column carries a
/// Dirichlet value. They are ordered s-major within v-levels:
/// `l = (i - 1) + j * m1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    s: Vec<f64>,
    v: Vec<f64>,
    ds: Vec<f64>,
    dv: Vec<f64>,
    s_step: f64,
    v_step: f64,
}

impl SpatialGrid {
    /// Builds the grid from the two mesh specs.
    pub fn new(s_spec: &SMeshSpec, v_spec: &VMeshSpec) -> Result<Self> {
        let s = build_s_mesh(s_spec)?;
        let v = build_v_mesh(v_spec)?;
        let (xi_min, _, xi_max) = s_spec.xi_bounds();
        let s_step = (xi_max - xi_min) / s_spec.m1 as f64;
        Self::with_steps(s, v, s_step, v_spec.dpsi())
    }

    /// Builds a grid from explicit node vectors. The reference steps used by
    /// the smoothness report are the mean widths.
    pub fn from_nodes(s: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if s.len() < 2 || v.len() < 2 {
            return Err(Error::InvalidMesh("need at least two nodes per direction".into()));
        }
        let s_step = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
        let v_step = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
        Self::with_steps(s, v, s_step, v_step)
    }

    fn with_steps(s: Vec<f64>, v: Vec<f64>, s_step: f64, v_step: f64) -> Result<Self> {
        let widths = |x: &[f64]| -> Vec<f64> { x.windows(2).map(|w| w[1] - w[0]).collect() };
        let ds = widths(&s);
        let dv = widths(&v);
        if s.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node".into()));
        }
        if ds.iter().chain(dv.iter()).any(|&w| w <= 0.0) {
            return Err(Error::InvalidMesh("nodes must be strictly increasing".into()));
        }
        if v[0] != 0.0 {
            return Err(Error::InvalidMesh("variance mesh must start at 0".into()));
        }
        Ok(SpatialGrid { s, v, ds, dv, s_step, v_step })
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `ds[k] = s[k+1] - s[k]`, so the width written `Δs_i` is `ds[i - 1]`.
    pub fn ds(&self) -> &[f64] {
        &self.ds
    }

    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    pub fn m1(&self) -> usize {
        self.s.len() - 1
    }

    pub fn m2(&self) -> usize {
        self.v.len() - 1
    }

    pub fn s_step(&self) -> f64 {
        self.s_step
    }

    pub fn v_step(&self) -> f64 {
        self.v_step
    }

    /// Number of unknowns `M = m1 * (m2 + 1)`.
    pub fn unknown_count(&self) -> usize {
        self.m1() * (self.m2() + 1)
    }

    /// Linear index of grid point `(i, j)`, `1 <= i <= m1`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= 1 && i <= self.m1() && j <= self.m2());
        (i - 1) + j * self.m1()
    }

    /// Inverse of [`SpatialGrid::index`].
    #[inline]
    pub fn node(&self, l: usize) -> (usize, usize) {
        let m1 = self.m1();
        (l % m1 + 1, l / m1)
    }

    /// Index of the `v` node nearest to `target`.
    pub fn nearest_v_index(&self, target: f64) -> usize {
        nearest_index(&self.v, target)
    }
}

pub(crate) fn nearest_index(x: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (k, &xk) in x.iter().enumerate() {
        if (xk - target).abs() < (x[best] - target).abs() {
            best = k;
        }
    }
    best
}

/// Smoothness constants of a single mesh direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSmoothness {
    /// `min Δ_k / step`.
    pub c0: f64,
    /// `max Δ_k / step`.
    pub c1: f64,
    /// `max |Δ_{k+1} - Δ_k| / step²`.
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessReport {
    pub s: DirectionSmoothness,
    pub v: DirectionSmoothness,
}

fn direction_smoothness(widths: &[f64], step: f64) -> DirectionSmoothness {
    let c0 = widths.iter().copied().fold(f64::INFINITY, f64::min) / step;
    let c1 = widths.iter().copied().fold(0.0, f64::max) / step;
    let c2 = widths
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        / (step * step);
    DirectionSmoothness { c0, c1, c2 }
}

pub fn mesh_smoothness_report(grid: &SpatialGrid) -> SmoothnessReport {
    SmoothnessReport {
        s: direction_smoothness(grid.ds(), grid.s_step()),
        v: direction_smoothness(grid.dv(), grid.v_step()),
    }
}
