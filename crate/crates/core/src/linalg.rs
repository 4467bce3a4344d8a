//! Sparse storage, tridiagonal (Thomas) factorizations and a banded LU.
//!
//! Everything an implicit stage needs is linear in the number of unknowns;
//! the banded LU is only used by the unsplit θ-method.

use crate::error::{check_len, Error, Result};

/// Relative pivot threshold used by every factorization in this module.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|k| (k, k, 1.0))).expect("indices in range")
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    /// Explicit zeros are kept so the sparsity pattern stays stable.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside {nrows}x{ncols} matrix"
                )));
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(CsrMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut trips = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            check_len(ncols, row.len())?;
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    trips.push((i, j, x));
                }
            }
        }
        Self::from_triplets(nrows, ncols, trips)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over the stored `(col, value)` pairs of one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).filter(|&(cc, _)| cc == c).map(|(_, v)| v).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = A x` into a caller-provided buffer.
    #[inline]
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols, x.len())?;
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `alpha * A + beta * B`.
    pub fn linear_combination(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix> {
        check_len(self.nrows, other.nrows)?;
        check_len(self.ncols, other.ncols)?;
        let trips = self
            .triplets()
            .map(|(r, c, v)| (r, c, alpha * v))
            .chain(other.triplets().map(|(r, c, v)| (r, c, beta * v)));
        CsrMatrix::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v)))
            .expect("transpose keeps indices in range")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] += v;
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Largest distance `|r - c|` of any nonzero entry below / above the diagonal.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for (r, c, v) in self.triplets() {
            if v == 0.0 {
                continue;
            }
            if c < r {
                lower = lower.max(r - c);
            } else {
                upper = upper.max(c - r);
            }
        }
        (lower, upper)
    }
}

/// Sparse matrix-vector product with dimension checking.
pub fn sparse_matvec(a: &CsrMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.matvec(x)
}

/// LU factors of a tridiagonal matrix, computed once and reused.
///
/// `lower[k]` is the elimination multiplier for row `k` (unused at `k = 0`),
/// `diag[k]` the `k`-th pivot and `upper[k]` the untouched superdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagFactor {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

/// Factors the tridiagonal matrix with the given bands, all of length `n`.
/// `sub[0]` and `sup[n - 1]` are ignored.
pub fn tridiag_factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<TridiagFactor> {
    let n = diag.len();
    check_len(n, sub.len())?;
    check_len(n, sup.len())?;
    let mut lower = vec![0.0; n];
    let mut piv = vec![0.0; n];
    let mut upper = sup.to_vec();
    if n > 0 {
        upper[n - 1] = 0.0;
    }
    for k in 0..n {
        let sub_k = if k > 0 { sub[k] } else { 0.0 };
        let scale = sub_k.abs().max(diag[k].abs()).max(upper[k].abs());
        let mut p = diag[k];
        if k > 0 {
            lower[k] = sub_k / piv[k - 1];
            p -= lower[k] * upper[k - 1];
        }
        if !p.is_finite() || p.abs() <= PIVOT_TOLERANCE * scale || scale == 0.0 {
            return Err(Error::Singular { row: k, pivot: p });
        }
        piv[k] = p;
    }
    Ok(TridiagFactor { lower, diag: piv, upper })
}

impl TridiagFactor {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Solves in place; `x` holds the right-hand side on entry.
    #[inline]
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.diag.len();
        debug_assert_eq!(x.len(), n);
        for k in 1..n {
            x[k] -= self.lower[k] * x[k - 1];
        }
        if n == 0 {
            return;
        }
        x[n - 1] /= self.diag[n - 1];
        for k in (0..n - 1).rev() {
            x[k] = (x[k] - self.upper[k] * x[k + 1]) / self.diag[k];
        }
    }

    /// Strided variant: operates on `x[offset + k * stride]`, `k = 0..n`.
    #[inline]
    fn solve_strided(&self, x: &mut [f64], offset: usize, stride: usize) {
        let n = self.diag.len();
        if n == 0 {
            return;
        }
        let at = |k: usize| offset + k * stride;
        for k in 1..n {
            x[at(k)] -= self.lower[k] * x[at(k - 1)];
        }
        x[at(n - 1)] /= self.diag[n - 1];
        for k in (0..n - 1).rev() {
            x[at(k)] = (x[at(k)] - self.upper[k] * x[at(k + 1)]) / self.diag[k];
        }
    }
}

pub fn tridiag_solve(factor: &TridiagFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    check_len(factor.len(), rhs.len())?;
    let mut x = rhs.to_vec();
    factor.solve_in_place(&mut x);
    Ok(x)
}

/// Tridiagonal coupling along grid lines of a flattened 2-D array.
///
/// Line `q` holds entries `q * line_stride + k * elem_stride` for
/// `k = 0..len`. The band arrays are indexed by flat position; `sub` couples
/// an entry to its predecessor on the line and `sup` to its successor.
#[derive(Debug, Clone, PartialEq)]
pub struct LineBands {
    pub lines: usize,
    pub len: usize,
    pub line_stride: usize,
    pub elem_stride: usize,
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl LineBands {
    pub fn zeros(lines: usize, len: usize, line_stride: usize, elem_stride: usize) -> Self {
        let n = lines * len;
        LineBands { lines, len, line_stride, elem_stride, sub: vec![0.0; n], diag: vec![0.0; n], sup: vec![0.0; n] }
    }

    pub fn size(&self) -> usize {
        self.lines * self.len
    }

    #[inline]
    fn at(&self, line: usize, k: usize) -> usize {
        line * self.line_stride + k * self.elem_stride
    }

    /// `y = B x` into a caller-provided buffer.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for q in 0..self.lines {
            for k in 0..self.len {
                let p = self.at(q, k);
                let mut acc = self.diag[p] * x[p];
                if k > 0 {
                    acc += self.sub[p] * x[self.at(q, k - 1)];
                }
                if k + 1 < self.len {
                    acc += self.sup[p] * x[self.at(q, k + 1)];
                }
                y[p] = acc;
            }
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut trips = Vec::with_capacity(3 * self.size());
        for q in 0..self.lines {
            for k in 0..self.len {
                let p = self.at(q, k);
                trips.push((p, p, self.diag[p]));
                if k > 0 {
                    trips.push((p, self.at(q, k - 1), self.sub[p]));
                }
                if k + 1 < self.len {
                    trips.push((p, self.at(q, k + 1), self.sup[p]));
                }
            }
        }
        CsrMatrix::from_triplets(self.size(), self.size(), trips).expect("line indices in range")
    }

    /// Factors `I - scale * B` line by line.
    pub fn factor_shifted(&self, scale: f64) -> Result<LineFactors> {
        let mut factors = Vec::with_capacity(self.lines);
        let mut sub = vec![0.0; self.len];
        let mut diag = vec![0.0; self.len];
        let mut sup = vec![0.0; self.len];
        for q in 0..self.lines {
            for k in 0..self.len {
                let p = self.at(q, k);
                sub[k] = -scale * self.sub[p];
                diag[k] = 1.0 - scale * self.diag[p];
                sup[k] = -scale * self.sup[p];
            }
            factors.push(tridiag_factor(&sub, &diag, &sup).map_err(|e| match e {
                Error::Singular { row, pivot } => Error::Singular { row: self.at(q, row), pivot },
                other => other,
            })?);
        }
        Ok(LineFactors { factors, line_stride: self.line_stride, elem_stride: self.elem_stride })
    }
}

/// One tridiagonal factor per grid line; a solve costs O(M).
#[derive(Debug, Clone)]
pub struct LineFactors {
    factors: Vec<TridiagFactor>,
    line_stride: usize,
    elem_stride: usize,
}

impl LineFactors {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        for (q, f) in self.factors.iter().enumerate() {
            f.solve_strided(x, q * self.line_stride, self.elem_stride);
        }
    }
}

/// LU factorization of a banded matrix without pivoting.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major band storage: entry `(r, c)` at `r * width + (c + kl - r)`.
    band: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        check_len(a.nrows(), a.ncols())?;
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let width = kl + ku + 1;
        let mut band = vec![0.0; n * width];
        let mut scale = vec![0.0f64; n];
        for (r, c, v) in a.triplets() {
            if v != 0.0 {
                band[r * width + (c + kl - r)] += v;
                scale[r] = scale[r].max(v.abs());
            }
        }
        let idx = |r: usize, c: usize| r * width + (c + kl - r);
        for k in 0..n {
            let p = band[idx(k, k)];
            if !p.is_finite() || p.abs() <= PIVOT_TOLERANCE * scale[k] || scale[k] == 0.0 {
                return Err(Error::Singular { row: k, pivot: p });
            }
            let row_end = (k + kl).min(n - 1);
            let col_end = (k + ku).min(n - 1);
            for r in k + 1..=row_end {
                let m = band[idx(r, k)] / p;
                if m == 0.0 {
                    continue;
                }
                band[idx(r, k)] = m;
                for c in k + 1..=col_end {
                    band[idx(r, c)] -= m * band[idx(k, c)];
                }
            }
        }
        Ok(BandedLu { n, kl, ku, band })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let width = kl + ku + 1;
        for r in 0..n {
            let start = r.saturating_sub(kl);
            let row = &self.band[r * width..(r + 1) * width];
            let mut acc = x[r];
            for c in start..r {
                acc -= row[c + kl - r] * x[c];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let end = (r + ku).min(n - 1);
            let row = &self.band[r * width..(r + 1) * width];
            let mut acc = x[r];
            for c in r + 1..=end {
                acc -= row[c + kl - r] * x[c];
            }
            x[r] = acc / row[kl];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, rhs.len())?;
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Dense solve with partial pivoting, for small diagnostic systems.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    check_len(n, b.len())?;
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    for k in 0..n {
        check_len(n, m[k].len())?;
        let piv = (k..n)
            .max_by(|&p, &q| m[p][k].abs().total_cmp(&m[q][k].abs()))
            .expect("non-empty range");
        if m[piv][k].abs() <= PIVOT_TOLERANCE * scale {
            return Err(Error::Singular { row: k, pivot: m[piv][k] });
        }
        m.swap(k, piv);
        x.swap(k, piv);
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            for c in k..n {
                m[r][c] -= f * m[k][c];
            }
            x[r] -= f * x[k];
        }
    }
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (x[r] - s) / m[r][r];
    }
    Ok(x)
}

/// Dense inverse, column by column.
pub fn dense_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        let col = dense_solve(a, &e)?;
        for r in 0..n {
            inv[r][k] = col[r];
        }
    }
    Ok(inv)
}
