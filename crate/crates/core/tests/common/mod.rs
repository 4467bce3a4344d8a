//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for k in 0..n {
        let p = (k..n).max_by(|&x, &y| m[x][k].abs().total_cmp(&m[y][k].abs()))?;
        if m[p][k].abs() < 1e-300 {
            return None;
        }
        m.swap(k, p);
        for r in k + 1..n {
            let f = m[r][k] / m[k][k];
            for c in k..=n {
                m[r][c] -= f * m[k][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Some(x)
}

/// Solves the LCP `Qu ≥ b, u ≥ u0, (u − u0)ᵀ(Qu − b) = 0` by trying every
/// active set. Returns the first feasible candidate.
pub fn enumerate_lcp(q: &[Vec<f64>], b: &[f64], u0: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    for mask in 0u32..(1 << m) {
        let active: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
        let free: Vec<usize> = (0..m).filter(|&k| !active[k]).collect();
        let mut u = u0.to_vec();
        if !free.is_empty() {
            let sub: Vec<Vec<f64>> = free.iter().map(|&r| free.iter().map(|&c| q[r][c]).collect()).collect();
            let rhs: Vec<f64> = free
                .iter()
                .map(|&r| b[r] - (0..m).filter(|&c| active[c]).map(|c| q[r][c] * u0[c]).sum::<f64>())
                .collect();
            let x = match gauss_solve(&sub, &rhs) {
                Some(x) => x,
                None => continue,
            };
            for (k, &r) in free.iter().enumerate() {
                u[r] = x[k];
            }
        }
        let qu: Vec<f64> = (0..m).map(|r| (0..m).map(|c| q[r][c] * u[c]).sum()).collect();
        let scale = 1.0 + b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let feasible = (0..m).all(|k| u[k] >= u0[k] - 1e-12 * scale && qu[k] - b[k] >= -1e-12 * scale);
        if feasible {
            return Some(u);
        }
    }
    None
}

/// Random symmetric positive definite matrix `B Bᵀ + shift I`.
pub fn random_spd<R: Rng>(rng: &mut R, m: usize, shift: f64) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..m).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    (0..m)
        .map(|r| {
            (0..m)
                .map(|c| (0..m).map(|k| b[r][k] * b[c][k]).sum::<f64>() + if r == c { shift } else { 0.0 })
                .collect()
        })
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

/// Matrix exponential by scaling and squaring with a Taylor polynomial.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let a: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut result: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = result.clone();
    for k in 1..=20 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        for (rr, tr) in result.iter_mut().zip(&term) {
            for (x, t) in rr.iter_mut().zip(tr) {
                *x += t;
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}
