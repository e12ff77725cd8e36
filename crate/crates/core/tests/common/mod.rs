//! Independent reference implementations used as test oracles.
#![allow(dead_code, clippy::needless_range_loop)]

use bsl_core::{BlockedDictionary, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-major `rows x cols` matrix with entries uniform in [-1, 1].
pub fn random_rows(rows: usize, cols: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..rows)
        .map(|_| (0..cols).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn to_matrix(rows: &[Vec<f64>]) -> Matrix {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Matrix::from_row_major(rows.len(), rows[0].len(), &flat).unwrap()
}

/// Random dictionary with unit-norm (not orthonormalized) atoms.
pub fn random_dictionary(l: usize, m: usize, d: usize, seed: u64) -> BlockedDictionary {
    BlockedDictionary::normalized(to_matrix(&random_rows(l, m * d, seed)), d).unwrap()
}

/// Column `j` of `a` gathered entry by entry.
pub fn column(a: &Matrix, j: usize) -> Vec<f64> {
    (0..a.rows()).map(|i| a.get(i, j)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Least squares on the listed columns through the normal equations.
pub fn normal_equations(a: &Matrix, cols: &[usize], y: &[f64]) -> Vec<f64> {
    let cs: Vec<Vec<f64>> = cols.iter().map(|&j| column(a, j)).collect();
    let g: Vec<Vec<f64>> = cs.iter().map(|u| cs.iter().map(|v| dot(u, v)).collect()).collect();
    let rhs: Vec<f64> = cs.iter().map(|u| dot(u, y)).collect();
    solve(g, rhs)
}

/// Largest singular value by power iteration on `AᵀA`.
pub fn power_iteration(a: &Matrix) -> f64 {
    let n = a.cols();
    let mut v = vec![1.0; n];
    let mut prev = 0.0;
    for _ in 0..100_000 {
        let av: Vec<f64> = (0..a.rows())
            .map(|i| (0..n).map(|j| a.get(i, j) * v[j]).sum())
            .collect();
        let mut w: Vec<f64> = (0..n)
            .map(|j| (0..a.rows()).map(|i| a.get(i, j) * av[i]).sum())
            .collect();
        let norm = dot(&w, &w).sqrt();
        w.iter_mut().for_each(|x| *x /= norm);
        v = w;
        if (norm - prev).abs() <= 1e-14 * norm {
            return norm.sqrt();
        }
        prev = norm;
    }
    prev.sqrt()
}

fn residual(a: &Matrix, cols: &[usize], coef: &[f64], y: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    for (&j, &c) in cols.iter().zip(coef) {
        for (i, ri) in r.iter_mut().enumerate() {
            *ri -= c * a.get(i, j);
        }
    }
    r
}

fn scatter(n: usize, cols: &[usize], coef: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (&j, &c) in cols.iter().zip(coef) {
        x[j] = c;
    }
    x
}

/// Scalar OMP written from scratch: returns (selection order, estimate).
pub fn scalar_omp(a: &Matrix, y: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut sel: Vec<usize> = Vec::new();
    let mut r = y.to_vec();
    let mut coef = Vec::new();
    for _ in 0..k {
        let mut best = usize::MAX;
        let mut best_v = -1.0;
        for j in 0..a.cols() {
            if sel.contains(&j) {
                continue;
            }
            let v = dot(&column(a, j), &r).abs();
            if v > best_v {
                best_v = v;
                best = j;
            }
        }
        sel.push(best);
        let mut sorted = sel.clone();
        sorted.sort();
        coef = normal_equations(a, &sorted, y);
        r = residual(a, &sorted, &coef, y);
    }
    let mut sorted = sel.clone();
    sorted.sort();
    (sel, scatter(a.cols(), &sorted, &coef))
}

/// Scalar thresholding written from scratch.
pub fn scalar_thresholding(a: &Matrix, y: &[f64], k: usize) -> (Vec<usize>, Vec<f64>) {
    let mut c: Vec<(f64, usize)> = (0..a.cols()).map(|j| (dot(&column(a, j), y).abs(), j)).collect();
    c.sort_by(|p, q| q.0.total_cmp(&p.0).then(p.1.cmp(&q.1)));
    let sel: Vec<usize> = c[..k].iter().map(|p| p.1).collect();
    let mut sorted = sel.clone();
    sorted.sort();
    let coef = normal_equations(a, &sorted, y);
    (sel, scatter(a.cols(), &sorted, &coef))
}

/// `Pr{χ²_d >= x}` by composite Simpson quadrature of the density on `[0, x]`.
pub fn chi_square_sf(d: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let k = d as f64 / 2.0;
    let ln_norm = -k * 2f64.ln() - ln_gamma_half(k);
    let pdf = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        ((k - 1.0) * t.ln() - t / 2.0 + ln_norm).exp()
    };
    // Integrate the tail directly in u = √t, where the integrand is smooth.
    let g = |u: f64| 2.0 * u * pdf(u * u);
    let a = x.sqrt();
    let b = a + 20.0;
    let n = 200_000;
    let h = (b - a) / n as f64;
    let mut s = g(a) + g(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `ln Γ(x)` for half-integers by recurrence from Γ(1/2) and Γ(1).
fn ln_gamma_half(x: f64) -> f64 {
    let mut v = if (x.fract() - 0.5).abs() < 1e-12 {
        0.5 * std::f64::consts::PI.ln()
    } else {
        0.0
    };
    let mut t = if (x.fract() - 0.5).abs() < 1e-12 { 0.5 } else { 1.0 };
    while t < x - 1e-12 {
        v += t.ln();
        t += 1.0;
    }
    v
}
