//! Dense reference math for the oracle tests. Deliberately naive and
//! independent of the crate's own routines.
#![allow(dead_code)]

/// Gauss-Jordan inverse with partial pivoting of a row-major `d×d` matrix.
pub fn inverse(a: &[f64], d: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let mut inv: Vec<f64> = (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.0 }).collect();
    for col in 0..d {
        let pivot = (col..d).max_by(|&p, &q| m[p * d + col].abs().total_cmp(&m[q * d + col].abs())).unwrap();
        for j in 0..d {
            m.swap(col * d + j, pivot * d + j);
            inv.swap(col * d + j, pivot * d + j);
        }
        let p = m[col * d + col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for j in 0..d {
            m[col * d + j] /= p;
            inv[col * d + j] /= p;
        }
        for r in 0..d {
            if r != col {
                let f = m[r * d + col];
                for j in 0..d {
                    m[r * d + j] -= f * m[col * d + j];
                    inv[r * d + j] -= f * inv[col * d + j];
                }
            }
        }
    }
    inv
}

/// `log det` through LU with partial pivoting; the matrix must be positive definite.
pub fn logdet(a: &[f64], d: usize) -> f64 {
    let mut m = a.to_vec();
    let mut total = 0.0;
    for col in 0..d {
        let pivot = (col..d).max_by(|&p, &q| m[p * d + col].abs().total_cmp(&m[q * d + col].abs())).unwrap();
        for j in 0..d {
            m.swap(col * d + j, pivot * d + j);
        }
        let p = m[col * d + col];
        total += p.abs().ln();
        for r in col + 1..d {
            let f = m[r * d + col] / p;
            for j in col..d {
                m[r * d + j] -= f * m[col * d + j];
            }
        }
    }
    total
}

pub fn mat_vec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d).map(|i| (0..d).map(|j| a[i * d + j] * v[j]).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn quad(a_inv: &[f64], y: &[f64]) -> f64 {
    dot(y, &mat_vec(a_inv, y))
}

/// `λI + Σ x xᵀ`.
pub fn design(lambda: f64, d: usize, xs: &[Vec<f64>]) -> Vec<f64> {
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        a[i * d + i] = lambda;
    }
    for x in xs {
        add_outer(&mut a, x);
    }
    a
}

pub fn add_outer(a: &mut [f64], x: &[f64]) {
    let d = x.len();
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] += x[i] * x[j];
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `C = R·sqrt(2·(½ log det A − (d/2) log λ − log δ)) + √λ·S`.
pub fn radius(logdet_a: f64, d: usize, lambda: f64, r: f64, s: f64, delta: f64) -> f64 {
    let log_term = 0.5 * logdet_a - 0.5 * d as f64 * lambda.ln() - delta.ln();
    r * (2.0 * log_term).max(0.0).sqrt() + lambda.sqrt() * s
}

/// Solve a small square system by Gauss-Jordan; `None` if singular.
pub fn solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let d = b.len();
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    for col in 0..d {
        let pivot = (col..d).max_by(|&p, &q| m[p * d + col].abs().total_cmp(&m[q * d + col].abs()))?;
        if m[pivot * d + col].abs() < 1e-10 {
            return None;
        }
        for j in 0..d {
            m.swap(col * d + j, pivot * d + j);
        }
        rhs.swap(col, pivot);
        for r in 0..d {
            if r != col {
                let f = m[r * d + col] / m[col * d + col];
                for j in 0..d {
                    m[r * d + j] -= f * m[col * d + j];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    Some((0..d).map(|i| rhs[i] / m[i * d + i]).collect())
}

/// Minimum L1 norm of `w` with `Σ w_k x_k = y`, by enumerating every set of
/// linearly independent columns (the LP's vertices).
pub fn min_l1_by_vertices(columns: &[Vec<f64>], y: &[f64]) -> Option<f64> {
    let k = columns.len();
    let d = y.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << k) {
        let set: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if set.len() > d {
            continue;
        }
        let n = set.len();
        let w = if n == 0 {
            Vec::new()
        } else {
            // Normal equations XᵀX w = Xᵀy on the chosen columns.
            let mut g = vec![0.0; n * n];
            let mut rhs = vec![0.0; n];
            for (p, &i) in set.iter().enumerate() {
                rhs[p] = dot(&columns[i], y);
                for (q, &j) in set.iter().enumerate() {
                    g[p * n + q] = dot(&columns[i], &columns[j]);
                }
            }
            match solve(&g, &rhs) {
                Some(w) => w,
                None => continue,
            }
        };
        let mut residual = y.to_vec();
        for (p, &i) in set.iter().enumerate() {
            for (r, c) in residual.iter_mut().zip(&columns[i]) {
                *r -= w[p] * c;
            }
        }
        if residual.iter().any(|r| r.abs() > 1e-9) {
            continue;
        }
        let l1: f64 = w.iter().map(|v| v.abs()).sum();
        if best.is_none_or(|b| l1 < b) {
            best = Some(l1);
        }
    }
    best
}
