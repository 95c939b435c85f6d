//! Naive dense reference computations, independent of the core crate.

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

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec(a: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d).map(|i| (0..d).map(|j| a[i * d + j] * v[j]).sum()).collect()
}

pub fn add_outer(a: &mut [f64], x: &[f64]) {
    let d = x.len();
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] += x[i] * x[j];
        }
    }
}

pub fn identity(d: usize, lambda: f64) -> Vec<f64> {
    (0..d * d).map(|i| if i / d == i % d { lambda } else { 0.0 }).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn solve(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
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

/// Minimum L1 norm over all exact representations supported on linearly
/// independent column sets.
pub fn min_l1_by_vertices(columns: &[Vec<f64>], y: &[f64]) -> Option<f64> {
    let k = columns.len();
    let d = y.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << k) {
        let set: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let n = set.len();
        if n > d {
            continue;
        }
        let w = if n == 0 {
            Vec::new()
        } else {
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
