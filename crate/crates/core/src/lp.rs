//! Dense two-phase simplex, used for the minimum-L1 representation
//! `min ‖w‖₁ s.t. Σ_k w_k x_k = y`.
//!
//! The L1 objective is linearized with the split `w = u − v`, `u, v ≥ 0`.
//! Pivoting follows Bland's rule, which cannot cycle; the instances here are
//! tiny (`d` rows, `2K` columns) so the dense tableau is the simplest choice.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::check_dim;
use crate::{Error, Result};

const MAX_PIVOTS: usize = 50_000;

struct Tableau {
    rows: usize,
    width: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
    tol: f64,
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        for c in 0..w {
            self.cells[row * w + c] /= p;
        }
        for r in 0..=self.rows {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                self.cells[r * w + c] -= factor * self.cells[row * w + c];
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Run Bland-rule pivots on the objective stored in the last row, only
    /// letting columns `< enter_limit` enter the basis.
    fn optimize(&mut self, enter_limit: usize) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::LpFailure { reason: "pivot limit reached", iterations: self.pivots });
            }
            let obj = self.rows;
            let Some(col) = (0..enter_limit).find(|&c| self.at(obj, c) < -self.tol) else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a > self.tol {
                    let ratio = self.rhs(r) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - self.tol
                                || ((ratio - bratio).abs() <= self.tol && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(Error::LpFailure { reason: "objective is unbounded", iterations: self.pivots }),
            }
        }
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let (m, w) = (self.rows, self.width);
        for c in 0..w {
            let mut v = if c < cost.len() { cost[c] } else { 0.0 };
            for r in 0..m {
                let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
                v -= cb * self.at(r, c);
            }
            self.cells[m * w + c] = v;
        }
    }
}

/// Solve `min cᵀz s.t. A z = b, z ≥ 0` for a row-major `m×n` matrix `A`.
/// Returns the optimal `z` and the pivot count.
pub fn simplex_min(a: &[f64], b: &[f64], c: &[f64]) -> Result<(Vec<f64>, usize)> {
    let m = b.len();
    let n = c.len();
    check_dim(m * n, a.len())?;
    let cols = n + m;
    let width = cols + 1;
    let scale = a.iter().chain(b).fold(1.0f64, |s, v| s.max(v.abs()));
    let mut t = Tableau {
        rows: m,
        width,
        cells: vec![0.0; (m + 1) * width],
        basis: (n..n + m).collect(),
        tol: 1e-11 * scale,
        pivots: 0,
    };
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t.cells[i * width + j] = sign * a[i * n + j];
        }
        t.cells[i * width + n + i] = 1.0;
        t.cells[i * width + cols] = sign * b[i];
    }

    // Phase 1: drive the artificial variables to zero.
    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    t.set_objective(&phase1);
    t.optimize(cols)?;
    if -t.rhs(m) > 1e-9 * scale {
        return Err(Error::LpFailure { reason: "constraints are infeasible", iterations: t.pivots });
    }
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(col) = (0..n).find(|&col| t.at(r, col).abs() > t.tol) {
                t.pivot(r, col);
            }
            // Otherwise the row is redundant and its artificial stays at zero.
        }
    }

    // Phase 2 on the structural columns only.
    t.set_objective(c);
    t.optimize(n)?;
    let mut z = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < n {
            z[t.basis[r]] = t.rhs(r).max(0.0);
        }
    }
    Ok((z, t.pivots))
}

/// Minimum-L1 coefficients `w` with `Σ_k w_k columns[k] = target`.
pub fn min_l1_representation(columns: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    let d = target.len();
    for col in columns {
        check_dim(d, col.len())?;
    }
    // A = [X, -X], row-major d × 2K.
    let mut a = vec![0.0; d * 2 * k];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..d {
            a[i * 2 * k + j] = col[i];
            a[i * 2 * k + k + j] = -col[i];
        }
    }
    let cost = vec![1.0; 2 * k];
    let (z, _) = simplex_min(&a, target, &cost)?;
    Ok((0..k).map(|j| z[j] - z[k + j]).collect())
}
