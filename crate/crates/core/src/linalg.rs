//! Dense regularized design matrices.
//!
//! A [`DesignMatrix`] holds `λI + Σ x xᵀ` together with its inverse and
//! log-determinant. Rank-one updates refresh all three in `O(d²)` through the
//! Sherman-Morrison formula and the matrix determinant lemma; every
//! [`REFRESH_INTERVAL`] updates the cached values are recomputed from the
//! accumulated matrix by a Cholesky factorization so rounding error cannot
//! build up over long runs.

use alloc::vec;
use alloc::vec::Vec;
// Only needed when nothing else in the build links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::check_dim;
use crate::{Error, Result};

/// Number of rank-one updates between two dense refreshes.
pub const REFRESH_INTERVAL: usize = 4096;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric accumulator `Σ x xᵀ` with no regularization. Used for the
/// local and coordinator statistics, which start at the zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    dim: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn add_outer(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        for (i, xi) in x.iter().enumerate() {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for (cell, xj) in row.iter_mut().zip(x) {
                *cell += xi * xj;
            }
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Gram) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }
}

/// Regularized Gram matrix with cached inverse and log-determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    dim: usize,
    lambda: f64,
    matrix: Vec<f64>,
    inverse: Vec<f64>,
    logdet: f64,
    since_refresh: usize,
}

impl DesignMatrix {
    /// `λI`, with inverse `I/λ` and log-determinant `d·log λ`.
    pub fn regularized(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("design matrix dimension must be positive"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument("regularization λ must be positive and finite"));
        }
        let mut matrix = vec![0.0; dim * dim];
        let mut inverse = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = lambda;
            inverse[i * dim + i] = 1.0 / lambda;
        }
        Ok(Self {
            dim,
            lambda,
            matrix,
            inverse,
            logdet: dim as f64 * lambda.ln(),
            since_refresh: 0,
        })
    }

    /// `λI + Σ parts`, factorized densely.
    pub fn from_grams(lambda: f64, parts: &[&Gram]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|g| g.dim)
            .ok_or(Error::InvalidArgument("at least one Gram matrix is required"))?;
        let mut out = Self::regularized(dim, lambda)?;
        for part in parts {
            check_dim(dim, part.dim)?;
            for (a, b) in out.matrix.iter_mut().zip(&part.data) {
                *a += b;
            }
        }
        out.refresh()?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Row-major `d×d` matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Row-major cached inverse.
    pub fn inverse(&self) -> &[f64] {
        &self.inverse
    }

    /// In-place `A ← A + x xᵀ`.
    pub fn rank_one_update(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        let d = self.dim;
        let u = self.inv_mul(x);
        let denom = 1.0 + dot(x, &u);
        for i in 0..d {
            for j in 0..d {
                self.matrix[i * d + j] += x[i] * x[j];
                self.inverse[i * d + j] -= u[i] * u[j] / denom;
            }
        }
        self.logdet += denom.ln();
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh()?;
        }
        Ok(())
    }

    /// Copy of `A + x xᵀ`, leaving `self` untouched.
    pub fn updated(&self, x: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.rank_one_update(x)?;
        Ok(next)
    }

    /// Recompute inverse and log-determinant from the accumulated matrix.
    pub fn refresh(&mut self) -> Result<()> {
        let chol = cholesky(&self.matrix, self.dim)?;
        self.logdet = cholesky_logdet(&chol, self.dim);
        self.inverse = cholesky_inverse(&chol, self.dim);
        self.since_refresh = 0;
        Ok(())
    }

    /// `A⁻¹ v`.
    pub fn inv_mul(&self, v: &[f64]) -> Vec<f64> {
        self.inverse.chunks_exact(self.dim).map(|row| dot(row, v)).collect()
    }

    /// `yᵀ A⁻¹ y`.
    pub fn inv_quad(&self, y: &[f64]) -> f64 {
        dot(y, &self.inv_mul(y)).max(0.0)
    }

    /// `yᵀ (A + x xᵀ)⁻¹ y`, evaluated without forming the updated matrix.
    pub fn inv_quad_after(&self, x: &[f64], y: &[f64]) -> f64 {
        let ainv_y = self.inv_mul(y);
        let ainv_x = self.inv_mul(x);
        let cross = dot(x, &ainv_y);
        (dot(y, &ainv_y) - cross * cross / (1.0 + dot(x, &ainv_x))).max(0.0)
    }
}

/// Right-hand side `Σ x r` of the regularized least-squares system.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationVector(Vec<f64>);

impl ObservationVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn from_vec(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `b ← b + r·x`.
    pub fn add_scaled(&mut self, x: &[f64], r: f64) -> Result<()> {
        check_dim(self.0.len(), x.len())?;
        for (b, xi) in self.0.iter_mut().zip(x) {
            *b += r * xi;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &ObservationVector) -> Result<()> {
        check_dim(self.0.len(), other.0.len())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.0.iter_mut().for_each(|v| *v = 0.0);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterEstimate {
    pub theta_hat: Vec<f64>,
}

/// `θ̂ = A⁻¹ b`.
pub fn rls_estimate(a: &DesignMatrix, b: &ObservationVector) -> Result<ParameterEstimate> {
    check_dim(a.dim, b.dim())?;
    Ok(ParameterEstimate { theta_hat: a.inv_mul(b.as_slice()) })
}

/// `‖y‖_{A⁻¹} = sqrt(yᵀ A⁻¹ y)`.
pub fn weighted_norm_inv(a: &DesignMatrix, y: &[f64]) -> Result<f64> {
    check_dim(a.dim, y.len())?;
    Ok(a.inv_quad(y).sqrt())
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    check_dim(d * d, a.len())?;
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

fn cholesky_logdet(l: &[f64], d: usize) -> f64 {
    (0..d).map(|i| 2.0 * l[i * d + i].ln()).sum()
}

fn cholesky_inverse(l: &[f64], d: usize) -> Vec<f64> {
    // Invert L column by column, then A⁻¹ = L⁻ᵀ L⁻¹.
    let mut linv = vec![0.0; d * d];
    for col in 0..d {
        linv[col * d + col] = 1.0 / l[col * d + col];
        for i in col + 1..d {
            let mut s = 0.0;
            for k in col..i {
                s -= l[i * d + k] * linv[k * d + col];
            }
            linv[i * d + col] = s / l[i * d + i];
        }
    }
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (i..d).map(|k| linv[k * d + i] * linv[k * d + j]).sum();
            inv[i * d + j] = s;
            inv[j * d + i] = s;
        }
    }
    inv
}

/// Log-determinant of a symmetric positive-definite matrix.
pub fn dense_logdet(a: &[f64], d: usize) -> Result<f64> {
    Ok(cholesky_logdet(&cholesky(a, d)?, d))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn dense_inverse(a: &[f64], d: usize) -> Result<Vec<f64>> {
    Ok(cholesky_inverse(&cholesky(a, d)?, d))
}
