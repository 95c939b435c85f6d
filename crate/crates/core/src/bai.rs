//! Single-agent best-arm identification mathematics.
//!
//! Everything here is a pure function of the arm set, the agent's design
//! matrix `A` and observation vector `b`. Ties are always broken towards the
//! lowest arm id so runs are reproducible.

use alloc::vec;
use alloc::vec::Vec;
// Only needed when nothing else in the build links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::check_dim;
use crate::linalg::{dot, rls_estimate, DesignMatrix, ObservationVector};
use crate::lp::min_l1_representation;
use crate::{Error, Result};

/// Context vectors `x_1..x_K` shared by the agents.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArmSet {
    contexts: Vec<Vec<f64>>,
}

/// Borrowed view of one arm.
#[derive(Debug, Clone, Copy)]
pub struct Arm<'a> {
    pub id: usize,
    pub context: &'a [f64],
}

impl ArmSet {
    pub fn new(contexts: Vec<Vec<f64>>) -> Result<Self> {
        let dim = contexts
            .first()
            .map(Vec::len)
            .ok_or(Error::InvalidArgument("arm set must contain at least one arm"))?;
        if dim == 0 {
            return Err(Error::InvalidArgument("context dimension must be positive"));
        }
        for c in &contexts {
            check_dim(dim, c.len())?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("contexts must be finite"));
            }
        }
        Ok(Self { contexts })
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.contexts[0].len()
    }

    pub fn context(&self, k: usize) -> &[f64] {
        &self.contexts[k]
    }

    pub fn contexts(&self) -> &[Vec<f64>] {
        &self.contexts
    }

    pub fn arm(&self, k: usize) -> Arm<'_> {
        Arm { id: k, context: &self.contexts[k] }
    }

    /// `L = max_k ‖x_k‖₂`.
    pub fn norm_bound(&self) -> f64 {
        self.contexts.iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max)
    }

    /// Expected rewards `x_kᵀθ`.
    pub fn rewards(&self, theta: &[f64]) -> Vec<f64> {
        self.contexts.iter().map(|c| dot(c, theta)).collect()
    }

    /// Arm with the largest `x_kᵀθ`, lowest id on ties.
    pub fn argmax(&self, theta: &[f64]) -> usize {
        argmax(&self.rewards(theta))
    }

    /// Every context multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { contexts: self.contexts.iter().map(|x| x.iter().map(|v| v * c).collect()).collect() }
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// Parameters of the confidence ellipsoid and the stopping rule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceConfig {
    /// Sub-Gaussian noise scale `R`.
    pub noise_scale: f64,
    /// Bound `S ≥ ‖θ*‖₂`.
    pub theta_bound: f64,
    /// Regularization `λ`.
    pub lambda: f64,
    /// Per-agent confidence `δ_m`.
    pub delta_m: f64,
    /// Target accuracy `ε`.
    pub epsilon: f64,
    /// Number of agents `M`.
    pub agents: usize,
}

impl ConfidenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_scale >= 0.0) || !(self.theta_bound >= 0.0) {
            return Err(Error::InvalidArgument("R and S must be nonnegative"));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument("λ must be positive"));
        }
        if !(self.delta_m > 0.0 && self.delta_m < 1.0) {
            return Err(Error::InvalidArgument("δ_m must lie in (0, 1)"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument("ε must be nonnegative"));
        }
        if self.agents == 0 {
            return Err(Error::InvalidArgument("at least one agent is required"));
        }
        if !(self.agents as f64 * self.delta_m < 1.0) {
            return Err(Error::InvalidArgument("total error M·δ_m must be below 1"));
        }
        Ok(())
    }

    /// Overall error probability `δ = M·δ_m`.
    pub fn delta(&self) -> f64 {
        self.agents as f64 * self.delta_m
    }
}

/// Output of the direction search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// Empirically best arm `i`.
    pub best: usize,
    /// Most ambiguous arm `j`.
    pub ambiguous: usize,
    /// Stopping statistic `B = Δ̂(j, i) + β(j, i)`.
    pub bound: f64,
}

/// `C = R·sqrt(2·log(det(A)^{1/2} / (λ^{d/2} δ_m))) + λ^{1/2}·S`.
///
/// `δ_m = 1` is accepted as a degenerate value (the log term vanishes for
/// `A = λI`).
pub fn confidence_radius(a: &DesignMatrix, cfg: &ConfidenceConfig) -> Result<f64> {
    if !(cfg.delta_m > 0.0 && cfg.delta_m <= 1.0) {
        return Err(Error::InvalidArgument("δ_m must lie in (0, 1]"));
    }
    let d = a.dim() as f64;
    let log_term = 0.5 * a.logdet() - 0.5 * d * cfg.lambda.ln() - cfg.delta_m.ln();
    Ok(cfg.noise_scale * (2.0 * log_term).max(0.0).sqrt() + cfg.lambda.sqrt() * cfg.theta_bound)
}

/// `Δ̂(i, j) = (x_i − x_j)ᵀ θ̂`.
pub fn gap_estimate(i: Arm<'_>, j: Arm<'_>, theta_hat: &[f64]) -> Result<f64> {
    check_dim(theta_hat.len(), i.context.len())?;
    check_dim(theta_hat.len(), j.context.len())?;
    Ok(i.context.iter().zip(j.context).zip(theta_hat).map(|((a, b), t)| (a - b) * t).sum())
}

/// `‖x_i − x_j‖_{A⁻¹}`, the norm factor of the gap confidence.
pub fn gap_norm(i: Arm<'_>, j: Arm<'_>, a: &DesignMatrix) -> Result<f64> {
    check_dim(a.dim(), i.context.len())?;
    check_dim(a.dim(), j.context.len())?;
    let y: Vec<f64> = i.context.iter().zip(j.context).map(|(p, q)| p - q).collect();
    Ok(a.inv_quad(&y).sqrt())
}

/// `β(i, j) = ‖x_i − x_j‖_{A⁻¹} · C`.
pub fn gap_confidence(i: Arm<'_>, j: Arm<'_>, a: &DesignMatrix, cfg: &ConfidenceConfig) -> Result<f64> {
    Ok(gap_norm(i, j, a)? * confidence_radius(a, cfg)?)
}

/// Empirically best arm `i`, most ambiguous arm `j` and the stopping
/// statistic `B`. The search for `j` includes `j = i`, whose score is 0.
pub fn select_direction(
    arms: &ArmSet,
    a: &DesignMatrix,
    b: &ObservationVector,
    cfg: &ConfidenceConfig,
) -> Result<Direction> {
    if arms.len() < 2 {
        return Err(Error::InvalidArgument("direction search needs at least two arms"));
    }
    check_dim(a.dim(), arms.dim())?;
    let theta = rls_estimate(a, b)?.theta_hat;
    let best = arms.argmax(&theta);
    let radius = confidence_radius(a, cfg)?;
    let xi = arms.context(best);
    let mut y = vec![0.0; arms.dim()];
    let mut ambiguous = best;
    let mut bound = 0.0;
    let mut first = true;
    for (j, xj) in arms.contexts().iter().enumerate() {
        let score = if j == best {
            0.0
        } else {
            for ((yk, p), q) in y.iter_mut().zip(xj).zip(xi) {
                *yk = p - q;
            }
            dot(&y, &theta) + a.inv_quad(&y).sqrt() * radius
        };
        if first || score > bound {
            ambiguous = j;
            bound = score;
            first = false;
        }
    }
    Ok(Direction { best, ambiguous, bound })
}

/// `argmin_a ‖x_i − x_j‖_{(A + x_a x_aᵀ)⁻¹}` over all arms, lowest id on ties.
pub fn greedy_next_arm(arms: &ArmSet, dir: &Direction, a: &DesignMatrix) -> usize {
    let y: Vec<f64> =
        arms.context(dir.best).iter().zip(arms.context(dir.ambiguous)).map(|(p, q)| p - q).collect();
    let ainv_y = a.inv_mul(&y);
    let base = dot(&y, &ainv_y);
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (k, x) in arms.contexts().iter().enumerate() {
        let cross = dot(x, &ainv_y);
        let value = base - cross * cross / (1.0 + a.inv_quad(x));
        if value < best_value {
            best = k;
            best_value = value;
        }
    }
    best
}

/// L1-minimal decomposition of `x_i − x_j` over the arm contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSolution {
    /// `w*(i, j)`.
    pub weights: Vec<f64>,
    /// `α(i, j) = ‖w*‖₁`.
    pub alpha: f64,
    /// `p*_k = |w*_k| / α`; all zeros when `x_i = x_j`.
    pub ratios: Vec<f64>,
}

/// Solve `min ‖w‖₁ s.t. x_i − x_j = Σ_k w_k x_k`.
pub fn optimal_weights(arms: &ArmSet, i: usize, j: usize) -> Result<RatioSolution> {
    if i >= arms.len() || j >= arms.len() {
        return Err(Error::InvalidArgument("arm id out of range"));
    }
    let target: Vec<f64> = arms.context(i).iter().zip(arms.context(j)).map(|(p, q)| p - q).collect();
    let weights = min_l1_representation(arms.contexts(), &target)?;
    let alpha: f64 = weights.iter().map(|w| w.abs()).sum();
    let ratios = if alpha > 0.0 {
        weights.iter().map(|w| w.abs() / alpha).collect()
    } else {
        vec![0.0; weights.len()]
    };
    Ok(RatioSolution { weights, alpha, ratios })
}

/// Memo of [`optimal_weights`] per ordered arm pair for one arm set.
#[derive(Debug, Clone)]
pub struct RatioCache {
    arms: usize,
    entries: Vec<Option<RatioSolution>>,
}

impl RatioCache {
    pub fn new(arms: usize) -> Self {
        Self { arms, entries: vec![None; arms * arms] }
    }

    pub fn get(&mut self, arms: &ArmSet, i: usize, j: usize) -> Result<&RatioSolution> {
        check_dim(self.arms, arms.len())?;
        let slot = i * self.arms + j;
        if self.entries[slot].is_none() {
            self.entries[slot] = Some(optimal_weights(arms, i, j)?);
        }
        Ok(self.entries[slot].as_ref().expect("filled above"))
    }
}

/// `argmin_{a: p*_a > 0} T_a / p*_a`, lowest id on ties.
pub fn ratio_next_arm(sol: &RatioSolution, pull_counts: &[u64]) -> Result<usize> {
    check_dim(sol.ratios.len(), pull_counts.len())?;
    let mut best: Option<(usize, f64)> = None;
    for (k, (&p, &n)) in sol.ratios.iter().zip(pull_counts).enumerate() {
        if p > 0.0 {
            let score = n as f64 / p;
            if best.is_none_or(|(_, s)| score < s) {
                best = Some((k, score));
            }
        }
    }
    best.map(|(k, _)| k).ok_or(Error::InvalidArgument("ratio solution has no positive entry"))
}

/// `B ≤ ε`.
pub fn check_stop(dir: &Direction, cfg: &ConfidenceConfig) -> bool {
    dir.bound <= cfg.epsilon
}

/// Problem hardness
/// `H_ε = Σ_k max_{i,j} p*_k(i,j) α(i,j) / max(ε, (ε+Δ_i)/3, (ε+Δ_j)/3)²`
/// with `Δ_{a*} = 0`. Terms with a zero numerator contribute nothing.
pub fn problem_complexity(arms: &ArmSet, theta_star: &[f64], epsilon: f64) -> Result<f64> {
    check_dim(arms.dim(), theta_star.len())?;
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidArgument("ε must be nonnegative"));
    }
    let rewards = arms.rewards(theta_star);
    let top = rewards[argmax(&rewards)];
    let gaps: Vec<f64> = rewards.iter().map(|r| top - r).collect();
    if epsilon == 0.0 && gaps.iter().filter(|g| **g == 0.0).count() > 1 {
        return Err(Error::NonUniqueBestArm);
    }
    let k = arms.len();
    let mut per_arm = vec![0.0f64; k];
    for i in 0..k {
        for j in 0..k {
            let sol = optimal_weights(arms, i, j)?;
            let denom = epsilon.max((epsilon + gaps[i]) / 3.0).max((epsilon + gaps[j]) / 3.0);
            for (slot, w) in per_arm.iter_mut().zip(&sol.weights) {
                // p*_k · α = |w_k|
                let num = w.abs();
                if num == 0.0 {
                    continue;
                }
                *slot = slot.max(num / (denom * denom));
            }
        }
    }
    Ok(per_arm.iter().sum())
}

/// Per-agent sample-complexity bounds; `None` where the λ-condition of the
/// corresponding case does not hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityBounds {
    /// Case `λ ≤ (2R²/S²)·log(K²/δ_m)`.
    pub small_lambda: Option<f64>,
    /// Case `λ > 4·H·R²·L²`.
    pub large_lambda: Option<f64>,
}

impl ComplexityBounds {
    /// Tightest available bound.
    pub fn best(&self) -> Option<f64> {
        match (self.small_lambda, self.large_lambda) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

pub fn sample_complexity_bound(
    hardness: f64,
    cfg: &ConfidenceConfig,
    arms: usize,
    dim: usize,
    norm_bound: f64,
) -> ComplexityBounds {
    let m = cfg.agents as f64;
    let k = arms as f64;
    let d = dim as f64;
    let (r2, s2, lambda, l2) = (
        cfg.noise_scale * cfg.noise_scale,
        cfg.theta_bound * cfg.theta_bound,
        cfg.lambda,
        norm_bound * norm_bound,
    );
    let log_k = (k * k / cfg.delta_m).ln();
    let mu = k / m + 1.0;

    let small = if s2 == 0.0 || lambda <= 2.0 * r2 / s2 * log_k {
        let n = 8.0 * hardness * r2 / m * log_k;
        let y = 2.0 * (16.0 * hardness * hardness * r2 * r2 * d * l2 / (m * lambda) + n * n).sqrt();
        Some(mu + 4.0 * hardness / m * r2 * (2.0 * log_k + d * (1.0 + y * y * l2 / (lambda * d)).ln()))
    } else {
        None
    };
    let large = if lambda > 4.0 * hardness * r2 * l2 {
        Some(2.0 * (4.0 * hardness * r2 / m * log_k + 2.0 * hardness * lambda * s2 / m + mu))
    } else {
        None
    };
    ComplexityBounds { small_lambda: small, large_lambda: large }
}
