//! Centralized M-batch OFUL and cumulative-delay accounting.
//!
//! Independent agents need no code of their own: they are DistLinGapE with
//! [`SyncPolicy::never`](crate::protocol::SyncPolicy::never).

use alloc::vec::Vec;
// Only needed when nothing else in the build links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::bai::{confidence_radius, ArmSet, ConfidenceConfig};
use crate::env::LinearEnvironment;
use crate::error::check_dim;
use crate::linalg::{dot, rls_estimate, DesignMatrix, ObservationVector};
use crate::rng::{self, StreamRng, OFUL_STREAM};
use crate::{Error, Result};

/// Shared least-squares state of the batch OFUL learner.
#[derive(Debug, Clone)]
pub struct OfulState {
    pub design: DesignMatrix,
    pub observations: ObservationVector,
    pub round: u64,
    pub confidence: ConfidenceConfig,
    rng: StreamRng,
}

impl OfulState {
    pub fn new(dim: usize, confidence: ConfidenceConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            design: DesignMatrix::regularized(dim, confidence.lambda)?,
            observations: ObservationVector::zeros(dim),
            round: 0,
            confidence,
            rng: rng::stream(seed, OFUL_STREAM),
        })
    }

    /// `x_kᵀθ̂ + C·‖x_k‖_{A⁻¹}` for every arm.
    pub fn indices(&self, arms: &ArmSet) -> Result<Vec<f64>> {
        check_dim(self.design.dim(), arms.dim())?;
        let theta = rls_estimate(&self.design, &self.observations)?.theta_hat;
        let c = confidence_radius(&self.design, &self.confidence)?;
        Ok(arms.contexts().iter().map(|x| dot(x, &theta) + c * self.design.inv_quad(x).sqrt()).collect())
    }

    /// Add one observation.
    pub fn observe(&mut self, x: &[f64], reward: f64) -> Result<()> {
        self.design.rank_one_update(x)?;
        self.observations.add_scaled(x, reward)
    }
}

/// Top `batch` arms by index, highest first, ties by lowest id.
pub fn top_indices(indices: &[f64], batch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by(|&a, &b| indices[b].total_cmp(&indices[a]).then(a.cmp(&b)));
    order.truncate(batch);
    order
}

/// Select `M` distinct arms with the highest indices, pull each once in
/// `env` and fold all `M` observations into the state.
pub fn oful_batch_round(
    state: &mut OfulState,
    arms: &ArmSet,
    env: &LinearEnvironment,
    batch: usize,
) -> Result<Vec<usize>> {
    if batch == 0 || batch > arms.len() {
        return Err(Error::InvalidArgument("OFUL batch size must lie in 1..=K"));
    }
    let chosen = top_indices(&state.indices(arms)?, batch);
    for &k in &chosen {
        let x = arms.context(k);
        let r = env.sample_reward(k, x, &mut state.rng)?;
        state.observe(x, r)?;
    }
    state.round += 1;
    Ok(chosen)
}

/// Running totals of expected rewards: element `t` sums the first `t`
/// rounds, so the first element is always 0.
pub fn cumulative_delay(rounds: &[Vec<usize>], arms: &ArmSet, env: &LinearEnvironment) -> Vec<f64> {
    let mut out = Vec::with_capacity(rounds.len() + 1);
    let mut total = 0.0;
    out.push(total);
    for round in rounds {
        total += round.iter().map(|&k| env.expected_reward(arms.context(k))).sum::<f64>();
        out.push(total);
    }
    out
}
