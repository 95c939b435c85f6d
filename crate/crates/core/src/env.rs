//! Ground-truth reward generators.
//!
//! [`LinearEnvironment`] draws `r = xᵀθ* + η` with Gaussian `η`. It is built
//! either from the canonical-basis benchmark ([`build_synthetic`]) or from the
//! small-cell service placement model ([`ServicePlacementScenario`]), where
//! each service's context is its average delay gain times its per-period
//! demand.

use alloc::vec;
use alloc::vec::Vec;
// Only needed when nothing else in the build links std.
#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::PI;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::bai::ArmSet;
use crate::error::check_dim;
use crate::linalg::dot;
use crate::rng::{self, StreamRng, SCENARIO_STREAM};
use crate::{Error, Result};

/// How reward noise is generated.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NoiseModel {
    /// `η ~ N(0, std²)` for every arm.
    Gaussian { std: f64 },
    /// Arm-dependent standard deviations.
    PerArm { std: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearEnvironment {
    pub theta_star: Vec<f64>,
    pub noise: NoiseModel,
}

impl LinearEnvironment {
    pub fn new(theta_star: Vec<f64>, noise_std: f64) -> Self {
        Self { theta_star, noise: NoiseModel::Gaussian { std: noise_std } }
    }

    /// Same ground truth, no noise.
    pub fn noiseless(&self) -> Self {
        Self::new(self.theta_star.clone(), 0.0)
    }

    /// Sub-Gaussian scale `R`: the largest noise standard deviation.
    pub fn noise_scale(&self) -> f64 {
        match &self.noise {
            NoiseModel::Gaussian { std } => *std,
            NoiseModel::PerArm { std } => std.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn noise_std(&self, arm: usize) -> f64 {
        match &self.noise {
            NoiseModel::Gaussian { std } => *std,
            NoiseModel::PerArm { std } => std[arm],
        }
    }

    pub fn expected_reward(&self, context: &[f64]) -> f64 {
        dot(context, &self.theta_star)
    }

    /// `xᵀθ* + η`, with `η` drawn from the caller's stream. Zero-variance
    /// arms consume no randomness.
    pub fn sample_reward(&self, arm: usize, context: &[f64], rng: &mut StreamRng) -> Result<f64> {
        check_dim(self.theta_star.len(), context.len())?;
        let mean = self.expected_reward(context);
        let std = self.noise_std(arm);
        if std == 0.0 {
            return Ok(mean);
        }
        let z: f64 = StandardNormal.sample(rng);
        Ok(mean + std * z)
    }

    /// True best arm for `arms`.
    pub fn best_arm(&self, arms: &ArmSet) -> usize {
        arms.argmax(&self.theta_star)
    }
}

/// Canonical-basis benchmark: `x_k = e_k` for `k ≤ d`, plus
/// `x_{d+1} = (cos φ, sin φ, 0, …)`, with `θ* = (2, 0, …)` and unit noise.
pub fn build_synthetic(d: usize, phi: f64) -> Result<(ArmSet, LinearEnvironment)> {
    if d < 2 {
        return Err(Error::InvalidArgument("synthetic benchmark needs d ≥ 2"));
    }
    let mut contexts: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut last = vec![0.0; d];
    last[0] = phi.cos();
    last[1] = phi.sin();
    contexts.push(last);
    let mut theta = vec![0.0; d];
    theta[0] = 2.0;
    Ok((ArmSet::new(contexts)?, LinearEnvironment::new(theta, 1.0)))
}

/// Agent `m` sees `c_m·x_k`.
pub fn heterogeneous_view(arms: &ArmSet, scales: &[f64]) -> Result<Vec<ArmSet>> {
    if scales.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidArgument("context scales must be positive"));
    }
    Ok(scales.iter().map(|c| arms.scaled(*c)).collect())
}

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    pub fn sample(&self, rng: &mut StreamRng) -> f64 {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * u
    }
}

/// Logarithm used in the Shannon rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RateLog {
    #[default]
    Natural,
    Base2,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `W·log(1 + P·h / (I + σ²))`.
pub fn uplink_rate(
    bandwidth: f64,
    power: f64,
    gain: f64,
    interference: f64,
    noise_power: f64,
    log: RateLog,
) -> Result<f64> {
    let floor = interference + noise_power;
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument("interference plus noise power must be positive"));
    }
    let snr = power * gain / floor;
    Ok(match log {
        RateLog::Natural => bandwidth * snr.ln_1p(),
        RateLog::Base2 => bandwidth * snr.ln_1p() / core::f64::consts::LN_2,
    })
}

/// `s/ρ + RTT + c·s/f`.
pub fn sbs_delay(task_bits: f64, rate: f64, rtt: f64, cycles_per_bit: f64, cpu_hz: f64) -> f64 {
    task_bits / rate + rtt + cycles_per_bit * task_bits / cpu_hz
}

/// `s/ρ₀ + s/ρᵇ + RTT₀ + c·s/f₀`.
pub fn cloud_delay(
    task_bits: f64,
    rate: f64,
    backhaul: f64,
    rtt: f64,
    cycles_per_bit: f64,
    cpu_hz: f64,
) -> f64 {
    task_bits / rate + task_bits / backhaul + rtt + cycles_per_bit * task_bits / cpu_hz
}

/// Radio and compute parameters of the small-cell network.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NetworkParams {
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub interference_dbm: f64,
    pub backhaul_bps: Range,
    pub rtt_sbs_s: Range,
    pub rtt_cloud_s: Range,
    pub task_size_bits: Range,
    pub cpu_cloud_hz: Range,
    pub cpu_sbs_hz: Range,
    pub cycles_per_bit: f64,
    pub sbs_gain_db: f64,
    pub mbs_gain_db: f64,
    pub path_loss_exponent: f64,
    pub reference_distance_m: f64,
    pub rate_log: RateLog,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            tx_power_dbm: 10.0,
            noise_power_dbm: -104.0,
            interference_dbm: -90.0,
            backhaul_bps: Range::new(1e9, 4e9),
            rtt_sbs_s: Range::new(2e-3, 7e-3),
            rtt_cloud_s: Range::new(20e-3, 40e-3),
            task_size_bits: Range::new(0.5 * 8e6, 8e6),
            cpu_cloud_hz: Range::new(4.6e9, 5.6e9),
            cpu_sbs_hz: Range::new(2.3e9, 3.2e9),
            cycles_per_bit: 100.0,
            sbs_gain_db: -30.0,
            mbs_gain_db: -40.0,
            path_loss_exponent: 2.5,
            reference_distance_m: 1.0,
            rate_log: RateLog::Natural,
        }
    }
}

impl NetworkParams {
    fn validate(&self) -> Result<()> {
        let ranges = [
            self.backhaul_bps,
            self.rtt_sbs_s,
            self.rtt_cloud_s,
            self.task_size_bits,
            self.cpu_cloud_hz,
            self.cpu_sbs_hz,
        ];
        if ranges.iter().any(|r| !r.is_valid()) {
            return Err(Error::InvalidArgument("network ranges must be finite with lo ≤ hi"));
        }
        if !(self.backhaul_bps.lo > 0.0 && self.cpu_cloud_hz.lo > 0.0 && self.cpu_sbs_hz.lo > 0.0) {
            return Err(Error::InvalidArgument("rates and CPU frequencies must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.reference_distance_m > 0.0) {
            return Err(Error::InvalidArgument("bandwidth and reference distance must be positive"));
        }
        Ok(())
    }

    fn path_gain(&self, gain_db: f64, distance: f64) -> f64 {
        let l = distance.max(self.reference_distance_m);
        db_to_linear(gain_db) * (self.reference_distance_m / l).powf(self.path_loss_exponent)
    }
}

/// One side (SBS or cloud) of the delay comparison for a single cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    /// Deterministic path gain `g·(l_ref/l)^ν` of each user.
    pub path_gains: Vec<f64>,
    pub rtt_s: Range,
    pub cpu_hz: Range,
    /// Backbone rate; `None` for the SBS side.
    pub backhaul_bps: Option<Range>,
}

impl LinkProfile {
    /// Delay of one draw: fading is redrawn per user, the averaged gain sets
    /// the uplink rate, and RTT/CPU/backhaul are drawn uniformly.
    fn draw_delay(&self, task_bits: f64, net: &NetworkParams, rng: &mut StreamRng) -> Result<f64> {
        let n = self.path_gains.len().max(1) as f64;
        let mut avg_gain = 0.0;
        for g in &self.path_gains {
            let fading: f64 = Exp1.sample(rng);
            avg_gain += fading * g;
        }
        avg_gain /= n;
        let rate = uplink_rate(
            net.bandwidth_hz,
            dbm_to_watts(net.tx_power_dbm),
            avg_gain,
            dbm_to_watts(net.interference_dbm),
            dbm_to_watts(net.noise_power_dbm),
            net.rate_log,
        )?;
        let rtt = self.rtt_s.sample(rng);
        let cpu = self.cpu_hz.sample(rng);
        Ok(match self.backhaul_bps {
            Some(b) => {
                let backhaul = b.sample(rng);
                cloud_delay(task_bits, rate, backhaul, rtt, net.cycles_per_bit, cpu)
            }
            None => sbs_delay(task_bits, rate, rtt, net.cycles_per_bit, cpu),
        })
    }
}

/// Monte Carlo mean of a delay gain and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GainEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// `E[d_cloud − d_sbs]` for a task of `task_bits`, cycling the draws over the
/// cells in `links` (pairs of SBS and cloud profiles).
pub fn estimate_gain_with(
    task_bits: f64,
    links: &[(LinkProfile, LinkProfile)],
    net: &NetworkParams,
    samples: usize,
    rng: &mut StreamRng,
) -> Result<GainEstimate> {
    if links.is_empty() || samples < 2 {
        return Err(Error::InvalidArgument("gain estimate needs at least one cell and two samples"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for s in 0..samples {
        let (sbs, cloud) = &links[s % links.len()];
        let g = cloud.draw_delay(task_bits, net, rng)? - sbs.draw_delay(task_bits, net, rng)?;
        sum += g;
        sum_sq += g * g;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(GainEstimate { mean, std_err: (var / n).sqrt() })
}

/// Zipf base demand `scale·k^{-s}/Σ_j j^{-s}` perturbed per period by
/// `exp(N(0, σ²))`. Rows are services, columns periods.
pub fn build_demand(
    services: usize,
    periods: usize,
    zipf_s: f64,
    lognorm_sigma: f64,
    scale: f64,
    rng: &mut StreamRng,
) -> Result<Vec<Vec<f64>>> {
    if services == 0 || periods == 0 {
        return Err(Error::InvalidArgument("demand needs at least one service and one period"));
    }
    if !(lognorm_sigma >= 0.0) || !(scale > 0.0) {
        return Err(Error::InvalidArgument("σ must be nonnegative and scale positive"));
    }
    let weights: Vec<f64> = (1..=services).map(|k| (k as f64).powf(-zipf_s)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights
        .iter()
        .map(|w| {
            let base = scale * w / total;
            (0..periods)
                .map(|_| {
                    if lognorm_sigma == 0.0 {
                        base
                    } else {
                        let z: f64 = StandardNormal.sample(rng);
                        base * (lognorm_sigma * z).exp()
                    }
                })
                .collect()
        })
        .collect())
}

/// Small-cell service placement model. Cells of radius `cell_radius_m` sit
/// on a ring so that neighbouring cells touch; the MBS is at the ring's
/// centre.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ServicePlacementScenario {
    pub services: usize,
    pub cells: usize,
    pub users_per_cell: usize,
    pub cell_radius_m: f64,
    pub network: NetworkParams,
    pub periods: usize,
    pub zipf_s: f64,
    pub lognorm_sigma: f64,
    /// Sub-Gaussian scale `R_ξ` of the demand noise, in requests.
    pub demand_noise: f64,
    /// Norm of the ground-truth parameter `ω*`.
    pub theta_norm: f64,
    /// Assign popularity ranks to services by a seeded permutation instead
    /// of by index.
    pub shuffle_ranks: bool,
    pub gain_samples: usize,
    pub seed: u64,
}

impl Default for ServicePlacementScenario {
    fn default() -> Self {
        Self {
            services: 10,
            cells: 6,
            users_per_cell: 75,
            cell_radius_m: 200.0,
            network: NetworkParams::default(),
            periods: 8,
            zipf_s: 0.8,
            lognorm_sigma: 0.3,
            demand_noise: 75.0,
            theta_norm: 1.0,
            shuffle_ranks: true,
            gain_samples: 10_000,
            seed: 2,
        }
    }
}

/// Everything derived from a [`ServicePlacementScenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceInstance {
    pub arms: ArmSet,
    pub env: LinearEnvironment,
    pub gains: Vec<GainEstimate>,
    pub demand: Vec<Vec<f64>>,
    pub task_bits: Vec<f64>,
}

impl ServicePlacementScenario {
    pub fn validate(&self) -> Result<()> {
        if self.services == 0 || self.cells == 0 || self.users_per_cell == 0 || self.periods == 0 {
            return Err(Error::InvalidArgument("services, cells, users and periods must be positive"));
        }
        if !(self.cell_radius_m > 0.0) || !(self.theta_norm > 0.0) || !(self.demand_noise >= 0.0) {
            return Err(Error::InvalidArgument("cell radius and θ norm must be positive, demand noise nonnegative"));
        }
        if self.gain_samples < 2 {
            return Err(Error::InvalidArgument("gain estimation needs at least two samples"));
        }
        self.network.validate()
    }

    /// Centre of cell `m`; the MBS is at the origin.
    pub fn cell_center(&self, m: usize) -> (f64, f64) {
        if self.cells == 1 {
            return (2.0 * self.cell_radius_m, 0.0);
        }
        // Touching neighbours: centre distance 2r = 2·ρ·sin(π/cells).
        let ring = self.cell_radius_m / (PI / self.cells as f64).sin();
        let angle = 2.0 * PI * m as f64 / self.cells as f64;
        (ring * angle.cos(), ring * angle.sin())
    }

    /// Static user positions, uniform in each cell's disk.
    pub fn user_positions(&self) -> Vec<Vec<(f64, f64)>> {
        let mut rng = rng::stream(self.seed, SCENARIO_STREAM);
        (0..self.cells)
            .map(|m| {
                let (cx, cy) = self.cell_center(m);
                (0..self.users_per_cell)
                    .map(|_| {
                        let r = self.cell_radius_m * rng.random::<f64>().sqrt();
                        let a = 2.0 * PI * rng.random::<f64>();
                        (cx + r * a.cos(), cy + r * a.sin())
                    })
                    .collect()
            })
            .collect()
    }

    /// SBS and cloud link profiles for every cell.
    pub fn link_profiles(&self) -> Vec<(LinkProfile, LinkProfile)> {
        let net = &self.network;
        self.user_positions()
            .iter()
            .enumerate()
            .map(|(m, users)| {
                let (cx, cy) = self.cell_center(m);
                let sbs = LinkProfile {
                    path_gains: users
                        .iter()
                        .map(|(x, y)| net.path_gain(net.sbs_gain_db, (x - cx).hypot(y - cy)))
                        .collect(),
                    rtt_s: net.rtt_sbs_s,
                    cpu_hz: net.cpu_sbs_hz,
                    backhaul_bps: None,
                };
                let cloud = LinkProfile {
                    path_gains: users.iter().map(|(x, y)| net.path_gain(net.mbs_gain_db, x.hypot(*y))).collect(),
                    rtt_s: net.rtt_cloud_s,
                    cpu_hz: net.cpu_cloud_hz,
                    backhaul_bps: Some(net.backhaul_bps),
                };
                (sbs, cloud)
            })
            .collect()
    }

    /// Per-service task sizes, fixed for the scenario.
    pub fn task_sizes(&self) -> Vec<f64> {
        let mut rng = rng::stream(self.seed, SCENARIO_STREAM + 1);
        (0..self.services).map(|_| self.network.task_size_bits.sample(&mut rng)).collect()
    }

    /// Average delay gain `G̃_k` of every service.
    pub fn estimate_gains(&self) -> Result<Vec<GainEstimate>> {
        self.validate()?;
        let links = self.link_profiles();
        self.task_sizes()
            .iter()
            .enumerate()
            .map(|(k, bits)| {
                let mut rng = rng::stream(self.seed, SCENARIO_STREAM + 100 + k as u64);
                estimate_gain_with(*bits, &links, &self.network, self.gain_samples, &mut rng)
            })
            .collect()
    }

    pub fn demand(&self) -> Result<Vec<Vec<f64>>> {
        let mut rng = rng::stream(self.seed, SCENARIO_STREAM + 2);
        let mut demand = build_demand(
            self.services,
            self.periods,
            self.zipf_s,
            self.lognorm_sigma,
            self.users_per_cell as f64,
            &mut rng,
        )?;
        if self.shuffle_ranks {
            demand.shuffle(&mut rng);
        }
        Ok(demand)
    }

    /// Seeded positive `ω*` with `‖ω*‖₂ = theta_norm`.
    pub fn omega(&self) -> Vec<f64> {
        let mut rng = rng::stream(self.seed, SCENARIO_STREAM + 3);
        let raw: Vec<f64> = (0..self.periods).map(|_| 0.05 + rng.random::<f64>()).collect();
        let norm = dot(&raw, &raw).sqrt();
        raw.iter().map(|v| self.theta_norm * v / norm).collect()
    }

    /// Arms `x_k = G̃_k·D̃_k`, `θ* = ω*`, and reward noise `η = G̃_k·ξ` with
    /// `ξ ~ N(0, R_ξ²)`, so `R = max_k |G̃_k|·R_ξ`.
    pub fn build(&self) -> Result<ServiceInstance> {
        let gains = self.estimate_gains()?;
        self.assemble(gains)
    }

    /// Same as [`build`](Self::build) with externally supplied gains.
    pub fn assemble(&self, gains: Vec<GainEstimate>) -> Result<ServiceInstance> {
        check_dim(self.services, gains.len())?;
        let demand = self.demand()?;
        let contexts: Vec<Vec<f64>> =
            gains.iter().zip(&demand).map(|(g, d)| d.iter().map(|v| g.mean * v).collect()).collect();
        if contexts.iter().all(|c| c.iter().all(|v| *v == 0.0)) {
            return Err(Error::InvalidArgument("all service contexts are zero"));
        }
        let arms = ArmSet::new(contexts)?;
        let noise = gains.iter().map(|g| g.mean.abs() * self.demand_noise).collect();
        let env = LinearEnvironment { theta_star: self.omega(), noise: NoiseModel::PerArm { std: noise } };
        Ok(ServiceInstance { arms, env, gains, demand, task_bits: self.task_sizes() })
    }
}

/// Convenience wrapper for [`ServicePlacementScenario::build`].
pub fn build_service_env(scenario: &ServicePlacementScenario) -> Result<(ArmSet, LinearEnvironment)> {
    let inst = scenario.build()?;
    Ok((inst.arms, inst.env))
}
