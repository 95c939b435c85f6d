//! The multi-agent protocol.
//!
//! Each global round every agent, in ascending id order, composes its view
//! `A = λI + A_coor + ΔA`, `b = b_coor + Δb`, runs the direction search and
//! either stops the whole run or pulls one arm. Once all agents have acted,
//! a single synchronization happens if any agent's trigger
//! `Δt · log(det A / det(λI + A_coor)) > D` fired.
//!
//! Uploads may fail: agents outside the surviving set keep their deltas and
//! report them at a later sync, while the broadcast always reaches everyone.

use alloc::vec;
use alloc::vec::Vec;
// Only needed when nothing else in the build links std.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::bai::{
    check_stop, greedy_next_arm, ratio_next_arm, select_direction, ArmSet, ConfidenceConfig, Direction,
    RatioCache,
};
use crate::env::{heterogeneous_view, LinearEnvironment};
use crate::error::check_dim;
use crate::linalg::{DesignMatrix, Gram, ObservationVector};
use crate::rng::{self, StreamRng, FAILURE_STREAM};
use crate::{Error, Result};

/// Default safety valve on the number of global rounds.
pub const DEFAULT_MAX_ROUNDS: u64 = 10_000_000;

/// Arm selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Strategy {
    /// Pull the arm that most shrinks the current gap confidence.
    Greedy,
    /// Track the L1-optimal allocation of the current direction.
    #[default]
    Ratio,
}

/// Which uploads reach the coordinator at each sync.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum FailureSchedule {
    /// Every upload succeeds.
    #[default]
    Reliable,
    /// Surviving agent ids for sync 0, 1, …; later syncs are reliable.
    Explicit(Vec<Vec<usize>>),
    /// Each upload independently succeeds with this probability.
    Bernoulli(f64),
}

impl FailureSchedule {
    /// Surviving mask for the sync with index `sync_index`.
    pub fn surviving(&self, sync_index: u64, agents: usize, rng: &mut StreamRng) -> Vec<bool> {
        match self {
            FailureSchedule::Reliable => vec![true; agents],
            FailureSchedule::Explicit(sets) => match sets.get(sync_index as usize) {
                Some(set) => (0..agents).map(|m| set.contains(&m)).collect(),
                None => vec![true; agents],
            },
            FailureSchedule::Bernoulli(p) => (0..agents).map(|_| rng.random::<f64>() < *p).collect(),
        }
    }

    fn validate(&self, agents: usize) -> Result<()> {
        match self {
            FailureSchedule::Reliable => Ok(()),
            FailureSchedule::Explicit(sets) => {
                if sets.iter().flatten().any(|m| *m >= agents) {
                    Err(Error::InvalidArgument("failure schedule names an unknown agent"))
                } else {
                    Ok(())
                }
            }
            FailureSchedule::Bernoulli(p) => {
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("upload success probability must lie in [0, 1]"))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyncPolicy {
    /// Trigger threshold `D`; `f64::INFINITY` means agents never sync.
    pub threshold: f64,
    pub failures: FailureSchedule,
    /// Hard cap on the number of syncs.
    pub budget: Option<u64>,
}

impl SyncPolicy {
    pub fn threshold(d: f64) -> Self {
        Self { threshold: d, failures: FailureSchedule::Reliable, budget: None }
    }

    /// Independent agents.
    pub fn never() -> Self {
        Self::threshold(f64::INFINITY)
    }

    pub fn validate(&self, agents: usize) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidArgument("communication threshold D must be positive"));
        }
        self.failures.validate(agents)
    }
}

/// Local statistics of one agent plus its copy of the last broadcast.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    delta_gram: Gram,
    delta_b: ObservationVector,
    delta_t: u64,
    delta_counts: Vec<u64>,
    synced_gram: Gram,
    synced_b: ObservationVector,
    synced_counts: Vec<u64>,
    // λI + synced_gram + delta_gram, maintained incrementally.
    view: DesignMatrix,
    view_b: ObservationVector,
    base_logdet: f64,
    samples: u64,
}

impl AgentState {
    pub fn new(id: usize, dim: usize, arms: usize, lambda: f64) -> Result<Self> {
        let view = DesignMatrix::regularized(dim, lambda)?;
        Ok(Self {
            id,
            delta_gram: Gram::zeros(dim),
            delta_b: ObservationVector::zeros(dim),
            delta_t: 0,
            delta_counts: vec![0; arms],
            synced_gram: Gram::zeros(dim),
            synced_b: ObservationVector::zeros(dim),
            synced_counts: vec![0; arms],
            base_logdet: view.logdet(),
            view,
            view_b: ObservationVector::zeros(dim),
            samples: 0,
        })
    }

    /// Effective `A_{t,m}` (incrementally maintained).
    pub fn design(&self) -> &DesignMatrix {
        &self.view
    }

    /// Effective `b_{t,m}`.
    pub fn observations(&self) -> &ObservationVector {
        &self.view_b
    }

    /// `T_{m,k} = T_k + ΔT_{m,k}`.
    pub fn pull_counts(&self) -> Vec<u64> {
        self.synced_counts.iter().zip(&self.delta_counts).map(|(a, b)| a + b).collect()
    }

    pub fn delta_gram(&self) -> &Gram {
        &self.delta_gram
    }

    pub fn delta_b(&self) -> &ObservationVector {
        &self.delta_b
    }

    pub fn delta_counts(&self) -> &[u64] {
        &self.delta_counts
    }

    /// Local pulls since the last successful upload.
    pub fn delta_t(&self) -> u64 {
        self.delta_t
    }

    /// Total pulls made by this agent, `τ_m`.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// `λI + A_coor` as of the last broadcast, log-determinant only.
    pub fn base_logdet(&self) -> f64 {
        self.base_logdet
    }

    /// `(λI + A_coor + ΔA, b_coor + Δb, T + ΔT)` recomposed from scratch.
    pub fn local_view(&self, lambda: f64) -> Result<(DesignMatrix, ObservationVector, Vec<u64>)> {
        let a = DesignMatrix::from_grams(lambda, &[&self.synced_gram, &self.delta_gram])?;
        let mut b = self.synced_b.clone();
        b.add_assign(&self.delta_b)?;
        Ok((a, b, self.pull_counts()))
    }

    /// Account for one pull of `arm` with context `x` and reward `r`.
    pub fn record(&mut self, arm: usize, x: &[f64], r: f64) -> Result<()> {
        self.delta_gram.add_outer(x)?;
        self.delta_b.add_scaled(x, r)?;
        self.view.rank_one_update(x)?;
        self.view_b.add_scaled(x, r)?;
        self.delta_counts[arm] += 1;
        self.delta_t += 1;
        self.samples += 1;
        Ok(())
    }

    /// `Δt · log(det A_{t,m} / det(λI + A_coor))`.
    pub fn trigger_statistic(&self) -> f64 {
        if self.delta_t == 0 {
            return 0.0;
        }
        self.delta_t as f64 * (self.view.logdet() - self.base_logdet).max(0.0)
    }

    fn reset_deltas(&mut self) {
        self.delta_gram.clear();
        self.delta_b.clear();
        self.delta_counts.iter_mut().for_each(|c| *c = 0);
        self.delta_t = 0;
    }

    fn receive(&mut self, coord: &CoordinatorState) -> Result<()> {
        self.synced_gram = coord.gram.clone();
        self.synced_b = coord.b.clone();
        self.synced_counts = coord.counts.clone();
        self.view = DesignMatrix::from_grams(coord.lambda, &[&self.synced_gram, &self.delta_gram])?;
        self.view_b = self.synced_b.clone();
        self.view_b.add_assign(&self.delta_b)?;
        self.base_logdet = coord.base_logdet;
        Ok(())
    }
}

/// `true` iff the trigger statistic strictly exceeds `D`.
pub fn comm_trigger(agent: &AgentState, threshold: f64) -> bool {
    agent.trigger_statistic() > threshold
}

/// Aggregates held by the coordinator.
#[derive(Debug, Clone)]
pub struct CoordinatorState {
    lambda: f64,
    gram: Gram,
    b: ObservationVector,
    counts: Vec<u64>,
    base_logdet: f64,
    pub sync_count: u64,
}

impl CoordinatorState {
    pub fn new(dim: usize, arms: usize, lambda: f64) -> Result<Self> {
        Ok(Self {
            lambda,
            gram: Gram::zeros(dim),
            b: ObservationVector::zeros(dim),
            counts: vec![0; arms],
            base_logdet: DesignMatrix::regularized(dim, lambda)?.logdet(),
            sync_count: 0,
        })
    }

    /// `A_coor` without regularization.
    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    pub fn observations(&self) -> &ObservationVector {
        &self.b
    }

    /// Global pull counts `T_k`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// One communication round: the coordinator adds the deltas of the
/// surviving agents in ascending id order, those agents reset, and every
/// agent receives the new aggregates.
pub fn synchronize(coord: &mut CoordinatorState, agents: &mut [AgentState], surviving: &[bool]) -> Result<()> {
    check_dim(agents.len(), surviving.len())?;
    let mut changed = false;
    for (agent, ok) in agents.iter_mut().zip(surviving) {
        if !ok {
            continue;
        }
        if agent.delta_t > 0 {
            coord.gram.add_assign(&agent.delta_gram)?;
            coord.b.add_assign(&agent.delta_b)?;
            for (t, dt) in coord.counts.iter_mut().zip(&agent.delta_counts) {
                *t += dt;
            }
            changed = true;
        }
        agent.reset_deltas();
    }
    if changed {
        coord.base_logdet = DesignMatrix::from_grams(coord.lambda, &[&coord.gram])?.logdet();
    }
    coord.sync_count += 1;
    for agent in agents.iter_mut() {
        agent.receive(coord)?;
    }
    Ok(())
}

/// Agents and coordinator without any decision logic. Shared by the run
/// loop and by trace replays.
#[derive(Debug, Clone)]
pub struct Network {
    pub agents: Vec<AgentState>,
    pub coordinator: CoordinatorState,
    failures: FailureSchedule,
    failure_rng: StreamRng,
}

impl Network {
    pub fn new(agents: usize, dim: usize, arms: usize, lambda: f64, failures: FailureSchedule, seed: u64) -> Result<Self> {
        failures.validate(agents)?;
        Ok(Self {
            agents: (0..agents).map(|m| AgentState::new(m, dim, arms, lambda)).collect::<Result<_>>()?,
            coordinator: CoordinatorState::new(dim, arms, lambda)?,
            failures,
            failure_rng: rng::stream(seed, FAILURE_STREAM),
        })
    }

    pub fn record(&mut self, agent: usize, arm: usize, x: &[f64], reward: f64) -> Result<()> {
        self.agents[agent].record(arm, x, reward)
    }

    pub fn any_trigger(&self, threshold: f64) -> bool {
        self.agents.iter().any(|a| comm_trigger(a, threshold))
    }

    /// Synchronize with the surviving set drawn from the failure schedule.
    /// Returns the mask that was used.
    pub fn sync(&mut self) -> Result<Vec<bool>> {
        let mask =
            self.failures.surviving(self.coordinator.sync_count, self.agents.len(), &mut self.failure_rng);
        synchronize(&mut self.coordinator, &mut self.agents, &mask)?;
        Ok(mask)
    }
}

/// Options of one DistLinGapE run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub confidence: ConfidenceConfig,
    pub policy: SyncPolicy,
    pub strategy: Strategy,
    pub max_rounds: u64,
    pub seed: u64,
    /// Per-agent positive context scales; `None` for identical contexts.
    pub agent_scales: Option<Vec<f64>>,
    /// Keep every pull in [`RunResult::trace`].
    pub record_trace: bool,
}

impl RunConfig {
    pub fn new(confidence: ConfidenceConfig, policy: SyncPolicy, strategy: Strategy, seed: u64) -> Self {
        Self {
            confidence,
            policy,
            strategy,
            max_rounds: DEFAULT_MAX_ROUNDS,
            seed,
            agent_scales: None,
            record_trace: false,
        }
    }
}

/// A single observed pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pull {
    pub round: u64,
    pub agent: usize,
    pub arm: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Identified arm `â*`.
    pub best_arm: usize,
    /// Pulls per agent, `τ_m`.
    pub tau_m: Vec<u64>,
    /// `τ = Σ τ_m`.
    pub tau: u64,
    pub comm_rounds: u64,
    pub per_arm_pulls: Vec<u64>,
    /// Identified arm is the true best and the run was not truncated.
    pub correct: bool,
    /// `max_rounds` ran out before any agent could stop.
    pub truncated: bool,
    /// Global round in which the run stopped (1-based).
    pub stop_round: u64,
    pub stopping_agent: Option<usize>,
    /// Rounds after which a sync happened.
    pub sync_rounds: Vec<u64>,
    pub trace: Vec<Pull>,
}

impl RunResult {
    /// `τ / M`.
    pub fn samples_per_agent(&self) -> f64 {
        self.tau as f64 / self.tau_m.len() as f64
    }
}

/// What happened in one global round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub round: u64,
    /// Arm pulled by each agent that acted.
    pub pulls: Vec<usize>,
    pub synced: bool,
    /// `(agent, arm)` when an agent certified a best arm.
    pub stopped: Option<(usize, usize)>,
}

/// Step-by-step DistLinGapE execution.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    env: &'a LinearEnvironment,
    base_arms: &'a ArmSet,
    agent_arms: Option<Vec<ArmSet>>,
    cfg: RunConfig,
    net: Network,
    noise: Vec<StreamRng>,
    caches: Vec<RatioCache>,
    round: u64,
    per_arm: Vec<u64>,
    last_direction: Vec<Option<Direction>>,
    stopped: Option<(usize, usize)>,
    sync_rounds: Vec<u64>,
    trace: Vec<Pull>,
}

impl<'a> Simulation<'a> {
    pub fn new(env: &'a LinearEnvironment, arms: &'a ArmSet, cfg: RunConfig) -> Result<Self> {
        let agents = cfg.confidence.agents;
        cfg.confidence.validate()?;
        cfg.policy.validate(agents)?;
        if cfg.max_rounds == 0 {
            return Err(Error::InvalidArgument("max_rounds must be at least 1"));
        }
        check_dim(arms.dim(), env.theta_star.len())?;
        let agent_arms = match &cfg.agent_scales {
            Some(scales) => {
                check_dim(agents, scales.len())?;
                Some(heterogeneous_view(arms, scales)?)
            }
            None => None,
        };
        let k = arms.len();
        let net = Network::new(agents, arms.dim(), k, cfg.confidence.lambda, cfg.policy.failures.clone(), cfg.seed)?;
        Ok(Self {
            env,
            base_arms: arms,
            agent_arms,
            noise: (0..agents).map(|m| rng::stream(cfg.seed, m as u64)).collect(),
            caches: (0..agents).map(|_| RatioCache::new(k)).collect(),
            net,
            round: 0,
            per_arm: vec![0; k],
            last_direction: vec![None; agents],
            stopped: None,
            sync_rounds: Vec::new(),
            trace: Vec::new(),
            cfg,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped.is_some()
    }

    pub fn arms_of(&self, agent: usize) -> &ArmSet {
        match &self.agent_arms {
            Some(v) => &v[agent],
            None => self.base_arms,
        }
    }

    /// Run one global round. Calling it after the run stopped is an error.
    pub fn step(&mut self) -> Result<RoundOutcome> {
        if self.stopped.is_some() {
            return Err(Error::InvalidArgument("run already stopped"));
        }
        self.round += 1;
        let round = self.round;
        let mut pulls = Vec::with_capacity(self.net.agents.len());
        if self.base_arms.len() == 1 {
            self.stopped = Some((0, 0));
            return Ok(RoundOutcome { round, pulls, synced: false, stopped: self.stopped });
        }
        for m in 0..self.net.agents.len() {
            let arms = match &self.agent_arms {
                Some(v) => &v[m],
                None => self.base_arms,
            };
            let agent = &self.net.agents[m];
            let dir = select_direction(arms, agent.design(), agent.observations(), &self.cfg.confidence)?;
            self.last_direction[m] = Some(dir);
            if check_stop(&dir, &self.cfg.confidence) {
                self.stopped = Some((m, dir.best));
                return Ok(RoundOutcome { round, pulls, synced: false, stopped: self.stopped });
            }
            let arm = match self.cfg.strategy {
                Strategy::Greedy => greedy_next_arm(arms, &dir, agent.design()),
                Strategy::Ratio => {
                    let sol = self.caches[m].get(arms, dir.best, dir.ambiguous)?;
                    ratio_next_arm(sol, &agent.pull_counts())?
                }
            };
            let x = arms.context(arm);
            let reward = self.env.sample_reward(arm, x, &mut self.noise[m])?;
            self.net.record(m, arm, x, reward)?;
            self.per_arm[arm] += 1;
            if self.cfg.record_trace {
                self.trace.push(Pull { round, agent: m, arm, reward });
            }
            pulls.push(arm);
        }
        let within_budget = self.cfg.policy.budget.is_none_or(|b| self.net.coordinator.sync_count < b);
        let synced = within_budget && self.net.any_trigger(self.cfg.policy.threshold);
        if synced {
            self.net.sync()?;
            self.sync_rounds.push(round);
        }
        Ok(RoundOutcome { round, pulls, synced, stopped: None })
    }

    /// Step until some agent stops or `max_rounds` is exhausted.
    pub fn run(mut self) -> Result<RunResult> {
        while self.stopped.is_none() && self.round < self.cfg.max_rounds {
            self.step()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> RunResult {
        let truth = self.env.best_arm(self.base_arms);
        let (best_arm, stopping_agent, truncated) = match self.stopped {
            Some((m, arm)) => (arm, Some(m), false),
            None => (self.last_direction[0].map_or(0, |d| d.best), None, true),
        };
        let tau_m: Vec<u64> = self.net.agents.iter().map(AgentState::samples).collect();
        RunResult {
            best_arm,
            tau: tau_m.iter().sum(),
            tau_m,
            comm_rounds: self.net.coordinator.sync_count,
            per_arm_pulls: self.per_arm,
            correct: !truncated && best_arm == truth,
            truncated,
            stop_round: self.round,
            stopping_agent,
            sync_rounds: self.sync_rounds,
            trace: self.trace,
        }
    }
}

/// Run DistLinGapE to completion.
pub fn run_distlingape(env: &LinearEnvironment, arms: &ArmSet, cfg: &RunConfig) -> Result<RunResult> {
    Simulation::new(env, arms, cfg.clone())?.run()
}

/// Threshold meeting a communication budget:
/// `D = M²·τ·d·log₂τ / B_c²`.
pub fn threshold_from_budget(agents: usize, tau_estimate: f64, dim: usize, budget: u64) -> Result<f64> {
    if budget == 0 {
        return Err(Error::InvalidArgument("communication budget must be positive"));
    }
    if agents == 0 || dim == 0 || !(tau_estimate >= 2.0) {
        return Err(Error::InvalidArgument("need M ≥ 1, d ≥ 1 and τ ≥ 2"));
    }
    let m = agents as f64;
    let b = budget as f64;
    Ok(m * m * tau_estimate * dim as f64 * tau_estimate.log2() / (b * b))
}

/// Communication bound `M·sqrt(τ·d·log₂τ / D)` with unit constant.
pub fn comm_bound(agents: usize, tau: f64, dim: usize, threshold: f64) -> f64 {
    agents as f64 * (tau * dim as f64 * tau.log2() / threshold).sqrt()
}

/// `S = T_single / T_per_agent`.
pub fn speedup(tau_single: f64, tau_per_agent: f64) -> f64 {
    tau_single / tau_per_agent
}
