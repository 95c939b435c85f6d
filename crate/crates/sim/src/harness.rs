//! Seeded repetitions, aggregation and sweeps.
//!
//! Repetition `i` uses seed `base + i`; inside a run, agent `m` draws its
//! noise from `stream(seed, m)`. Runs execute in parallel but are collected
//! and aggregated in run-index order, so every number written out is
//! independent of the thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use distlingape_core::bai::{problem_complexity, sample_complexity_bound, ArmSet};
use distlingape_core::baselines::{cumulative_delay, oful_batch_round, OfulState};
use distlingape_core::env::LinearEnvironment;
use distlingape_core::linalg::rls_estimate;
use distlingape_core::protocol::{comm_bound, Simulation};
use rayon::prelude::*;

use crate::config::{Algorithm, AxisValue, ConfigError, ExperimentConfig, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Core(#[from] distlingape_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write output: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write metadata: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit status: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            _ => 2,
        }
    }
}

/// A built scenario together with quantities shared by all repetitions.
#[derive(Debug, Clone)]
pub struct Instance {
    pub arms: ArmSet,
    pub env: LinearEnvironment,
    pub best_arm: usize,
    /// `H_ε`; `None` when the best arm is not unique.
    pub hardness: Option<f64>,
    /// Largest context norm any agent sees.
    pub norm_bound: f64,
}

impl Instance {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let (arms, env) = cfg.scenario.build()?;
        Self::from_parts(cfg, arms, env)
    }

    pub fn from_parts(cfg: &ExperimentConfig, arms: ArmSet, env: LinearEnvironment) -> Result<Self, HarnessError> {
        if cfg.algorithm == Algorithm::Oful && cfg.agents > arms.len() {
            return Err(ConfigError::Invalid {
                field: "agents".into(),
                message: format!("OFUL picks {} distinct arms but there are only {}", cfg.agents, arms.len()),
            }
            .into());
        }
        let scale = cfg.agent_scales.as_ref().map_or(1.0, |s| s.iter().copied().fold(0.0, f64::max));
        Ok(Self {
            best_arm: env.best_arm(&arms),
            hardness: problem_complexity(&arms, &env.theta_star, cfg.epsilon).ok(),
            norm_bound: arms.norm_bound() * scale,
            arms,
            env,
        })
    }

    pub fn dim(&self) -> usize {
        self.arms.dim()
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub best_arm: usize,
    pub correct: bool,
    pub truncated: bool,
    pub stop_round: u64,
    pub tau: u64,
    pub tau_m: Vec<u64>,
    pub comm_rounds: u64,
    pub per_arm_pulls: Vec<u64>,
    /// Evaluated communication bound `M·sqrt(τ d log₂τ / D)`.
    pub comm_bound: f64,
    pub comm_bound_ok: bool,
    /// Evaluated per-agent sample bound, if a λ case applies.
    pub sample_bound: Option<f64>,
    pub sample_bound_ok: Option<bool>,
    /// Cumulative expected reward over the horizon.
    pub cumulative: Option<f64>,
}

/// Aggregate over all repetitions of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub label: String,
    pub scenario: String,
    pub algorithm: String,
    pub strategy: String,
    pub agents: usize,
    pub threshold: f64,
    pub budget: Option<u64>,
    pub repetitions: usize,
    pub correct_rate: f64,
    pub truncated_runs: usize,
    pub tau_mean: f64,
    /// Mean of `τ_m` over runs and agents.
    pub tau_m_mean: f64,
    pub tau_m_std: f64,
    /// `τ_𝒪 / τ_m` against the `M = 1` counterpart.
    pub speedup: Option<f64>,
    pub comm_rounds_mean: f64,
    pub cumulative_mean: Option<f64>,
    pub sample_bound: Option<f64>,
    pub sample_bound_violations: usize,
    pub comm_bound_violations: usize,
    pub per_arm_pulls_mean: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub record: MetricsRecord,
    pub runs: Vec<RunRecord>,
    pub wall_seconds: f64,
}

/// Rounds of arm indices for the first `horizon` global rounds. After the
/// run stops, every agent keeps deploying the identified arm.
fn deployment_rounds(partial: Vec<Vec<usize>>, horizon: u64, agents: usize, best: Option<usize>) -> Vec<Vec<usize>> {
    let mut rounds = partial;
    if let Some(best) = best {
        if let Some(last) = rounds.last_mut() {
            last.resize(agents, best);
        }
        while (rounds.len() as u64) < horizon {
            rounds.push(vec![best; agents]);
        }
    }
    rounds
}

pub fn run_distlingape_once(cfg: &ExperimentConfig, inst: &Instance, run: usize) -> Result<RunRecord, HarnessError> {
    let rc = cfg.run_config(&inst.env, inst.dim(), run)?;
    let confidence = rc.confidence.clone();
    let threshold = rc.policy.threshold;
    let seed = rc.seed;
    let mut sim = Simulation::new(&inst.env, &inst.arms, rc)?;
    let mut cumulative = None;
    if let Some(h) = cfg.horizon {
        let mut rounds = Vec::new();
        let mut stopped = None;
        while (rounds.len() as u64) < h && sim.round() < cfg.max_rounds {
            let outcome = sim.step()?;
            rounds.push(outcome.pulls);
            if let Some((_, arm)) = outcome.stopped {
                stopped = Some(arm);
                break;
            }
        }
        let rounds = deployment_rounds(rounds, h, cfg.agents, stopped);
        cumulative = cumulative_delay(&rounds, &inst.arms, &inst.env).last().copied();
    }
    let result = if sim.is_stopped() { sim.finish() } else { sim.run()? };

    let dim = inst.dim();
    let cb = if result.tau >= 2 { comm_bound(cfg.agents, result.tau as f64, dim, threshold) } else { 0.0 };
    let sample_bound = inst.hardness.and_then(|h| {
        sample_complexity_bound(h, &confidence, inst.arms.len(), dim, inst.norm_bound).best()
    });
    Ok(RunRecord {
        run,
        seed,
        best_arm: result.best_arm,
        correct: result.correct,
        truncated: result.truncated,
        stop_round: result.stop_round,
        tau: result.tau,
        comm_rounds: result.comm_rounds,
        comm_bound: cb,
        comm_bound_ok: result.comm_rounds as f64 <= cb || result.comm_rounds == 0,
        sample_bound_ok: sample_bound.map(|b| result.tau_m.iter().all(|t| *t as f64 <= b)),
        sample_bound,
        tau_m: result.tau_m,
        per_arm_pulls: result.per_arm_pulls,
        cumulative,
    })
}

pub fn run_oful_once(cfg: &ExperimentConfig, inst: &Instance, run: usize) -> Result<RunRecord, HarnessError> {
    let horizon = cfg.horizon.unwrap_or(0);
    let seed = cfg.run_seed(run);
    let mut state = OfulState::new(inst.dim(), cfg.confidence(&inst.env), seed)?;
    let mut rounds = Vec::with_capacity(horizon as usize);
    for _ in 0..horizon {
        rounds.push(oful_batch_round(&mut state, &inst.arms, &inst.env, cfg.agents)?);
    }
    let theta = rls_estimate(&state.design, &state.observations)?.theta_hat;
    let best_arm = inst.arms.argmax(&theta);
    let mut per_arm = vec![0u64; inst.arms.len()];
    let mut tau_m = vec![0u64; cfg.agents];
    for round in &rounds {
        for (m, &k) in round.iter().enumerate() {
            per_arm[k] += 1;
            tau_m[m] += 1;
        }
    }
    Ok(RunRecord {
        run,
        seed,
        best_arm,
        correct: best_arm == inst.best_arm,
        truncated: false,
        stop_round: horizon,
        tau: tau_m.iter().sum(),
        tau_m,
        comm_rounds: 0,
        per_arm_pulls: per_arm,
        comm_bound: 0.0,
        comm_bound_ok: true,
        sample_bound: None,
        sample_bound_ok: None,
        cumulative: cumulative_delay(&rounds, &inst.arms, &inst.env).last().copied(),
    })
}

pub fn run_once(cfg: &ExperimentConfig, inst: &Instance, run: usize) -> Result<RunRecord, HarnessError> {
    match cfg.algorithm {
        Algorithm::Oful => run_oful_once(cfg, inst, run),
        Algorithm::Distlingape | Algorithm::Independent => run_distlingape_once(cfg, inst, run),
    }
}

/// All repetitions, in run-index order.
pub fn run_all(cfg: &ExperimentConfig, inst: &Instance) -> Result<Vec<RunRecord>, HarnessError> {
    (0..cfg.repetitions).into_par_iter().map(|i| run_once(cfg, inst, i)).collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Aggregate `runs`, which must be sorted by run index.
pub fn aggregate(label: &str, cfg: &ExperimentConfig, runs: &[RunRecord], reference: Option<f64>) -> MetricsRecord {
    let n = runs.len() as f64;
    let per_agent: Vec<f64> = runs.iter().flat_map(|r| r.tau_m.iter().map(|t| *t as f64)).collect();
    let tau_m_mean = mean(per_agent.iter().copied());
    let tau_m_std = if per_agent.len() > 1 {
        let ss: f64 = per_agent.iter().map(|t| (t - tau_m_mean) * (t - tau_m_mean)).sum();
        (ss / (per_agent.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let arms = runs.first().map_or(0, |r| r.per_arm_pulls.len());
    let per_arm_pulls_mean = (0..arms).map(|k| mean(runs.iter().map(|r| r.per_arm_pulls[k] as f64))).collect();
    let cumulative_mean =
        if runs.iter().all(|r| r.cumulative.is_some()) && !runs.is_empty() {
            Some(mean(runs.iter().filter_map(|r| r.cumulative)))
        } else {
            None
        };
    MetricsRecord {
        label: label.to_string(),
        scenario: cfg.scenario.name().to_string(),
        algorithm: cfg.algorithm.to_string(),
        strategy: format!("{:?}", cfg.strategy).to_lowercase(),
        agents: cfg.agents,
        threshold: if cfg.algorithm == Algorithm::Independent { f64::INFINITY } else { cfg.threshold },
        budget: cfg.budget,
        repetitions: runs.len(),
        correct_rate: runs.iter().filter(|r| r.correct).count() as f64 / n,
        truncated_runs: runs.iter().filter(|r| r.truncated).count(),
        tau_mean: mean(runs.iter().map(|r| r.tau as f64)),
        tau_m_mean,
        tau_m_std,
        speedup: reference.map(|t| t / tau_m_mean),
        comm_rounds_mean: mean(runs.iter().map(|r| r.comm_rounds as f64)),
        cumulative_mean,
        sample_bound: runs.first().and_then(|r| r.sample_bound),
        sample_bound_violations: runs.iter().filter(|r| r.sample_bound_ok == Some(false)).count(),
        comm_bound_violations: runs.iter().filter(|r| !r.comm_bound_ok).count(),
        per_arm_pulls_mean,
    }
}

/// The single-agent counterpart used as the speedup reference.
pub fn reference_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        agents: 1,
        algorithm: Algorithm::Distlingape,
        agent_scales: None,
        failures: Default::default(),
        budget: None,
        horizon: None,
        speedup_reference: false,
        sweep: None,
        ..cfg.clone()
    }
}

fn reference_tau(
    cfg: &ExperimentConfig,
    cache: &mut BTreeMap<String, f64>,
) -> Result<Option<f64>, HarnessError> {
    if !cfg.speedup_reference || cfg.algorithm == Algorithm::Oful {
        return Ok(None);
    }
    let rc = reference_config(cfg);
    let key = rc.to_toml();
    if let Some(t) = cache.get(&key) {
        return Ok(Some(*t));
    }
    let inst = Instance::build(&rc)?;
    let runs = run_all(&rc, &inst)?;
    let t = aggregate("reference", &rc, &runs, None).tau_m_mean;
    cache.insert(key, t);
    Ok(Some(t))
}

fn run_labeled(
    label: &str,
    cfg: &ExperimentConfig,
    cache: &mut BTreeMap<String, f64>,
) -> Result<Experiment, HarnessError> {
    let start = Instant::now();
    let inst = Instance::build(cfg)?;
    let runs = run_all(cfg, &inst)?;
    let reference = reference_tau(cfg, cache)?;
    let record = aggregate(label, cfg, &runs, reference);
    Ok(Experiment { config: cfg.clone(), record, runs, wall_seconds: start.elapsed().as_secs_f64() })
}

/// Execute `cfg.repetitions` seeded runs and aggregate them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment, HarnessError> {
    run_labeled("run", cfg, &mut BTreeMap::new())
}

/// Point configurations of a sweep, labelled `axis=value`.
pub fn sweep_points(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<(String, ExperimentConfig)>, HarnessError> {
    let mut base = cfg.clone();
    base.sweep = None;
    let mut points = Vec::with_capacity(spec.values.len());
    for (i, value) in spec.values.iter().enumerate() {
        let mut point = base.clone();
        point.set(&spec.axis, value)?;
        let mut label = format!("{}={}", spec.axis, value);
        for (name, values) in &spec.zip {
            let v: &AxisValue = values.get(i).ok_or_else(|| ConfigError::Invalid {
                field: format!("sweep.zip.{name}"),
                message: "fewer values than the axis".into(),
            })?;
            point.set(name, v)?;
            label.push_str(&format!(";{name}={v}"));
        }
        point.validate()?;
        points.push((label, point));
    }
    Ok(points)
}

/// One experiment per sweep value, in sweep order.
pub fn sweep(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<Experiment>, HarnessError> {
    let mut cache = BTreeMap::new();
    sweep_points(cfg, spec)?.iter().map(|(label, point)| run_labeled(label, point, &mut cache)).collect()
}
