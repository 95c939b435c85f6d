//! Experiment configuration files.
//!
//! A config is a TOML document; every field has a default so an empty file
//! describes the d = 5 synthetic benchmark with four agents.
//!
//! ```toml
//! algorithm = "distlingape"   # distlingape | independent | oful
//! strategy = "ratio"          # ratio | greedy
//! agents = 4
//! threshold = 1.0             # D, `inf` disables communication
//! repetitions = 30
//! seed = 0
//!
//! [scenario]
//! kind = "synthetic"
//! d = 5
//! phi = 0.01
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use distlingape_core::bai::{ArmSet, ConfidenceConfig};
use distlingape_core::env::{build_synthetic, LinearEnvironment, ServicePlacementScenario};
use distlingape_core::linalg::dot;
use distlingape_core::protocol::{
    threshold_from_budget, FailureSchedule, RunConfig, Strategy, SyncPolicy, DEFAULT_MAX_ROUNDS,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Distlingape,
    /// DistLinGapE with `D = ∞`.
    Independent,
    /// Centralized M-batch OFUL.
    Oful,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Distlingape => "distlingape",
            Algorithm::Independent => "independent",
            Algorithm::Oful => "oful",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
pub enum Scenario {
    Synthetic {
        #[serde(default = "default_dim")]
        d: usize,
        #[serde(default = "default_phi")]
        phi: f64,
        #[serde(default = "default_noise")]
        noise_std: f64,
    },
    Service(ServicePlacementScenario),
}

fn default_dim() -> usize {
    5
}

fn default_phi() -> f64 {
    0.01
}

fn default_noise() -> f64 {
    1.0
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::Synthetic { d: default_dim(), phi: default_phi(), noise_std: default_noise() }
    }
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Synthetic { .. } => "synthetic",
            Scenario::Service(_) => "service",
        }
    }

    /// Arms and ground truth. Building the service scenario runs the
    /// delay Monte Carlo.
    pub fn build(&self) -> distlingape_core::Result<(ArmSet, LinearEnvironment)> {
        match self {
            Scenario::Synthetic { d, phi, noise_std } => {
                let (arms, mut env) = build_synthetic(*d, *phi)?;
                env = LinearEnvironment::new(env.theta_star, *noise_std);
                Ok((arms, env))
            }
            Scenario::Service(s) => {
                let inst = s.build()?;
                Ok((inst.arms, inst.env))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Int(v) => write!(f, "{v}"),
            AxisValue::Float(v) => write!(f, "{v}"),
            AxisValue::Text(v) => f.write_str(v),
        }
    }
}

/// Sweep description: `axis` takes each of `values`; every entry of `zip`
/// moves in lockstep with it.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<AxisValue>,
    #[serde(default)]
    pub zip: std::collections::BTreeMap<String, Vec<AxisValue>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub strategy: Strategy,
    pub agents: usize,
    /// Communication threshold `D`.
    pub threshold: f64,
    /// Communication budget `B_c`. Sets `D` from `tau_estimate` and caps
    /// the number of syncs.
    pub budget: Option<u64>,
    /// Expected total sample count used to turn a budget into `D`.
    pub tau_estimate: Option<f64>,
    pub delta_m: f64,
    pub epsilon: f64,
    pub lambda: f64,
    /// `S`; defaults to `‖θ*‖₂`.
    pub theta_bound: Option<f64>,
    /// `R`; defaults to the environment's largest noise std.
    pub noise_scale: Option<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub max_rounds: u64,
    /// Global rounds over which cumulative expected reward is tracked.
    /// Required for OFUL.
    pub horizon: Option<u64>,
    pub failures: FailureSchedule,
    pub agent_scales: Option<Vec<f64>>,
    /// Also run the `M = 1` counterpart and report the speedup.
    pub speedup_reference: bool,
    pub out: PathBuf,
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            algorithm: Algorithm::Distlingape,
            strategy: Strategy::Ratio,
            agents: 4,
            threshold: 1.0,
            budget: None,
            tau_estimate: None,
            delta_m: 0.05,
            epsilon: 0.0,
            lambda: 1.0,
            theta_bound: None,
            noise_scale: None,
            repetitions: 30,
            seed: 0,
            max_rounds: DEFAULT_MAX_ROUNDS,
            horizon: None,
            failures: FailureSchedule::Reliable,
            agent_scales: None,
            speedup_reference: false,
            out: PathBuf::from("results.csv"),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.to_string() })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Checks that do not require building the scenario.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.repetitions == 0 {
            return Err(invalid("repetitions", "must be at least 1"));
        }
        if self.agents == 0 {
            return Err(invalid("agents", "must be at least 1"));
        }
        if !(self.threshold > 0.0) {
            return Err(invalid("threshold", "must be positive (use inf to disable communication)"));
        }
        if !(self.delta_m > 0.0 && self.delta_m < 1.0) {
            return Err(invalid("delta_m", "must lie in (0, 1)"));
        }
        if self.agents as f64 * self.delta_m >= 1.0 {
            return Err(invalid("delta_m", "agents · delta_m must be below 1"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon", "must be nonnegative"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda", "must be positive and finite"));
        }
        if self.theta_bound.is_some_and(|s| !(s >= 0.0)) {
            return Err(invalid("theta_bound", "must be nonnegative"));
        }
        if self.noise_scale.is_some_and(|r| !(r >= 0.0)) {
            return Err(invalid("noise_scale", "must be nonnegative"));
        }
        if self.max_rounds == 0 {
            return Err(invalid("max_rounds", "must be at least 1"));
        }
        if let Some(b) = self.budget {
            if b == 0 {
                return Err(invalid("budget", "must be at least 1"));
            }
            if !self.tau_estimate.is_some_and(|t| t >= 2.0) {
                return Err(invalid("tau_estimate", "a budget needs an expected sample count of at least 2"));
            }
        }
        if self.algorithm == Algorithm::Oful && self.horizon.is_none() {
            return Err(invalid("horizon", "OFUL runs for a fixed number of rounds; set horizon"));
        }
        if self.horizon == Some(0) {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if let Some(scales) = &self.agent_scales {
            if scales.len() != self.agents {
                return Err(invalid("agent_scales", format!("expected {} entries, found {}", self.agents, scales.len())));
            }
            if scales.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
                return Err(invalid("agent_scales", "scales must be positive and finite"));
            }
        }
        match &self.failures {
            FailureSchedule::Bernoulli(p) if !(0.0..=1.0).contains(p) => {
                return Err(invalid("failures.bernoulli", "success probability must lie in [0, 1]"));
            }
            FailureSchedule::Explicit(sets) if sets.iter().flatten().any(|m| *m >= self.agents) => {
                return Err(invalid("failures.explicit", "names an agent id ≥ agents"));
            }
            _ => {}
        }
        match &self.scenario {
            Scenario::Synthetic { d, phi, noise_std } => {
                if *d < 2 {
                    return Err(invalid("scenario.d", "must be at least 2"));
                }
                if !phi.is_finite() {
                    return Err(invalid("scenario.phi", "must be finite"));
                }
                if !(*noise_std >= 0.0) {
                    return Err(invalid("scenario.noise_std", "must be nonnegative"));
                }
            }
            Scenario::Service(s) => {
                s.validate().map_err(|e| invalid("scenario", e.to_string()))?;
                if self.agents > s.cells {
                    return Err(invalid("agents", format!("the service scenario has only {} cells", s.cells)));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            for (name, values) in &sweep.zip {
                if values.len() != sweep.values.len() {
                    return Err(invalid(
                        &format!("sweep.zip.{name}"),
                        format!("has {} values, the axis has {}", values.len(), sweep.values.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Set one field by name, as used by sweeps.
    pub fn set(&mut self, axis: &str, value: &AxisValue) -> Result<(), ConfigError> {
        let text = value.to_string();
        fn parse<T: std::str::FromStr>(axis: &str, text: &str) -> Result<T, ConfigError> {
            text.parse().map_err(|_| invalid(axis, format!("cannot parse {text:?}")))
        }
        match axis {
            "agents" | "m" => self.agents = parse(axis, &text)?,
            "threshold" | "D" => self.threshold = parse(axis, &text)?,
            "budget" => self.budget = Some(parse(axis, &text)?),
            "delta_m" => self.delta_m = parse(axis, &text)?,
            "epsilon" => self.epsilon = parse(axis, &text)?,
            "lambda" => self.lambda = parse(axis, &text)?,
            "theta_bound" => self.theta_bound = Some(parse(axis, &text)?),
            "repetitions" => self.repetitions = parse(axis, &text)?,
            "seed" => self.seed = parse(axis, &text)?,
            "horizon" => self.horizon = Some(parse(axis, &text)?),
            "strategy" => {
                self.strategy = match text.as_str() {
                    "ratio" => Strategy::Ratio,
                    "greedy" => Strategy::Greedy,
                    _ => return Err(invalid(axis, format!("unknown strategy {text:?}"))),
                }
            }
            "algorithm" => {
                self.algorithm = match text.as_str() {
                    "distlingape" => Algorithm::Distlingape,
                    "independent" => Algorithm::Independent,
                    "oful" => Algorithm::Oful,
                    _ => return Err(invalid(axis, format!("unknown algorithm {text:?}"))),
                }
            }
            "d" | "dim" => match &mut self.scenario {
                Scenario::Synthetic { d, .. } => *d = parse(axis, &text)?,
                Scenario::Service(s) => s.periods = parse(axis, &text)?,
            },
            "phi" => match &mut self.scenario {
                Scenario::Synthetic { phi, .. } => *phi = parse(axis, &text)?,
                Scenario::Service(_) => return Err(invalid(axis, "only the synthetic scenario has phi")),
            },
            "k" | "K" | "services" => match &mut self.scenario {
                Scenario::Service(s) => s.services = parse(axis, &text)?,
                Scenario::Synthetic { .. } => {
                    return Err(invalid(axis, "the synthetic scenario has K = d + 1; sweep d instead"))
                }
            },
            "users_per_cell" => match &mut self.scenario {
                Scenario::Service(s) => s.users_per_cell = parse(axis, &text)?,
                Scenario::Synthetic { .. } => return Err(invalid(axis, "only the service scenario has users")),
            },
            "demand_noise" => match &mut self.scenario {
                Scenario::Service(s) => s.demand_noise = parse(axis, &text)?,
                Scenario::Synthetic { .. } => return Err(invalid(axis, "only the service scenario has demand noise")),
            },
            _ => return Err(invalid("sweep.axis", format!("unknown axis {axis:?}"))),
        }
        Ok(())
    }

    /// Effective threshold and cap after applying a budget.
    pub fn sync_policy(&self, dim: usize) -> Result<SyncPolicy, ConfigError> {
        let mut policy = SyncPolicy { threshold: self.threshold, failures: self.failures.clone(), budget: None };
        if self.algorithm == Algorithm::Independent {
            policy.threshold = f64::INFINITY;
            return Ok(policy);
        }
        if let Some(b) = self.budget {
            let tau = self.tau_estimate.unwrap_or(0.0);
            policy.threshold =
                threshold_from_budget(self.agents, tau, dim, b).map_err(|e| invalid("budget", e.to_string()))?;
            policy.budget = Some(b);
        }
        Ok(policy)
    }

    /// Confidence parameters for an instance, filling `S` and `R` from the
    /// ground truth when they are not given.
    pub fn confidence(&self, env: &LinearEnvironment) -> ConfidenceConfig {
        ConfidenceConfig {
            noise_scale: self.noise_scale.unwrap_or_else(|| env.noise_scale()),
            theta_bound: self.theta_bound.unwrap_or_else(|| dot(&env.theta_star, &env.theta_star).sqrt()),
            lambda: self.lambda,
            delta_m: self.delta_m,
            epsilon: self.epsilon,
            agents: self.agents,
        }
    }

    /// Protocol options for repetition `run`, seeded `seed + run`.
    pub fn run_config(&self, env: &LinearEnvironment, dim: usize, run: usize) -> Result<RunConfig, ConfigError> {
        Ok(RunConfig {
            confidence: self.confidence(env),
            policy: self.sync_policy(dim)?,
            strategy: self.strategy,
            max_rounds: self.max_rounds,
            seed: self.run_seed(run),
            agent_scales: self.agent_scales.clone(),
            record_trace: false,
        })
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed.wrapping_add(run as u64)
    }
}
