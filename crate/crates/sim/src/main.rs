use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use distlingape_core::env::ServicePlacementScenario;
use distlingape_core::protocol::Strategy;
use distlingape_sim::config::{Algorithm, AxisValue, ExperimentConfig, Scenario, SweepSpec};
use distlingape_sim::harness::{self, Experiment, HarnessError, Instance};
use distlingape_sim::output;

/// Simulator for distributed best-arm identification in linear bandits.
#[derive(Debug, Parser)]
#[command(name = "distlingape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured experiment and write its metrics.
    Run(Common),
    /// Run one experiment per value of a config field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Field to vary, e.g. agents, threshold, d, k, strategy.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values for the axis.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Another field moving in lockstep: `name=v1,v2,…`. Repeatable.
        #[arg(long = "zip", value_name = "NAME=VALUES")]
        zip: Vec<String>,
    },
    /// Check a config (and build its scenario) without running anything.
    Validate(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioKind {
    Synthetic,
    Service,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Ratio,
    Greedy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Distlingape,
    Independent,
    Oful,
}

/// Flags mirror config fields and override the file.
#[derive(Debug, Args)]
struct Common {
    /// TOML config; defaults apply when omitted.
    config: Option<PathBuf>,
    /// Base seed (default 0); run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Metrics CSV path (default results.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repetitions (default 30).
    #[arg(long)]
    reps: Option<usize>,
    /// Replace the scenario by a default one of this kind.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Number of agents M.
    #[arg(long)]
    agents: Option<usize>,
    /// Communication threshold D (`inf` disables communication).
    #[arg(long)]
    threshold: Option<f64>,
    /// Communication budget B_c; needs --tau-estimate.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    tau_estimate: Option<f64>,
    #[arg(long)]
    delta_m: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// S, the bound on ‖θ*‖.
    #[arg(long)]
    theta_bound: Option<f64>,
    /// R, the sub-Gaussian noise scale.
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Track cumulative expected reward over this many global rounds.
    #[arg(long)]
    horizon: Option<u64>,
    /// Also run the M = 1 counterpart and report the speedup.
    #[arg(long)]
    speedup_reference: bool,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(kind) = self.scenario {
            cfg.scenario = match kind {
                ScenarioKind::Synthetic => Scenario::default(),
                ScenarioKind::Service => Scenario::Service(ServicePlacementScenario::default()),
            };
        }
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v.into(); })*
            };
        }
        set! {
            seed => cfg.seed,
            out => cfg.out,
            reps => cfg.repetitions,
            agents => cfg.agents,
            threshold => cfg.threshold,
            delta_m => cfg.delta_m,
            epsilon => cfg.epsilon,
            lambda => cfg.lambda,
            max_rounds => cfg.max_rounds,
        }
        if let Some(v) = self.budget {
            cfg.budget = Some(v);
        }
        if let Some(v) = self.tau_estimate {
            cfg.tau_estimate = Some(v);
        }
        if let Some(v) = self.theta_bound {
            cfg.theta_bound = Some(v);
        }
        if let Some(v) = self.noise_scale {
            cfg.noise_scale = Some(v);
        }
        if let Some(v) = self.horizon {
            cfg.horizon = Some(v);
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = match a {
                AlgorithmArg::Distlingape => Algorithm::Distlingape,
                AlgorithmArg::Independent => Algorithm::Independent,
                AlgorithmArg::Oful => Algorithm::Oful,
            };
        }
        if let Some(s) = self.strategy {
            cfg.strategy = match s {
                StrategyArg::Ratio => Strategy::Ratio,
                StrategyArg::Greedy => Strategy::Greedy,
            };
        }
        if self.speedup_reference {
            cfg.speedup_reference = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_zip(spec: &str) -> Result<(String, Vec<AxisValue>), HarnessError> {
    let (name, values) = spec.split_once('=').ok_or_else(|| distlingape_sim::ConfigError::Invalid {
        field: "--zip".into(),
        message: format!("expected NAME=VALUES, found {spec:?}"),
    })?;
    Ok((name.to_string(), values.split(',').map(|v| AxisValue::Text(v.trim().to_string())).collect()))
}

fn report(experiments: &[Experiment]) {
    for e in experiments {
        let r = &e.record;
        let speedup = r.speedup.map(|s| format!(" speedup={s:.3}")).unwrap_or_default();
        let cumulative = r.cumulative_mean.map(|c| format!(" cumulative={c:.3}")).unwrap_or_default();
        println!(
            "{}: correct={:.3} tau={:.1} tau_m={:.1}±{:.1} comm={:.2} truncated={}{}{}",
            r.label, r.correct_rate, r.tau_mean, r.tau_m_mean, r.tau_m_std, r.comm_rounds_mean, r.truncated_runs,
            speedup, cumulative
        );
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let experiments = vec![harness::run_experiment(&cfg)?];
            report(&experiments);
            for path in output::write_all("run", &cfg, &experiments)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Sweep { common, axis, values, zip } => {
            let mut cfg = common.resolve()?;
            if let Some(axis) = axis {
                let mut spec = SweepSpec {
                    axis,
                    values: values.into_iter().map(AxisValue::Text).collect(),
                    zip: Default::default(),
                };
                for z in &zip {
                    let (name, vals) = parse_zip(z)?;
                    spec.zip.insert(name, vals);
                }
                cfg.sweep = Some(spec);
                cfg.validate()?;
            }
            let spec = cfg.sweep.clone().ok_or_else(|| distlingape_sim::ConfigError::Invalid {
                field: "sweep".into(),
                message: "give --axis/--values or a [sweep] table".into(),
            })?;
            let experiments = harness::sweep(&cfg, &spec)?;
            report(&experiments);
            for path in output::write_all("sweep", &cfg, &experiments)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Validate(common) => {
            let cfg = common.resolve()?;
            if let Some(spec) = &cfg.sweep {
                harness::sweep_points(&cfg, spec)?;
            }
            let inst = Instance::build(&cfg)?;
            println!(
                "ok: {} scenario, K={}, d={}, best arm {} (0-based)",
                cfg.scenario.name(),
                inst.arms.len(),
                inst.dim(),
                inst.best_arm
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
