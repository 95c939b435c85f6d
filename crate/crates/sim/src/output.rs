//! CSV tables and the JSON metadata sidecar.
//!
//! Floats are written with Rust's shortest round-trip formatting and
//! missing values as empty cells, so identical runs give identical bytes.
//! Wall-clock times only go into the sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::ExperimentConfig;
use crate::harness::{Experiment, HarnessError, MetricsRecord, RunRecord};

pub const METRICS_HEADER: [&str; 20] = [
    "label",
    "scenario",
    "algorithm",
    "strategy",
    "agents",
    "threshold",
    "budget",
    "repetitions",
    "correct_rate",
    "truncated_runs",
    "tau_mean",
    "tau_m_mean",
    "tau_m_std",
    "speedup",
    "comm_rounds_mean",
    "cumulative_mean",
    "sample_bound",
    "sample_bound_violations",
    "comm_bound_violations",
    "per_arm_pulls_mean",
];

pub const RUNS_HEADER: [&str; 16] = [
    "label",
    "run",
    "seed",
    "best_arm",
    "correct",
    "truncated",
    "stop_round",
    "tau",
    "tau_m",
    "comm_rounds",
    "comm_bound",
    "comm_bound_ok",
    "sample_bound",
    "sample_bound_ok",
    "cumulative",
    "per_arm_pulls",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn joined<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn metrics_row(r: &MetricsRecord) -> Vec<String> {
    vec![
        r.label.clone(),
        r.scenario.clone(),
        r.algorithm.clone(),
        r.strategy.clone(),
        r.agents.to_string(),
        r.threshold.to_string(),
        opt(r.budget),
        r.repetitions.to_string(),
        r.correct_rate.to_string(),
        r.truncated_runs.to_string(),
        r.tau_mean.to_string(),
        r.tau_m_mean.to_string(),
        r.tau_m_std.to_string(),
        opt(r.speedup),
        r.comm_rounds_mean.to_string(),
        opt(r.cumulative_mean),
        opt(r.sample_bound),
        r.sample_bound_violations.to_string(),
        r.comm_bound_violations.to_string(),
        joined(&r.per_arm_pulls_mean),
    ]
}

pub fn run_row(label: &str, r: &RunRecord) -> Vec<String> {
    vec![
        label.to_string(),
        r.run.to_string(),
        r.seed.to_string(),
        r.best_arm.to_string(),
        r.correct.to_string(),
        r.truncated.to_string(),
        r.stop_round.to_string(),
        r.tau.to_string(),
        joined(&r.tau_m),
        r.comm_rounds.to_string(),
        r.comm_bound.to_string(),
        r.comm_bound_ok.to_string(),
        opt(r.sample_bound),
        opt(r.sample_bound_ok),
        opt(r.cumulative),
        joined(&r.per_arm_pulls),
    ]
}

/// `results.csv` → `results.runs.csv`, `results.meta.json`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn ensure_parent(path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

pub fn write_metrics(path: &Path, experiments: &[Experiment]) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for e in experiments {
        w.write_record(metrics_row(&e.record))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_runs(path: &Path, experiments: &[Experiment]) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUNS_HEADER)?;
    for e in experiments {
        for r in &e.runs {
            w.write_record(run_row(&e.record.label, r))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_metadata(path: &Path, command: &str, base: &ExperimentConfig, experiments: &[Experiment]) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let points: Vec<_> = experiments
        .iter()
        .map(|e| {
            json!({
                "label": e.record.label,
                "config": e.config,
                "seeds": (0..e.config.repetitions).map(|i| e.config.run_seed(i)).collect::<Vec<_>>(),
                "wall_clock_seconds": e.wall_seconds,
            })
        })
        .collect();
    let meta = json!({
        "tool": "distlingape",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed_policy": "run i uses seed base + i; agent m draws noise from stream(seed, m); upload failures and OFUL use dedicated streams of the same seed",
        "config": base,
        "points": points,
    });
    fs::write(path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

/// Metrics table, per-run table and sidecar next to `base.out`.
pub fn write_all(command: &str, base: &ExperimentConfig, experiments: &[Experiment]) -> Result<Vec<PathBuf>, HarnessError> {
    let out = &base.out;
    let runs = sibling(out, "runs.csv");
    let meta = sibling(out, "meta.json");
    write_metrics(out, experiments)?;
    write_runs(&runs, experiments)?;
    write_metadata(&meta, command, base, experiments)?;
    Ok(vec![out.clone(), runs, meta])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("out/r.csv"), "meta.json"), PathBuf::from("out/r.meta.json"));
        assert_eq!(sibling(Path::new("r"), "runs.csv"), PathBuf::from("r.runs.csv"));
    }

    #[test]
    fn optional_cells_are_empty() {
        assert_eq!(opt::<f64>(None), "");
        assert_eq!(joined(&[1u64, 2, 3]), "1;2;3");
    }
}
