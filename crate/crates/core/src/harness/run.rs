//! Seeded replications, sweeps and their tabular outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::{EnvironmentSpec, ExperimentSpec};
use crate::error::{Error, Result};
use crate::learner::{assert_regret_bounds, counting_checks, run_learner, RestartMode, RunRecord};
use crate::nonstationary::NonstationaryMdp;
use crate::oracle::{evaluate_regret, RegretReport};

pub const SUMMARY_FILE: &str = "summary.tsv";
pub const SWEEP_FILE: &str = "sweep.tsv";
const SUMMARY_COLUMNS: &str = "seed\tmode\tregret\tbound_name\tbound_value\tsatisfied\tepisodes\tphases\tstatus";
const SWEEP_COLUMNS: &str =
    "mode\thorizon\tparameter\tvalue\tseed\tregret\tbound_name\tbound_value\tsatisfied\tepisodes\tphases\tstatus";

/// Headline numbers of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub seed: u64,
    pub mode: RestartMode,
    pub regret: f64,
    pub bound_name: String,
    pub bound_value: f64,
    pub satisfied: bool,
    pub episodes: usize,
    pub phases: usize,
}

/// Everything a replication produces.
#[derive(Debug, Clone)]
pub struct Replication {
    pub outcome: RunOutcome,
    pub env: NonstationaryMdp,
    pub record: RunRecord,
    pub report: RegretReport,
}

/// Runs one learner on `env` and evaluates it. The report's bound checks hold
/// the regret bound first, then the counting checks.
pub fn replicate(
    env: NonstationaryMdp,
    spec: &ExperimentSpec,
    mode: RestartMode,
    seed: u64,
) -> Result<Replication> {
    let cfg = spec.learner.config_for(mode, &env)?;
    let record = run_learner(&env, &cfg, seed)?;
    let mut report = evaluate_regret(&record, &env, spec.output.alt_regret, spec.output.curve)?;
    let mut checks = assert_regret_bounds(&record, &env, &report)?;
    let bound = checks[0].clone();
    checks.extend(counting_checks(&record));
    report.bound_checks = checks;
    let outcome = RunOutcome {
        seed,
        mode,
        regret: report.regret,
        bound_name: bound.name,
        bound_value: bound.bound,
        satisfied: bound.satisfied,
        episodes: record.episodes.len(),
        phases: record.phases.len(),
    };
    Ok(Replication { outcome, env, record, report })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))
}

fn outcome_cells(result: &std::result::Result<RunOutcome, String>) -> String {
    match result {
        Ok(o) => format!(
            "{}\t{}\t{}\t{}\t{}\t{}\tok",
            o.regret, o.bound_name, o.bound_value, o.satisfied, o.episodes, o.phases
        ),
        Err(msg) => format!("NA\tNA\tNA\tNA\tNA\tNA\tFAILED: {}", msg.replace(['\t', '\n'], " ")),
    }
}

fn write_replication(dir: &Path, rep: &Replication) -> Result<()> {
    let seed = rep.outcome.seed;
    fs::write(dir.join(format!("env_seed{seed}.json")), rep.env.to_json()?)?;
    fs::write(dir.join(format!("record_seed{seed}.txt")), rep.record.to_text()?)?;
    fs::write(dir.join(format!("regret_seed{seed}.txt")), rep.report.to_text())?;
    if let Some(curve) = rep.report.curve_table() {
        fs::write(dir.join(format!("curve_seed{seed}.tsv")), curve)?;
    }
    Ok(())
}

/// Result of `run` or `sweep`: rows in deterministic order plus failure count.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchSummary {
    pub rows: usize,
    pub failures: usize,
}

/// One replication per seed with the configured mode. Writes the environment,
/// record and regret files per seed and a summary table; failed seeds get a
/// `FAILED` row.
pub fn cli_run(spec: &ExperimentSpec) -> Result<BatchSummary> {
    spec.validate()?;
    fs::create_dir_all(&spec.out)?;
    let mode = spec.learner.mode;
    let results: Vec<Result<Replication>> = pool(spec.workers)?.install(|| {
        spec.seeds
            .par_iter()
            .map(|&seed| {
                let env = spec.environment.build(spec.horizon, seed)?;
                replicate(env, spec, mode, seed)
            })
            .collect()
    });

    let mut table = String::new();
    let _ = writeln!(table, "{SUMMARY_COLUMNS}");
    let mut failures = 0;
    for (seed, result) in spec.seeds.iter().zip(results) {
        let cells = match result {
            Ok(rep) => match write_replication(&spec.out, &rep) {
                Ok(()) => Ok(rep.outcome),
                Err(e) => Err(e.to_string()),
            },
            Err(e) => Err(e.to_string()),
        };
        failures += usize::from(cells.is_err());
        let _ = writeln!(table, "{seed}\t{mode}\t{}", outcome_cells(&cells));
    }
    fs::write(spec.out.join(SUMMARY_FILE), table)?;
    Ok(BatchSummary { rows: spec.seeds.len(), failures })
}

struct Cell {
    mode: RestartMode,
    horizon: usize,
    parameter: &'static str,
    value: String,
    environment: EnvironmentSpec,
    seed: u64,
}

fn sweep_cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let sweep = spec.sweep.clone().unwrap_or_default();
    let modes = sweep.modes.unwrap_or_else(|| vec![spec.learner.mode]);
    let horizons = sweep.horizons.unwrap_or_else(|| vec![spec.horizon]);
    let variants: Vec<(&'static str, String, EnvironmentSpec)> = match (&spec.environment, &sweep.budgets, &sweep.n_changes) {
        (EnvironmentSpec::Gradual { n_states, n_actions, seed, .. }, Some(budgets), _) => budgets
            .iter()
            .map(|&b| {
                let env = EnvironmentSpec::Gradual { n_states: *n_states, n_actions: *n_actions, budget: b, seed: *seed };
                ("budget", b.to_string(), env)
            })
            .collect(),
        (EnvironmentSpec::Abrupt { n_states, n_actions, magnitude, seed, .. }, _, Some(counts)) => counts
            .iter()
            .map(|&n| {
                let env = EnvironmentSpec::Abrupt {
                    n_states: *n_states,
                    n_actions: *n_actions,
                    n_changes: n,
                    magnitude: *magnitude,
                    seed: *seed,
                };
                ("n_changes", n.to_string(), env)
            })
            .collect(),
        (env, _, _) => vec![("base", "-".to_string(), env.clone())],
    };
    let mut cells = Vec::new();
    for &horizon in &horizons {
        for (parameter, value, environment) in &variants {
            for &mode in &modes {
                for &seed in &spec.seeds {
                    cells.push(Cell {
                        mode,
                        horizon,
                        parameter,
                        value: value.clone(),
                        environment: environment.clone(),
                        seed,
                    });
                }
            }
        }
    }
    cells
}

/// Cartesian product of the sweep dimensions and seeds, one row per run in
/// a long-format table. Environments depend only on (horizon, parameter,
/// seed), so every mode in a cell sees the same environment.
pub fn cli_sweep(spec: &ExperimentSpec) -> Result<BatchSummary> {
    spec.validate()?;
    if spec.sweep.is_none() {
        return Err(Error::InvalidConfig("sweep needs a [sweep] section".into()));
    }
    fs::create_dir_all(&spec.out)?;
    let cells = sweep_cells(spec);
    let results: Vec<std::result::Result<RunOutcome, String>> = pool(spec.workers)?.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let run = || -> Result<RunOutcome> {
                    let env = cell.environment.build(cell.horizon, cell.seed)?;
                    let mut cell_spec = spec.clone();
                    cell_spec.horizon = cell.horizon;
                    cell_spec.output.curve = false;
                    Ok(replicate(env, &cell_spec, cell.mode, cell.seed)?.outcome)
                };
                run().map_err(|e| e.to_string())
            })
            .collect()
    });
    let mut table = String::new();
    let _ = writeln!(table, "{SWEEP_COLUMNS}");
    let mut failures = 0;
    for (cell, result) in cells.iter().zip(&results) {
        failures += usize::from(result.is_err());
        let _ = writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}\t{}",
            cell.mode,
            cell.horizon,
            cell.parameter,
            cell.value,
            cell.seed,
            outcome_cells(result)
        );
    }
    fs::write(spec.out.join(SWEEP_FILE), table)?;
    Ok(BatchSummary { rows: cells.len(), failures })
}
