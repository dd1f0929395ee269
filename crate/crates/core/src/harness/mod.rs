//! Experiment plumbing: configuration, seeded runs, sweeps and verification.

mod config;
mod run;
mod verify;

pub use config::{EnvironmentSpec, ExperimentSpec, LearnerSpec, OutputSpec, SweepSpec, VariationBounds};
pub use run::{cli_run, cli_sweep, replicate, BatchSummary, Replication, RunOutcome, SUMMARY_FILE, SWEEP_FILE};
pub use verify::{
    cli_verify, coverage_replication, coverage_suite, monotonicity_cases, CoverageOutcome, MonotonicityCase,
    PropertyResult, VerifyLevel,
};
