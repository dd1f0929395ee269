use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use vucrl_core::harness::{cli_run, cli_sweep, cli_verify, ExperimentSpec, VerifyLevel};
use vucrl_core::learner::RestartMode;

#[derive(Parser)]
#[command(name = "vucrl", version, about = "Variation-aware UCRL experiments on non-stationary MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured learner once per seed.
    Run(Overrides),
    /// Run the Cartesian product of the [sweep] section.
    Sweep(Overrides),
    /// Run the property suites.
    Verify {
        #[arg(long, default_value = "fast", value_parser = parse_level)]
        verify_level: VerifyLevel,
    },
}

#[derive(Args)]
struct Overrides {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replication seeds, replacing the config's list.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    seed: Option<Vec<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RestartMode>,
    #[arg(long)]
    horizon: Option<usize>,
}

fn parse_level(s: &str) -> Result<VerifyLevel, String> {
    s.parse().map_err(|e: vucrl_core::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<RestartMode, String> {
    s.parse().map_err(|e: vucrl_core::Error| e.to_string())
}

impl Overrides {
    fn load(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::load(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        if let Some(seeds) = &self.seed {
            spec.seeds = seeds.clone();
        }
        if let Some(out) = &self.out {
            spec.out = out.clone();
        }
        if let Some(workers) = self.workers {
            spec.workers = workers;
        }
        if let Some(mode) = self.mode {
            spec.learner.mode = mode;
        }
        if let Some(horizon) = self.horizon {
            spec.horizon = horizon;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(o) => {
            let spec = o.load()?;
            let summary = cli_run(&spec)?;
            println!("{} runs, {} failed, outputs in {}", summary.rows, summary.failures, spec.out.display());
            Ok(summary.failures == 0)
        }
        Command::Sweep(o) => {
            let spec = o.load()?;
            let summary = cli_sweep(&spec)?;
            println!("{} runs, {} failed, outputs in {}", summary.rows, summary.failures, spec.out.display());
            Ok(summary.failures == 0)
        }
        Command::Verify { verify_level } => {
            let results = cli_verify(verify_level);
            for r in &results {
                println!("{r}");
            }
            Ok(results.iter().all(|r| r.passed))
        }
    }
}
