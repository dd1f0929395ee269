//! Property suites behind `vucrl verify`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::confidence::{extended_value_iteration, inner_max_transition, make_plausible_set, PlausibleSet, VisitStatistics};
use crate::error::Result;
use crate::generators::{diameter_counterexample, make_abrupt, make_gradual, random_mdp};
use crate::learner::{counting_checks, run_learner, run_learner_observed, LearnerConfig, RestartMode};
use crate::nonstationary::NonstationaryMdp;
use crate::oracle::window_values;
use crate::solver::{diameter, relative_value_iteration};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl std::str::FromStr for VerifyLevel {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            _ => Err(crate::error::Error::InvalidConfig(format!("unknown verify level `{s}`"))),
        }
    }
}

/// Outcome of one property suite.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn property(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> PropertyResult {
    match run() {
        Ok((passed, detail)) => PropertyResult { name, passed, detail },
        Err(e) => PropertyResult { name, passed: false, detail: format!("error: {e}") },
    }
}

/// Runs the suites for `level`, in a fixed order.
pub fn cli_verify(level: VerifyLevel) -> Vec<PropertyResult> {
    let mut out = vec![
        property("gain variation bound", gain_variation_suite),
        property("EVI matches value iteration", evi_equivalence_suite),
        property("inner maximisation dominates grid", inner_max_suite),
        property("counting bounds", || counting_suite(false)),
        property("episode count, tight form", || counting_suite(true)),
        property("two-state fixture diameters", fixture_suite),
        property("optimism monotonicity", monotonicity_suite),
    ];
    if level == VerifyLevel::Full {
        out.push(property("optimism coverage", || coverage_suite(200)));
    }
    out
}

fn gain_variation_suite() -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for seed in 0..20 {
        let env = if seed % 2 == 0 {
            make_abrupt(seed, 4, 2, 100, 3, 0.4)?
        } else {
            make_gradual(seed, 4, 2, 100, 0.8)?
        };
        let check = env.check_gain_variation()?;
        worst = worst.min(check.bound - check.v_global);
        failures += usize::from(!check.holds);
    }
    Ok((failures == 0, format!("20 environments, {failures} violations, min slack {worst:.3e}")))
}

fn evi_equivalence_suite() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (s, a) = (rng.gen_range(2..=5), rng.gen_range(1..=3));
        let mdp = random_mdp(&mut rng, s, a);
        let evi = extended_value_iteration(&PlausibleSet::singleton(&mdp), 1e-9)?;
        let rvi = relative_value_iteration(&mdp, 1e-9)?;
        worst = worst.max((evi.gain - rvi.gain).abs());
    }
    Ok((worst <= 2e-6, format!("20 MDPs, max gain gap {worst:.3e} (tolerance 2e-6)")))
}

fn inner_max_suite() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let steps = 100usize;
    let mut worst = f64::INFINITY;
    for _ in 0..50 {
        let p_hat = random_mdp(&mut rng, 3, 1).row(0, 0).to_vec();
        let values: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
        let width = rng.gen_range(0.0..2.0);
        let order = crate::confidence::value_order(&values);
        let p = inner_max_transition(&p_hat, width, &order);
        let objective = |q: &[f64]| q.iter().zip(&values).map(|(x, v)| x * v).sum::<f64>();
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let q = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
                if crate::mdp::l1_distance(&q, &p_hat) <= width {
                    grid_best = grid_best.max(objective(&q));
                }
            }
        }
        worst = worst.min(objective(&p) - grid_best);
    }
    Ok((worst >= -1e-12, format!("50 rows on a 0.01 grid, min advantage {worst:.3e}")))
}

/// Counting checks on runs of every mode, either only the tight episode-count
/// form (`tight = true`) or all the others.
fn counting_suite(tight: bool) -> Result<(bool, String)> {
    let mut failed = Vec::new();
    let mut runs = 0;
    for seed in 0..3u64 {
        let env = make_gradual(seed, 3, 2, 3000, 0.6)?;
        for mode in RestartMode::ALL {
            let mut cfg = LearnerConfig::new(mode, 0.05);
            if mode == RestartMode::CountRestart {
                cfg = cfg.with_l_changes(5);
            }
            let record = run_learner(&env, &cfg, seed)?;
            runs += 1;
            for c in counting_checks(&record).into_iter().filter(|c| (c.name == "episode_count") == tight) {
                if !c.satisfied {
                    failed.push(format!("{mode}/{seed} {} {} > {:.3}", c.name, c.observed, c.bound));
                }
            }
        }
    }
    let detail = if failed.is_empty() {
        format!("{runs} runs, all checks hold")
    } else {
        format!("{runs} runs, {} violations: {}", failed.len(), failed.join("; "))
    };
    Ok((failed.is_empty(), detail))
}

fn fixture_suite() -> Result<(bool, String)> {
    let d = 10.0;
    let (m1, m2, mixture) = diameter_counterexample(d)?;
    let (d1, d2, dm) = (diameter(&m1), diameter(&m2), diameter(&mixture));
    let passed = (d1 - d).abs() <= 1e-6 && (d2 - d).abs() <= 1e-6 && dm.is_infinite();
    Ok((passed, format!("D = {d}, M1 {d1}, M2 {d2}, mixture infinite = {}", dm.is_infinite())))
}

/// One optimistic-gain comparison for identical statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityCase {
    /// Optimistic gain with the true variation parameters.
    pub rho_true: f64,
    /// Optimistic gain with zero variation parameters.
    pub rho_zero: f64,
    /// `Ṽ^r + D·Ṽ^p`.
    pub allowance: f64,
}

impl MonotonicityCase {
    pub fn slack(&self) -> f64 {
        self.rho_zero + self.allowance - self.rho_true
    }
}

/// Replays a no-restart run with the true variation and, for up to
/// `max_cases` episode starts, solves EVI with both the true and zero
/// variation parameters at fixed precision `epsilon`.
pub fn monotonicity_cases(
    env: &NonstationaryMdp,
    seed: u64,
    max_cases: usize,
    epsilon: f64,
) -> Result<Vec<MonotonicityCase>> {
    let cfg = LearnerConfig::new(RestartMode::NoRestart, 0.05);
    let mut snapshots: Vec<(VisitStatistics, u64, f64, f64, f64)> = Vec::new();
    run_learner_observed(env, &cfg, seed, &mut |ctx| {
        if snapshots.len() < max_cases {
            snapshots.push((ctx.stats.clone(), ctx.local_start, ctx.plan.delta, ctx.plan.v_tilde_r, ctx.plan.v_tilde_p));
        }
    })?;
    let d = env.variation(false)?.d_max;
    snapshots
        .into_iter()
        .map(|(stats, t_k, delta, vr, vp)| {
            let with = extended_value_iteration(&make_plausible_set(&stats, t_k, delta, vr, vp)?, epsilon)?;
            let without = extended_value_iteration(&make_plausible_set(&stats, t_k, delta, 0.0, 0.0)?, epsilon)?;
            Ok(MonotonicityCase { rho_true: with.gain, rho_zero: without.gain, allowance: vr + d * vp })
        })
        .collect()
}

fn monotonicity_suite() -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let mut cases = 0;
    for seed in 0..4u64 {
        let env = make_abrupt(seed, 3, 2, 2000, 2, 0.05)?;
        for case in monotonicity_cases(&env, seed, 10, 1e-8)? {
            worst = worst.min(case.slack());
            cases += 1;
        }
    }
    Ok((worst >= -1e-4, format!("{cases} snapshots, min slack {worst:.3e} (tolerance 1e-4)")))
}

/// Whether a replication saw the true model leave the plausible set, or an
/// episode whose optimistic gain fails to cover the phase's optimal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageOutcome {
    pub excluded: bool,
    pub optimism_violated: bool,
}

impl CoverageOutcome {
    pub fn failed(&self) -> bool {
        self.excluded || self.optimism_violated
    }
}

/// Runs the variation-restart learner with true per-phase variation and
/// checks, for every episode, that `M_t` lies in the episode's plausible set
/// at each of its steps and that `max_s v*_θ(s) ≤ θ·ρ̃_k + D` over its phase
/// of length `θ`.
pub fn coverage_replication(env: &NonstationaryMdp, delta: f64, seed: u64) -> Result<CoverageOutcome> {
    let cfg = LearnerConfig::new(RestartMode::VariationRestart, delta);
    let mut sets: Vec<PlausibleSet> = Vec::new();
    let record = run_learner_observed(env, &cfg, seed, &mut |ctx| sets.push(ctx.set.clone()))?;
    let d = env.variation(false)?.d_max;
    let mut outcome = CoverageOutcome { excluded: false, optimism_violated: false };
    for phase in &record.phases {
        let best = window_values(env, phase.start, phase.length)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        for episode in record.episodes.iter().filter(|e| e.phase == phase.index) {
            if best > phase.length as f64 * episode.gain + d {
                outcome.optimism_violated = true;
            }
        }
    }
    for ((_, steps), set) in record.episode_slices().iter().zip(&sets) {
        for step in steps.iter() {
            if !set.contains(&*env.snapshot(step.t)?) {
                outcome.excluded = true;
                break;
            }
        }
    }
    Ok(outcome)
}

/// Fraction of failed replications on `S = 4, A = 2, T = 5000` drifting environments.
pub fn coverage_suite(replications: u64) -> Result<(bool, String)> {
    use rayon::prelude::*;
    let delta = 0.05;
    let outcomes: Vec<CoverageOutcome> = (0..replications)
        .into_par_iter()
        .map(|seed| {
            let env = make_abrupt(seed, 4, 2, 5000, 4, 0.3)?;
            coverage_replication(&env, delta, seed)
        })
        .collect::<Result<_>>()?;
    let failed = outcomes.iter().filter(|o| o.failed()).count();
    let fraction = failed as f64 / replications as f64;
    Ok((
        fraction <= delta + 0.03,
        format!("{failed}/{replications} replications failed, fraction {fraction:.3} (delta {delta}, allowed {:.2})", delta + 0.03),
    ))
}
