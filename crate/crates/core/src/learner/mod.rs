//! Online learners: variation-aware UCRL and its restart schemes.

mod bounds;
mod checks;
mod record;
mod schedule;

pub use bounds::{assert_regret_bounds, count_restart_bound, no_restart_bound, variation_restart_bound, BoundCheck};
pub use checks::{counting_checks, phase_count_limit};
pub use record::{EpisodeSummary, PhaseSummary, RunRecord, Step};
pub use schedule::{count_restart_steps, lengths_from_starts, variation_phase_lengths};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::confidence::{extended_value_iteration, make_plausible_set, EviResult, PlausibleSet, VisitStatistics};
use crate::error::{Error, Result};
use crate::nonstationary::{NonstationaryMdp, VariationSummary};
use crate::rng::trajectory_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartMode {
    /// A single run of the episodic algorithm over the whole horizon.
    NoRestart,
    /// Phases of length `⌈i²/V²⌉`, confidence `δ/(2τ²)`, per-phase variation widths.
    VariationRestart,
    /// Restarts at `⌈i³/(L+1)²⌉` with confidence `δ/L²` and no variation widening.
    CountRestart,
    /// The variation schedule with variation widths forced to zero.
    ZeroVariationRestart,
}

impl RestartMode {
    pub const ALL: [RestartMode; 4] = [
        RestartMode::NoRestart,
        RestartMode::VariationRestart,
        RestartMode::CountRestart,
        RestartMode::ZeroVariationRestart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RestartMode::NoRestart => "no-restart",
            RestartMode::VariationRestart => "variation-restart",
            RestartMode::CountRestart => "count-restart",
            RestartMode::ZeroVariationRestart => "zero-variation-restart",
        }
    }
}

impl std::fmt::Display for RestartMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RestartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RestartMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mode `{s}`")))
    }
}

/// Precision schedule for extended value iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EviEpsilon {
    /// `1 / sqrt(t_k)` with `t_k` the phase-local episode start.
    OneOverSqrtTk,
    Fixed(f64),
}

impl EviEpsilon {
    pub fn at(self, t_k: u64) -> f64 {
        match self {
            EviEpsilon::OneOverSqrtTk => 1.0 / (t_k as f64).sqrt(),
            EviEpsilon::Fixed(e) => e,
        }
    }
}

/// Where the variation parameters `Ṽ^r`, `Ṽ^p` come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationInput {
    /// Measured exactly from the environment (per phase where restarts apply).
    Known,
    /// User-supplied upper bounds, used for every phase.
    Bounds { reward: f64, transition: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub delta: f64,
    pub mode: RestartMode,
    pub variation: VariationInput,
    /// Number of changes `L`; required by, and only by, the count-restart mode.
    pub l_changes: Option<usize>,
    pub evi_epsilon: EviEpsilon,
}

impl LearnerConfig {
    pub fn new(mode: RestartMode, delta: f64) -> Self {
        LearnerConfig {
            delta,
            mode,
            variation: VariationInput::Known,
            l_changes: None,
            evi_epsilon: EviEpsilon::OneOverSqrtTk,
        }
    }

    pub fn with_l_changes(mut self, l: usize) -> Self {
        self.l_changes = Some(l);
        self
    }

    pub fn with_variation(mut self, variation: VariationInput) -> Self {
        self.variation = variation;
        self
    }

    pub fn with_evi_epsilon(mut self, eps: EviEpsilon) -> Self {
        self.evi_epsilon = eps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta {} is outside (0,1)", self.delta)));
        }
        match (self.mode, self.l_changes) {
            (RestartMode::CountRestart, None) => {
                return Err(Error::InvalidConfig("count-restart requires l_changes".into()))
            }
            (RestartMode::CountRestart, Some(_)) | (_, None) => {}
            (mode, Some(_)) => {
                return Err(Error::InvalidConfig(format!("l_changes is only valid for count-restart, not {mode}")))
            }
        }
        if let VariationInput::Bounds { reward, transition } = self.variation {
            if !(reward >= 0.0 && transition >= 0.0) {
                return Err(Error::InvalidConfig("variation bounds must be nonnegative".into()));
            }
        }
        if let EviEpsilon::Fixed(e) = self.evi_epsilon {
            if e.is_nan() || e <= 0.0 {
                return Err(Error::InvalidConfig("EVI epsilon must be positive".into()));
            }
        }
        Ok(())
    }
}

/// `v_k(s,a) ≥ max(1, N_k(s,a))`: the pair about to be played has doubled its count.
pub fn episode_should_end(stats: &VisitStatistics, s: usize, a: usize) -> bool {
    stats.n_episode(s, a) >= stats.n_before(s, a).max(1)
}

/// Parameters of one restart phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePlan {
    pub index: usize,
    /// First global step of the phase.
    pub start: usize,
    pub length: usize,
    pub delta: f64,
    pub v_tilde_r: f64,
    pub v_tilde_p: f64,
}

/// What an observer sees at the start of every episode.
pub struct EpisodeContext<'a> {
    pub phase: usize,
    pub episode: usize,
    /// Global step `t_k` at which the episode starts.
    pub start: usize,
    /// Phase-local episode start used in the confidence widths.
    pub local_start: u64,
    pub plan: &'a PhasePlan,
    pub stats: &'a VisitStatistics,
    pub set: &'a PlausibleSet,
    pub evi: &'a EviResult,
}

/// Runs one phase of the episodic algorithm with fresh statistics, starting
/// from the agent's current `state` and appending to `record`.
pub fn run_phase<R: Rng + ?Sized>(
    env: &NonstationaryMdp,
    plan: &PhasePlan,
    evi_epsilon: EviEpsilon,
    state: &mut usize,
    rng: &mut R,
    record: &mut RunRecord,
    observer: &mut dyn FnMut(&EpisodeContext<'_>),
) -> Result<()> {
    if plan.start == 0 || plan.start + plan.length - 1 > env.horizon() {
        return Err(Error::InvalidConfig(format!(
            "phase [{}, {}) does not fit the horizon {}",
            plan.start,
            plan.start + plan.length,
            env.horizon()
        )));
    }
    let mut stats = VisitStatistics::new(env.n_states(), env.n_actions());
    let end = plan.start + plan.length;
    let mut t = plan.start;
    let mut episode = 0usize;
    while t < end {
        let local_start = (t - plan.start + 1) as u64;
        let set = make_plausible_set(&stats, local_start, plan.delta, plan.v_tilde_r, plan.v_tilde_p)?;
        let evi = extended_value_iteration(&set, evi_epsilon.at(local_start))?;
        observer(&EpisodeContext {
            phase: plan.index,
            episode,
            start: t,
            local_start,
            plan,
            stats: &stats,
            set: &set,
            evi: &evi,
        });
        record.episodes.push(EpisodeSummary {
            phase: plan.index,
            index: episode,
            start: t,
            gain: evi.gain,
            policy: evi.policy.clone(),
        });
        while t < end {
            let s = *state;
            let a = evi.policy.action(s);
            if episode_should_end(&stats, s, a) {
                break;
            }
            let (reward, next) = env.snapshot(t)?.sample_step(s, a, rng);
            stats.record(s, a, reward, next);
            record.steps.push(Step { t, state: s, action: a, reward, episode, phase: plan.index });
            *state = next;
            t += 1;
        }
        stats.close_episode();
        episode += 1;
    }
    record.phases.push(PhaseSummary {
        index: plan.index,
        start: plan.start,
        length: plan.length,
        delta: plan.delta,
        v_tilde_r: plan.v_tilde_r,
        v_tilde_p: plan.v_tilde_p,
    });
    Ok(())
}

/// Splits the horizon into phases according to the configured mode.
pub fn plan_phases(env: &NonstationaryMdp, cfg: &LearnerConfig) -> Result<(Vec<PhasePlan>, Option<f64>)> {
    cfg.validate()?;
    let horizon = env.horizon();
    let needs_variation = matches!(cfg.variation, VariationInput::Known)
        && cfg.mode != RestartMode::CountRestart;
    let summary: Option<VariationSummary> = if needs_variation { Some(env.variation(false)?) } else { None };
    let (total_r, total_p) = match cfg.variation {
        VariationInput::Known => summary.as_ref().map_or((0.0, 0.0), |v| (v.v_r, v.v_p)),
        VariationInput::Bounds { reward, transition } => (reward, transition),
    };

    let (lengths, schedule_variation) = match cfg.mode {
        RestartMode::NoRestart => (vec![horizon], None),
        RestartMode::VariationRestart | RestartMode::ZeroVariationRestart => {
            (variation_phase_lengths(total_r, total_p, horizon), Some(total_r + total_p))
        }
        RestartMode::CountRestart => {
            let l = cfg.l_changes.expect("validated");
            (lengths_from_starts(&count_restart_steps(l, horizon), horizon), None)
        }
    };

    let mut plans = Vec::with_capacity(lengths.len());
    let mut start = 1usize;
    for (index, length) in lengths.into_iter().enumerate() {
        let tau = start as f64;
        let (delta, v_tilde_r, v_tilde_p) = match cfg.mode {
            RestartMode::NoRestart => (cfg.delta, total_r, total_p),
            RestartMode::VariationRestart => {
                let (r, p) = match (&summary, cfg.variation) {
                    (Some(v), VariationInput::Known) => v.window(start, length),
                    _ => (total_r, total_p),
                };
                (cfg.delta / (2.0 * tau * tau), r, p)
            }
            RestartMode::ZeroVariationRestart => (cfg.delta / (2.0 * tau * tau), 0.0, 0.0),
            RestartMode::CountRestart => {
                let l = cfg.l_changes.expect("validated").max(1) as f64;
                (cfg.delta / (l * l), 0.0, 0.0)
            }
        };
        plans.push(PhasePlan { index, start, length, delta, v_tilde_r, v_tilde_p });
        start += length;
    }
    Ok((plans, schedule_variation))
}

/// Runs the configured learner over the whole horizon of `env`.
pub fn run_learner(env: &NonstationaryMdp, cfg: &LearnerConfig, seed: u64) -> Result<RunRecord> {
    run_learner_observed(env, cfg, seed, &mut |_| {})
}

/// [`run_learner`] with a callback invoked at every episode start.
pub fn run_learner_observed(
    env: &NonstationaryMdp,
    cfg: &LearnerConfig,
    seed: u64,
    observer: &mut dyn FnMut(&EpisodeContext<'_>),
) -> Result<RunRecord> {
    let (plans, schedule_variation) = plan_phases(env, cfg)?;
    let mut rng = trajectory_rng(seed);
    let mut record = RunRecord::new(seed, cfg.clone(), env.n_states(), env.n_actions());
    record.schedule_variation = schedule_variation;
    let mut state = env.initial_state();
    for plan in &plans {
        run_phase(env, plan, cfg.evi_epsilon, &mut state, &mut rng, &mut record, observer)?;
    }
    Ok(record)
}

/// Variation-aware UCRL without restarts.
pub fn run_vaucrl(env: &NonstationaryMdp, cfg: &LearnerConfig, seed: u64) -> Result<RunRecord> {
    if cfg.mode != RestartMode::NoRestart {
        return Err(Error::InvalidConfig(format!("run_vaucrl needs no-restart mode, got {}", cfg.mode)));
    }
    run_learner(env, cfg, seed)
}

/// One of the restart schemes.
pub fn run_restarted(env: &NonstationaryMdp, cfg: &LearnerConfig, seed: u64) -> Result<RunRecord> {
    if cfg.mode == RestartMode::NoRestart {
        return Err(Error::InvalidConfig("run_restarted needs a restart mode".into()));
    }
    run_learner(env, cfg, seed)
}
