//! Ground truth for regret: the optimal time-dependent `T`-step value by
//! backward induction, and regret reports for recorded runs.

use std::borrow::Cow;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{BoundCheck, RunRecord};
use crate::mdp::StationaryMdp;
use crate::nonstationary::{NonstationaryMdp, GLOBAL_VARIATION_CAP};
use crate::solver::optimal_gain;

/// Largest `T·S` for which a full value table is kept.
pub const TABLE_CAP: usize = 100_000_000;
/// Largest `T²·S²·A / 2` accepted when computing the prefix regret curve.
pub const CURVE_WORK_CAP: f64 = 4e9;

/// Optimal expected rewards under the best time-dependent policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TStepValue {
    /// `v*_T(s_1)`.
    pub v_star: f64,
    /// `table[t - 1][s]` is the optimal expected reward collected over steps
    /// `t..=T` starting in `s` at step `t`, when requested.
    pub table: Option<Vec<Vec<f64>>>,
}

/// One Bellman backup `u ← max_a r̄(s,a) + p(·|s,a)·u` into `out`.
fn backup(mdp: &StationaryMdp, u: &[f64], out: &mut [f64]) {
    for (s, slot) in out.iter_mut().enumerate() {
        let mut best = f64::NEG_INFINITY;
        for a in 0..mdp.n_actions() {
            let q = mdp.reward(s, a) + mdp.row(s, a).iter().zip(u).map(|(p, v)| p * v).sum::<f64>();
            if q > best {
                best = q;
            }
        }
        *slot = best;
    }
}

/// Optimal values over the window of `len` steps starting at `start`, for every initial state.
pub fn window_values(env: &NonstationaryMdp, start: usize, len: usize) -> Result<Vec<f64>> {
    check_window(env, start, len)?;
    let n = env.n_states();
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    for t in (start..start + len).rev() {
        backup(&*env.snapshot(t)?, &u, &mut next);
        std::mem::swap(&mut u, &mut next);
    }
    Ok(u)
}

fn check_window(env: &NonstationaryMdp, start: usize, len: usize) -> Result<()> {
    if start == 0 || start + len > env.horizon() + 1 {
        return Err(Error::StepOutOfRange { t: start + len.saturating_sub(1), horizon: env.horizon() });
    }
    Ok(())
}

/// Backward induction over steps `1..=T` from `u_{T+1} = 0`.
pub fn optimal_tstep_value(env: &NonstationaryMdp, s1: usize, horizon: usize, keep_table: bool) -> Result<TStepValue> {
    if s1 >= env.n_states() {
        return Err(Error::InvalidEnvironment(format!("initial state {s1} out of range")));
    }
    check_window(env, 1, horizon)?;
    let n = env.n_states();
    if keep_table && horizon.saturating_mul(n) > TABLE_CAP {
        return Err(Error::TooExpensive { what: "value table", count: horizon * n, cap: TABLE_CAP });
    }
    let mut table = keep_table.then(|| Vec::with_capacity(horizon));
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    for t in (1..=horizon).rev() {
        backup(&*env.snapshot(t)?, &u, &mut next);
        std::mem::swap(&mut u, &mut next);
        if let Some(table) = table.as_mut() {
            table.push(u.clone());
        }
    }
    if let Some(table) = table.as_mut() {
        table.reverse();
    }
    Ok(TStepValue { v_star: u[s1], table })
}

/// `v*_t(s_1)` for every prefix length `t = 1..=T`.
///
/// Each prefix needs its own backward pass, so the work grows with `T²`; refused
/// above [`CURVE_WORK_CAP`].
pub fn prefix_optimal_values(env: &NonstationaryMdp, s1: usize, horizon: usize) -> Result<Vec<f64>> {
    check_window(env, 1, horizon)?;
    let (s, a) = (env.n_states() as f64, env.n_actions() as f64);
    let work = (horizon as f64).powi(2) * s * s * a / 2.0;
    if work > CURVE_WORK_CAP {
        return Err(Error::TooExpensive { what: "regret curve", count: work as usize, cap: CURVE_WORK_CAP as usize });
    }
    let snapshots: Vec<Cow<'_, StationaryMdp>> = (1..=horizon).map(|t| env.snapshot(t)).collect::<Result<_>>()?;
    let n = env.n_states();
    let mut out = Vec::with_capacity(horizon);
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    for t in 1..=horizon {
        u.iter_mut().for_each(|x| *x = 0.0);
        for mdp in snapshots[..t].iter().rev() {
            backup(mdp, &u, &mut next);
            std::mem::swap(&mut u, &mut next);
        }
        out.push(u[s1]);
    }
    Ok(out)
}

/// `Σ_t ρ*(M_t)` over `1..=T`, solving each distinct snapshot once.
pub fn summed_optimal_gains(env: &NonstationaryMdp, horizon: usize) -> Result<f64> {
    check_window(env, 1, horizon)?;
    let distinct = env.with_horizon(horizon)?.distinct_snapshots();
    if distinct > GLOBAL_VARIATION_CAP {
        return Err(Error::TooExpensive { what: "per-step optimal gains", count: distinct, cap: GLOBAL_VARIATION_CAP });
    }
    let mut total = 0.0;
    let mut prev: Option<(Cow<'_, StationaryMdp>, f64)> = None;
    for t in 1..=horizon {
        let mdp = env.snapshot(t)?;
        let reuse = match (&prev, &mdp) {
            (Some((Cow::Borrowed(p), g)), Cow::Borrowed(m)) if std::ptr::eq(*p, *m) => Some(*g),
            _ => None,
        };
        let gain = match reuse {
            Some(g) => g,
            None => optimal_gain(&mdp)?,
        };
        total += gain;
        prev = Some((mdp, gain));
    }
    Ok(total)
}

/// Regret of one recorded run against the non-stationary optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub v_star_t: f64,
    pub realized_reward: f64,
    /// `v_star_t - realized_reward`; negative on lucky runs.
    pub regret: f64,
    /// Prefix regrets `v*_t(s_1) - Σ_{τ≤t} r_τ`, when computed.
    pub regret_curve: Option<Vec<f64>>,
    /// `Σ_t (ρ*(M_t) - r_t)`, when requested.
    pub alt_regret: Option<f64>,
    pub bound_checks: Vec<BoundCheck>,
}

/// Regret of `record` against `env`. Bound checks are left empty; see
/// [`crate::learner::assert_regret_bounds`].
pub fn evaluate_regret(
    record: &RunRecord,
    env: &NonstationaryMdp,
    include_alt: bool,
    include_curve: bool,
) -> Result<RegretReport> {
    if record.len() != env.horizon() {
        return Err(Error::LengthMismatch(format!(
            "record has {} steps, environment horizon is {}",
            record.len(),
            env.horizon()
        )));
    }
    if let Some((i, step)) = record.steps.iter().enumerate().find(|(i, s)| s.t != i + 1) {
        return Err(Error::LengthMismatch(format!("row {i} carries step {}", step.t)));
    }
    let horizon = env.horizon();
    let s1 = env.initial_state();
    let v_star_t = optimal_tstep_value(env, s1, horizon, false)?.v_star;
    let realized_reward = record.total_reward();
    let regret_curve = if include_curve {
        let prefix = prefix_optimal_values(env, s1, horizon)?;
        let mut collected = 0.0;
        let curve: Vec<f64> = prefix
            .iter()
            .zip(&record.steps)
            .map(|(v, step)| {
                collected += step.reward;
                v - collected
            })
            .collect();
        Some(curve)
    } else {
        None
    };
    let alt_regret = if include_alt { Some(summed_optimal_gains(env, horizon)? - realized_reward) } else { None };
    Ok(RegretReport {
        v_star_t,
        realized_reward,
        regret: v_star_t - realized_reward,
        regret_curve,
        alt_regret,
        bound_checks: Vec::new(),
    })
}

impl RegretReport {
    /// `key: value` lines followed by one `bound:` line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "v_star_t: {}", self.v_star_t);
        let _ = writeln!(out, "realized_reward: {}", self.realized_reward);
        let _ = writeln!(out, "regret: {}", self.regret);
        match self.alt_regret {
            Some(a) => {
                let _ = writeln!(out, "alt_regret: {a}");
            }
            None => {
                let _ = writeln!(out, "alt_regret: none");
            }
        }
        for c in &self.bound_checks {
            let _ = writeln!(out, "bound: {} {} {} {}", c.name, c.bound, c.observed, c.satisfied);
        }
        out
    }

    /// Two-column `t regret` table of the prefix curve, if present.
    pub fn curve_table(&self) -> Option<String> {
        let curve = self.regret_curve.as_ref()?;
        let mut out = String::with_capacity(24 * curve.len() + 16);
        out.push_str("t\tregret\n");
        for (i, r) in curve.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}", i + 1, r);
        }
        Some(out)
    }
}
