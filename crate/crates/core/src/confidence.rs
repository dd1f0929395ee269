//! Empirical estimates, variation-widened confidence sets and extended value iteration.
//!
//! The plausible set around `(r̂, p̂)` contains every MDP whose rewards satisfy
//!
//! ```text
//! |r̃(s,a) − r̂(s,a)| ≤ Ṽ^r + sqrt(8 ln(8 S A t_k³ / δ) / max(1, N(s,a)))
//! ‖p̃(·|s,a) − p̂(·|s,a)‖₁ ≤ Ṽ^p + sqrt(8 S ln(8 S A t_k³ / δ) / max(1, N(s,a)))
//! ```
//!
//! with the transition radius clipped at 2 (the diameter of the simplex in L1).

use crate::error::{Error, Result};
use crate::mdp::{l1_distance, min_max, DeterministicPolicy, StationaryMdp};
use crate::solver::{MAX_SWEEPS, SELF_LOOP_WEIGHT};

/// Slack for floating-point comparisons in [`PlausibleSet::contains`].
const CONTAINMENT_SLACK: f64 = 1e-12;

/// Visit counts and sufficient statistics of one learning phase.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitStatistics {
    n_states: usize,
    n_actions: usize,
    n_before: Vec<u64>,
    n_episode: Vec<u64>,
    reward_sum: Vec<f64>,
    transition_count: Vec<u64>,
}

impl VisitStatistics {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        let pairs = n_states * n_actions;
        VisitStatistics {
            n_states,
            n_actions,
            n_before: vec![0; pairs],
            n_episode: vec![0; pairs],
            reward_sum: vec![0.0; pairs],
            transition_count: vec![0; pairs * n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// `N_k(s,a)`: visits before the current episode.
    pub fn n_before(&self, s: usize, a: usize) -> u64 {
        self.n_before[self.pair(s, a)]
    }

    /// `v_k(s,a)`: visits during the current episode.
    pub fn n_episode(&self, s: usize, a: usize) -> u64 {
        self.n_episode[self.pair(s, a)]
    }

    pub fn total_visits(&self, s: usize, a: usize) -> u64 {
        self.n_before(s, a) + self.n_episode(s, a)
    }

    pub fn reward_sum(&self, s: usize, a: usize) -> f64 {
        self.reward_sum[self.pair(s, a)]
    }

    pub fn transition_count(&self, s: usize, a: usize, next: usize) -> u64 {
        self.transition_count[self.pair(s, a) * self.n_states + next]
    }

    /// Records one completed transition in the current episode.
    pub fn record(&mut self, s: usize, a: usize, reward: f64, next: usize) {
        let i = self.pair(s, a);
        self.n_episode[i] += 1;
        self.reward_sum[i] += reward;
        self.transition_count[i * self.n_states + next] += 1;
    }

    /// Folds the current episode's counts into `N`.
    pub fn close_episode(&mut self) {
        for (before, episode) in self.n_before.iter_mut().zip(self.n_episode.iter_mut()) {
            *before += std::mem::take(episode);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.n_before.iter().chain(&self.n_episode).all(|&n| n == 0)
    }
}

/// Sample-mean estimates `(r̂, p̂)`; pairs never visited get `r̂ = 0` and a uniform `p̂`.
///
/// Counts include the current episode, so at an episode boundary the
/// denominator is exactly `max(1, N_k(s,a))`.
pub fn build_estimates(stats: &VisitStatistics) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (stats.n_states, stats.n_actions);
    let mut r_hat = vec![0.0; n * m];
    let mut p_hat = vec![0.0; n * m * n];
    for s in 0..n {
        for a in 0..m {
            let i = s * m + a;
            let visits = stats.total_visits(s, a);
            let row = &mut p_hat[i * n..(i + 1) * n];
            if visits == 0 {
                row.fill(1.0 / n as f64);
                continue;
            }
            let denom = visits as f64;
            r_hat[i] = stats.reward_sum[i] / denom;
            for (x, p) in row.iter_mut().enumerate() {
                *p = stats.transition_count[i * n + x] as f64 / denom;
            }
        }
    }
    (r_hat, p_hat)
}

/// The set `M_k` of MDPs plausible at episode start `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlausibleSet {
    n_states: usize,
    n_actions: usize,
    pub r_hat: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub width_r: Vec<f64>,
    pub width_p: Vec<f64>,
    pub t_k: u64,
    pub delta: f64,
    pub v_tilde_r: f64,
    pub v_tilde_p: f64,
}

/// `ln(8 S A t_k³ / δ)`.
pub fn confidence_log_term(n_states: usize, n_actions: usize, t_k: u64, delta: f64) -> f64 {
    let t = t_k as f64;
    (8.0 * n_states as f64 * n_actions as f64 * t * t * t / delta).ln()
}

/// Builds the plausible set for the statistics at an episode start.
pub fn make_plausible_set(
    stats: &VisitStatistics,
    t_k: u64,
    delta: f64,
    v_tilde_r: f64,
    v_tilde_p: f64,
) -> Result<PlausibleSet> {
    if t_k < 1 {
        return Err(Error::InvalidConfig("episode start t_k must be at least 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence parameter {delta} is outside (0,1)")));
    }
    if !(v_tilde_r >= 0.0 && v_tilde_p >= 0.0) {
        return Err(Error::InvalidConfig("variation parameters must be nonnegative".into()));
    }
    let (n, m) = (stats.n_states, stats.n_actions);
    let log_term = confidence_log_term(n, m, t_k, delta);
    let (r_hat, p_hat) = build_estimates(stats);
    let mut width_r = Vec::with_capacity(n * m);
    let mut width_p = Vec::with_capacity(n * m);
    for s in 0..n {
        for a in 0..m {
            let visits = stats.total_visits(s, a).max(1) as f64;
            width_r.push(v_tilde_r + (8.0 * log_term / visits).sqrt());
            width_p.push((v_tilde_p + (8.0 * n as f64 * log_term / visits).sqrt()).min(2.0));
        }
    }
    Ok(PlausibleSet {
        n_states: n,
        n_actions: m,
        r_hat,
        p_hat,
        width_r,
        width_p,
        t_k,
        delta,
        v_tilde_r,
        v_tilde_p,
    })
}

impl PlausibleSet {
    /// A degenerate set containing only `mdp` (all widths zero).
    pub fn singleton(mdp: &StationaryMdp) -> Self {
        let pairs = mdp.n_states() * mdp.n_actions();
        PlausibleSet {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            r_hat: mdp.rewards().to_vec(),
            p_hat: mdp.transitions().to_vec(),
            width_r: vec![0.0; pairs],
            width_p: vec![0.0; pairs],
            t_k: 1,
            delta: 0.5,
            v_tilde_r: 0.0,
            v_tilde_p: 0.0,
        }
    }

    /// Same estimates with widths `(width_r, width_p)` on every pair.
    pub fn with_uniform_widths(mut self, width_r: f64, width_p: f64) -> Self {
        self.width_r.fill(width_r);
        self.width_p.fill(width_p.min(2.0));
        self
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn p_hat_row(&self, s: usize, a: usize) -> &[f64] {
        let i = (s * self.n_actions + a) * self.n_states;
        &self.p_hat[i..i + self.n_states]
    }

    /// Optimistic reward `min(1, r̂ + width_r)`.
    #[inline]
    pub fn optimistic_reward(&self, s: usize, a: usize) -> f64 {
        let i = s * self.n_actions + a;
        (self.r_hat[i] + self.width_r[i]).min(1.0)
    }

    /// Whether `mdp` lies inside the set.
    pub fn contains(&self, mdp: &StationaryMdp) -> bool {
        if mdp.n_states() != self.n_states || mdp.n_actions() != self.n_actions {
            return false;
        }
        (0..self.n_states).all(|s| {
            (0..self.n_actions).all(|a| {
                let i = s * self.n_actions + a;
                (mdp.reward(s, a) - self.r_hat[i]).abs() <= self.width_r[i] + CONTAINMENT_SLACK
                    && l1_distance(mdp.row(s, a), self.p_hat_row(s, a)) <= self.width_p[i] + CONTAINMENT_SLACK
            })
        })
    }
}

/// Whether `mdp` lies inside `set`.
pub fn contains_mdp(set: &PlausibleSet, mdp: &StationaryMdp) -> bool {
    set.contains(mdp)
}

/// States ordered by value, best first; ties keep the lower index first.
pub fn value_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| values[y].total_cmp(&values[x]));
    order
}

/// Maximises `Σ p(s') u(s')` over the simplex intersected with the L1 ball of
/// radius `width` around `p_hat`, given the states ranked by `u` (best first).
pub fn inner_max_transition(p_hat: &[f64], width: f64, order: &[usize]) -> Vec<f64> {
    let mut p = p_hat.to_vec();
    inner_max_into(p_hat, width, order, &mut p);
    p
}

fn inner_max_into(p_hat: &[f64], width: f64, order: &[usize], out: &mut [f64]) {
    out.copy_from_slice(p_hat);
    let Some(&best) = order.first() else { return };
    let added = (0.5 * width).min(1.0 - p_hat[best]).max(0.0);
    out[best] += added;
    let mut excess = added;
    for &s in order.iter().rev() {
        if excess <= 0.0 {
            break;
        }
        if s == best {
            continue;
        }
        if out[s] - excess <= f64::EPSILON {
            excess -= out[s];
            out[s] = 0.0;
        } else {
            out[s] -= excess;
            excess = 0.0;
        }
    }
}

/// Result of extended value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct EviResult {
    /// Optimistic gain `ρ̃`.
    pub gain: f64,
    /// Optimistic relative values, minimum 0.
    pub value: Vec<f64>,
    pub policy: DeterministicPolicy,
    pub optimistic_reward: Vec<f64>,
    pub optimistic_transition: Vec<f64>,
    pub iterations: usize,
}

impl EviResult {
    /// The optimistic MDP `M̃` as a stand-alone model.
    pub fn optimistic_mdp(&self) -> Result<StationaryMdp> {
        let n = self.value.len();
        StationaryMdp::new(
            n,
            self.optimistic_reward.len() / n,
            self.optimistic_reward.clone(),
            self.optimistic_transition.clone(),
        )
    }
}

/// Value iteration jointly over actions and plausible models.
///
/// Iterates `u ← max_a { r̃(s,a) + max_{p̃} Σ p̃ u }` (with a small self-loop
/// mixed into each chosen row for aperiodicity) until the span of the
/// increment is below `epsilon`. The gain is the midpoint of the last increment.
pub fn extended_value_iteration(set: &PlausibleSet, epsilon: f64) -> Result<EviResult> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let (n, m) = (set.n_states, set.n_actions);
    let keep = 1.0 - SELF_LOOP_WEIGHT;
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut actions = vec![0usize; n];
    let mut row = vec![0.0; n];
    for iteration in 1..=MAX_SWEEPS {
        let order = value_order(&u);
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m {
                inner_max_into(set.p_hat_row(s, a), set.width_p[s * m + a], &order, &mut row);
                let expected: f64 = row.iter().zip(&u).map(|(p, v)| p * v).sum();
                let q = set.optimistic_reward(s, a) + keep * expected;
                if q > best {
                    best = q;
                    actions[s] = a;
                }
            }
            next[s] = best + SELF_LOOP_WEIGHT * u[s];
        }
        let diffs: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let (lo, hi) = min_max(&diffs);
        if hi - lo < epsilon {
            let mut optimistic_reward = Vec::with_capacity(n * m);
            let mut optimistic_transition = Vec::with_capacity(n * m * n);
            for s in 0..n {
                for a in 0..m {
                    optimistic_reward.push(set.optimistic_reward(s, a));
                    inner_max_into(set.p_hat_row(s, a), set.width_p[s * m + a], &order, &mut row);
                    optimistic_transition.extend_from_slice(&row);
                }
            }
            let base = u.iter().copied().fold(f64::INFINITY, f64::min);
            return Ok(EviResult {
                gain: (0.5 * (lo + hi)).clamp(0.0, 1.0),
                value: u.iter().map(|v| keep * (v - base)).collect(),
                policy: DeterministicPolicy::new(actions, m)?,
                optimistic_reward,
                optimistic_transition,
                iterations: iteration,
            });
        }
        let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
        for (dst, src) in u.iter_mut().zip(&next) {
            *dst = src - shift;
        }
    }
    Err(Error::NonConvergence { solver: "extended value iteration", cap: MAX_SWEEPS })
}
