//! Exact solvers for a single stationary MDP: optimal gain, policy gain/bias and diameter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mdp::{min_max, DeterministicPolicy, GainBias, StationaryMdp};

/// Default precision of the stationary solvers.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Sweep cap shared by the average-reward iterations.
pub const MAX_SWEEPS: usize = 1_000_000;

/// Self-loop weight of the aperiodicity transform `p ↦ (1-w)p + w·e_s`.
///
/// The transform leaves every stationary policy's gain unchanged and scales
/// its bias by `1/(1-w)`; values are scaled back before they are returned.
pub const SELF_LOOP_WEIGHT: f64 = 0.01;

/// Hitting-time iterates above this value are treated as divergent.
pub const HITTING_TIME_CAP: f64 = 1e7;

const HITTING_TIME_TOLERANCE: f64 = 1e-9;

/// Optimal average reward with a normalised relative value vector and greedy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageRewardSolution {
    pub gain: f64,
    /// Relative values (bias estimate), shifted so the minimum entry is 0.
    pub value: Vec<f64>,
    pub policy: DeterministicPolicy,
    pub sweeps: usize,
}

impl AverageRewardSolution {
    pub fn span(&self) -> f64 {
        crate::mdp::span(&self.value)
    }
}

#[inline]
fn dot(p: &[f64], u: &[f64]) -> f64 {
    p.iter().zip(u).map(|(a, b)| a * b).sum()
}

/// Relative value iteration for the optimal gain `ρ*`.
///
/// Stops once the span of successive value differences drops below
/// `epsilon`; the gain is the midpoint of that final difference, so it lies
/// within `epsilon / 2` of `ρ*` for communicating inputs.
pub fn relative_value_iteration(mdp: &StationaryMdp, epsilon: f64) -> Result<AverageRewardSolution> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let n = mdp.n_states();
    let keep = 1.0 - SELF_LOOP_WEIGHT;
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut actions = vec![0usize; n];
    for sweep in 1..=MAX_SWEEPS {
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..mdp.n_actions() {
                let q = mdp.reward(s, a) + keep * dot(mdp.row(s, a), &u);
                if q > best {
                    best = q;
                    actions[s] = a;
                }
            }
            next[s] = best + SELF_LOOP_WEIGHT * u[s];
        }
        let (lo, hi) = diff_range(&next, &u);
        if hi - lo < epsilon {
            let base = u.iter().copied().fold(f64::INFINITY, f64::min);
            return Ok(AverageRewardSolution {
                gain: 0.5 * (lo + hi),
                value: u.iter().map(|v| keep * (v - base)).collect(),
                policy: DeterministicPolicy::new(actions, mdp.n_actions())?,
                sweeps: sweep,
            });
        }
        let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
        for (dst, src) in u.iter_mut().zip(&next) {
            *dst = src - shift;
        }
    }
    Err(Error::NonConvergence { solver: "relative value iteration", cap: MAX_SWEEPS })
}

fn diff_range(next: &[f64], prev: &[f64]) -> (f64, f64) {
    let diffs: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    min_max(&diffs)
}

/// Gain and bias of a fixed policy, solving the Poisson equation iteratively.
///
/// The returned bias satisfies the residual bound
/// `max_s |ρ + λ(s) − r̄(s,π(s)) − Σ p λ| ≤ epsilon / 2`.
pub fn policy_gain_bias(
    mdp: &StationaryMdp,
    policy: &DeterministicPolicy,
    epsilon: f64,
) -> Result<GainBias> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let n = mdp.n_states();
    if policy.len() != n || policy.actions().iter().any(|&a| a >= mdp.n_actions()) {
        return Err(Error::InvalidPolicy("policy does not match the MDP".into()));
    }
    let keep = 1.0 - SELF_LOOP_WEIGHT;
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        for s in 0..n {
            let a = policy.action(s);
            next[s] = mdp.reward(s, a) + keep * dot(mdp.row(s, a), &u) + SELF_LOOP_WEIGHT * u[s];
        }
        let (lo, hi) = diff_range(&next, &u);
        if hi - lo < epsilon {
            let base = u.iter().copied().fold(f64::INFINITY, f64::min);
            let bias = u.iter().map(|v| keep * (v - base)).collect();
            return Ok(GainBias::new(0.5 * (lo + hi), bias));
        }
        let shift = next.iter().copied().fold(f64::INFINITY, f64::min);
        for (dst, src) in u.iter_mut().zip(&next) {
            *dst = src - shift;
        }
    }
    Err(Error::NotUnichain { cap: MAX_SWEEPS })
}

/// Whether every state can reach every other state under some sequence of actions.
pub fn is_strongly_connected(mdp: &StationaryMdp) -> bool {
    let n = mdp.n_states();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for (y, flag) in seen.iter_mut().enumerate() {
                if *flag {
                    continue;
                }
                let (from, to) = if forward { (x, y) } else { (y, x) };
                if (0..mdp.n_actions()).any(|a| mdp.row(from, a)[to] > 0.0) {
                    *flag = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|v| v)
    };
    reach_all(true) && reach_all(false)
}

/// Minimal expected hitting times of `target` from every state (target entry is 0).
///
/// Value iteration on the unit-cost shortest-path problem, followed by exact
/// policy iteration on the greedy policy. Returns `None` when the iterates
/// exceed [`HITTING_TIME_CAP`].
pub fn hitting_times(mdp: &StationaryMdp, target: usize) -> Option<Vec<f64>> {
    let n = mdp.n_states();
    let mut h = vec![0.0; n];
    let mut sweeps = 0usize;
    loop {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for s in (0..n).filter(|&s| s != target) {
            let best = (0..mdp.n_actions())
                .map(|a| 1.0 + dot(mdp.row(s, a), &h))
                .fold(f64::INFINITY, f64::min);
            change = change.max((best - h[s]).abs());
            h[s] = best;
            if best > HITTING_TIME_CAP {
                return None;
            }
        }
        if change < HITTING_TIME_TOLERANCE {
            break;
        }
        if sweeps > 100 * MAX_SWEEPS {
            return None;
        }
    }
    Some(polish_hitting_times(mdp, target, h))
}

/// Policy iteration started from the value-iteration greedy policy. Falls back
/// to the value-iteration estimate if a linear solve is degenerate.
fn polish_hitting_times(mdp: &StationaryMdp, target: usize, estimate: Vec<f64>) -> Vec<f64> {
    let n = mdp.n_states();
    let greedy = |h: &[f64], current: Option<&[usize]>| -> Vec<usize> {
        (0..n)
            .map(|s| {
                let mut best_a = current.map_or(0, |c| c[s]);
                let mut best = 1.0 + dot(mdp.row(s, best_a), h);
                for a in 0..mdp.n_actions() {
                    let q = 1.0 + dot(mdp.row(s, a), h);
                    if q < best - 1e-12 {
                        best = q;
                        best_a = a;
                    }
                }
                best_a
            })
            .collect()
    };
    let mut actions = greedy(&estimate, None);
    let mut best = estimate.clone();
    for _ in 0..64 {
        let mut system = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for s in 0..n {
            system[(s, s)] = 1.0;
            if s == target {
                continue;
            }
            rhs[s] = 1.0;
            for (x, &p) in mdp.row(s, actions[s]).iter().enumerate() {
                if x != target {
                    system[(s, x)] -= p;
                }
            }
        }
        let Some(solution) = system.lu().solve(&rhs) else {
            return best;
        };
        let h: Vec<f64> = solution.iter().copied().collect();
        let plausible = h.iter().all(|v| v.is_finite() && *v >= -1e-9)
            && h.iter().zip(&estimate).all(|(exact, approx)| *exact <= approx + 1e-3 * (1.0 + approx));
        if !plausible {
            return best;
        }
        best = h;
        let improved = greedy(&best, Some(&actions));
        if improved == actions {
            break;
        }
        actions = improved;
    }
    best[target] = 0.0;
    best
}

/// Diameter: the largest minimal expected travel time between distinct states.
///
/// Returns `f64::INFINITY` for non-communicating inputs and `0` for a single state.
pub fn diameter(mdp: &StationaryMdp) -> f64 {
    let n = mdp.n_states();
    if n == 1 {
        return 0.0;
    }
    if !is_strongly_connected(mdp) {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for target in 0..n {
        match hitting_times(mdp, target) {
            Some(h) => worst = worst.max(h.iter().copied().fold(0.0, f64::max)),
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Optimal gain of `mdp` at the default precision.
pub fn optimal_gain(mdp: &StationaryMdp) -> Result<f64> {
    Ok(relative_value_iteration(mdp, DEFAULT_EPSILON)?.gain)
}
