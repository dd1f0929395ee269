//! Time-homogeneous tabular MDPs.
//!
//! Rewards are stored row-major as an `S × A` table and transitions as an
//! `S × A × S` tensor, so the row `p(·|s,a)` is the contiguous slice starting
//! at `(s * A + a) * S`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a transition row sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// One time slice of an environment: mean rewards `r̄(s,a)` and kernel `p(s'|s,a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument", into = "MdpDocument")]
pub struct StationaryMdp {
    n_states: usize,
    n_actions: usize,
    mean_reward: Vec<f64>,
    transition: Vec<f64>,
}

/// Wire form of [`StationaryMdp`]: flat row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub mean_reward: Vec<f64>,
    pub transition: Vec<f64>,
}

impl TryFrom<MdpDocument> for StationaryMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        StationaryMdp::new(doc.n_states, doc.n_actions, doc.mean_reward, doc.transition)
    }
}

impl From<StationaryMdp> for MdpDocument {
    fn from(mdp: StationaryMdp) -> Self {
        MdpDocument {
            n_states: mdp.n_states,
            n_actions: mdp.n_actions,
            mean_reward: mdp.mean_reward,
            transition: mdp.transition,
        }
    }
}

impl StationaryMdp {
    /// Builds an MDP from flat row-major tables, checking every invariant.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        mean_reward: Vec<f64>,
        transition: Vec<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("state and action counts must be positive".into()));
        }
        if mean_reward.len() != n_states * n_actions {
            return Err(Error::InvalidMdp(format!(
                "mean_reward has {} entries, expected {}",
                mean_reward.len(),
                n_states * n_actions
            )));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(Error::InvalidMdp(format!(
                "transition has {} entries, expected {}",
                transition.len(),
                n_states * n_actions * n_states
            )));
        }
        for (i, &r) in mean_reward.iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidMdp(format!(
                    "mean reward {r} at (s={}, a={}) is outside [0,1]",
                    i / n_actions,
                    i % n_actions
                )));
            }
        }
        for (i, row) in transition.chunks(n_states).enumerate() {
            if let Some(p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(Error::InvalidMdp(format!(
                    "transition row (s={}, a={}) has invalid entry {p}",
                    i / n_actions,
                    i % n_actions
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidMdp(format!(
                    "transition row (s={}, a={}) sums to {sum}",
                    i / n_actions,
                    i % n_actions
                )));
            }
        }
        Ok(StationaryMdp { n_states, n_actions, mean_reward, transition })
    }

    /// Builds an MDP from nested tables `rewards[s][a]` and `transitions[s][a][s']`.
    pub fn from_tables(rewards: &[Vec<f64>], transitions: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = rewards.len();
        let n_actions = rewards.first().map_or(0, Vec::len);
        if transitions.len() != n_states
            || rewards.iter().any(|r| r.len() != n_actions)
            || transitions.iter().any(|t| t.len() != n_actions || t.iter().any(|row| row.len() != n_states))
        {
            return Err(Error::InvalidMdp("ragged reward or transition tables".into()));
        }
        let mean_reward = rewards.iter().flatten().copied().collect();
        let transition = transitions.iter().flatten().flatten().copied().collect();
        StationaryMdp::new(n_states, n_actions, mean_reward, transition)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.mean_reward[s * self.n_actions + a]
    }

    /// The transition row `p(·|s,a)`.
    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.mean_reward
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transition
    }

    pub fn same_shape(&self, other: &StationaryMdp) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    /// Convex combination `(1 - weight) * self + weight * other`.
    pub fn blend(&self, other: &StationaryMdp, weight: f64) -> Result<StationaryMdp> {
        if !self.same_shape(other) {
            return Err(Error::InvalidMdp("cannot blend MDPs of different shapes".into()));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidMdp(format!("blend weight {weight} is outside [0,1]")));
        }
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(a, b)| (1.0 - weight) * a + weight * b).collect()
        };
        let mean_reward = mix(&self.mean_reward, &other.mean_reward)
            .into_iter()
            .map(|r| r.clamp(0.0, 1.0))
            .collect();
        let mut transition = mix(&self.transition, &other.transition);
        for row in transition.chunks_mut(self.n_states) {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
        }
        StationaryMdp::new(self.n_states, self.n_actions, mean_reward, transition)
    }

    /// Largest absolute reward difference over all pairs.
    pub fn reward_distance(&self, other: &StationaryMdp) -> f64 {
        self.mean_reward
            .iter()
            .zip(&other.mean_reward)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest L1 distance between corresponding transition rows.
    pub fn transition_distance(&self, other: &StationaryMdp) -> f64 {
        self.transition
            .chunks(self.n_states)
            .zip(other.transition.chunks(other.n_states))
            .map(|(x, y)| l1_distance(x, y))
            .fold(0.0, f64::max)
    }

    /// Returns a copy with states relabelled: new state `perm[s]` plays the role of old `s`.
    pub fn permute_states(&self, perm: &[usize]) -> Result<StationaryMdp> {
        let n = self.n_states;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidMdp("state permutation is not a bijection".into()));
        }
        let mut rewards = vec![0.0; self.mean_reward.len()];
        let mut transition = vec![0.0; self.transition.len()];
        for s in 0..n {
            for a in 0..self.n_actions {
                rewards[perm[s] * self.n_actions + a] = self.reward(s, a);
                let base = (perm[s] * self.n_actions + a) * n;
                for (x, &p) in self.row(s, a).iter().enumerate() {
                    transition[base + perm[x]] = p;
                }
            }
        }
        StationaryMdp::new(n, self.n_actions, rewards, transition)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Draws one transition: a Bernoulli(`r̄(s,a)`) reward and a successor from `p(·|s,a)`.
    pub fn sample_step<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (f64, usize) {
        let reward = if rng.gen::<f64>() < self.reward(s, a) { 1.0 } else { 0.0 };
        (reward, sample_index(self.row(s, a), rng))
    }
}

/// Inverse-CDF draw from a probability vector; never returns a zero-probability index.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// A stationary deterministic policy `π(s)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicPolicy(Vec<usize>);

impl DeterministicPolicy {
    pub fn new(action_of: Vec<usize>, n_actions: usize) -> Result<Self> {
        if let Some(a) = action_of.iter().find(|&&a| a >= n_actions) {
            return Err(Error::InvalidPolicy(format!("action {a} is not below {n_actions}")));
        }
        Ok(DeterministicPolicy(action_of))
    }

    pub fn constant(n_states: usize, action: usize) -> Self {
        DeterministicPolicy(vec![action; n_states])
    }

    #[inline]
    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Gain, bias and bias span of a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct GainBias {
    pub gain: f64,
    pub bias: Vec<f64>,
    pub span: f64,
}

impl GainBias {
    pub fn new(gain: f64, bias: Vec<f64>) -> Self {
        let span = span(&bias);
        GainBias { gain, bias, span }
    }

    /// Largest Poisson-equation residual of this solution for `policy` on `mdp`.
    pub fn poisson_residual(&self, mdp: &StationaryMdp, policy: &DeterministicPolicy) -> f64 {
        (0..mdp.n_states())
            .map(|s| {
                let a = policy.action(s);
                let expected: f64 = mdp.row(s, a).iter().zip(&self.bias).map(|(p, h)| p * h).sum();
                (self.gain + self.bias[s] - mdp.reward(s, a) - expected).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `max(v) - min(v)`; zero for an empty slice.
pub fn span(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let (lo, hi) = min_max(values);
    hi - lo
}

pub(crate) fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}
