//! Counting invariants re-derived from a run record: episode counts,
//! the visit-ratio sum, phase counts and the episode stopping rule.

use std::f64::consts::SQRT_2;

use super::{BoundCheck, RunRecord};

/// `1 + (3 V² T)^{1/3}`: strict upper bound on the number of variation-schedule phases.
pub fn phase_count_limit(variation: f64, horizon: usize) -> f64 {
    1.0 + (3.0 * variation * variation * horizon as f64).cbrt()
}

struct Worst {
    name: &'static str,
    bound: f64,
    observed: f64,
    satisfied: bool,
    seen: bool,
}

impl Worst {
    fn new(name: &'static str) -> Self {
        Worst { name, bound: 0.0, observed: 0.0, satisfied: true, seen: false }
    }

    /// Keeps the observation with the least slack `bound - observed`.
    fn offer(&mut self, bound: f64, observed: f64, ok: bool) {
        if !self.seen || bound - observed < self.bound - self.observed {
            self.bound = bound;
            self.observed = observed;
        }
        self.seen = true;
        self.satisfied &= ok;
    }

    fn finish(self) -> Option<BoundCheck> {
        self.seen.then(|| BoundCheck {
            name: self.name.to_string(),
            bound: self.bound,
            observed: self.observed,
            satisfied: self.satisfied,
        })
    }
}

/// Evaluates the episode-count, visit-sum, stopping-rule and phase-count
/// invariants on a finished run.
///
/// `episode_count` is `K ≤ S·A·log2(T/(S·A))` on phases longer than `S·A`.
/// It can fail on phases only slightly longer than `S·A`, where the first
/// visits to each pair alone already produce about `S·A` episodes.
/// `episode_count_doubling` is the looser `K ≤ S·A·log2(8T/(S·A))`, which the
/// doubling rule guarantees. The phase-count check only applies to variation
/// schedules with `V > 0`.
pub fn counting_checks(record: &RunRecord) -> Vec<BoundCheck> {
    let pairs = record.n_states * record.n_actions;
    let sa = pairs as f64;
    let mut episodes_check = Worst::new("episode_count");
    let mut episodes_doubling_check = Worst::new("episode_count_doubling");
    let mut visit_sum_check = Worst::new("visit_ratio_sum");
    let mut fixed_policy_violations = 0usize;
    let mut doubling_violations = 0usize;

    let slices = record.episode_slices();
    for phase in &record.phases {
        let in_phase: Vec<_> = slices.iter().filter(|(e, _)| e.phase == phase.index).collect();
        let t_phase = phase.length as f64;
        if phase.length >= pairs {
            let bound = sa * (8.0 * t_phase / sa).log2();
            let k = in_phase.len() as f64;
            episodes_doubling_check.offer(bound, k, k <= bound);
        }
        if phase.length > pairs {
            let bound = sa * (t_phase / sa).log2();
            let k = in_phase.len() as f64;
            episodes_check.offer(bound, k, k <= bound);
        }

        let mut n_before = vec![0u64; pairs];
        let mut ratio_sum = 0.0;
        for (i, (episode, steps)) in in_phase.iter().enumerate() {
            let mut visits = vec![0u64; pairs];
            for step in steps.iter() {
                if step.action != episode.policy.action(step.state) {
                    fixed_policy_violations += 1;
                }
                visits[step.state * record.n_actions + step.action] += 1;
            }
            for (v, n) in visits.iter().zip(&n_before) {
                if *v > (*n).max(1) {
                    doubling_violations += 1;
                }
                ratio_sum += *v as f64 / ((*n).max(1) as f64).sqrt();
            }
            if let Some((_, next_steps)) = in_phase.get(i + 1) {
                // The episode must have stopped exactly when the next pair doubled.
                if let Some(first) = next_steps.first() {
                    let pair = first.state * record.n_actions + episode.policy.action(first.state);
                    if visits[pair] != n_before[pair].max(1) {
                        doubling_violations += 1;
                    }
                }
            }
            for (n, v) in n_before.iter_mut().zip(&visits) {
                *n += v;
            }
        }
        let bound = (SQRT_2 + 1.0) * (sa * t_phase).sqrt();
        visit_sum_check.offer(bound, ratio_sum, ratio_sum <= bound);
    }

    let mut checks: Vec<BoundCheck> = [episodes_check, episodes_doubling_check, visit_sum_check]
        .into_iter()
        .filter_map(Worst::finish)
        .collect();
    checks.push(BoundCheck {
        name: "fixed_policy".into(),
        bound: 0.0,
        observed: fixed_policy_violations as f64,
        satisfied: fixed_policy_violations == 0,
    });
    checks.push(BoundCheck {
        name: "doubling_rule".into(),
        bound: 0.0,
        observed: doubling_violations as f64,
        satisfied: doubling_violations == 0,
    });
    if let Some(v) = record.schedule_variation.filter(|&v| v > 0.0) {
        let limit = phase_count_limit(v, record.len());
        let n = record.phases.len() as f64;
        checks.push(BoundCheck { name: "phase_count".into(), bound: limit, observed: n, satisfied: n < limit });
    }
    checks
}
