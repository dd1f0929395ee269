//! Seeded environment generators and the two-state diameter counterexample.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{l1_distance, StationaryMdp};
use crate::nonstationary::{Breakpoint, GeneratorInfo, Interpolation, NonstationaryMdp};
use crate::solver::is_strongly_connected;

/// Attempts allowed before a generator gives up on producing a communicating snapshot.
pub const RESAMPLE_CAP: usize = 100;

/// Random MDP with uniform rewards and Dirichlet(1) transition rows.
///
/// Every row has full support, so the result is communicating.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, n_states: usize, n_actions: usize) -> StationaryMdp {
    let rewards = (0..n_states * n_actions).map(|_| rng.gen::<f64>()).collect();
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        transition.extend(dirichlet_row(rng, n_states));
    }
    StationaryMdp::new(n_states, n_actions, rewards, transition).expect("random rows are valid")
}

fn dirichlet_row<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    // Exponential spacings normalised to the simplex; the floor keeps full support.
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    let mut row: Vec<f64> = raw.iter().map(|x| x / sum).collect();
    renormalize(&mut row);
    row
}

fn renormalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
}

/// Moves each reward by at most `magnitude` and each transition row by at most
/// `magnitude` in L1, clipping negatives and renormalising.
fn perturb<R: Rng + ?Sized>(rng: &mut R, base: &StationaryMdp, magnitude: f64) -> StationaryMdp {
    let n = base.n_states();
    let rewards = base
        .rewards()
        .iter()
        .map(|r| (r + magnitude * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0))
        .collect();
    let mut transition = Vec::with_capacity(base.transitions().len());
    for old in base.transitions().chunks(n) {
        let mut direction: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let mean = direction.iter().sum::<f64>() / n as f64;
        direction.iter_mut().for_each(|d| *d -= mean);
        let norm: f64 = direction.iter().map(|d| d.abs()).sum();
        let scale = if norm > 0.0 { magnitude / norm } else { 0.0 };
        let mut row: Vec<f64> = old
            .iter()
            .zip(&direction)
            .map(|(p, d)| (p + scale * d).max(0.0))
            .collect();
        renormalize(&mut row);
        let moved = l1_distance(&row, old);
        if moved > magnitude {
            let shrink = magnitude / moved;
            row = old.iter().zip(&row).map(|(p, q)| p + shrink * (q - p)).collect();
            renormalize(&mut row);
        }
        transition.extend(row);
    }
    StationaryMdp::new(n, base.n_actions(), rewards, transition).expect("perturbed rows are valid")
}

fn check_shape(n_states: usize, n_actions: usize, horizon: usize) -> Result<()> {
    if n_states == 0 || n_actions == 0 || horizon == 0 {
        return Err(Error::InvalidConfig("S, A and T must be positive".into()));
    }
    Ok(())
}

fn communicating_random(rng: &mut ChaCha8Rng, n_states: usize, n_actions: usize) -> Result<StationaryMdp> {
    (0..RESAMPLE_CAP)
        .map(|_| random_mdp(rng, n_states, n_actions))
        .find(is_strongly_connected)
        .ok_or(Error::GenerationFailed { attempts: RESAMPLE_CAP, reason: "no communicating base MDP".into() })
}

/// Piecewise-constant environment with `n_changes` evenly spaced abrupt changes.
pub fn make_abrupt(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    n_changes: usize,
    change_magnitude: f64,
) -> Result<NonstationaryMdp> {
    check_shape(n_states, n_actions, horizon)?;
    if n_changes >= horizon {
        return Err(Error::InvalidConfig(format!(
            "{n_changes} changes do not fit into a horizon of {horizon}"
        )));
    }
    if !(0.0..=2.0).contains(&change_magnitude) {
        return Err(Error::InvalidConfig(format!("change magnitude {change_magnitude} is outside [0, 2]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut breakpoints = vec![Breakpoint { start: 1, mdp: communicating_random(&mut rng, n_states, n_actions)? }];
    for j in 1..=n_changes {
        let start = 1 + j * horizon / (n_changes + 1);
        let previous = &breakpoints.last().unwrap().mdp;
        let mdp = (0..RESAMPLE_CAP)
            .map(|_| perturb(&mut rng, previous, change_magnitude))
            .find(is_strongly_connected)
            .ok_or(Error::GenerationFailed {
                attempts: RESAMPLE_CAP,
                reason: format!("perturbation at step {start} never communicated"),
            })?;
        breakpoints.push(Breakpoint { start, mdp });
    }
    let params = BTreeMap::from([
        ("n_states".to_string(), n_states as f64),
        ("n_actions".to_string(), n_actions as f64),
        ("horizon".to_string(), horizon as f64),
        ("n_changes".to_string(), n_changes as f64),
        ("change_magnitude".to_string(), change_magnitude),
    ]);
    Ok(NonstationaryMdp::new(horizon, 0, Interpolation::PiecewiseConstant, breakpoints)?
        .with_generator(GeneratorInfo { name: "abrupt".into(), seed, params }))
}

/// Gradual drift: a linear blend between two random endpoints whose measured
/// `V^r_T + V^p_T` lands in `[0.9·budget, budget]`.
///
/// Budgets beyond a single endpoint distance are met by zig-zagging between
/// the endpoints over several equal segments.
pub fn make_gradual(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    total_variation_budget: f64,
) -> Result<NonstationaryMdp> {
    check_shape(n_states, n_actions, horizon)?;
    if !(total_variation_budget >= 0.0 && total_variation_budget.is_finite()) {
        return Err(Error::InvalidConfig("variation budget must be a nonnegative number".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = communicating_random(&mut rng, n_states, n_actions)?;
    let end = communicating_random(&mut rng, n_states, n_actions)?;
    let params = BTreeMap::from([
        ("n_states".to_string(), n_states as f64),
        ("n_actions".to_string(), n_actions as f64),
        ("horizon".to_string(), horizon as f64),
        ("total_variation_budget".to_string(), total_variation_budget),
    ]);
    let info = GeneratorInfo { name: "gradual".into(), seed, params };
    if total_variation_budget == 0.0 || horizon == 1 {
        return Ok(NonstationaryMdp::stationary(start, horizon, 0)?.with_generator(info));
    }

    let full = start.reward_distance(&end) + start.transition_distance(&end);
    let segments = (total_variation_budget / full).ceil().max(1.0) as usize;
    if segments > horizon - 1 {
        return Err(Error::GenerationFailed {
            attempts: 1,
            reason: format!("budget {total_variation_budget} needs {segments} segments in {horizon} steps"),
        });
    }
    let build = |fraction: f64| -> Result<NonstationaryMdp> {
        let target = start.blend(&end, fraction.min(1.0))?;
        let breakpoints = (0..=segments)
            .map(|j| Breakpoint {
                start: 1 + j * (horizon - 1) / segments,
                mdp: if j % 2 == 0 { start.clone() } else { target.clone() },
            })
            .collect();
        NonstationaryMdp::new(horizon, 0, Interpolation::LinearBlend, breakpoints)
    };
    let mut fraction = total_variation_budget / (segments as f64 * full);
    let mut env = build(fraction)?;
    let measured = env.variation(false)?.total();
    if measured > total_variation_budget || measured < 0.9 * total_variation_budget {
        fraction *= total_variation_budget / measured * (1.0 - 1e-9);
        env = build(fraction)?;
    }
    Ok(env.with_generator(info))
}

/// The two-state MDPs `M_1`, `M_2` (diameter `d`) and their disconnected mixture.
///
/// States are `s = 0`, `s' = 1`; actions are `a = 0`, `a' = 1`. All rewards are 0.5.
pub fn diameter_counterexample(d: f64) -> Result<(StationaryMdp, StationaryMdp, StationaryMdp)> {
    if !(d >= 2.0 && d.is_finite()) {
        return Err(Error::InvalidConfig(format!("diameter parameter {d} must be at least 2")));
    }
    let leave = 1.0 / d;
    let slow = vec![1.0 - leave, leave];
    let to_s = vec![1.0, 0.0];
    let to_s_prime = vec![0.0, 1.0];
    let rewards = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let m1 = StationaryMdp::from_tables(
        &rewards,
        &[vec![slow.clone(), to_s.clone()], vec![to_s.clone(), to_s_prime.clone()]],
    )?;
    let m2 = StationaryMdp::from_tables(
        &rewards,
        &[vec![to_s.clone(), slow], vec![to_s_prime.clone(), to_s.clone()]],
    )?;
    let mixture = StationaryMdp::from_tables(
        &rewards,
        &[vec![to_s.clone(), to_s.clone()], vec![to_s_prime.clone(), to_s_prime]],
    )?;
    Ok((m1, m2, mixture))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::diameter;

    #[test]
    fn abrupt_without_changes_is_constant() {
        let env = make_abrupt(3, 3, 2, 100, 0, 0.2).unwrap();
        let v = env.variation(false).unwrap();
        assert_eq!((v.v_r, v.v_p), (0.0, 0.0));
    }

    #[test]
    fn abrupt_changes_respect_magnitude() {
        let env = make_abrupt(9, 4, 2, 400, 3, 0.2).unwrap();
        assert_eq!(env.breakpoints().len(), 4);
        let v = env.variation(false).unwrap();
        assert!(v.v_r <= 0.6 + 1e-12 && v.v_p <= 0.6 + 1e-12, "{v:?}");
        assert!(v.per_step_r.iter().all(|&d| d <= 0.2 + 1e-12));
        assert!(v.per_step_p.iter().all(|&d| d <= 0.2 + 1e-12));
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(make_abrupt(5, 3, 2, 50, 2, 0.3).unwrap(), make_abrupt(5, 3, 2, 50, 2, 0.3).unwrap());
        assert_eq!(make_gradual(5, 3, 2, 50, 0.4).unwrap(), make_gradual(5, 3, 2, 50, 0.4).unwrap());
        assert_ne!(make_gradual(5, 3, 2, 50, 0.4).unwrap(), make_gradual(6, 3, 2, 50, 0.4).unwrap());
    }

    #[test]
    fn gradual_budget_is_met() {
        for (seed, budget) in [(1, 0.5), (2, 0.05), (3, 4.0), (4, 1.7)] {
            let env = make_gradual(seed, 3, 2, 300, budget).unwrap();
            let v = env.variation(false).unwrap();
            assert!(v.total() <= budget && v.total() >= 0.9 * budget, "budget {budget}: {}", v.total());
            assert!(v.per_step_p.iter().all(|&d| d > 0.0));
        }
        let flat = make_gradual(1, 3, 2, 300, 0.0).unwrap();
        assert_eq!(flat.variation(false).unwrap().total(), 0.0);
    }

    #[test]
    fn counterexample_diameters() {
        let (m1, m2, mix) = diameter_counterexample(10.0).unwrap();
        assert!((diameter(&m1) - 10.0).abs() < 1e-6);
        assert!((diameter(&m2) - 10.0).abs() < 1e-6);
        assert!(diameter(&mix).is_infinite());
        assert!(diameter_counterexample(1.5).is_err());
    }
}
