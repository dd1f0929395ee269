//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls the solvers under test: gains come from stationary
//! distributions, hitting times from linear solves, finite-horizon values from
//! exhaustive policy enumeration, and the inner maximisation from grids and
//! vertex enumeration.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use vucrl_core::{NonstationaryMdp, StationaryMdp};

/// All deterministic stationary policies of an `S`-state, `A`-action MDP.
pub fn all_policies(n_states: usize, n_actions: usize) -> Vec<Vec<usize>> {
    let total = n_actions.pow(n_states as u32);
    (0..total)
        .map(|mut code| {
            (0..n_states)
                .map(|_| {
                    let a = code % n_actions;
                    code /= n_actions;
                    a
                })
                .collect()
        })
        .collect()
}

/// Stationary distribution of the chain induced by `policy`, assuming it is unique.
pub fn stationary_distribution(mdp: &StationaryMdp, policy: &[usize]) -> Vec<f64> {
    let n = mdp.n_states();
    // (P^T - I) π = 0 with the last equation replaced by Σ π = 1.
    let mut m = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        for (next, p) in mdp.row(s, policy[s]).iter().enumerate() {
            m[(next, s)] += p;
        }
        m[(s, s)] -= 1.0;
    }
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = m.lu().solve(&b).expect("unique stationary distribution");
    pi.iter().copied().collect()
}

/// Gain of `policy` via its stationary distribution.
pub fn policy_gain(mdp: &StationaryMdp, policy: &[usize]) -> f64 {
    stationary_distribution(mdp, policy)
        .iter()
        .enumerate()
        .map(|(s, p)| p * mdp.reward(s, policy[s]))
        .sum()
}

/// Closed recurrent classes of the chain induced by `policy`.
pub fn recurrent_classes(mdp: &StationaryMdp, policy: &[usize]) -> Vec<Vec<usize>> {
    let n = mdp.n_states();
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        reach[s][s] = true;
        for (next, p) in mdp.row(s, policy[s]).iter().enumerate() {
            if *p > 0.0 {
                reach[s][next] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        let recurrent = (0..n).all(|j| !reach[s][j] || reach[j][s]);
        if recurrent && !classes.iter().any(|c| c.contains(&s)) {
            classes.push((0..n).filter(|&j| reach[s][j]).collect());
        }
    }
    classes
}

/// Long-run average reward of `policy` on one closed class.
fn class_gain(mdp: &StationaryMdp, policy: &[usize], class: &[usize]) -> f64 {
    let k = class.len();
    let mut m = DMatrix::<f64>::zeros(k, k);
    for (i, &s) in class.iter().enumerate() {
        for (j, &s2) in class.iter().enumerate() {
            m[(j, i)] += mdp.row(s, policy[s])[s2];
        }
        m[(i, i)] -= 1.0;
    }
    for j in 0..k {
        m[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k);
    b[k - 1] = 1.0;
    let pi = m.lu().solve(&b).expect("irreducible class");
    class.iter().enumerate().map(|(i, &s)| pi[i] * mdp.reward(s, policy[s])).sum()
}

/// Optimal gain of a communicating MDP by enumerating every stationary
/// deterministic policy: any recurrent class can be reached and then kept,
/// so the optimum is the best class gain over all policies.
pub fn enumerated_optimal_gain(mdp: &StationaryMdp) -> f64 {
    all_policies(mdp.n_states(), mdp.n_actions())
        .iter()
        .flat_map(|pi| recurrent_classes(mdp, pi).into_iter().map(move |c| class_gain(mdp, pi, &c)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Expected hitting times of `target` under `policy` by a linear solve;
/// `None` if the target is unreachable from some state.
pub fn policy_hitting_times(mdp: &StationaryMdp, policy: &[usize], target: usize) -> Option<Vec<f64>> {
    let n = mdp.n_states();
    let others: Vec<usize> = (0..n).filter(|&s| s != target).collect();
    let k = others.len();
    let mut m = DMatrix::<f64>::identity(k, k);
    for (i, &s) in others.iter().enumerate() {
        for (j, &s2) in others.iter().enumerate() {
            m[(i, j)] -= mdp.row(s, policy[s])[s2];
        }
    }
    let h = m.lu().solve(&DVector::from_element(k, 1.0))?;
    if h.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1e9) {
        return None;
    }
    let mut out = vec![0.0; n];
    for (i, &s) in others.iter().enumerate() {
        out[s] = h[i];
    }
    Some(out)
}

/// Diameter by minimising hitting times over all policies, per target.
pub fn enumerated_diameter(mdp: &StationaryMdp) -> f64 {
    let n = mdp.n_states();
    let policies = all_policies(n, mdp.n_actions());
    let mut d: f64 = 0.0;
    for target in 0..n {
        let mut best = vec![f64::INFINITY; n];
        for pi in &policies {
            if let Some(h) = policy_hitting_times(mdp, pi, target) {
                for s in 0..n {
                    best[s] = best[s].min(h[s]);
                }
            }
        }
        d = d.max(best.into_iter().fold(0.0, f64::max));
    }
    d
}

/// `v*_T(s1)` by enumerating every time-dependent deterministic policy
/// (`A^(S·T)` of them) and propagating the exact state distribution.
pub fn exhaustive_tstep_value(env: &NonstationaryMdp, s1: usize, horizon: usize) -> f64 {
    let (n, m) = (env.n_states(), env.n_actions());
    let snapshots: Vec<StationaryMdp> = (1..=horizon).map(|t| env.snapshot(t).unwrap().into_owned()).collect();
    let total = (m as u64).pow((n * horizon) as u32);
    let mut best = f64::NEG_INFINITY;
    for mut code in 0..total {
        let mut dist = vec![0.0; n];
        dist[s1] = 1.0;
        let mut value = 0.0;
        for mdp in &snapshots {
            let mut next = vec![0.0; n];
            for s in 0..n {
                let a = (code % m as u64) as usize;
                code /= m as u64;
                if dist[s] == 0.0 {
                    continue;
                }
                value += dist[s] * mdp.reward(s, a);
                for (s2, p) in mdp.row(s, a).iter().enumerate() {
                    next[s2] += dist[s] * p;
                }
            }
            dist = next;
        }
        best = best.max(value);
    }
    best
}

fn l1(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Best objective over a grid of step `1/steps` on the 3-state simplex
/// intersected with the L1 ball; `None` if no grid point is feasible.
pub fn grid_inner_max3(p_hat: &[f64], width: f64, values: &[f64], steps: usize) -> Option<f64> {
    assert_eq!(p_hat.len(), 3);
    let mut best: Option<f64> = None;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let q = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
            if l1(&q, p_hat) <= width {
                let v = dot(&q, values);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

/// Exact maximum of `values·q` over `{q ∈ simplex, ‖q - p̂‖₁ ≤ width}` by
/// enumerating vertices of the polytope written with `2^n` sign constraints.
pub fn vertex_inner_max(p_hat: &[f64], width: f64, values: &[f64]) -> f64 {
    let n = p_hat.len();
    // Rows a·q ≤ b: -q_i ≤ 0, and Σ σ_i (q_i - p_i) ≤ width for every sign vector σ.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        rows.push((a, 0.0));
    }
    for signs in 0..(1u32 << n) {
        let sigma: Vec<f64> = (0..n).map(|i| if signs >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
        rows.push((sigma.clone(), width + dot(&sigma, p_hat)));
    }
    let feasible = |q: &[f64]| {
        (q.iter().sum::<f64>() - 1.0).abs() < 1e-9
            && q.iter().all(|&x| x >= -1e-9)
            && l1(q, p_hat) <= width + 1e-9
    };
    let mut best = f64::NEG_INFINITY;
    let mut chosen = vec![0usize; n - 1];
    enumerate_subsets(rows.len(), n - 1, 0, 0, &mut chosen, &mut |subset| {
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut b = DVector::<f64>::zeros(n);
        for j in 0..n {
            m[(0, j)] = 1.0;
        }
        b[0] = 1.0;
        for (k, &r) in subset.iter().enumerate() {
            for j in 0..n {
                m[(k + 1, j)] = rows[r].0[j];
            }
            b[k + 1] = rows[r].1;
        }
        if m.determinant().abs() < 1e-12 {
            return;
        }
        if let Some(q) = m.lu().solve(&b) {
            let q: Vec<f64> = q.iter().copied().collect();
            if feasible(&q) {
                best = best.max(dot(&q, values));
            }
        }
    });
    best
}

fn enumerate_subsets(
    total: usize,
    size: usize,
    start: usize,
    depth: usize,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if depth == size {
        visit(chosen);
        return;
    }
    for i in start..total {
        chosen[depth] = i;
        enumerate_subsets(total, size, i + 1, depth + 1, chosen, visit);
    }
}
