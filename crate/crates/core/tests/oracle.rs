mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vucrl_core::generators::{make_abrupt, make_gradual, random_mdp};
use vucrl_core::nonstationary::{Breakpoint, Interpolation};
use vucrl_core::oracle::{optimal_tstep_value, prefix_optimal_values, window_values};
use vucrl_core::solver::{diameter, relative_value_iteration};
use vucrl_core::{NonstationaryMdp, StationaryMdp};

#[test]
fn backward_induction_matches_policy_tree_enumeration() {
    for seed in 0..3 {
        let env = make_abrupt(seed, 3, 2, 6, 2, 0.8).unwrap();
        for s1 in 0..3 {
            let exact = common::exhaustive_tstep_value(&env, s1, 6);
            let v = optimal_tstep_value(&env, s1, 6, false).unwrap().v_star;
            assert!((v - exact).abs() < 1e-9, "seed {seed} state {s1}: {v} vs {exact}");
        }
    }
}

#[test]
fn blended_environment_matches_enumeration() {
    let env = make_gradual(11, 2, 2, 8, 0.6).unwrap();
    for s1 in 0..2 {
        let exact = common::exhaustive_tstep_value(&env, s1, 8);
        let v = optimal_tstep_value(&env, s1, 8, false).unwrap().v_star;
        assert!((v - exact).abs() < 1e-9);
    }
}

#[test]
fn stationary_values_stay_within_a_diameter_of_the_gain_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mdp = random_mdp(&mut rng, 4, 2);
        let gain = relative_value_iteration(&mdp, 1e-10).unwrap().gain;
        let d = diameter(&mdp);
        let env = NonstationaryMdp::stationary(mdp, 500, 0).unwrap();
        for t in [1, 10, 100, 500] {
            let values = window_values(&env, 1, t).unwrap();
            for v in values {
                assert!((v - t as f64 * gain).abs() <= d + 1e-6, "t={t}: {v} vs {}", t as f64 * gain);
            }
        }
    }
}

#[test]
fn raising_rewards_never_lowers_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mdp = random_mdp(&mut rng, 3, 2);
    let raised_rewards: Vec<f64> = mdp.rewards().iter().map(|r| (r + 0.1).min(1.0)).collect();
    let raised = StationaryMdp::new(3, 2, raised_rewards, mdp.transitions().to_vec()).unwrap();
    let low = NonstationaryMdp::stationary(mdp, 50, 0).unwrap();
    let high = NonstationaryMdp::stationary(raised, 50, 0).unwrap();
    for t in 1..=50 {
        let (a, b) = (window_values(&low, 1, t).unwrap(), window_values(&high, 1, t).unwrap());
        assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
    }
}

#[test]
fn table_and_prefix_values_agree_with_direct_calls() {
    let env = make_abrupt(9, 3, 2, 40, 3, 0.5).unwrap();
    let full = optimal_tstep_value(&env, 0, 40, true).unwrap();
    let table = full.table.unwrap();
    assert_eq!(table.len(), 40);
    assert_eq!(table[0][0], full.v_star);
    for t in [1, 7, 25, 40] {
        assert!((table[t - 1][1] - window_values(&env, t, 40 - t + 1).unwrap()[1]).abs() < 1e-12);
    }
    let prefix = prefix_optimal_values(&env, 0, 40).unwrap();
    for t in [1, 13, 40] {
        assert!((prefix[t - 1] - optimal_tstep_value(&env, 0, t, false).unwrap().v_star).abs() < 1e-12);
    }
    assert!(prefix.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn out_of_range_windows_are_rejected() {
    let env = make_abrupt(1, 2, 2, 10, 1, 0.3).unwrap();
    assert!(window_values(&env, 0, 3).is_err());
    assert!(window_values(&env, 9, 3).is_err());
    assert!(optimal_tstep_value(&env, 5, 3, false).is_err());
}

#[test]
fn piecewise_breakpoints_switch_at_their_start() {
    let a = StationaryMdp::from_tables(&[vec![0.0], vec![0.0]], &[vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]]).unwrap();
    let b = StationaryMdp::from_tables(&[vec![1.0], vec![1.0]], &[vec![vec![0.5, 0.5]], vec![vec![0.5, 0.5]]]).unwrap();
    let env = NonstationaryMdp::new(
        10,
        0,
        Interpolation::PiecewiseConstant,
        vec![Breakpoint { start: 1, mdp: a }, Breakpoint { start: 5, mdp: b }],
    )
    .unwrap();
    assert_eq!(optimal_tstep_value(&env, 0, 10, false).unwrap().v_star, 6.0);
}

#[test]
fn drifting_values_are_sandwiched_by_per_step_gains() {
    for seed in 0..8 {
        let env = make_abrupt(seed, 3, 2, 300, 3, 0.6).unwrap();
        let gains: Vec<f64> =
            (1..=300).map(|t| common::enumerated_optimal_gain(&env.snapshot(t).unwrap())).collect();
        let lo = gains.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let d = env.diameter_bound();
        for v in window_values(&env, 1, 300).unwrap() {
            assert!(v >= 300.0 * lo - d - 1e-9 && v <= 300.0 * hi + d + 1e-9, "seed {seed}: {v}");
        }
    }
}
