use proptest::prelude::*;
use vucrl_core::generators::{make_abrupt, make_gradual};
use vucrl_core::learner::{
    count_restart_steps, lengths_from_starts, run_learner, variation_phase_lengths, LearnerConfig, RestartMode, RunRecord,
};
use vucrl_core::nonstationary::{Breakpoint, Interpolation};
use vucrl_core::{NonstationaryMdp, StationaryMdp};

fn mode_strategy() -> impl Strategy<Value = RestartMode> {
    prop::sample::select(RestartMode::ALL.to_vec())
}

fn config(mode: RestartMode, env: &NonstationaryMdp) -> LearnerConfig {
    let cfg = LearnerConfig::new(mode, 0.05);
    match mode {
        RestartMode::CountRestart => cfg.with_l_changes(env.change_count().unwrap()),
        _ => cfg,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn variation_is_additive_over_windows(seed in 0u64..1000, horizon in 4usize..120, cut_frac in 0.0f64..1.0, changes in 0usize..4) {
        let env = make_abrupt(seed, 3, 2, horizon, changes.min(horizon - 1), 0.7).unwrap();
        let v = env.variation(false).unwrap();
        let cut = 1 + ((horizon - 1) as f64 * cut_frac) as usize;
        let (r1, p1) = v.window(1, cut);
        let (r2, p2) = v.window(cut, horizon - cut + 1);
        prop_assert!((r1 + r2 - v.v_r).abs() < 1e-9);
        prop_assert!((p1 + p2 - v.v_p).abs() < 1e-9);
        prop_assert_eq!(v.per_step_r.len(), horizon - 1);
    }

    #[test]
    fn linear_blend_changes_at_a_constant_rate(seed in 0u64..1000, horizon in 3usize..80) {
        let a = make_abrupt(seed, 2, 2, 2, 0, 0.0).unwrap().snapshot(1).unwrap().into_owned();
        let b = make_abrupt(seed + 1, 2, 2, 2, 0, 0.0).unwrap().snapshot(1).unwrap().into_owned();
        let env = NonstationaryMdp::new(horizon, 0, Interpolation::LinearBlend, vec![
            Breakpoint { start: 1, mdp: a.clone() },
            Breakpoint { start: horizon, mdp: b.clone() },
        ]).unwrap();
        let v = env.variation(false).unwrap();
        let per_r = a.reward_distance(&b) / (horizon - 1) as f64;
        let per_p = a.transition_distance(&b) / (horizon - 1) as f64;
        for (r, p) in v.per_step_r.iter().zip(&v.per_step_p) {
            prop_assert!((r - per_r).abs() < 1e-12);
            prop_assert!((p - per_p).abs() < 1e-12);
        }
        prop_assert_eq!(&*env.snapshot(horizon).unwrap(), &b);
    }

    #[test]
    fn gain_variation_is_bounded(seed in 0u64..1000, horizon in 2usize..200, changes in 0usize..6, magnitude in 0.0f64..2.0) {
        let env = make_abrupt(seed, 3, 2, horizon, changes.min(horizon - 1), magnitude).unwrap();
        let check = env.check_gain_variation().unwrap();
        prop_assert!(check.holds, "V_T {} exceeds {}", check.v_global, check.bound);
    }

    #[test]
    fn variation_phases_cover_the_horizon(v in 0.0f64..3.0, split in 0.0f64..1.0, horizon in 1usize..50_000) {
        let lengths = variation_phase_lengths(v * split, v * (1.0 - split), horizon);
        prop_assert_eq!(lengths.iter().sum::<usize>(), horizon);
        prop_assert!(lengths.iter().all(|&l| l > 0));
        let body = &lengths[..lengths.len() - 1];
        prop_assert!(body.windows(2).all(|w| w[1] >= w[0]));
        for (i, &l) in body.iter().enumerate() {
            let i = (i + 1) as f64;
            prop_assert_eq!(l as f64, (i * i / (v * v)).ceil());
        }
    }

    #[test]
    fn count_restarts_are_distinct_and_in_range(l in 0usize..500, horizon in 1usize..100_000) {
        let steps = count_restart_steps(l, horizon);
        prop_assert_eq!(steps.first(), Some(&1));
        prop_assert!(steps.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(steps.iter().all(|&s| s <= horizon));
        prop_assert_eq!(lengths_from_starts(&steps, horizon).iter().sum::<usize>(), horizon);
    }

    #[test]
    fn mdp_json_round_trips(seed in 0u64..1000, s in 1usize..5, a in 1usize..4) {
        let env = make_abrupt(seed, s, a, 10, 1, 0.5).unwrap();
        let mdp = env.snapshot(7).unwrap().into_owned();
        prop_assert_eq!(StationaryMdp::from_json(&mdp.to_json().unwrap()).unwrap(), mdp);
        prop_assert_eq!(NonstationaryMdp::from_json(&env.to_json().unwrap()).unwrap(), env);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_records_are_well_formed(seed in 0u64..1000, horizon in 1usize..600, mode in mode_strategy(), budget in 0.0f64..1.0) {
        let env = make_gradual(seed, 3, 2, horizon.max(2), budget).unwrap().with_horizon(horizon).unwrap();
        let record = run_learner(&env, &config(mode, &env), seed).unwrap();
        prop_assert_eq!(record.len(), horizon);
        prop_assert!(record.steps.iter().enumerate().all(|(i, s)| s.t == i + 1));
        prop_assert!(record.steps.iter().all(|s| s.state < 3 && s.action < 2 && (s.reward == 0.0 || s.reward == 1.0)));

        let starts = record.episode_starts();
        prop_assert_eq!(starts[0], 1);
        prop_assert!(starts.windows(2).all(|w| w[1] > w[0]));
        let phase_starts = record.phase_starts();
        prop_assert_eq!(phase_starts[0], 1);
        prop_assert_eq!(record.phases.iter().map(|p| p.length).sum::<usize>(), horizon);
        // Every phase opens a new episode.
        prop_assert!(phase_starts.iter().all(|p| starts.contains(p)));

        for (episode, steps) in record.episode_slices() {
            prop_assert!(!steps.is_empty());
            for step in steps {
                prop_assert_eq!(step.action, episode.policy.action(step.state));
                prop_assert_eq!(step.phase, episode.phase);
                prop_assert_eq!(step.episode, episode.index);
            }
        }
        prop_assert!(record.optimistic_gains().iter().all(|g| (0.0..=1.0).contains(g)));

        let parsed = RunRecord::from_text(&record.to_text().unwrap()).unwrap();
        prop_assert_eq!(parsed, record);
    }
}
