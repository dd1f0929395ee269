use std::ffi::{CStr, CString};
use std::ptr;

use vucrl_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(vucrl_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn mdp_round_trip() {
    // Two states, one action, deterministic swap: gain 0.5, diameter 1.
    let rewards = [1.0, 0.0];
    let transitions = [0.0, 1.0, 1.0, 0.0];
    let mut mdp = ptr::null_mut();
    unsafe {
        assert_eq!(vucrl_mdp_new(2, 1, rewards.as_ptr(), transitions.as_ptr(), &mut mdp), VucrlStatus::Ok);
        let mut gain = 0.0;
        assert_eq!(vucrl_mdp_optimal_gain(mdp, 1e-9, &mut gain), VucrlStatus::Ok);
        assert!((gain - 0.5).abs() < 1e-9);
        let mut d = 0.0;
        assert_eq!(vucrl_mdp_diameter(mdp, &mut d), VucrlStatus::Ok);
        assert!((d - 1.0).abs() < 1e-9);
        vucrl_mdp_free(mdp);
    }
}

#[test]
fn invalid_inputs_report_errors() {
    let rewards = [1.5, 0.0];
    let transitions = [0.0, 1.0, 1.0, 0.0];
    let mut mdp = ptr::null_mut();
    unsafe {
        assert_eq!(vucrl_mdp_new(2, 1, rewards.as_ptr(), transitions.as_ptr(), &mut mdp), VucrlStatus::InvalidModel);
        assert!(mdp.is_null());
        assert!(last_error().contains("reward"), "{}", last_error());
        let mut gain = 0.0;
        assert_eq!(vucrl_mdp_optimal_gain(ptr::null(), 1e-9, &mut gain), VucrlStatus::NullPointer);
        let bad = CString::new("{not json").unwrap();
        let mut env = ptr::null_mut();
        assert_eq!(vucrl_env_from_json(bad.as_ptr(), &mut env), VucrlStatus::Parse);
        assert_ne!(vucrl_env_make_abrupt(1, 3, 2, 0, 0, 0.1, &mut env), VucrlStatus::Ok);
        assert!(env.is_null() && !last_error().is_empty());
        // Freeing null is a no-op.
        vucrl_mdp_free(ptr::null_mut());
        vucrl_env_free(ptr::null_mut());
        vucrl_record_free(ptr::null_mut());
    }
}

#[test]
fn learner_and_regret() {
    unsafe {
        let mut env = ptr::null_mut();
        assert_eq!(vucrl_env_make_gradual(3, 3, 2, 500, 0.4, &mut env), VucrlStatus::Ok);
        assert_eq!(vucrl_env_horizon(env), 500);

        let mut json = ptr::null_mut();
        assert_eq!(vucrl_env_to_json(env, &mut json), VucrlStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(vucrl_env_from_json(json, &mut copy), VucrlStatus::Ok);
        vucrl_string_free(json);

        let mut record = ptr::null_mut();
        assert_eq!(vucrl_run_learner(env, VucrlMode::CountRestart, 0.05, -1, 9, &mut record), VucrlStatus::Ok);
        assert_eq!(vucrl_record_len(record), 500);
        assert!(vucrl_record_episodes(record) >= vucrl_record_phases(record));

        let mut rewards = vec![0.0; 500];
        assert_eq!(vucrl_record_rewards(record, rewards.as_mut_ptr(), 10), VucrlStatus::InvalidArgument);
        assert_eq!(vucrl_record_rewards(record, rewards.as_mut_ptr(), rewards.len()), VucrlStatus::Ok);

        let mut regret = VucrlRegret::default();
        assert_eq!(vucrl_evaluate_regret(record, copy, &mut regret), VucrlStatus::Ok);
        let collected: f64 = rewards.iter().sum();
        assert_eq!(regret.realized_reward, collected);
        assert_eq!(regret.regret, regret.v_star - regret.realized_reward);
        assert!(regret.bound_satisfied && regret.bound > regret.regret);

        vucrl_record_free(record);
        vucrl_env_free(copy);
        vucrl_env_free(env);
    }
}
