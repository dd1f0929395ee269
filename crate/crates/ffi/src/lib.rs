//! C ABI over `vucrl-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_make_*`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`VucrlStatus`]; on failure, [`vucrl_last_error_message`] describes
//! the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use vucrl_core::generators::{make_abrupt, make_gradual};
use vucrl_core::learner::{assert_regret_bounds, run_learner, LearnerConfig, RestartMode, RunRecord};
use vucrl_core::oracle::evaluate_regret;
use vucrl_core::solver::{diameter, relative_value_iteration};
use vucrl_core::{Error, NonstationaryMdp, StationaryMdp};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VucrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    NonConvergence = 4,
    TooExpensive = 5,
    Io = 6,
    Parse = 7,
    Panic = 8,
}

/// Learner variants.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VucrlMode {
    NoRestart = 0,
    VariationRestart = 1,
    CountRestart = 2,
    ZeroVariationRestart = 3,
}

impl From<VucrlMode> for RestartMode {
    fn from(m: VucrlMode) -> Self {
        match m {
            VucrlMode::NoRestart => RestartMode::NoRestart,
            VucrlMode::VariationRestart => RestartMode::VariationRestart,
            VucrlMode::CountRestart => RestartMode::CountRestart,
            VucrlMode::ZeroVariationRestart => RestartMode::ZeroVariationRestart,
        }
    }
}

/// A stationary MDP.
pub struct VucrlMdp(StationaryMdp);

/// A non-stationary environment.
pub struct VucrlEnv(NonstationaryMdp);

/// The trajectory of one learner run.
pub struct VucrlRecord(RunRecord);

/// Regret of a run and the matching closed-form bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VucrlRegret {
    pub v_star: f64,
    pub realized_reward: f64,
    pub regret: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let text = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> VucrlStatus {
    match e {
        Error::InvalidMdp(_)
        | Error::InvalidPolicy(_)
        | Error::InvalidEnvironment(_)
        | Error::NotCommunicating { .. }
        | Error::GenerationFailed { .. } => VucrlStatus::InvalidModel,
        Error::NonConvergence { .. } | Error::NotUnichain { .. } => VucrlStatus::NonConvergence,
        Error::TooExpensive { .. } => VucrlStatus::TooExpensive,
        Error::Io(_) => VucrlStatus::Io,
        Error::Parse(_) | Error::Json(_) => VucrlStatus::Parse,
        Error::StepOutOfRange { .. } | Error::InvalidConfig(_) | Error::LengthMismatch(_) => {
            VucrlStatus::InvalidArgument
        }
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), VucrlStatus>) -> VucrlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => VucrlStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            VucrlStatus::Panic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, VucrlStatus>;
}

impl<T> OrStatus<T> for Result<T, Error> {
    fn or_status(self) -> Result<T, VucrlStatus> {
        self.map_err(|e| {
            set_error(e.to_string());
            status_of(&e)
        })
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, VucrlStatus> {
    p.as_ref().ok_or_else(|| {
        set_error(format!("{what} is null"));
        VucrlStatus::NullPointer
    })
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), VucrlStatus> {
    if out.is_null() {
        set_error("output pointer is null");
        return Err(VucrlStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), VucrlStatus> {
    if out.is_null() {
        set_error("output pointer is null");
        return Err(VucrlStatus::NullPointer);
    }
    *out = value;
    Ok(())
}

/// Message for the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vucrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an MDP from row-major tables: `rewards[s*A + a]` and
/// `transitions[(s*A + a)*S + s']`.
///
/// # Safety
/// `rewards` must point to `n_states*n_actions` doubles and `transitions` to
/// `n_states*n_actions*n_states` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_mdp_new(
    n_states: usize,
    n_actions: usize,
    rewards: *const f64,
    transitions: *const f64,
    out: *mut *mut VucrlMdp,
) -> VucrlStatus {
    guard(|| {
        if rewards.is_null() || transitions.is_null() {
            set_error("table pointer is null");
            return Err(VucrlStatus::NullPointer);
        }
        let overflow = || {
            set_error("table size overflows");
            VucrlStatus::InvalidArgument
        };
        let pairs = n_states.checked_mul(n_actions).ok_or_else(overflow)?;
        let cells = pairs.checked_mul(n_states).ok_or_else(overflow)?;
        let r = std::slice::from_raw_parts(rewards, pairs).to_vec();
        let p = std::slice::from_raw_parts(transitions, cells).to_vec();
        let mdp = StationaryMdp::new(n_states, n_actions, r, p).or_status()?;
        store(out, VucrlMdp(mdp))
    })
}

/// # Safety
/// `mdp` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn vucrl_mdp_free(mdp: *mut VucrlMdp) {
    if !mdp.is_null() {
        drop(Box::from_raw(mdp));
    }
}

/// Optimal average reward by relative value iteration with precision `epsilon`.
///
/// # Safety
/// `mdp` must be a live handle and `out_gain` writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_mdp_optimal_gain(mdp: *const VucrlMdp, epsilon: f64, out_gain: *mut f64) -> VucrlStatus {
    guard(|| {
        let mdp = deref(mdp, "mdp")?;
        if epsilon.is_nan() || epsilon <= 0.0 {
            set_error("epsilon must be positive");
            return Err(VucrlStatus::InvalidArgument);
        }
        let sol = relative_value_iteration(&mdp.0, epsilon).or_status()?;
        write(out_gain, sol.gain)
    })
}

/// Diameter; `INFINITY` when some state cannot reach another.
///
/// # Safety
/// `mdp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_mdp_diameter(mdp: *const VucrlMdp, out: *mut f64) -> VucrlStatus {
    guard(|| {
        let mdp = deref(mdp, "mdp")?;
        write(out, diameter(&mdp.0))
    })
}

/// Parses an environment document (JSON).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_env_from_json(json: *const c_char, out: *mut *mut VucrlEnv) -> VucrlStatus {
    guard(|| {
        if json.is_null() {
            set_error("json is null");
            return Err(VucrlStatus::NullPointer);
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            set_error(format!("json is not UTF-8: {e}"));
            VucrlStatus::Parse
        })?;
        let env = NonstationaryMdp::from_json(text).or_status()?;
        store(out, VucrlEnv(env))
    })
}

/// Serializes an environment; release the string with [`vucrl_string_free`].
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_env_to_json(env: *const VucrlEnv, out: *mut *mut c_char) -> VucrlStatus {
    guard(|| {
        let env = deref(env, "env")?;
        let text = env.0.to_json().or_status()?;
        let c = CString::new(text).map_err(|_| VucrlStatus::Parse)?;
        write(out, c.into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn vucrl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Environment with `n_changes` abrupt changes of size at most `magnitude`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_env_make_abrupt(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    n_changes: usize,
    magnitude: f64,
    out: *mut *mut VucrlEnv,
) -> VucrlStatus {
    guard(|| {
        let env = make_abrupt(seed, n_states, n_actions, horizon, n_changes, magnitude).or_status()?;
        store(out, VucrlEnv(env))
    })
}

/// Environment drifting every step with total variation close to `budget`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_env_make_gradual(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    budget: f64,
    out: *mut *mut VucrlEnv,
) -> VucrlStatus {
    guard(|| {
        let env = make_gradual(seed, n_states, n_actions, horizon, budget).or_status()?;
        store(out, VucrlEnv(env))
    })
}

/// Horizon `T`, or 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vucrl_env_horizon(env: *const VucrlEnv) -> usize {
    env.as_ref().map_or(0, |e| e.0.horizon())
}

/// # Safety
/// `env` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn vucrl_env_free(env: *mut VucrlEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Runs a learner over the whole horizon. `l_changes` is used only by
/// count-restart, where a negative value means "number of changes in `env`".
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_run_learner(
    env: *const VucrlEnv,
    mode: VucrlMode,
    delta: f64,
    l_changes: i64,
    seed: u64,
    out: *mut *mut VucrlRecord,
) -> VucrlStatus {
    guard(|| {
        let env = deref(env, "env")?;
        let mode = RestartMode::from(mode);
        let mut cfg = LearnerConfig::new(mode, delta);
        if mode == RestartMode::CountRestart {
            let l = match usize::try_from(l_changes) {
                Ok(l) => l,
                Err(_) => env.0.change_count().or_status()?,
            };
            cfg = cfg.with_l_changes(l);
        }
        let record = run_learner(&env.0, &cfg, seed).or_status()?;
        store(out, VucrlRecord(record))
    })
}

/// Number of steps in a record, or 0 for a null handle.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vucrl_record_len(record: *const VucrlRecord) -> usize {
    record.as_ref().map_or(0, |r| r.0.len())
}

/// Number of episodes in a record, or 0 for a null handle.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vucrl_record_episodes(record: *const VucrlRecord) -> usize {
    record.as_ref().map_or(0, |r| r.0.episodes.len())
}

/// Number of phases in a record, or 0 for a null handle.
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vucrl_record_phases(record: *const VucrlRecord) -> usize {
    record.as_ref().map_or(0, |r| r.0.phases.len())
}

/// Copies the realized rewards into `rewards`, which holds `capacity` doubles.
///
/// # Safety
/// `record` must be a live handle and `rewards` writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn vucrl_record_rewards(
    record: *const VucrlRecord,
    rewards: *mut f64,
    capacity: usize,
) -> VucrlStatus {
    guard(|| {
        let record = deref(record, "record")?;
        if rewards.is_null() {
            set_error("rewards is null");
            return Err(VucrlStatus::NullPointer);
        }
        if capacity < record.0.len() {
            set_error(format!("buffer holds {capacity} values, record has {}", record.0.len()));
            return Err(VucrlStatus::InvalidArgument);
        }
        let dst = std::slice::from_raw_parts_mut(rewards, record.0.len());
        for (d, s) in dst.iter_mut().zip(&record.0.steps) {
            *d = s.reward;
        }
        Ok(())
    })
}

/// # Safety
/// `record` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn vucrl_record_free(record: *mut VucrlRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Regret of `record` against `env` and the bound matching the run's mode.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vucrl_evaluate_regret(
    record: *const VucrlRecord,
    env: *const VucrlEnv,
    out: *mut VucrlRegret,
) -> VucrlStatus {
    guard(|| {
        let record = deref(record, "record")?;
        let env = deref(env, "env")?;
        let report = evaluate_regret(&record.0, &env.0, false, false).or_status()?;
        let bound = assert_regret_bounds(&record.0, &env.0, &report).or_status()?;
        write(
            out,
            VucrlRegret {
                v_star: report.v_star_t,
                realized_reward: report.realized_reward,
                regret: report.regret,
                bound: bound[0].bound,
                bound_satisfied: bound[0].satisfied,
            },
        )
    })
}
