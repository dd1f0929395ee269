//! Variation-aware UCRL for non-stationary tabular MDPs.
//!
//! Exact solvers for stationary MDPs, time-varying environments with their
//! variation measures, the optimistic learner with its restart schedules, a
//! backward-induction regret oracle, and an experiment harness.

pub mod confidence;
pub mod error;
pub mod generators;
pub mod harness;
pub mod learner;
pub mod mdp;
pub mod nonstationary;
pub mod oracle;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use mdp::{DeterministicPolicy, GainBias, StationaryMdp};
pub use nonstationary::{NonstationaryMdp, VariationSummary};
