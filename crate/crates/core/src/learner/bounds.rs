//! Closed-form regret bounds, evaluated with natural logarithms.

use serde::{Deserialize, Serialize};

use super::{RestartMode, RunRecord};
use crate::error::Result;
use crate::nonstationary::NonstationaryMdp;
use crate::oracle::RegretReport;

/// One named inequality `observed ≤ bound` evaluated on a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub observed: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    pub fn upper(name: impl Into<String>, bound: f64, observed: f64) -> Self {
        BoundCheck { name: name.into(), bound, observed, satisfied: observed <= bound }
    }
}

/// `32 D S sqrt(A T ln(8 S A T³ / δ)) + 2 T (V^r + D V^p)`.
pub fn no_restart_bound(d: f64, s: usize, a: usize, t: usize, delta: f64, v_r: f64, v_p: f64) -> f64 {
    let (s, a, t) = (s as f64, a as f64, t as f64);
    let log = (8.0 * s * a * t.powi(3) / delta).ln();
    32.0 * d * s * (a * t * log).sqrt() + 2.0 * t * (v_r + d * v_p)
}

/// `74 V^{1/3} T^{2/3} D S sqrt(A ln(16 S² A T⁵ / δ))` with `V = V^r + V^p`.
pub fn variation_restart_bound(d: f64, s: usize, a: usize, t: usize, delta: f64, v: f64) -> f64 {
    let (s, a, t) = (s as f64, a as f64, t as f64);
    let log = (16.0 * s * s * a * t.powi(5) / delta).ln();
    74.0 * v.cbrt() * t.powf(2.0 / 3.0) * d * s * (a * log).sqrt()
}

/// `65 (L+1)^{1/3} T^{2/3} D S sqrt(A ln(T / δ))`.
pub fn count_restart_bound(d: f64, s: usize, a: usize, t: usize, delta: f64, l_changes: usize) -> f64 {
    let (s, a, t) = (s as f64, a as f64, t as f64);
    let log = (t / delta).ln();
    65.0 * (l_changes as f64 + 1.0).cbrt() * t.powf(2.0 / 3.0) * d * s * (a * log).sqrt()
}

/// Evaluates the regret bound matching the run's mode against `report.regret`.
///
/// `D` is the largest diameter over the environment's snapshots and `T` the
/// record length. The zero-variation mode is checked against the restart
/// bound with `D` standing in for the diameter of the whole plausible family,
/// which can be much larger.
pub fn assert_regret_bounds(
    record: &RunRecord,
    env: &NonstationaryMdp,
    report: &RegretReport,
) -> Result<Vec<BoundCheck>> {
    let cfg = &record.config;
    let (s, a, t) = (record.n_states, record.n_actions, record.len());
    let summary = env.with_horizon(t.max(1))?.variation(false)?;
    let d = summary.d_max;
    let check = match cfg.mode {
        RestartMode::NoRestart => BoundCheck::upper(
            "no_restart",
            no_restart_bound(d, s, a, t, cfg.delta, summary.v_r, summary.v_p),
            report.regret,
        ),
        RestartMode::VariationRestart => BoundCheck::upper(
            "variation_restart",
            variation_restart_bound(d, s, a, t, cfg.delta, summary.total()),
            report.regret,
        ),
        RestartMode::ZeroVariationRestart => BoundCheck::upper(
            "zero_variation_restart",
            variation_restart_bound(d, s, a, t, cfg.delta, summary.total()),
            report.regret,
        ),
        RestartMode::CountRestart => BoundCheck::upper(
            "count_restart",
            count_restart_bound(d, s, a, t, cfg.delta, cfg.l_changes.unwrap_or(0)),
            report.regret,
        ),
    };
    Ok(vec![check])
}
