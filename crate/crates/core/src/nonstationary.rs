//! Time-varying environments `M_1, …, M_T` described by breakpoints.

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::StationaryMdp;
use crate::solver::{diameter, optimal_gain};

/// Most distinct snapshots for which per-step optimal gains are computed.
pub const GLOBAL_VARIATION_CAP: usize = 10_000;

/// Interior blend points checked for communication on each linear segment.
pub const BLEND_CHECK_POINTS: usize = 8;

/// Tolerance used when checking `V_T ≤ V^r_T + D·V^p_T`.
pub const GAIN_VARIATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    PiecewiseConstant,
    LinearBlend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub start: usize,
    pub mdp: StationaryMdp,
}

/// Generator name, seed and parameters recorded for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorInfo {
    pub name: String,
    pub seed: u64,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EnvironmentDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GeneratorInfo>,
    horizon: usize,
    initial_state: usize,
    interpolation: Interpolation,
    breakpoints: Vec<Breakpoint>,
}

/// A non-stationary MDP over steps `1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonstationaryMdp {
    horizon: usize,
    initial_state: usize,
    interpolation: Interpolation,
    breakpoints: Vec<Breakpoint>,
    generator: Option<GeneratorInfo>,
    diameter_bound: f64,
}

impl NonstationaryMdp {
    /// Validates the schedule and rejects any non-communicating checked snapshot.
    pub fn new(
        horizon: usize,
        initial_state: usize,
        interpolation: Interpolation,
        breakpoints: Vec<Breakpoint>,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidEnvironment(msg));
        if horizon == 0 {
            return invalid("horizon must be positive".into());
        }
        let Some(first) = breakpoints.first() else {
            return invalid("at least one breakpoint is required".into());
        };
        if first.start != 1 {
            return invalid(format!("first breakpoint starts at {}, expected 1", first.start));
        }
        if breakpoints.windows(2).any(|w| w[1].start <= w[0].start) {
            return invalid("breakpoints must be strictly increasing".into());
        }
        if breakpoints.iter().any(|b| !b.mdp.same_shape(&first.mdp)) {
            return invalid("all breakpoints must share state and action counts".into());
        }
        if initial_state >= first.mdp.n_states() {
            return invalid(format!("initial state {initial_state} out of range"));
        }

        let mut diameter_bound: f64 = 0.0;
        for b in &breakpoints {
            let d = diameter(&b.mdp);
            if d.is_infinite() {
                return Err(Error::NotCommunicating { t: b.start });
            }
            diameter_bound = diameter_bound.max(d);
        }
        if interpolation == Interpolation::LinearBlend {
            for pair in breakpoints.windows(2) {
                for k in 1..=BLEND_CHECK_POINTS {
                    let w = k as f64 / (BLEND_CHECK_POINTS + 1) as f64;
                    let d = diameter(&pair[0].mdp.blend(&pair[1].mdp, w)?);
                    if d.is_infinite() {
                        return Err(Error::NotCommunicating { t: pair[0].start });
                    }
                    diameter_bound = diameter_bound.max(d);
                }
            }
        }
        Ok(NonstationaryMdp {
            horizon,
            initial_state,
            interpolation,
            breakpoints,
            generator: None,
            diameter_bound,
        })
    }

    /// A constant environment.
    pub fn stationary(mdp: StationaryMdp, horizon: usize, initial_state: usize) -> Result<Self> {
        Self::new(
            horizon,
            initial_state,
            Interpolation::PiecewiseConstant,
            vec![Breakpoint { start: 1, mdp }],
        )
    }

    pub fn with_generator(mut self, info: GeneratorInfo) -> Self {
        self.generator = Some(info);
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn generator(&self) -> Option<&GeneratorInfo> {
        self.generator.as_ref()
    }

    pub fn n_states(&self) -> usize {
        self.breakpoints[0].mdp.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.breakpoints[0].mdp.n_actions()
    }

    /// Largest diameter over the snapshots checked at construction.
    pub fn diameter_bound(&self) -> f64 {
        self.diameter_bound
    }

    /// Same schedule over a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidEnvironment("horizon must be positive".into()));
        }
        let mut env = self.clone();
        env.horizon = horizon;
        Ok(env)
    }

    fn segment_of(&self, t: usize) -> usize {
        self.breakpoints.partition_point(|b| b.start <= t) - 1
    }

    /// The MDP `M_t` in effect at step `t ∈ [1, T]`.
    pub fn snapshot(&self, t: usize) -> Result<Cow<'_, StationaryMdp>> {
        if t == 0 || t > self.horizon {
            return Err(Error::StepOutOfRange { t, horizon: self.horizon });
        }
        let j = self.segment_of(t);
        let current = &self.breakpoints[j];
        match (self.interpolation, self.breakpoints.get(j + 1)) {
            (Interpolation::LinearBlend, Some(next)) if t > current.start => {
                let w = (t - current.start) as f64 / (next.start - current.start) as f64;
                Ok(Cow::Owned(current.mdp.blend(&next.mdp, w)?))
            }
            _ => Ok(Cow::Borrowed(&current.mdp)),
        }
    }

    /// Number of distinct snapshots over `1..=T`.
    pub fn distinct_snapshots(&self) -> usize {
        match self.interpolation {
            Interpolation::PiecewiseConstant => {
                self.breakpoints.iter().filter(|b| b.start <= self.horizon).count()
            }
            Interpolation::LinearBlend => self.horizon,
        }
    }

    /// Per-step and total variation of rewards and transitions.
    ///
    /// With `include_global`, also solves every distinct snapshot for its
    /// optimal gain and sums the absolute gain changes; refused above
    /// [`GLOBAL_VARIATION_CAP`] snapshots.
    pub fn variation(&self, include_global: bool) -> Result<VariationSummary> {
        if include_global && self.distinct_snapshots() > GLOBAL_VARIATION_CAP {
            return Err(Error::TooExpensive {
                what: "global variation",
                count: self.distinct_snapshots(),
                cap: GLOBAL_VARIATION_CAP,
            });
        }
        let steps = self.horizon - 1;
        let mut per_step_r = Vec::with_capacity(steps);
        let mut per_step_p = Vec::with_capacity(steps);
        let mut gains = Vec::new();
        let mut d_max = self.diameter_bound;
        let mut prev = self.snapshot(1)?;
        if include_global {
            gains.push(optimal_gain(&prev)?);
        }
        for t in 1..self.horizon {
            let next = self.snapshot(t + 1)?;
            let unchanged = matches!((&prev, &next), (Cow::Borrowed(a), Cow::Borrowed(b)) if std::ptr::eq(*a, *b));
            if unchanged {
                per_step_r.push(0.0);
                per_step_p.push(0.0);
                if include_global {
                    gains.push(*gains.last().unwrap());
                }
            } else {
                per_step_r.push(next.reward_distance(&prev));
                per_step_p.push(next.transition_distance(&prev));
                if include_global {
                    gains.push(optimal_gain(&next)?);
                    d_max = d_max.max(diameter(&next));
                }
            }
            prev = next;
        }
        let v_global = include_global.then(|| gains.windows(2).map(|w| (w[1] - w[0]).abs()).sum());
        Ok(VariationSummary {
            v_r: per_step_r.iter().sum(),
            v_p: per_step_p.iter().sum(),
            v_global,
            per_step_r,
            per_step_p,
            d_max,
        })
    }

    /// Evaluates both sides of `V_T ≤ V^r_T + D·V^p_T`.
    pub fn check_gain_variation(&self) -> Result<GainVariationCheck> {
        if self.horizon > GLOBAL_VARIATION_CAP {
            return Err(Error::TooExpensive {
                what: "gain variation check",
                count: self.horizon,
                cap: GLOBAL_VARIATION_CAP,
            });
        }
        let summary = self.variation(true)?;
        let v_global = summary.v_global.unwrap_or(0.0);
        let bound = summary.v_r + summary.d_max * summary.v_p;
        Ok(GainVariationCheck { holds: v_global <= bound + GAIN_VARIATION_TOLERANCE, v_global, bound })
    }

    /// Number of steps `t < T` at which `M_{t+1} ≠ M_t`.
    pub fn change_count(&self) -> Result<usize> {
        let v = self.variation(false)?;
        Ok(v.per_step_r.iter().zip(&v.per_step_p).filter(|(r, p)| **r > 0.0 || **p > 0.0).count())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnvironmentDocument {
            generator: self.generator.clone(),
            horizon: self.horizon,
            initial_state: self.initial_state,
            interpolation: self.interpolation,
            breakpoints: self.breakpoints.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EnvironmentDocument = serde_json::from_str(text)?;
        let env = Self::new(doc.horizon, doc.initial_state, doc.interpolation, doc.breakpoints)?;
        Ok(match doc.generator {
            Some(info) => env.with_generator(info),
            None => env,
        })
    }
}

/// Reward and transition variation of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationSummary {
    pub v_r: f64,
    pub v_p: f64,
    pub v_global: Option<f64>,
    /// `per_step_r[i]` is the change between steps `i + 1` and `i + 2`.
    pub per_step_r: Vec<f64>,
    pub per_step_p: Vec<f64>,
    pub d_max: f64,
}

impl VariationSummary {
    /// `V^r_T + V^p_T`.
    pub fn total(&self) -> f64 {
        self.v_r + self.v_p
    }

    /// Variation accumulated inside the window of `len` steps starting at `start`.
    pub fn window(&self, start: usize, len: usize) -> (f64, f64) {
        if len < 2 {
            return (0.0, 0.0);
        }
        let lo = (start - 1).min(self.per_step_r.len());
        let hi = (start - 1 + len - 1).min(self.per_step_r.len());
        (self.per_step_r[lo..hi].iter().sum(), self.per_step_p[lo..hi].iter().sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainVariationCheck {
    pub holds: bool,
    pub v_global: f64,
    pub bound: f64,
}
