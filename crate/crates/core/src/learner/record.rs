//! Per-step trajectories and their tabular text format.
//!
//! The file starts with a `#`-prefixed header block (config, seed, phase and
//! episode metadata) followed by a CSV table with columns
//! `t,state,action,reward,episode,phase`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::LearnerConfig;
use crate::error::{Error, Result};
use crate::mdp::DeterministicPolicy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: usize,
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    /// Episode index within the phase.
    pub episode: usize,
    pub phase: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub phase: usize,
    pub index: usize,
    /// Global start step `t_k`.
    pub start: usize,
    /// Optimistic gain `ρ̃_k`.
    pub gain: f64,
    pub policy: DeterministicPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSummary {
    pub index: usize,
    pub start: usize,
    pub length: usize,
    pub delta: f64,
    pub v_tilde_r: f64,
    pub v_tilde_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub config: LearnerConfig,
    pub n_states: usize,
    pub n_actions: usize,
    /// `V` used to build the variation schedule, if any.
    pub schedule_variation: Option<f64>,
    pub steps: Vec<Step>,
    pub episodes: Vec<EpisodeSummary>,
    pub phases: Vec<PhaseSummary>,
}

const MAGIC: &str = "# vucrl run record v1";
const COLUMNS: &str = "t,state,action,reward,episode,phase";

impl RunRecord {
    pub fn new(seed: u64, config: LearnerConfig, n_states: usize, n_actions: usize) -> Self {
        RunRecord {
            seed,
            config,
            n_states,
            n_actions,
            schedule_variation: None,
            steps: Vec::new(),
            episodes: Vec::new(),
            phases: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn episode_starts(&self) -> Vec<usize> {
        self.episodes.iter().map(|e| e.start).collect()
    }

    pub fn phase_starts(&self) -> Vec<usize> {
        self.phases.iter().map(|p| p.start).collect()
    }

    pub fn optimistic_gains(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.gain).collect()
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Steps of every episode, in order: `(episode summary, steps)`.
    pub fn episode_slices(&self) -> Vec<(&EpisodeSummary, &[Step])> {
        let mut out = Vec::with_capacity(self.episodes.len());
        let mut cursor = 0;
        for (i, ep) in self.episodes.iter().enumerate() {
            let end = self.episodes.get(i + 1).map_or(self.steps.len(), |next| {
                self.steps.partition_point(|s| s.t < next.start)
            });
            out.push((ep, &self.steps[cursor..end]));
            cursor = end;
        }
        out
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::with_capacity(32 * self.steps.len() + 1024);
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# config: {}", serde_json::to_string(&self.config)?);
        let _ = writeln!(out, "# n_states: {}", self.n_states);
        let _ = writeln!(out, "# n_actions: {}", self.n_actions);
        match self.schedule_variation {
            Some(v) => {
                let _ = writeln!(out, "# schedule_variation: {v}");
            }
            None => {
                let _ = writeln!(out, "# schedule_variation: none");
            }
        }
        for p in &self.phases {
            let _ = writeln!(
                out,
                "# phase: {} {} {} {} {} {}",
                p.index, p.start, p.length, p.delta, p.v_tilde_r, p.v_tilde_p
            );
        }
        for e in &self.episodes {
            let policy: Vec<String> = e.policy.actions().iter().map(usize::to_string).collect();
            let _ = writeln!(out, "# episode: {} {} {} {} {}", e.phase, e.index, e.start, e.gain, policy.join(","));
        }
        let _ = writeln!(out, "{COLUMNS}");
        for s in &self.steps {
            let _ = writeln!(out, "{},{},{},{},{},{}", s.t, s.state, s.action, s.reward, s.episode, s.phase);
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(msg);
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing run record header".into()));
        }
        let mut seed = None;
        let mut config = None;
        let mut n_states = None;
        let mut n_actions = None;
        let mut schedule_variation = None;
        let mut phases = Vec::new();
        let mut episodes = Vec::new();
        let mut steps = Vec::new();
        let mut in_table = false;
        for line in lines {
            if !in_table {
                if line == COLUMNS {
                    in_table = true;
                    continue;
                }
                let Some(body) = line.strip_prefix("# ") else {
                    return Err(bad(format!("unexpected header line `{line}`")));
                };
                let (key, value) = body.split_once(": ").ok_or_else(|| bad(format!("bad header `{line}`")))?;
                match key {
                    "seed" => seed = Some(parse(value)?),
                    "config" => config = Some(serde_json::from_str::<LearnerConfig>(value)?),
                    "n_states" => n_states = Some(parse(value)?),
                    "n_actions" => n_actions = Some(parse(value)?),
                    "schedule_variation" => {
                        schedule_variation = if value == "none" { None } else { Some(parse(value)?) }
                    }
                    "phase" => {
                        let f: Vec<&str> = value.split(' ').collect();
                        if f.len() != 6 {
                            return Err(bad(format!("bad phase line `{line}`")));
                        }
                        phases.push(PhaseSummary {
                            index: parse(f[0])?,
                            start: parse(f[1])?,
                            length: parse(f[2])?,
                            delta: parse(f[3])?,
                            v_tilde_r: parse(f[4])?,
                            v_tilde_p: parse(f[5])?,
                        });
                    }
                    "episode" => {
                        let f: Vec<&str> = value.split(' ').collect();
                        if f.len() != 5 {
                            return Err(bad(format!("bad episode line `{line}`")));
                        }
                        let actions = f[4].split(',').map(parse).collect::<Result<Vec<usize>>>()?;
                        let n_act = n_actions.ok_or_else(|| bad("n_actions must precede episodes".into()))?;
                        episodes.push(EpisodeSummary {
                            phase: parse(f[0])?,
                            index: parse(f[1])?,
                            start: parse(f[2])?,
                            gain: parse(f[3])?,
                            policy: DeterministicPolicy::new(actions, n_act)?,
                        });
                    }
                    _ => return Err(bad(format!("unknown header key `{key}`"))),
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(format!("bad row `{line}`")));
            }
            steps.push(Step {
                t: parse(f[0])?,
                state: parse(f[1])?,
                action: parse(f[2])?,
                reward: parse(f[3])?,
                episode: parse(f[4])?,
                phase: parse(f[5])?,
            });
        }
        let missing = |what: &str| bad(format!("missing `{what}` header"));
        Ok(RunRecord {
            seed: seed.ok_or_else(|| missing("seed"))?,
            config: config.ok_or_else(|| missing("config"))?,
            n_states: n_states.ok_or_else(|| missing("n_states"))?,
            n_actions: n_actions.ok_or_else(|| missing("n_actions"))?,
            schedule_variation,
            steps,
            episodes,
            phases,
        })
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::make_gradual;
    use crate::learner::{run_learner, RestartMode};

    #[test]
    fn text_round_trip() {
        let env = make_gradual(4, 3, 2, 250, 0.8).unwrap();
        let cfg = LearnerConfig::new(RestartMode::VariationRestart, 0.05);
        let record = run_learner(&env, &cfg, 17).unwrap();
        let text = record.to_text().unwrap();
        assert!(text.lines().any(|l| l == COLUMNS));
        let back = RunRecord::from_text(&text).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn rejects_garbage() {
        assert!(RunRecord::from_text("hello").is_err());
        assert!(RunRecord::from_text(&format!("{MAGIC}\n{COLUMNS}\n1,2,3\n")).is_err());
    }
}
