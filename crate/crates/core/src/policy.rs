//! Agent clicking policies and platform recommendation policies.
//!
//! Agent state is advanced once per step, after the opinion update that
//! produced `x_{k+1}`; a reduction triggered there governs the click at
//! step `k + 1`. The first click therefore always uses `gamma0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::SamplingSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentPolicy {
    /// Click with a constant probability.
    Fixed { gamma0: f64 },
    /// Divide the clicking probability by `kappa` whenever the opinion
    /// drifts at least `delta` away from the innate opinion.
    Adaptive { gamma0: f64, kappa: f64, delta: f64 },
    /// Divide by `kappa` at the listed time indices, regardless of drift.
    Forced {
        gamma0: f64,
        kappa: f64,
        schedule: Vec<usize>,
    },
}

fn check_probability(gamma0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma0) {
        return Err(Error::config(format!(
            "gamma0 must lie in [0, 1], got {gamma0}"
        )));
    }
    Ok(())
}

impl AgentPolicy {
    pub fn gamma0(&self) -> f64 {
        match *self {
            AgentPolicy::Fixed { gamma0 }
            | AgentPolicy::Adaptive { gamma0, .. }
            | AgentPolicy::Forced { gamma0, .. } => gamma0,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            AgentPolicy::Fixed { .. } => None,
            AgentPolicy::Adaptive { kappa, .. } | AgentPolicy::Forced { kappa, .. } => Some(kappa),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AgentPolicy::Fixed { .. } => "fixed",
            AgentPolicy::Adaptive { .. } => "adaptive",
            AgentPolicy::Forced { .. } => "forced",
        }
    }

    /// Checks parameters; forced schedules must be strictly increasing
    /// indices in `1..=horizon`.
    pub fn validate(&self, horizon: usize) -> Result<()> {
        check_probability(self.gamma0())?;
        match self {
            AgentPolicy::Fixed { .. } => {}
            AgentPolicy::Adaptive { kappa, delta, .. } => {
                if !(kappa.is_finite() && *kappa > 1.0) {
                    return Err(Error::config(format!(
                        "adaptive policy needs kappa > 1, got {kappa}"
                    )));
                }
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(Error::config(format!(
                        "adaptive policy needs delta > 0, got {delta}"
                    )));
                }
            }
            AgentPolicy::Forced {
                kappa, schedule, ..
            } => {
                if !(kappa.is_finite() && *kappa >= 1.0) {
                    return Err(Error::config(format!(
                        "forced policy needs kappa >= 1, got {kappa}"
                    )));
                }
                validate_schedule(schedule, horizon)?;
            }
        }
        Ok(())
    }

    pub fn initial_state(&self) -> AgentPolicyState {
        AgentPolicyState {
            gamma0: self.gamma0(),
            gamma: self.gamma0(),
            reductions: 0,
        }
    }
}

pub(crate) fn validate_schedule(schedule: &[usize], horizon: usize) -> Result<()> {
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(
            "reduction schedule must be strictly increasing",
        ));
    }
    if let Some(&bad) = schedule.iter().find(|&&k| k == 0 || k > horizon) {
        return Err(Error::config(format!(
            "reduction schedule entry {bad} is outside 1..={horizon}"
        )));
    }
    Ok(())
}

/// Current clicking probability and the number of reductions behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentPolicyState {
    gamma0: f64,
    gamma: f64,
    reductions: u32,
}

impl AgentPolicyState {
    pub fn click_probability(&self) -> f64 {
        self.gamma
    }

    pub fn reductions(&self) -> u32 {
        self.reductions
    }

    fn reduce(&mut self, kappa: f64) {
        self.reductions += 1;
        // recomputed from gamma0 so gamma == gamma0 / kappa^reductions exactly
        self.gamma = self.gamma0 / kappa.powi(self.reductions as i32);
    }

    /// Applies the policy after the opinion update that produced `x_next`
    /// (the opinion at time `k_next`).
    pub fn advance(&mut self, x_next: f64, x0: f64, k_next: usize, policy: &AgentPolicy) {
        match policy {
            AgentPolicy::Fixed { .. } => {}
            AgentPolicy::Adaptive { kappa, delta, .. } => {
                if (x_next - x0).abs() >= *delta {
                    self.reduce(*kappa);
                }
            }
            AgentPolicy::Forced {
                kappa, schedule, ..
            } => {
                if schedule.binary_search(&k_next).is_ok() {
                    self.reduce(*kappa);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlatformPolicy {
    /// Recommend `u0` at every step.
    Fixed { u0: f64 },
    /// Sample a fresh recommendation at steps `0, T, 2T, ...` and otherwise
    /// repeat the best clicked recommendation seen so far.
    ExplorePeriodically {
        period: usize,
        #[serde(default)]
        exploration: SamplingSpec,
        /// Recommendation used at step 0 instead of a sample.
        #[serde(default)]
        initial: Option<f64>,
    },
}

impl PlatformPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            PlatformPolicy::Fixed { u0 } => {
                if !(-1.0..=1.0).contains(u0) {
                    return Err(Error::config(format!("u0 must lie in [-1, 1], got {u0}")));
                }
            }
            PlatformPolicy::ExplorePeriodically {
                period,
                exploration,
                initial,
            } => {
                if *period == 0 {
                    return Err(Error::config("exploration period must be at least 1"));
                }
                exploration.validate()?;
                if let Some(u) = initial {
                    if !(-1.0..=1.0).contains(u) {
                        return Err(Error::config(format!(
                            "initial recommendation must lie in [-1, 1], got {u}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            PlatformPolicy::Fixed { .. } => "fixed",
            PlatformPolicy::ExplorePeriodically { .. } => "explore",
        }
    }

    pub fn fixed_recommendation(&self) -> Option<f64> {
        match *self {
            PlatformPolicy::Fixed { u0 } => Some(u0),
            PlatformPolicy::ExplorePeriodically { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub recommendation: f64,
    pub clicked: bool,
    /// Click-weighted platform reward; 0 for skipped steps.
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlatformPolicyState {
    history: Vec<Observation>,
    best: Option<usize>,
}

impl PlatformPolicyState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    /// Index of the best clicked entry; ties keep the earliest.
    pub fn best_index(&self) -> Option<usize> {
        self.best
    }

    /// Recommendation for step `k`. Exploration draws come from `rng`.
    pub fn recommend<R: Rng + ?Sized>(
        &self,
        k: usize,
        policy: &PlatformPolicy,
        rng: &mut R,
    ) -> f64 {
        match policy {
            PlatformPolicy::Fixed { u0 } => *u0,
            PlatformPolicy::ExplorePeriodically {
                period,
                exploration,
                initial,
            } => {
                if k.is_multiple_of(*period) {
                    match initial {
                        Some(u) if k == 0 => *u,
                        _ => exploration.sample(rng),
                    }
                } else if let Some(best) = self.best {
                    self.history[best].recommendation
                } else if let Some(last) = self.history.last() {
                    // nothing clicked yet: stay on the latest recommendation
                    last.recommendation
                } else {
                    exploration.sample(rng)
                }
            }
        }
    }

    pub fn observe(&mut self, recommendation: f64, clicked: bool, reward: f64) {
        let stored = if clicked { reward } else { 0.0 };
        let idx = self.history.len();
        self.history.push(Observation {
            recommendation,
            clicked,
            reward: stored,
        });
        if clicked {
            let better = match self.best {
                None => true,
                Some(b) => stored > self.history[b].reward,
            };
            if better {
                self.best = Some(idx);
            }
        }
    }
}
