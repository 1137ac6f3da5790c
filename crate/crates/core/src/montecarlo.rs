//! Seed-reproducible trial engine and estimators.
//!
//! # Seeding
//!
//! Each trial draws from ChaCha8 generators keyed by the master seed and a
//! stream tag, with the trial index selecting the ChaCha stream:
//!
//! ```text
//! key    = master_seed (8 bytes LE) | tag (8 bytes LE) | "driftsim-stream\0"
//! stream = trial_index
//! ```
//!
//! Clicks consume exactly one uniform per step from the `Clicks` stream and
//! click iff `z < gamma`. Exploration draws come from the separate
//! `Exploration` stream, so two policies run on the same trial index see
//! identical click uniforms. Aggregation runs in trial-index order, so
//! results do not depend on the rayon pool size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    reward_value, step, utility_and_payoff_curves, DynamicsParams, RewardSpec, Trajectory,
};
use crate::error::{Error, Result};
use crate::policy::{
    validate_schedule, AgentPolicy, AgentPolicyState, PlatformPolicy, PlatformPolicyState,
};

/// Identifier recorded in run manifests; bump when the seeding scheme or
/// draw order changes.
pub const GENERATOR_ID: &str = "chacha8-stream-per-trial/v1";

/// Largest horizon accepted by [`enumerate_exact`].
pub const ENUMERATION_CAP: usize = 16;

/// Slack for the pathwise drift comparison of coupled runs; paths that
/// differ only by accumulated rounding are not counted as violations.
pub const DOMINANCE_SLACK: f64 = 1e-12;

const BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Clicks = 1,
    Exploration = 2,
    Population = 3,
}

pub fn stream_rng(master_seed: u64, tag: StreamTag, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(tag as u64).to_le_bytes());
    key[16..].copy_from_slice(b"driftsim-stream\0");
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dynamics: DynamicsParams,
    pub x0: f64,
    pub lambda: f64,
    pub horizon: usize,
    pub agent: AgentPolicy,
    pub platform: PlatformPolicy,
    pub reward: RewardSpec,
    pub trials: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !(-1.0..=1.0).contains(&self.x0) {
            return Err(Error::config(format!(
                "x0 must lie in [-1, 1], got {}",
                self.x0
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        RewardSpec::new(self.reward.slope)?;
        self.agent.validate(self.horizon)?;
        self.platform.validate()
    }

    /// Same experiment with a different agent policy.
    pub fn with_agent(&self, agent: AgentPolicy) -> Self {
        Self {
            agent,
            ..self.clone()
        }
    }
}

/// Closed-loop run without validation.
#[allow(clippy::too_many_arguments)]
pub(crate) fn simulate(
    dynamics: &DynamicsParams,
    x0: f64,
    horizon: usize,
    agent: &AgentPolicy,
    platform: &PlatformPolicy,
    reward: RewardSpec,
    clicks_rng: &mut impl Rng,
    explore_rng: &mut impl Rng,
) -> Trajectory {
    let mut opinions = Vec::with_capacity(horizon + 1);
    let mut recommendations = Vec::with_capacity(horizon);
    let mut clicks = Vec::with_capacity(horizon);
    let mut click_probs = Vec::with_capacity(horizon);
    let mut agent_state = agent.initial_state();
    let mut platform_state = PlatformPolicyState::new();
    let mut x = x0;
    opinions.push(x);
    for k in 0..horizon {
        let u = platform_state.recommend(k, platform, explore_rng);
        let gamma = agent_state.click_probability();
        let z: f64 = clicks_rng.random();
        let clicked = z < gamma;
        let x_next = step(x, x0, u, clicked, dynamics);
        agent_state.advance(x_next, x0, k + 1, agent);
        platform_state.observe(u, clicked, reward_value((x - u).abs(), reward));

        recommendations.push(u);
        clicks.push(clicked);
        click_probs.push(gamma);
        opinions.push(x_next);
        x = x_next;
    }
    Trajectory {
        opinions,
        recommendations,
        clicks,
        click_probs,
        final_click_prob: agent_state.click_probability(),
    }
}

fn trial_unchecked(config: &ExperimentConfig, agent: &AgentPolicy, trial_index: u64) -> Trajectory {
    let mut clicks_rng = stream_rng(config.master_seed, StreamTag::Clicks, trial_index);
    let mut explore_rng = stream_rng(config.master_seed, StreamTag::Exploration, trial_index);
    simulate(
        &config.dynamics,
        config.x0,
        config.horizon,
        agent,
        &config.platform,
        config.reward,
        &mut clicks_rng,
        &mut explore_rng,
    )
}

/// One closed-loop run; a pure function of `(config, trial_index)`.
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<Trajectory> {
    config.validate()?;
    Ok(trial_unchecked(config, &config.agent, trial_index))
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Welford running moments.
#[derive(Debug, Clone, Copy, Default)]
pub struct Running {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Running {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Standard error uses the `n - 1` sample deviation; 0 when `n < 2` or
    /// the samples are constant.
    pub fn finish(&self) -> MeanSe {
        let se = if self.n < 2 || self.m2 <= 0.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
        };
        MeanSe {
            mean: self.mean,
            se,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepEstimate {
    pub k: usize,
    pub opinion: MeanSe,
    pub utility: MeanSe,
    pub payoff: MeanSe,
    pub gamma: MeanSe,
}

/// Per-step Monte Carlo estimates for `k = 0..=K`. Utility and payoff at
/// `k = 0` are 0; `gamma` at `k` is the clicking probability in force at
/// step `k` (at `K`, the one after the last update).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub trials: usize,
    pub steps: Vec<StepEstimate>,
}

struct TrialCurves {
    opinion: Vec<f64>,
    utility: Vec<f64>,
    payoff: Vec<f64>,
    gamma: Vec<f64>,
}

fn curves(config: &ExperimentConfig, traj: &Trajectory) -> TrialCurves {
    let (utility, payoff) =
        utility_and_payoff_curves(traj, config.lambda, config.reward, config.reward);
    let gamma = (0..=traj.horizon())
        .map(|k| traj.click_prob_at(k))
        .collect();
    TrialCurves {
        opinion: traj.opinions.clone(),
        utility,
        payoff,
        gamma,
    }
}

/// Runs `count` trials in parallel batches and hands each result to `sink`
/// in trial-index order.
fn for_each_trial_ordered<T, F, S>(count: usize, produce: F, mut sink: S)
where
    T: Send,
    F: Fn(u64) -> T + Sync,
    S: FnMut(u64, T),
{
    let mut start = 0;
    while start < count {
        let end = (start + BATCH).min(count);
        let batch: Vec<T> = (start..end)
            .into_par_iter()
            .map(|i| produce(i as u64))
            .collect();
        for (offset, item) in batch.into_iter().enumerate() {
            sink((start + offset) as u64, item);
        }
        start = end;
    }
}

/// Runs every trial and aggregates opinion, utility, payoff, and clicking
/// probability at each step.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SeriesEstimate> {
    config.validate()?;
    let len = config.horizon + 1;
    let mut acc = vec![[Running::default(); 4]; len];
    for_each_trial_ordered(
        config.trials,
        |i| curves(config, &trial_unchecked(config, &config.agent, i)),
        |_, c| {
            for (k, slot) in acc.iter_mut().enumerate() {
                slot[0].push(c.opinion[k]);
                slot[1].push(c.utility[k]);
                slot[2].push(c.payoff[k]);
                slot[3].push(c.gamma[k]);
            }
        },
    );
    let steps = acc
        .iter()
        .enumerate()
        .map(|(k, s)| StepEstimate {
            k,
            opinion: s[0].finish(),
            utility: s[1].finish(),
            payoff: s[2].finish(),
            gamma: s[3].finish(),
        })
        .collect();
    Ok(SeriesEstimate {
        trials: config.trials,
        steps,
    })
}

/// Mean and standard error of `U_first(K) - U_second(K)` over paired
/// trials; both runs of a pair share the trial's random streams.
pub fn paired_utility_difference(
    first: &ExperimentConfig,
    second: &ExperimentConfig,
) -> Result<MeanSe> {
    first.validate()?;
    second.validate()?;
    if first.trials != second.trials
        || first.master_seed != second.master_seed
        || first.horizon != second.horizon
    {
        return Err(Error::config(
            "paired experiments need equal trials, master seed, and horizon",
        ));
    }
    let k = first.horizon;
    let final_utility = |cfg: &ExperimentConfig, t: &Trajectory| {
        utility_and_payoff_curves(t, cfg.lambda, cfg.reward, cfg.reward).0[k]
    };
    let mut diff = Running::default();
    for_each_trial_ordered(
        first.trials,
        |i| {
            let a = trial_unchecked(first, &first.agent, i);
            let b = trial_unchecked(second, &second.agent, i);
            final_utility(first, &a) - final_utility(second, &b)
        },
        |_, d| diff.push(d),
    );
    Ok(diff.finish())
}

fn coupled_policies(
    config: &ExperimentConfig,
    schedule_a: &[usize],
    schedule_b: &[usize],
) -> Result<(AgentPolicy, AgentPolicy)> {
    config.validate()?;
    if config.platform.fixed_recommendation().is_none() {
        return Err(Error::config(
            "coupled runs require the fixed-recommendation platform",
        ));
    }
    let kappa = config.agent.kappa().ok_or_else(|| {
        Error::config("coupled runs need a reduction rate; use an adaptive or forced agent")
    })?;
    validate_schedule(schedule_a, config.horizon)?;
    validate_schedule(schedule_b, config.horizon)?;
    if let Some(k) = schedule_a
        .iter()
        .find(|k| schedule_b.binary_search(k).is_err())
    {
        return Err(Error::config(format!(
            "schedules are not nested: reduction at {k} is missing from the second schedule"
        )));
    }
    let gamma0 = config.agent.gamma0();
    Ok((
        AgentPolicy::Forced {
            gamma0,
            kappa,
            schedule: schedule_a.to_vec(),
        },
        AgentPolicy::Forced {
            gamma0,
            kappa,
            schedule: schedule_b.to_vec(),
        },
    ))
}

/// Runs the forced-reduction policies with `schedule_a ⊆ schedule_b` on the
/// same click uniforms. Uses `gamma0` and `kappa` from `config.agent`.
pub fn run_coupled_pair(
    config: &ExperimentConfig,
    schedule_a: &[usize],
    schedule_b: &[usize],
    trial_index: u64,
) -> Result<(Trajectory, Trajectory)> {
    let (a, b) = coupled_policies(config, schedule_a, schedule_b)?;
    Ok((
        trial_unchecked(config, &a, trial_index),
        trial_unchecked(config, &b, trial_index),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledTrial {
    pub trial: u64,
    pub clicks_a: usize,
    pub clicks_b: usize,
    pub final_drift_a: f64,
    pub final_drift_b: f64,
    /// Steps where the second run clicked but the first did not.
    pub click_violations: usize,
    /// Steps where the second run drifted further than the first.
    pub drift_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub trials: usize,
    pub click_violations: usize,
    pub drift_violations: usize,
    /// Average click rate `(1/K) sum c_k` of each run.
    pub click_rate_a: MeanSe,
    pub click_rate_b: MeanSe,
    /// `|x_K - x0|` of each run.
    pub drift_a: MeanSe,
    pub drift_b: MeanSe,
    #[serde(skip)]
    pub per_trial: Vec<CoupledTrial>,
}

pub fn compare_coupled(trial: u64, x0: f64, a: &Trajectory, b: &Trajectory) -> CoupledTrial {
    let click_violations = a
        .clicks
        .iter()
        .zip(&b.clicks)
        .filter(|(ca, cb)| **cb && !**ca)
        .count();
    let drift_violations = a
        .opinions
        .iter()
        .zip(&b.opinions)
        .filter(|(xa, xb)| (**xb - x0).abs() > (**xa - x0).abs() + DOMINANCE_SLACK)
        .count();
    CoupledTrial {
        trial,
        clicks_a: a.clicks.iter().filter(|c| **c).count(),
        clicks_b: b.clicks.iter().filter(|c| **c).count(),
        final_drift_a: (a.final_opinion() - x0).abs(),
        final_drift_b: (b.final_opinion() - x0).abs(),
        click_violations,
        drift_violations,
    }
}

/// Coupled runs over all trials with pathwise dominance checks.
pub fn run_coupling(
    config: &ExperimentConfig,
    schedule_a: &[usize],
    schedule_b: &[usize],
) -> Result<CouplingSummary> {
    let (a, b) = coupled_policies(config, schedule_a, schedule_b)?;
    let k = config.horizon as f64;
    let mut rates = [Running::default(); 2];
    let mut drifts = [Running::default(); 2];
    let mut per_trial = Vec::with_capacity(config.trials);
    for_each_trial_ordered(
        config.trials,
        |i| {
            let ta = trial_unchecked(config, &a, i);
            let tb = trial_unchecked(config, &b, i);
            compare_coupled(i, config.x0, &ta, &tb)
        },
        |_, row| {
            rates[0].push(row.clicks_a as f64 / k);
            rates[1].push(row.clicks_b as f64 / k);
            drifts[0].push(row.final_drift_a);
            drifts[1].push(row.final_drift_b);
            per_trial.push(row);
        },
    );
    Ok(CouplingSummary {
        trials: config.trials,
        click_violations: per_trial.iter().map(|r| r.click_violations).sum(),
        drift_violations: per_trial.iter().map(|r| r.drift_violations).sum(),
        click_rate_a: rates[0].finish(),
        click_rate_b: rates[1].finish(),
        drift_a: drifts[0].finish(),
        drift_b: drifts[1].finish(),
        per_trial,
    })
}

/// Exact expectations at `k = 0..=K`, same conventions as [`SeriesEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSeries {
    pub opinion: Vec<f64>,
    pub utility: Vec<f64>,
    pub payoff: Vec<f64>,
    pub gamma: Vec<f64>,
}

struct Enumerator<'a> {
    config: &'a ExperimentConfig,
    u0: f64,
    out: ExactSeries,
}

impl Enumerator<'_> {
    fn descend(&mut self, k: usize, x: f64, state: AgentPolicyState, agent_sum: f64, prob: f64) {
        let cfg = self.config;
        self.out.opinion[k] += prob * x;
        self.out.gamma[k] += prob * state.click_probability();
        if k > 0 {
            let kf = k as f64;
            let drift = (x - cfg.x0).abs();
            self.out.utility[k] +=
                prob * (cfg.lambda * agent_sum / kf - (1.0 - cfg.lambda) * drift);
            self.out.payoff[k] += prob * agent_sum / kf;
        }
        if k == cfg.horizon {
            return;
        }
        let gamma = state.click_probability();
        let reward = reward_value((x - self.u0).abs(), cfg.reward);
        for clicked in [true, false] {
            let p = if clicked { gamma } else { 1.0 - gamma };
            if p == 0.0 {
                continue;
            }
            let x_next = step(x, cfg.x0, self.u0, clicked, &cfg.dynamics);
            let mut next = state;
            next.advance(x_next, cfg.x0, k + 1, &cfg.agent);
            let sum = if clicked {
                agent_sum + reward
            } else {
                agent_sum
            };
            self.descend(k + 1, x_next, next, sum, prob * p);
        }
    }
}

/// Exact per-step expectations by summing over every click path, weighted
/// by its probability under the configured agent policy.
pub fn enumerate_exact(config: &ExperimentConfig) -> Result<ExactSeries> {
    config.validate()?;
    if config.horizon > ENUMERATION_CAP {
        return Err(Error::config(format!(
            "exact enumeration is capped at horizon {ENUMERATION_CAP}, got {}",
            config.horizon
        )));
    }
    let u0 = config.platform.fixed_recommendation().ok_or_else(|| {
        Error::config("exact enumeration requires the fixed-recommendation platform")
    })?;
    let len = config.horizon + 1;
    let mut e = Enumerator {
        config,
        u0,
        out: ExactSeries {
            opinion: vec![0.0; len],
            utility: vec![0.0; len],
            payoff: vec![0.0; len],
            gamma: vec![0.0; len],
        },
    };
    e.descend(0, config.x0, config.agent.initial_state(), 0.0, 1.0);
    Ok(e.out)
}
