//! Many independent agents with sampled innate opinions and recommendations,
//! each run once under the fixed and once under the adaptive policy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsParams, RewardSpec};
use crate::error::{Error, Result};
use crate::montecarlo::{simulate, stream_rng, StreamTag};
use crate::policy::{AgentPolicy, PlatformPolicy};
use crate::sampling::{SamplingSpec, Truncation};

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub num_agents: usize,
    pub innate: SamplingSpec,
    pub recommendation: SamplingSpec,
    pub dynamics: DynamicsParams,
    pub gamma0: f64,
    pub kappa: f64,
    pub delta: f64,
    /// May be 0, in which case final opinions are the innate ones.
    pub horizon: usize,
    pub master_seed: u64,
}

impl PopulationConfig {
    /// Uniform innate opinions and a clipped zero-mean Gaussian with
    /// standard deviation 0.5 for recommendations.
    pub fn default_laws() -> (SamplingSpec, SamplingSpec) {
        (
            SamplingSpec::uniform(),
            SamplingSpec::Gaussian {
                mean: 0.0,
                std_dev: 0.5,
                truncation: Truncation::Clip,
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::config("num_agents must be at least 1"));
        }
        self.innate.validate()?;
        self.recommendation.validate()?;
        self.adaptive().validate(self.horizon)?;
        Ok(())
    }

    fn fixed(&self) -> AgentPolicy {
        AgentPolicy::Fixed {
            gamma0: self.gamma0,
        }
    }

    fn adaptive(&self) -> AgentPolicy {
        AgentPolicy::Adaptive {
            gamma0: self.gamma0,
            kappa: self.kappa,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationResult {
    pub innate: Vec<f64>,
    pub recommendations: Vec<f64>,
    pub final_fixed: Vec<f64>,
    pub final_adaptive: Vec<f64>,
}

impl PopulationResult {
    pub fn len(&self) -> usize {
        self.innate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.innate.is_empty()
    }
}

/// Agent `i` draws `(x0, u0)` from its own population stream and runs both
/// policies on the same click stream.
pub fn run_population(config: &PopulationConfig) -> Result<PopulationResult> {
    config.validate()?;
    let (fixed, adaptive) = (config.fixed(), config.adaptive());
    let rows: Vec<[f64; 4]> = (0..config.num_agents)
        .into_par_iter()
        .map(|i| {
            let i = i as u64;
            let mut draw = stream_rng(config.master_seed, StreamTag::Population, i);
            let x0 = config.innate.sample(&mut draw);
            let u0 = config.recommendation.sample(&mut draw);
            let platform = PlatformPolicy::Fixed { u0 };
            let run = |agent: &AgentPolicy| {
                let mut clicks = stream_rng(config.master_seed, StreamTag::Clicks, i);
                let mut explore = stream_rng(config.master_seed, StreamTag::Exploration, i);
                simulate(
                    &config.dynamics,
                    x0,
                    config.horizon,
                    agent,
                    &platform,
                    RewardSpec::UNIT,
                    &mut clicks,
                    &mut explore,
                )
                .final_opinion()
            };
            [x0, u0, run(&fixed), run(&adaptive)]
        })
        .collect();
    let column = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    Ok(PopulationResult {
        innate: column(0),
        recommendations: column(1),
        final_fixed: column(2),
        final_adaptive: column(3),
    })
}

/// Empirical 1-Wasserstein distance between equal-size samples: the mean
/// absolute difference of order statistics.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::config(format!(
            "wasserstein1 needs equal sample sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let total: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / a.len() as f64)
}

/// Equal-width bin counts over `[lo, hi]`; the last bin includes `hi`.
/// Samples outside the range (and NaN) are not counted.
pub fn histogram(samples: &[f64], bins: usize, range: (f64, f64)) -> Vec<usize> {
    let mut counts = vec![0; bins];
    let (lo, hi) = range;
    if bins == 0 || hi <= lo {
        return counts;
    }
    let width = (hi - lo) / bins as f64;
    for &x in samples {
        if !(lo..=hi).contains(&x) {
            continue;
        }
        let idx = (((x - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1(horizon: usize, agents: usize) -> PopulationConfig {
        let (innate, recommendation) = PopulationConfig::default_laws();
        PopulationConfig {
            num_agents: agents,
            innate,
            recommendation,
            dynamics: DynamicsParams::new(0.3, 0.2).unwrap(),
            gamma0: 0.6,
            kappa: 1.2,
            delta: 0.2,
            horizon,
            master_seed: 9,
        }
    }

    #[test]
    fn wasserstein_examples() {
        let a = [0.3, -0.2, 0.9];
        assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        assert!((wasserstein1(&a, &shifted).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(wasserstein1(&[0.0, 1.0], &[0.0, 0.0]).unwrap(), 0.5);
        assert!(wasserstein1(&[0.0], &[0.0, 1.0]).is_err());
        // order of input does not matter
        assert!((wasserstein1(&[1.0, 0.0], &[0.5, 0.0]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(histogram(&[0.0, 0.0, 0.0], 2, (-1.0, 1.0)), vec![0, 3]);
        assert_eq!(histogram(&[], 4, (-1.0, 1.0)), vec![0; 4]);
        assert_eq!(histogram(&[-1.0, -0.5, 0.5], 2, (-1.0, 1.0)), vec![2, 1]);
        assert_eq!(
            histogram(&[1.0, 1.5, -2.0, f64::NAN], 2, (-1.0, 1.0)),
            vec![0, 1]
        );
    }

    #[test]
    fn zero_horizon_keeps_innate() {
        let r = run_population(&fig1(0, 50)).unwrap();
        assert_eq!(r.final_fixed, r.innate);
        assert_eq!(r.final_adaptive, r.innate);
    }

    #[test]
    fn matching_recommendation_means_no_drift() {
        let mut cfg = fig1(30, 1);
        for (i, x) in [-0.8, -0.1, 0.4, 1.0].into_iter().enumerate() {
            cfg.innate = SamplingSpec::PointMass { value: x };
            cfg.recommendation = SamplingSpec::PointMass { value: x };
            cfg.master_seed = i as u64;
            let r = run_population(&cfg).unwrap();
            assert_eq!(r.final_fixed, vec![x]);
            assert_eq!(r.final_adaptive, vec![x]);
        }
    }

    #[test]
    fn adaptive_stays_closer_on_average() {
        let mut cfg = fig1(100, 1);
        cfg.innate = SamplingSpec::PointMass { value: -1.0 };
        cfg.recommendation = SamplingSpec::PointMass { value: 1.0 };
        let (mut fixed, mut adaptive) = (0.0, 0.0);
        for seed in 0..400 {
            cfg.master_seed = seed;
            let r = run_population(&cfg).unwrap();
            fixed += r.final_fixed[0] + 1.0;
            adaptive += r.final_adaptive[0] + 1.0;
        }
        assert!(
            adaptive < fixed,
            "adaptive drift {adaptive} vs fixed {fixed}"
        );
    }

    #[test]
    fn deterministic_and_pool_independent() {
        let cfg = fig1(10, 500);
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap();
        let a = one.install(|| run_population(&cfg).unwrap());
        let b = many.install(|| run_population(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
    }
}
