//! Flat JSON run configuration shared by every command.
//!
//! A config file may set any subset of fields; the rest come from the
//! command's defaults. A manifest written by a previous run is also accepted:
//! its `config` member is used as the file. Unknown fields are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analytics::ScenarioParams;
use crate::dynamics::{DynamicsParams, RewardSpec};
use crate::montecarlo::ExperimentConfig;
use crate::policy::{AgentPolicy, PlatformPolicy};
use crate::population::{PopulationConfig, DEFAULT_BINS};
use crate::sampling::SamplingSpec;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AgentChoice {
    Fixed,
    Adaptive,
    Forced,
    /// Run fixed and adaptive side by side.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatformChoice {
    Fixed,
    Explore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Alpha,
    X0,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::X0 => "x0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: f64,
    pub beta: f64,
    pub x0: f64,
    pub u0: f64,
    pub gamma0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub lambda: f64,
    /// Reward slope `d` in `1 - d * distance`.
    pub d: f64,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,

    pub agent_policy: AgentChoice,
    /// Forced reduction times (forced agent; first schedule for `couple`).
    pub schedule: Vec<usize>,
    /// Second, nested schedule for `couple`.
    pub schedule_b: Vec<usize>,

    pub platform_policy: PlatformChoice,
    pub period: usize,
    pub exploration: SamplingSpec,
    pub initial_recommendation: Option<f64>,

    pub num_agents: usize,
    pub innate: SamplingSpec,
    pub recommendation: SamplingSpec,
    /// Horizons for population runs; empty means `[horizon]`.
    pub horizons: Vec<usize>,
    pub bins: usize,

    pub sweep: SweepParam,
    pub sweep_points: usize,
    pub sweep_epsilon: f64,

    /// Steps at which `analytic` evaluates the expected-opinion curve;
    /// empty means every step up to the horizon.
    pub eval_steps: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let (innate, recommendation) = PopulationConfig::default_laws();
        Self {
            alpha: 0.4,
            beta: 0.2,
            x0: -1.0,
            u0: 1.0,
            gamma0: 0.9,
            kappa: 1.2,
            delta: 0.3,
            lambda: 0.5,
            d: 0.1,
            horizon: 1000,
            trials: 1000,
            seed: 1,
            agent_policy: AgentChoice::Both,
            schedule: vec![],
            schedule_b: vec![],
            platform_policy: PlatformChoice::Fixed,
            period: 5,
            exploration: SamplingSpec::uniform(),
            initial_recommendation: None,
            num_agents: 10_000,
            innate,
            recommendation,
            horizons: vec![],
            bins: DEFAULT_BINS,
            sweep: SweepParam::Alpha,
            sweep_points: 31,
            sweep_epsilon: 0.02,
            eval_steps: vec![],
        }
    }
}

/// Canned bases. The fixed-recommendation single-agent setting doubles as
/// the default for `simulate` and `analytic`.
impl RunConfig {
    pub fn fig1() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.2,
            gamma0: 0.6,
            kappa: 1.2,
            delta: 0.2,
            d: 0.0,
            horizon: 100,
            horizons: vec![10, 100],
            num_agents: 10_000,
            ..Self::default()
        }
    }

    pub fn fig2() -> Self {
        Self::default()
    }

    pub fn fig3() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.2,
            x0: -1.0,
            u0: 1.0,
            gamma0: 0.9,
            kappa: 1.2,
            delta: 0.3,
            d: 0.0,
            horizon: 5,
            trials: 5000,
            ..Self::default()
        }
    }

    pub fn fig4() -> Self {
        Self {
            alpha: 0.4,
            beta: 0.2,
            x0: -1.0,
            lambda: 0.2,
            gamma0: 0.9,
            kappa: 1.05,
            delta: 0.3,
            d: 0.1,
            horizon: 40,
            trials: 1000,
            platform_policy: PlatformChoice::Explore,
            period: 5,
            ..Self::default()
        }
    }

    pub fn couple() -> Self {
        Self {
            horizon: 20,
            trials: 2000,
            agent_policy: AgentChoice::Forced,
            schedule: vec![5],
            schedule_b: vec![5, 10],
            ..Self::default()
        }
    }

    pub fn enumerate() -> Self {
        Self {
            horizon: 10,
            ..Self::default()
        }
    }

    pub fn dynamics(&self) -> Result<DynamicsParams, CliError> {
        Ok(DynamicsParams::new(self.alpha, self.beta)?)
    }

    pub fn reward(&self) -> Result<RewardSpec, CliError> {
        Ok(RewardSpec::new(self.d)?)
    }

    pub fn scenario(&self) -> Result<ScenarioParams, CliError> {
        let s = ScenarioParams {
            dynamics: self.dynamics()?,
            x0: self.x0,
            u0: self.u0,
            gamma0: self.gamma0,
            kappa: self.kappa,
            delta: self.delta,
            lambda: self.lambda,
            horizon: self.horizon,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn platform(&self) -> PlatformPolicy {
        match self.platform_policy {
            PlatformChoice::Fixed => PlatformPolicy::Fixed { u0: self.u0 },
            PlatformChoice::Explore => PlatformPolicy::ExplorePeriodically {
                period: self.period,
                exploration: self.exploration,
                initial: self.initial_recommendation,
            },
        }
    }

    fn policy(&self, choice: AgentChoice) -> AgentPolicy {
        match choice {
            AgentChoice::Fixed | AgentChoice::Both => AgentPolicy::Fixed {
                gamma0: self.gamma0,
            },
            AgentChoice::Adaptive => AgentPolicy::Adaptive {
                gamma0: self.gamma0,
                kappa: self.kappa,
                delta: self.delta,
            },
            AgentChoice::Forced => AgentPolicy::Forced {
                gamma0: self.gamma0,
                kappa: self.kappa,
                schedule: self.schedule.clone(),
            },
        }
    }

    pub fn agent_policies(&self) -> Vec<AgentPolicy> {
        match self.agent_policy {
            AgentChoice::Both => vec![
                self.policy(AgentChoice::Fixed),
                self.policy(AgentChoice::Adaptive),
            ],
            one => vec![self.policy(one)],
        }
    }

    pub fn experiment(&self, agent: AgentPolicy) -> Result<ExperimentConfig, CliError> {
        let cfg = ExperimentConfig {
            dynamics: self.dynamics()?,
            x0: self.x0,
            lambda: self.lambda,
            horizon: self.horizon,
            agent,
            platform: self.platform(),
            reward: self.reward()?,
            trials: self.trials,
            master_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn population_horizons(&self) -> Vec<usize> {
        if self.horizons.is_empty() {
            vec![self.horizon]
        } else {
            self.horizons.clone()
        }
    }

    pub fn population(&self, horizon: usize) -> Result<PopulationConfig, CliError> {
        let cfg = PopulationConfig {
            num_agents: self.num_agents,
            innate: self.innate,
            recommendation: self.recommendation,
            dynamics: self.dynamics()?,
            gamma0: self.gamma0,
            kappa: self.kappa,
            delta: self.delta,
            horizon,
            master_seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub horizon: Option<usize>,
}

/// Top-level key under which manifests store the resolved configuration.
pub const MANIFEST_CONFIG_KEY: &str = "config";

fn describe(path: &Path, err: &serde_json::Error) -> CliError {
    // serde_json appends "at line L column C"
    CliError::Config(format!("{}: {err}", path.display()))
}

/// Reads `path` (plain config or manifest), overlays it on `base`, then
/// applies `overrides`.
pub fn resolve(
    base: RunConfig,
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        None => base,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| describe(path, &e))?;
            let file = match value {
                Value::Object(mut obj) if obj.contains_key("manifest_version") => {
                    match obj.remove(MANIFEST_CONFIG_KEY) {
                        Some(Value::Object(c)) => c,
                        _ => {
                            return Err(CliError::Config(format!(
                                "{}: manifest has no `{MANIFEST_CONFIG_KEY}` object",
                                path.display()
                            )))
                        }
                    }
                }
                Value::Object(obj) => {
                    // parse the text itself so type errors carry line numbers
                    serde_json::from_str::<RunConfig>(&text).map_err(|e| describe(path, &e))?;
                    obj
                }
                _ => {
                    return Err(CliError::Config(format!(
                        "{}: expected a JSON object",
                        path.display()
                    )))
                }
            };
            overlay(base, file).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = overrides.trials {
        cfg.trials = trials;
    }
    if let Some(horizon) = overrides.horizon {
        cfg.horizon = horizon;
        cfg.horizons = vec![horizon];
    }
    Ok(cfg)
}

fn overlay(base: RunConfig, file: Map<String, Value>) -> Result<RunConfig, serde_json::Error> {
    let Value::Object(mut merged) = serde_json::to_value(base)? else {
        unreachable!("RunConfig serializes to an object")
    };
    merged.extend(file);
    serde_json::from_value(Value::Object(merged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn file_overlays_base_and_flags_override_file() {
        let f = write(r#"{"alpha": 0.35, "seed": 4, "horizon": 12}"#);
        let cfg = resolve(
            RunConfig::fig3(),
            Some(f.path()),
            &Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.alpha, 0.35);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.horizon, 12);
        assert_eq!(cfg.trials, 5000);
    }

    #[test]
    fn unknown_field_reports_location() {
        let f = write("{\n  \"alpha\": 0.3,\n  \"gama0\": 0.5\n}");
        let err = resolve(RunConfig::default(), Some(f.path()), &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("gama0"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn type_error_reports_location() {
        let f = write("{\n  \"trials\": \"many\"\n}");
        let msg = resolve(RunConfig::default(), Some(f.path()), &Overrides::default())
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn manifest_config_is_accepted() {
        let cfg = RunConfig {
            alpha: 0.33,
            seed: 77,
            ..RunConfig::fig2()
        };
        let manifest = serde_json::json!({
            "manifest_version": 1,
            "config": cfg,
            "outputs": []
        });
        let f = write(&manifest.to_string());
        let back = resolve(RunConfig::fig4(), Some(f.path()), &Overrides::default()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn horizon_flag_sets_population_horizons() {
        let cfg = resolve(
            RunConfig::fig1(),
            None,
            &Overrides {
                horizon: Some(10),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.population_horizons(), vec![10]);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let cfg = RunConfig {
            alpha: 0.1,
            beta: 0.3,
            ..RunConfig::default()
        };
        assert_eq!(cfg.scenario().unwrap_err().exit_code(), 2);
        let cfg = RunConfig {
            trials: 0,
            ..RunConfig::default()
        };
        assert!(cfg.experiment(AgentPolicy::Fixed { gamma0: 0.5 }).is_err());
    }
}
