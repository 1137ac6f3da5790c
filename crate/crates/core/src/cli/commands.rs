use std::path::Path;

use serde::Serialize;

use crate::analytics::{
    adaptive_advantage_bound, expected_opinion_fixed, limit_opinion_adaptive, limit_opinion_fixed,
    limit_utilities, longrun_lambda_threshold, min_clicks_to_deviate, min_skips_to_return,
    AdvantageBound, LimitUtilities, Reachability, ScenarioParams,
};
use crate::error::Error;
use crate::montecarlo::{
    enumerate_exact, paired_utility_difference, run_coupling, run_experiment, CouplingSummary,
};
use crate::policy::AgentPolicy;
use crate::population::{histogram, run_population, wasserstein1, PopulationResult};

use super::config::{AgentChoice, RunConfig, SweepParam};
use super::output::{fmt_num, Cell, OutputDir, Table};
use super::CliError;

/// A closed-form quantity that may not apply to the scenario.
#[derive(Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum Flagged<T> {
    Ok {
        value: T,
    },
    /// The tolerance is never reached, so the adaptive policy behaves
    /// exactly like the fixed one.
    CoincidesWithFixed {
        value: T,
    },
    Inapplicable {
        reason: String,
    },
}

impl<T> Flagged<T> {
    fn from_result(r: crate::Result<T>) -> Result<Self, CliError> {
        match r {
            Ok(value) => Ok(Flagged::Ok { value }),
            Err(e @ Error::NotApplicable(_)) => Ok(Flagged::Inapplicable {
                reason: e.to_string(),
            }),
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Serialize)]
struct AnalyticReport {
    scenario: ScenarioParams,
    /// `alpha + beta = 1`: the opinion jumps straight to the recommendation
    /// or the innate opinion.
    degenerate_dynamics: bool,
    contraction_rate: f64,
    reachability: Reachability,
    limit_opinion_fixed: f64,
    limit_opinion_adaptive: Flagged<f64>,
    limit_utilities: Flagged<LimitUtilities>,
    longrun_lambda_threshold: Flagged<f64>,
    min_clicks_to_deviate: Option<usize>,
    min_skips_to_return: usize,
    advantage_bound: Flagged<AdvantageBound>,
}

pub fn analytic(cfg: &RunConfig, out: &Path, require_bound: bool) -> Result<(), CliError> {
    let s = cfg.scenario()?;
    let reachability = s.reachability();
    let fixed_limit = limit_opinion_fixed(&s);
    let limit_opinion_adaptive = if reachability.reachable {
        Flagged::from_result(limit_opinion_adaptive(&s))?
    } else {
        Flagged::CoincidesWithFixed { value: fixed_limit }
    };
    let bound = adaptive_advantage_bound(&s);
    if require_bound {
        if let Err(e) = &bound {
            return Err(e.clone().into());
        }
    }
    let report = AnalyticReport {
        scenario: s,
        degenerate_dynamics: s.dynamics.is_degenerate(),
        contraction_rate: s.contraction_rate(),
        reachability,
        limit_opinion_fixed: fixed_limit,
        limit_opinion_adaptive,
        limit_utilities: Flagged::from_result(limit_utilities(&s, cfg.reward()?))?,
        longrun_lambda_threshold: Flagged::from_result(longrun_lambda_threshold(&s))?,
        min_clicks_to_deviate: min_clicks_to_deviate(&s),
        min_skips_to_return: min_skips_to_return(&s),
        advantage_bound: Flagged::from_result(bound)?,
    };

    let steps: Vec<usize> = if cfg.eval_steps.is_empty() {
        (0..=s.horizon).collect()
    } else {
        cfg.eval_steps.clone()
    };
    let mut curve = Table::new(&["k", "expected_opinion_fixed"]);
    for k in steps {
        curve.row(&[
            Cell::Int(k as u64),
            Cell::Num(expected_opinion_fixed(k, &s)),
        ]);
    }

    let mut dir = OutputDir::create(out)?;
    dir.write_json("analytic.json", &report)?;
    dir.write("analytic_curve.csv", curve.as_str())?;
    if let Flagged::Ok { value } = &report.advantage_bound {
        println!("lambda_star {}", fmt_num(value.lambda_star));
    }
    dir.finish("analytic", cfg, rayon::current_num_threads())?;
    Ok(())
}

const SERIES_HEADER: [&str; 10] = [
    "k",
    "policy",
    "mean_opinion",
    "se_opinion",
    "mean_utility",
    "se_utility",
    "mean_payoff",
    "se_payoff",
    "mean_gamma",
    "se_gamma",
];

pub fn simulate(cfg: &RunConfig, out: &Path, command: &str, file: &str) -> Result<(), CliError> {
    let mut table = Table::new(&SERIES_HEADER);
    for agent in cfg.agent_policies() {
        let label = agent.label();
        let series = run_experiment(&cfg.experiment(agent)?)?;
        for st in &series.steps {
            table.row(&[
                Cell::Int(st.k as u64),
                Cell::Text(label),
                Cell::Num(st.opinion.mean),
                Cell::Num(st.opinion.se),
                Cell::Num(st.utility.mean),
                Cell::Num(st.utility.se),
                Cell::Num(st.payoff.mean),
                Cell::Num(st.payoff.se),
                Cell::Num(st.gamma.mean),
                Cell::Num(st.gamma.se),
            ]);
        }
    }
    let mut dir = OutputDir::create(out)?;
    dir.write(file, table.as_str())?;
    dir.finish(command, cfg, rayon::current_num_threads())?;
    Ok(())
}

#[derive(Serialize)]
struct EnumerationSummary {
    policy: &'static str,
    horizon: usize,
    /// Largest gap between the exact mean opinion and the closed form;
    /// only defined for the fixed policy.
    max_abs_error_vs_closed_form: Option<f64>,
}

pub fn enumerate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let s = cfg.scenario()?;
    let mut table = Table::new(&[
        "k",
        "policy",
        "exact_opinion",
        "exact_utility",
        "exact_payoff",
        "exact_gamma",
        "closed_form_opinion",
    ]);
    let mut summary = vec![];
    for agent in cfg.agent_policies() {
        let fixed = matches!(agent, AgentPolicy::Fixed { .. });
        let label = agent.label();
        let exact = enumerate_exact(&cfg.experiment(agent)?)?;
        let mut worst: f64 = 0.0;
        for k in 0..exact.opinion.len() {
            let closed = if fixed {
                expected_opinion_fixed(k, &s)
            } else {
                f64::NAN
            };
            if fixed {
                worst = worst.max((exact.opinion[k] - closed).abs());
            }
            table.row(&[
                Cell::Int(k as u64),
                Cell::Text(label),
                Cell::Num(exact.opinion[k]),
                Cell::Num(exact.utility[k]),
                Cell::Num(exact.payoff[k]),
                Cell::Num(exact.gamma[k]),
                Cell::Num(closed),
            ]);
        }
        summary.push(EnumerationSummary {
            policy: label,
            horizon: cfg.horizon,
            max_abs_error_vs_closed_form: fixed.then_some(worst),
        });
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("enumerate.csv", table.as_str())?;
    dir.write_json("enumerate_summary.json", &summary)?;
    dir.finish("enumerate", cfg, rayon::current_num_threads())?;
    Ok(())
}

#[derive(Serialize)]
struct Histograms {
    innate: Vec<usize>,
    recommendation: Vec<usize>,
    final_fixed: Vec<usize>,
    final_adaptive: Vec<usize>,
}

#[derive(Serialize)]
struct PopulationSummary {
    horizon: usize,
    num_agents: usize,
    bin_edges: Vec<f64>,
    histograms: Histograms,
    /// 1-Wasserstein distance from the innate distribution.
    w1_fixed: f64,
    w1_adaptive: f64,
    mean_abs_drift_fixed: f64,
    mean_abs_drift_adaptive: f64,
}

fn mean_abs_drift(finals: &[f64], innate: &[f64]) -> f64 {
    finals
        .iter()
        .zip(innate)
        .map(|(x, x0)| (x - x0).abs())
        .sum::<f64>()
        / innate.len() as f64
}

fn summarize(
    r: &PopulationResult,
    horizon: usize,
    bins: usize,
) -> Result<PopulationSummary, CliError> {
    let range = (-1.0, 1.0);
    let hist = |v: &[f64]| histogram(v, bins, range);
    Ok(PopulationSummary {
        horizon,
        num_agents: r.len(),
        bin_edges: (0..=bins)
            .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
            .collect(),
        histograms: Histograms {
            innate: hist(&r.innate),
            recommendation: hist(&r.recommendations),
            final_fixed: hist(&r.final_fixed),
            final_adaptive: hist(&r.final_adaptive),
        },
        w1_fixed: wasserstein1(&r.final_fixed, &r.innate)?,
        w1_adaptive: wasserstein1(&r.final_adaptive, &r.innate)?,
        mean_abs_drift_fixed: mean_abs_drift(&r.final_fixed, &r.innate),
        mean_abs_drift_adaptive: mean_abs_drift(&r.final_adaptive, &r.innate),
    })
}

pub fn population(cfg: &RunConfig, out: &Path, command: &str, stem: &str) -> Result<(), CliError> {
    if cfg.bins == 0 {
        return Err(CliError::Config("bins must be at least 1".into()));
    }
    let mut dir = OutputDir::create(out)?;
    for horizon in cfg.population_horizons() {
        let r = run_population(&cfg.population(horizon)?)?;
        let mut table = Table::new(&["agent_index", "x0", "u0", "final_fixed", "final_adaptive"]);
        for i in 0..r.len() {
            table.row(&[
                Cell::Int(i as u64),
                Cell::Num(r.innate[i]),
                Cell::Num(r.recommendations[i]),
                Cell::Num(r.final_fixed[i]),
                Cell::Num(r.final_adaptive[i]),
            ]);
        }
        dir.write(&format!("{stem}_K{horizon}.csv"), table.as_str())?;
        dir.write_json(
            &format!("{stem}_K{horizon}_summary.json"),
            &summarize(&r, horizon, cfg.bins)?,
        )?;
    }
    dir.finish(command, cfg, rayon::current_num_threads())?;
    Ok(())
}

pub fn couple(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let agent = AgentPolicy::Forced {
        gamma0: cfg.gamma0,
        kappa: cfg.kappa,
        schedule: cfg.schedule.clone(),
    };
    let summary: CouplingSummary =
        run_coupling(&cfg.experiment(agent)?, &cfg.schedule, &cfg.schedule_b)?;
    let mut table = Table::new(&[
        "trial",
        "clicks_a",
        "clicks_b",
        "final_drift_a",
        "final_drift_b",
        "click_violations",
        "drift_violations",
    ]);
    for t in &summary.per_trial {
        table.row(&[
            Cell::Int(t.trial),
            Cell::Int(t.clicks_a as u64),
            Cell::Int(t.clicks_b as u64),
            Cell::Num(t.final_drift_a),
            Cell::Num(t.final_drift_b),
            Cell::Int(t.click_violations as u64),
            Cell::Int(t.drift_violations as u64),
        ]);
    }
    let mut dir = OutputDir::create(out)?;
    dir.write("couple.csv", table.as_str())?;
    dir.write_json("couple_summary.json", &summary)?;
    println!(
        "click violations {}, drift violations {}",
        summary.click_violations, summary.drift_violations
    );
    dir.finish("couple", cfg, rayon::current_num_threads())?;
    Ok(())
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        n => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// One sweep point: the bound, and the paired difference
/// `U_adaptive - U_fixed` at `lambda = lambda* - epsilon`.
fn sweep_point(cfg: &RunConfig) -> Result<(f64, f64, f64), CliError> {
    let s = cfg.scenario()?;
    let bound = match adaptive_advantage_bound(&s) {
        Ok(b) => b,
        Err(Error::NotApplicable(_)) => return Ok((f64::NAN, f64::NAN, f64::NAN)),
        Err(e) => return Err(e.into()),
    };
    let lambda = bound.lambda_star - cfg.sweep_epsilon;
    if !(0.0..=1.0).contains(&lambda) {
        return Ok((bound.lambda_star, f64::NAN, f64::NAN));
    }
    let at = RunConfig {
        lambda,
        agent_policy: AgentChoice::Adaptive,
        ..cfg.clone()
    };
    let adaptive = at.experiment(at.agent_policies().remove(0))?;
    let fixed = at.experiment(AgentPolicy::Fixed { gamma0: cfg.gamma0 })?;
    let diff = paired_utility_difference(&adaptive, &fixed)?;
    Ok((bound.lambda_star, diff.mean, diff.se))
}

pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    if cfg.platform_policy != super::config::PlatformChoice::Fixed {
        return Err(CliError::Config(
            "the sweep needs the fixed-recommendation platform".into(),
        ));
    }
    let values = match cfg.sweep {
        SweepParam::Alpha => linspace(cfg.beta, 1.0 - cfg.beta, cfg.sweep_points),
        SweepParam::X0 => linspace(-1.0, 1.0, cfg.sweep_points),
    };
    let mut table = Table::new(&[
        "sweep_param",
        "sweep_value",
        "lambda_star",
        "mean_utility_diff",
        "se_utility_diff",
    ]);
    for v in values {
        let point = match cfg.sweep {
            SweepParam::Alpha => RunConfig {
                alpha: v,
                ..cfg.clone()
            },
            SweepParam::X0 => RunConfig {
                x0: v,
                ..cfg.clone()
            },
        };
        let (lambda_star, mean, se) = sweep_point(&point)?;
        table.row(&[
            Cell::Text(cfg.sweep.name()),
            Cell::Num(v),
            Cell::Num(lambda_star),
            Cell::Num(mean),
            Cell::Num(se),
        ]);
    }
    let mut dir = OutputDir::create(out)?;
    dir.write(&format!("fig3_{}.csv", cfg.sweep.name()), table.as_str())?;
    let command = format!("reproduce fig3 {}", cfg.sweep.name());
    dir.finish(&command, cfg, rayon::current_num_threads())?;
    Ok(())
}
