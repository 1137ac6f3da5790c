//! Closed-form expectations, long-run limits, and the finite-horizon
//! sufficient bound on `lambda` below which the adaptive policy wins.
//!
//! All quantities assume the platform recommends a constant `u0`. The
//! contraction rate `r = b (gamma0 zeta + 1 - gamma0)` always lies in
//! `[0, 0.5)`, so no special-casing near `r = 1` is needed.

use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsParams, RewardSpec};
use crate::error::{Error, Inapplicable, Result};

/// Upper limit on the integer searches for the minimum click and skip runs.
pub const SEARCH_CAP: usize = 1_000_000;

/// A single agent facing a constant recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub dynamics: DynamicsParams,
    pub x0: f64,
    pub u0: f64,
    pub gamma0: f64,
    pub kappa: f64,
    pub delta: f64,
    pub lambda: f64,
    pub horizon: usize,
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (-1.0..=1.0).contains(&v);
        if !in_unit(self.x0) || !in_unit(self.u0) {
            return Err(Error::config(format!(
                "opinions must lie in [-1, 1], got x0={}, u0={}",
                self.x0, self.u0
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma0) {
            return Err(Error::config(format!(
                "gamma0 must lie in [0, 1], got {}",
                self.gamma0
            )));
        }
        if !(self.kappa.is_finite() && self.kappa >= 1.0) {
            return Err(Error::config(format!(
                "kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::config(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        Ok(())
    }

    fn gap(&self) -> f64 {
        (self.u0 - self.x0).abs()
    }

    /// `r = b (gamma0 zeta + 1 - gamma0)`.
    pub fn contraction_rate(&self) -> f64 {
        let p = &self.dynamics;
        p.b() * (self.gamma0 * p.zeta() + 1.0 - self.gamma0)
    }

    /// Long-run weight of `u0` in the expected fixed-policy opinion.
    pub fn drift_coefficient(&self) -> f64 {
        self.gamma0 * (1.0 - self.dynamics.zeta()) / (1.0 - self.contraction_rate())
    }

    /// Supremum of `|x_m - x0|` over runs of consecutive clicks.
    pub fn max_all_click_drift(&self) -> f64 {
        let p = &self.dynamics;
        (1.0 - p.zeta()) * self.gap() / (1.0 - p.beta())
    }

    /// Drift after exactly `m` consecutive clicks from the innate opinion.
    pub fn all_click_drift(&self, m: usize) -> f64 {
        let p = &self.dynamics;
        let beta_m = p.beta().powi(m.min(i32::MAX as usize) as i32);
        (1.0 - p.zeta()) * self.gap() * (1.0 - beta_m) / (1.0 - p.beta())
    }

    /// Whether some finite run of clicks pushes the opinion at least
    /// `delta` away from `x0`.
    pub fn deviation_reachable(&self) -> bool {
        self.max_all_click_drift() >= self.delta
    }

    /// `(1 - alpha/zeta) |u0 - x0| < delta`. Reported next to
    /// [`ScenarioParams::deviation_reachable`] for comparison only; no
    /// formula depends on it.
    pub fn memory_condition(&self) -> bool {
        let p = &self.dynamics;
        (1.0 - p.alpha() / p.zeta()) * self.gap() < self.delta
    }

    pub fn reachability(&self) -> Reachability {
        let reachable = self.deviation_reachable();
        let printed = self.memory_condition();
        Reachability {
            reachable,
            max_all_click_drift: self.max_all_click_drift(),
            memory_condition: printed,
            agree: reachable == printed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reachability {
    pub reachable: bool,
    pub max_all_click_drift: f64,
    pub memory_condition: bool,
    pub agree: bool,
}

/// Expected opinion at step `k` under the fixed clicking policy.
pub fn expected_opinion_fixed(k: usize, s: &ScenarioParams) -> f64 {
    let r = s.contraction_rate();
    let r_k = r.powi(k.min(i32::MAX as usize) as i32);
    let weight = s.gamma0 * (1.0 - s.dynamics.zeta()) * (1.0 - r_k) / (1.0 - r);
    s.x0 + weight * (s.u0 - s.x0)
}

/// `k -> infinity` limit of [`expected_opinion_fixed`].
pub fn limit_opinion_fixed(s: &ScenarioParams) -> f64 {
    s.x0 + s.drift_coefficient() * (s.u0 - s.x0)
}

/// Long-run expected opinion under the adaptive policy: the innate opinion,
/// provided the tolerance can be reached at all.
pub fn limit_opinion_adaptive(s: &ScenarioParams) -> Result<f64> {
    if !s.deviation_reachable() {
        return Err(Inapplicable::ThresholdUnreachable {
            supremum: s.max_all_click_drift(),
            delta: s.delta,
        }
        .into());
    }
    Ok(s.x0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitUtilities {
    pub fixed: f64,
    pub adaptive: f64,
    /// True when the tolerance is unreachable, so the adaptive policy never
    /// reduces and its limit equals the fixed one.
    pub adaptive_coincides_with_fixed: bool,
}

/// Long-run expected utilities of both policies under a unit reward.
pub fn limit_utilities(s: &ScenarioParams, reward: RewardSpec) -> Result<LimitUtilities> {
    if reward.slope != 0.0 {
        return Err(Inapplicable::NonUnitReward {
            slope: reward.slope,
        }
        .into());
    }
    let fixed = s.lambda * s.gamma0 - (1.0 - s.lambda) * s.drift_coefficient() * s.gap();
    let coincides = !s.deviation_reachable();
    Ok(LimitUtilities {
        fixed,
        adaptive: if coincides { fixed } else { 0.0 },
        adaptive_coincides_with_fixed: coincides,
    })
}

/// The `lambda` above which the fixed policy's long-run utility is positive
/// and so beats the adaptive policy's zero.
pub fn longrun_lambda_threshold(s: &ScenarioParams) -> Result<f64> {
    if s.gap() == 0.0 {
        return Err(Inapplicable::NoDrift.into());
    }
    let pull = (1.0 - s.dynamics.zeta()) * s.gap();
    if pull == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 + (1.0 - s.contraction_rate()) / pull))
}

/// Minimum run of consecutive clicks from `x0` that reaches drift `delta`;
/// `None` when no run does.
pub fn min_clicks_to_deviate(s: &ScenarioParams) -> Option<usize> {
    if !s.deviation_reachable() {
        return None;
    }
    (1..=SEARCH_CAP).find(|&m| s.all_click_drift(m) >= s.delta)
}

/// Minimum run of consecutive skips bringing the worst horizon-`K` drift
/// back under `delta`.
pub fn min_skips_to_return(s: &ScenarioParams) -> usize {
    let p = &s.dynamics;
    if p.b() == 0.0 {
        return 1;
    }
    let beta_k = p.beta().powi(s.horizon.min(i32::MAX as usize) as i32);
    let worst = (1.0 - p.zeta()) * s.gap() * (1.0 - beta_k) / (1.0 - p.beta());
    let mut b_n = 1.0;
    for n in 1..=SEARCH_CAP {
        b_n *= p.b();
        if worst * b_n < s.delta {
            return n;
        }
    }
    SEARCH_CAP
}

/// Intermediate quantities of the finite-horizon bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvantageComponents {
    /// Minimum consecutive clicks to trigger a reduction (`M`).
    pub min_clicks: usize,
    /// Minimum consecutive skips to return inside the tolerance (`N`).
    pub min_skips: usize,
    /// Lower bound on the normalized adaptive click rate (`G^lb`).
    pub click_rate_lb: f64,
    /// Expected fixed-policy drift at the horizon (`D_0`).
    pub fixed_drift: f64,
    /// Expected final opinion in the one-reduction scenario (`Delta`).
    pub one_reduction_opinion: f64,
    /// Lower bound on the probability of returning cleanly (`P`).
    pub clean_return_prob: f64,
    /// Upper bound on the adaptive drift (`D^ub`).
    pub adaptive_drift_ub: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvantageBound {
    #[serde(flatten)]
    pub components: AdvantageComponents,
    /// The adaptive policy wins in expectation for every `lambda` below this.
    pub lambda_star: f64,
}

/// Computes `M, N, G^lb, D_0, Delta, P, D^ub` in order.
pub fn advantage_components(s: &ScenarioParams) -> Result<AdvantageComponents> {
    let (gamma0, kappa, k_horizon) = (s.gamma0, s.kappa, s.horizon);
    if kappa <= 1.0 {
        return Err(Inapplicable::NoReductionRate { kappa }.into());
    }
    if gamma0 == 0.0 {
        return Err(Inapplicable::NeverClicks.into());
    }
    let m = min_clicks_to_deviate(s).ok_or(Inapplicable::ThresholdUnreachable {
        supremum: s.max_all_click_drift(),
        delta: s.delta,
    })?;
    if k_horizon <= m {
        return Err(Inapplicable::HorizonTooShort {
            horizon: k_horizon,
            min_clicks: m,
        }
        .into());
    }
    let n = min_skips_to_return(s);

    let tail = (k_horizon - m) as i32;
    let click_rate_lb = (m as f64 - (1.0 - kappa.powi(-tail)) / (1.0 - kappa)) / k_horizon as f64;

    let fixed_drift = (expected_opinion_fixed(k_horizon, s) - s.x0).abs();

    let p = &s.dynamics;
    let g = gamma0 / kappa;
    let one_reduction_opinion = (p.alpha() * g + (1.0 - p.b()) * (1.0 - g)) * s.x0
        + (1.0 - p.zeta()) * g * s.u0
        + (p.beta() * g + p.b() * (1.0 - g)) * expected_opinion_fixed(k_horizon - 1, s);

    let clean_return_prob = gamma0.powi(m as i32) * (1.0 - g).powi(tail);
    let one_reduction_drift = (one_reduction_opinion - s.x0).abs();
    let adaptive_drift_ub = if m >= 2 && n == 1 {
        s.delta * clean_return_prob + one_reduction_drift * (1.0 - clean_return_prob)
    } else {
        one_reduction_drift
    };

    Ok(AdvantageComponents {
        min_clicks: m,
        min_skips: n,
        click_rate_lb,
        fixed_drift,
        one_reduction_opinion,
        clean_return_prob,
        adaptive_drift_ub,
    })
}

/// The full bound including `lambda*`; fails when the bound is vacuous.
pub fn adaptive_advantage_bound(s: &ScenarioParams) -> Result<AdvantageBound> {
    let c = advantage_components(s)?;
    if c.fixed_drift <= c.adaptive_drift_ub {
        return Err(Inapplicable::VacuousBound {
            d0: c.fixed_drift,
            d_ub: c.adaptive_drift_ub,
        }
        .into());
    }
    let lambda_star =
        1.0 / (1.0 + s.gamma0 * (1.0 - c.click_rate_lb) / (c.fixed_drift - c.adaptive_drift_ub));
    Ok(AdvantageBound {
        components: c,
        lambda_star,
    })
}
