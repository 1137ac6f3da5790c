//! Opinion update, rewards, and the per-horizon utilities of the agent and
//! the platform.
//!
//! Everything here is a pure function of its arguments. Opinions are never
//! clamped: each update is a convex combination of values in `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the opinion update.
///
/// `alpha` weighs the innate opinion and `beta` the latest opinion. The
/// derived `zeta = alpha + beta` and `b = beta / zeta` are fixed at
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsParams {
    alpha: f64,
    beta: f64,
    #[serde(skip)]
    zeta: f64,
    #[serde(skip)]
    b: f64,
}

impl DynamicsParams {
    /// Requires `0 <= beta <= alpha` and `0 < alpha + beta <= 1`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) {
            return Err(Error::config(format!(
                "alpha and beta must be finite, got alpha={alpha}, beta={beta}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
            return Err(Error::config(format!(
                "alpha and beta must lie in [0, 1], got alpha={alpha}, beta={beta}"
            )));
        }
        if beta > alpha {
            return Err(Error::config(format!(
                "beta must not exceed alpha, got alpha={alpha}, beta={beta}"
            )));
        }
        let zeta = alpha + beta;
        if zeta <= 0.0 || zeta > 1.0 {
            return Err(Error::config(format!(
                "alpha + beta must lie in (0, 1], got {zeta}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            zeta,
            b: beta / zeta,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `alpha + beta`.
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// `beta / (alpha + beta)`, the persistence of the latest opinion when
    /// the agent skips.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// True when `alpha + beta = 1`: a click then ignores the recommendation.
    pub fn is_degenerate(&self) -> bool {
        self.zeta >= 1.0
    }
}

impl<'de> Deserialize<'de> for DynamicsParams {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            alpha: f64,
            beta: f64,
        }
        let raw = Raw::deserialize(deserializer)?;
        DynamicsParams::new(raw.alpha, raw.beta).map_err(serde::de::Error::custom)
    }
}

/// Linear reward `1 - slope * distance`, shared by agent and platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub slope: f64,
}

impl RewardSpec {
    pub fn new(slope: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&slope) {
            return Err(Error::config(format!(
                "reward slope must lie in [0, 1], got {slope}"
            )));
        }
        Ok(Self { slope })
    }

    pub const UNIT: RewardSpec = RewardSpec { slope: 0.0 };

    pub fn value(&self, dist: f64) -> f64 {
        reward_value(dist, *self)
    }
}

/// One step of the opinion dynamics.
pub fn step(x_prev: f64, x0: f64, u_prev: f64, clicked: bool, params: &DynamicsParams) -> f64 {
    if clicked {
        params.alpha * x0 + params.beta * x_prev + (1.0 - params.zeta) * u_prev
    } else {
        (1.0 - params.b) * x0 + params.b * x_prev
    }
}

/// Closed-form opinion after a click sequence under a constant
/// recommendation `u0`. Returns `(x_k, weight)` with
/// `x_k = (1 - weight) x0 + weight u0`.
pub fn ex_post_opinion(x0: f64, u0: f64, clicks: &[bool], params: &DynamicsParams) -> (f64, f64) {
    let weight = recommendation_weight(clicks, params);
    ((1.0 - weight) * x0 + weight * u0, weight)
}

/// Weight of the recommendation after `clicks`, computed in one backward
/// pass: walking from the last step, `b_pow` holds `b^(k-j-1)` and
/// `zeta_pow` holds `zeta^(clicks after j)`.
pub fn recommendation_weight(clicks: &[bool], params: &DynamicsParams) -> f64 {
    let mut sum = 0.0;
    let mut b_pow = 1.0;
    let mut zeta_pow = 1.0;
    for &clicked in clicks.iter().rev() {
        if clicked {
            sum += b_pow * zeta_pow;
            zeta_pow *= params.zeta;
        }
        b_pow *= params.b;
    }
    (1.0 - params.zeta) * sum
}

pub fn reward_value(dist: f64, spec: RewardSpec) -> f64 {
    1.0 - spec.slope * dist
}

/// One realized closed-loop run over `horizon()` steps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// `x_0 ..= x_K`.
    pub opinions: Vec<f64>,
    /// `u_0 .. u_K`.
    pub recommendations: Vec<f64>,
    pub clicks: Vec<bool>,
    /// Probability used for each click draw.
    pub click_probs: Vec<f64>,
    /// Clicking probability in force after the last opinion update.
    pub final_click_prob: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.clicks.len()
    }

    pub fn innate(&self) -> f64 {
        self.opinions[0]
    }

    pub fn final_opinion(&self) -> f64 {
        *self
            .opinions
            .last()
            .expect("trajectory has at least one opinion")
    }

    /// Clicking probability in force at step `k` for `k <= horizon()`.
    pub fn click_prob_at(&self, k: usize) -> f64 {
        if k < self.click_probs.len() {
            self.click_probs[k]
        } else {
            self.final_click_prob
        }
    }

    fn reward_sum(&self, upto: usize, spec: RewardSpec) -> f64 {
        (0..upto)
            .filter(|&i| self.clicks[i])
            .map(|i| spec.value((self.opinions[i] - self.recommendations[i]).abs()))
            .sum()
    }

    fn check_upto(&self, upto: usize) -> Result<()> {
        if upto == 0 || upto > self.horizon() {
            return Err(Error::InvalidHorizon(upto));
        }
        Ok(())
    }
}

/// Agent utility over the first `upto` steps: weighted average click reward
/// minus weighted drift of `x_upto` from the innate opinion.
pub fn agent_utility(traj: &Trajectory, upto: usize, lambda: f64, spec: RewardSpec) -> Result<f64> {
    traj.check_upto(upto)?;
    let consumption = traj.reward_sum(upto, spec) / upto as f64;
    let drift = (traj.opinions[upto] - traj.innate()).abs();
    Ok(lambda * consumption - (1.0 - lambda) * drift)
}

/// Platform payoff over the first `upto` steps.
pub fn platform_payoff(traj: &Trajectory, upto: usize, spec: RewardSpec) -> Result<f64> {
    traj.check_upto(upto)?;
    Ok(traj.reward_sum(upto, spec) / upto as f64)
}

/// Agent utility and platform payoff at every prefix `k = 0..=K`, computed
/// with running sums. Entry 0 is 0 for both.
pub fn utility_and_payoff_curves(
    traj: &Trajectory,
    lambda: f64,
    agent_reward: RewardSpec,
    platform_reward: RewardSpec,
) -> (Vec<f64>, Vec<f64>) {
    let horizon = traj.horizon();
    let x0 = traj.innate();
    let mut utility = Vec::with_capacity(horizon + 1);
    let mut payoff = Vec::with_capacity(horizon + 1);
    utility.push(0.0);
    payoff.push(0.0);
    let (mut agent_sum, mut platform_sum) = (0.0, 0.0);
    for i in 0..horizon {
        if traj.clicks[i] {
            let dist = (traj.opinions[i] - traj.recommendations[i]).abs();
            agent_sum += agent_reward.value(dist);
            platform_sum += platform_reward.value(dist);
        }
        let k = (i + 1) as f64;
        let drift = (traj.opinions[i + 1] - x0).abs();
        utility.push(lambda * agent_sum / k - (1.0 - lambda) * drift);
        payoff.push(platform_sum / k);
    }
    (utility, payoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(alpha: f64, beta: f64) -> DynamicsParams {
        DynamicsParams::new(alpha, beta).unwrap()
    }

    fn iterate(x0: f64, u0: f64, clicks: &[bool], p: &DynamicsParams) -> f64 {
        clicks.iter().fold(x0, |x, &c| step(x, x0, u0, c, p))
    }

    fn traj_from(x0: f64, u0: f64, clicks: &[bool], p: &DynamicsParams) -> Trajectory {
        let mut opinions = vec![x0];
        for &c in clicks {
            let x = *opinions.last().unwrap();
            opinions.push(step(x, x0, u0, c, p));
        }
        Trajectory {
            opinions,
            recommendations: vec![u0; clicks.len()],
            clicks: clicks.to_vec(),
            click_probs: vec![1.0; clicks.len()],
            final_click_prob: 1.0,
        }
    }

    #[test]
    fn params_validation() {
        assert!(DynamicsParams::new(0.2, 0.4).is_err());
        assert!(DynamicsParams::new(0.0, 0.0).is_err());
        assert!(DynamicsParams::new(0.7, 0.5).is_err());
        assert!(DynamicsParams::new(-0.1, 0.0).is_err());
        assert!(DynamicsParams::new(f64::NAN, 0.0).is_err());
        let p = params(0.4, 0.2);
        assert!((p.zeta() - 0.6).abs() < 1e-15);
        assert!((p.b() - 1.0 / 3.0).abs() < 1e-15);
        assert!(params(0.5, 0.5).is_degenerate());
        assert_eq!(params(1.0, 0.0).b(), 0.0);
    }

    #[test]
    fn params_deserialize_validates() {
        let ok: DynamicsParams = serde_json::from_str(r#"{"alpha":0.4,"beta":0.2}"#).unwrap();
        assert!((ok.zeta() - 0.6).abs() < 1e-15);
        assert!(serde_json::from_str::<DynamicsParams>(r#"{"alpha":0.1,"beta":0.2}"#).is_err());
    }

    #[test]
    fn step_examples() {
        let p = params(0.4, 0.2);
        assert!((step(-1.0, -1.0, 1.0, true, &p) - (-0.2)).abs() < 1e-15);
        assert_eq!(step(0.3, 0.3, -0.9, false, &p), 0.3);
        let x = step(-0.2, -1.0, 1.0, false, &p);
        assert!((x - (-0.7333333333333333)).abs() < 1e-15);
    }

    #[test]
    fn ex_post_examples() {
        let p = params(0.4, 0.2);
        let (x, w) = ex_post_opinion(-1.0, 1.0, &[true, true], &p);
        assert!((w - 0.48).abs() < 1e-15);
        assert!((x - (-0.04)).abs() < 1e-15);

        let (x, w) = ex_post_opinion(-1.0, 1.0, &[false; 7], &p);
        assert_eq!(w, 0.0);
        assert_eq!(x, -1.0);

        let (x, w) = ex_post_opinion(-1.0, 1.0, &[true, false], &p);
        assert!((w - 0.4 / 3.0).abs() < 1e-15);
        assert!((x - (-0.7333333333333333)).abs() < 1e-15);

        let (x, w) = ex_post_opinion(0.25, 1.0, &[], &p);
        assert_eq!((x, w), (0.25, 0.0));
    }

    #[test]
    fn reward_examples() {
        let r = RewardSpec::new(0.1).unwrap();
        assert_eq!(reward_value(0.0, r), 1.0);
        assert!((reward_value(2.0, r) - 0.8).abs() < 1e-15);
        assert_eq!(reward_value(1.7, RewardSpec::UNIT), 1.0);
        assert!(RewardSpec::new(1.5).is_err());
    }

    #[test]
    fn agent_utility_examples() {
        let p = params(0.4, 0.2);
        let t = traj_from(-1.0, 1.0, &[true], &p);
        let u = agent_utility(&t, 1, 0.5, RewardSpec::UNIT).unwrap();
        assert!((u - 0.1).abs() < 1e-15);

        let t = traj_from(-1.0, 1.0, &[false, false, false], &p);
        for k in 1..=3 {
            assert_eq!(agent_utility(&t, k, 0.3, RewardSpec::UNIT).unwrap(), 0.0);
        }

        let t = traj_from(-1.0, 1.0, &[true, false], &p);
        assert!((agent_utility(&t, 2, 1.0, RewardSpec::UNIT).unwrap() - 0.5).abs() < 1e-15);

        assert_eq!(
            agent_utility(&t, 0, 0.5, RewardSpec::UNIT),
            Err(Error::InvalidHorizon(0))
        );
        assert_eq!(
            agent_utility(&t, 3, 0.5, RewardSpec::UNIT),
            Err(Error::InvalidHorizon(3))
        );
    }

    #[test]
    fn platform_payoff_examples() {
        let p = params(0.4, 0.2);
        let t = traj_from(-1.0, 1.0, &[true, false], &p);
        assert!((platform_payoff(&t, 2, RewardSpec::UNIT).unwrap() - 0.5).abs() < 1e-15);

        let t = traj_from(-1.0, 1.0, &[false, false], &p);
        assert_eq!(platform_payoff(&t, 2, RewardSpec::UNIT).unwrap(), 0.0);

        let t = traj_from(-1.0, 1.0, &[true], &p);
        let pay = platform_payoff(&t, 1, RewardSpec::new(0.1).unwrap()).unwrap();
        assert!((pay - 0.8).abs() < 1e-15);
        assert!(platform_payoff(&t, 0, RewardSpec::UNIT).is_err());
    }

    #[test]
    fn curves_match_pointwise() {
        let p = params(0.3, 0.2);
        let clicks = [true, false, true, true, false, false, true];
        let t = traj_from(-0.4, 0.9, &clicks, &p);
        let r = RewardSpec::new(0.1).unwrap();
        let (u, pay) = utility_and_payoff_curves(&t, 0.35, r, r);
        assert_eq!(u.len(), clicks.len() + 1);
        for k in 1..=clicks.len() {
            assert!((u[k] - agent_utility(&t, k, 0.35, r).unwrap()).abs() < 1e-14);
            assert!((pay[k] - platform_payoff(&t, k, r).unwrap()).abs() < 1e-14);
        }
    }

    fn valid_params() -> impl Strategy<Value = DynamicsParams> {
        (0.0f64..=0.5, 0.0f64..=1.0).prop_filter_map("need zeta > 0", |(beta, t)| {
            // alpha in [beta, 1 - beta]
            let alpha = beta + t * (1.0 - 2.0 * beta);
            DynamicsParams::new(alpha, beta).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ex_post_matches_iteration(
            p in valid_params(),
            x0 in -1.0f64..=1.0,
            u0 in -1.0f64..=1.0,
            clicks in proptest::collection::vec(any::<bool>(), 0..=64),
        ) {
            let (x, w) = ex_post_opinion(x0, u0, &clicks, &p);
            prop_assert!((x - iterate(x0, u0, &clicks, &p)).abs() <= 1e-10);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&w));
        }

        #[test]
        fn step_is_convex(
            p in valid_params(),
            x_prev in -1.0f64..=1.0,
            x0 in -1.0f64..=1.0,
            u in -1.0f64..=1.0,
            clicked in any::<bool>(),
        ) {
            let x = step(x_prev, x0, u, clicked, &p);
            let lo = x_prev.min(x0).min(u);
            let hi = x_prev.max(x0).max(u);
            prop_assert!(x >= lo - 1e-15 && x <= hi + 1e-15);
        }

        #[test]
        fn all_click_drift(
            p in valid_params(),
            x0 in -1.0f64..=1.0,
            u0 in -1.0f64..=1.0,
            m in 0usize..=40,
        ) {
            let x = iterate(x0, u0, &vec![true; m], &p);
            let beta = p.beta();
            let expected = (1.0 - p.zeta()) * (u0 - x0).abs() * (1.0 - beta.powi(m as i32)) / (1.0 - beta);
            prop_assert!(((x - x0).abs() - expected).abs() <= 1e-10);
        }

        #[test]
        fn weight_monotone_in_clicks(
            p in valid_params(),
            clicks in proptest::collection::vec(any::<bool>(), 1..=40),
            idx in any::<proptest::sample::Index>(),
        ) {
            let j = idx.index(clicks.len());
            let mut off = clicks.clone();
            off[j] = false;
            let mut on = clicks;
            on[j] = true;
            prop_assert!(recommendation_weight(&on, &p) >= recommendation_weight(&off, &p) - 1e-15);
        }
    }
}
