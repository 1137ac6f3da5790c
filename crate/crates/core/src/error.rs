use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A utility or payoff was requested over an empty horizon.
    #[error("horizon must be at least 1, got {0}")]
    InvalidHorizon(usize),

    #[error("not applicable: {0}")]
    NotApplicable(#[from] Inapplicable),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

/// Reasons a closed-form result does not apply to a scenario.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Inapplicable {
    #[error("drift tolerance {delta} is unreachable; all-click drift never exceeds {supremum}")]
    ThresholdUnreachable { supremum: f64, delta: f64 },

    #[error("horizon {horizon} does not exceed the minimum click run {min_clicks}; no reduction is possible")]
    HorizonTooShort { horizon: usize, min_clicks: usize },

    #[error("initial clicking probability is zero; no reduction is possible")]
    NeverClicks,

    #[error("reduction rate {kappa} must exceed 1")]
    NoReductionRate { kappa: f64 },

    #[error(
        "bound is vacuous: fixed-policy drift {d0} does not exceed adaptive upper bound {d_ub}"
    )]
    VacuousBound { d0: f64, d_ub: f64 },

    #[error("recommendation equals the innate opinion; there is no drift to trade off")]
    NoDrift,

    #[error("closed-form utilities assume a unit reward (slope 0), got slope {slope}")]
    NonUnitReward { slope: f64 },
}
