//! Discrete-time simulation of an agent's opinion under a recommendation
//! platform, with closed-form expectations as cross-checks.
//!
//! - [`dynamics`]: opinion update, rewards, utilities.
//! - [`policy`]: agent clicking policies and platform recommendation policies.
//! - [`analytics`]: closed-form expectations, limits, and the finite-horizon
//!   bound on the consumption weight.
//! - [`montecarlo`]: seeded trial engine, estimators, coupling, exact enumeration.
//! - [`population`]: many-agent experiment and distribution comparisons.
//! - [`cli`]: the `driftsim` command-line front end.

pub mod analytics;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod montecarlo;
pub mod policy;
pub mod population;
pub mod sampling;

pub use error::{Error, Inapplicable, Result};
