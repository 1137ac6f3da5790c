//! Sampling laws over the opinion interval `[-1, 1]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a Gaussian sample outside `[-1, 1]` is brought back into range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truncation {
    #[default]
    Clip,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingSpec {
    Uniform {
        low: f64,
        high: f64,
    },
    Gaussian {
        mean: f64,
        std_dev: f64,
        #[serde(default)]
        truncation: Truncation,
    },
    PointMass {
        value: f64,
    },
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec::uniform()
    }
}

fn in_range(v: f64) -> bool {
    (-1.0..=1.0).contains(&v)
}

impl SamplingSpec {
    pub fn uniform() -> Self {
        SamplingSpec::Uniform {
            low: -1.0,
            high: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingSpec::Uniform { low, high } => {
                if !(in_range(low) && in_range(high) && low <= high) {
                    return Err(Error::config(format!(
                        "uniform bounds must satisfy -1 <= low <= high <= 1, got [{low}, {high}]"
                    )));
                }
            }
            SamplingSpec::Gaussian {
                mean,
                std_dev,
                truncation,
            } => {
                if !mean.is_finite() || !(std_dev.is_finite() && std_dev >= 0.0) {
                    return Err(Error::config(format!(
                        "gaussian needs finite mean and non-negative std_dev, got mean={mean}, std_dev={std_dev}"
                    )));
                }
                if truncation == Truncation::Reject && std_dev == 0.0 && !in_range(mean) {
                    return Err(Error::config(format!(
                        "degenerate gaussian at {mean} never lands in [-1, 1]"
                    )));
                }
            }
            SamplingSpec::PointMass { value } => {
                if !in_range(value) {
                    return Err(Error::config(format!(
                        "point mass {value} is outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draws one value in `[-1, 1]`. Assumes `validate()` passed.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SamplingSpec::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..=high)
                }
            }
            SamplingSpec::Gaussian {
                mean,
                std_dev,
                truncation,
            } => {
                let normal = Normal::new(mean, std_dev).expect("validated gaussian");
                match truncation {
                    Truncation::Clip => normal.sample(rng).clamp(-1.0, 1.0),
                    Truncation::Reject => loop {
                        let v = normal.sample(rng);
                        if in_range(v) {
                            break v;
                        }
                    },
                }
            }
            SamplingSpec::PointMass { value } => value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let specs = [
            SamplingSpec::uniform(),
            SamplingSpec::Gaussian {
                mean: 0.0,
                std_dev: 2.0,
                truncation: Truncation::Clip,
            },
            SamplingSpec::Gaussian {
                mean: 0.5,
                std_dev: 1.0,
                truncation: Truncation::Reject,
            },
            SamplingSpec::PointMass { value: -0.3 },
        ];
        for spec in specs {
            spec.validate().unwrap();
            for _ in 0..2000 {
                let v = spec.sample(&mut rng);
                assert!(in_range(v), "{spec:?} produced {v}");
            }
        }
    }

    #[test]
    fn clip_puts_mass_on_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = SamplingSpec::Gaussian {
            mean: 0.0,
            std_dev: 3.0,
            truncation: Truncation::Clip,
        };
        let edges = (0..1000)
            .map(|_| spec.sample(&mut rng))
            .filter(|v| v.abs() == 1.0)
            .count();
        assert!(edges > 100);
    }

    #[test]
    fn invalid_specs() {
        assert!(SamplingSpec::Uniform {
            low: 0.5,
            high: 0.1
        }
        .validate()
        .is_err());
        assert!(SamplingSpec::Uniform {
            low: -2.0,
            high: 0.1
        }
        .validate()
        .is_err());
        assert!(SamplingSpec::PointMass { value: 1.5 }.validate().is_err());
        assert!(SamplingSpec::Gaussian {
            mean: 0.0,
            std_dev: -1.0,
            truncation: Truncation::Clip
        }
        .validate()
        .is_err());
        assert!(SamplingSpec::Gaussian {
            mean: 3.0,
            std_dev: 0.0,
            truncation: Truncation::Reject
        }
        .validate()
        .is_err());
    }

    #[test]
    fn json_shape() {
        let spec: SamplingSpec =
            serde_json::from_str(r#"{"law":"gaussian","mean":0.0,"std_dev":0.5}"#).unwrap();
        assert_eq!(
            spec,
            SamplingSpec::Gaussian {
                mean: 0.0,
                std_dev: 0.5,
                truncation: Truncation::Clip
            }
        );
    }
}
