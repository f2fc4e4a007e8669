//! Synthetic data distributions with fully specified sampling algorithms.
//!
//! * uniform(a, b): `a + (b - a) * u` with `u` from [`crate::rng::uniform01`].
//! * gaussian(m, s): Marsaglia's polar method. Draw `u, v = 2 * uniform01 - 1`
//!   until `0 < w = u² + v² < 1`, return `m + s * u * sqrt(-2 ln w / w)`. The
//!   second variate `v * sqrt(...)` is discarded so every draw consumes a whole
//!   number of accepted pairs.
//! * mixture(p, m1, s1, m2, s2): draw `u`; the first Gaussian component when
//!   `u < p`, else the second.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, uniform01};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Gaussian {
        mean: f64,
        std: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Mixture {
        weight: f64,
        mean1: f64,
        std1: f64,
        mean2: f64,
        std2: f64,
    },
}

pub fn standard_normal(rng: &mut impl RngCore) -> f64 {
    loop {
        let u = 2.0 * uniform01(rng) - 1.0;
        let v = 2.0 * uniform01(rng) - 1.0;
        let w = u * u + v * v;
        if w > 0.0 && w < 1.0 {
            return u * (-2.0 * w.ln() / w).sqrt();
        }
    }
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match *self {
            Distribution::Gaussian { mean, std } => finite(&[mean, std]) && std > 0.0,
            Distribution::Uniform { low, high } => finite(&[low, high]) && low < high,
            Distribution::Mixture {
                weight,
                mean1,
                std1,
                mean2,
                std2,
            } => {
                finite(&[weight, mean1, std1, mean2, std2]) && (0.0..=1.0).contains(&weight) && std1 > 0.0 && std2 > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid distribution {self}")))
        }
    }

    pub fn draw(&self, rng: &mut impl RngCore) -> f64 {
        match *self {
            Distribution::Gaussian { mean, std } => mean + std * standard_normal(rng),
            Distribution::Uniform { low, high } => low + (high - low) * uniform01(rng),
            Distribution::Mixture {
                weight,
                mean1,
                std1,
                mean2,
                std2,
            } => {
                if uniform01(rng) < weight {
                    mean1 + std1 * standard_normal(rng)
                } else {
                    mean2 + std2 * standard_normal(rng)
                }
            }
        }
    }

    /// `n` draws from ChaCha8 stream `stream` keyed by `seed`.
    pub fn sample(&self, n: usize, seed: u64, stream: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, stream);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    /// Largest |x| that is not astronomically unlikely; used to size a
    /// truncation policy before data is drawn.
    pub fn practical_abs_bound(&self) -> f64 {
        match *self {
            Distribution::Gaussian { mean, std } => mean.abs() + 9.0 * std,
            Distribution::Uniform { low, high } => low.abs().max(high.abs()),
            Distribution::Mixture {
                mean1,
                std1,
                mean2,
                std2,
                ..
            } => (mean1.abs() + 9.0 * std1).max(mean2.abs() + 9.0 * std2),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Distribution::Gaussian { mean, std } => write!(f, "gaussian:{mean},{std}"),
            Distribution::Uniform { low, high } => write!(f, "uniform:{low},{high}"),
            Distribution::Mixture {
                weight,
                mean1,
                std1,
                mean2,
                std2,
            } => write!(f, "mixture:{weight},{mean1},{std1},{mean2},{std2}"),
        }
    }
}

/// Parses `gaussian:m,s`, `uniform:a,b` or `mixture:p,m1,s1,m2,s2`.
impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse distribution `{s}`"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let args = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let dist = match (kind.trim().to_ascii_lowercase().as_str(), args.as_slice()) {
            ("gaussian" | "normal", &[mean, std]) => Distribution::Gaussian { mean, std },
            ("uniform", &[low, high]) => Distribution::Uniform { low, high },
            ("mixture", &[weight, mean1, std1, mean2, std2]) => Distribution::Mixture {
                weight,
                mean1,
                std1,
                mean2,
                std2,
            },
            _ => return Err(bad()),
        };
        dist.validate()?;
        Ok(dist)
    }
}
