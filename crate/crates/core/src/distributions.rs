//! Inter-arrival and service-time laws.
//!
//! A [`DistributionSpec`] is validated on construction and immutable after
//! that, so sampling, the mean and the Laplace transform never fail on a
//! constructed value (except for the transform's own argument check).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// The law itself. Matches the JSON form `{"kind": "...", ...params}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Empirical { samples: Vec<f64> },
}

/// A validated probability law on `[0, inf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Law", into = "Law")]
pub struct DistributionSpec {
    law: Law,
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("{x} must be positive and finite"),
        ))
    }
}

impl TryFrom<Law> for DistributionSpec {
    type Error = Error;

    fn try_from(law: Law) -> Result<Self> {
        let law = match law {
            Law::Exponential { rate } => {
                positive("rate", rate)?;
                Law::Exponential { rate }
            }
            Law::Deterministic { value } => {
                positive("value", value)?;
                Law::Deterministic { value }
            }
            Law::Erlang { shape, rate } => {
                if shape == 0 {
                    return Err(Error::invalid("shape", "Erlang shape must be at least 1"));
                }
                positive("rate", rate)?;
                Law::Erlang { shape, rate }
            }
            Law::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::invalid(
                        "weights",
                        format!("{} weights for {} rates", weights.len(), rates.len()),
                    ));
                }
                for &w in &weights {
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(Error::invalid("weights", format!("weight {w} is negative")));
                    }
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::invalid(
                        "weights",
                        format!("weights sum to {total}, not 1"),
                    ));
                }
                for &r in &rates {
                    positive("rates", r)?;
                }
                Law::HyperExponential { weights, rates }
            }
            Law::Uniform { lo, hi } => {
                if !(lo >= 0.0 && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::invalid(
                        "lo",
                        format!("Uniform bounds [{lo}, {hi}] must be finite and nonnegative"),
                    ));
                }
                if hi <= lo {
                    return Err(Error::invalid(
                        "hi",
                        format!("Uniform needs lo < hi, got [{lo}, {hi}]; use a deterministic law for a point mass"),
                    ));
                }
                Law::Uniform { lo, hi }
            }
            Law::Empirical { mut samples } => {
                if samples.is_empty() {
                    return Err(Error::invalid(
                        "samples",
                        "empirical law needs at least one sample",
                    ));
                }
                if let Some(bad) = samples.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
                    return Err(Error::invalid(
                        "samples",
                        format!("sample {bad} is negative or not finite"),
                    ));
                }
                samples.sort_by(f64::total_cmp);
                if samples.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::invalid("samples", "empirical law has zero mean"));
                }
                Law::Empirical { samples }
            }
        };
        Ok(DistributionSpec { law })
    }
}

impl From<DistributionSpec> for Law {
    fn from(spec: DistributionSpec) -> Law {
        spec.law
    }
}

impl DistributionSpec {
    pub fn new(law: Law) -> Result<Self> {
        Self::try_from(law)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Law::Exponential { rate })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        Self::new(Law::Deterministic { value })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        Self::new(Law::Erlang { shape, rate })
    }

    pub fn hyper_exponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Self::new(Law::HyperExponential { weights, rates })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Law::Uniform { lo, hi })
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        Self::new(Law::Empirical { samples })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.law, Law::Deterministic { .. })
    }

    /// Probability mass at zero, `F(0)`.
    pub fn mass_at_zero(&self) -> f64 {
        match &self.law {
            Law::Empirical { samples } => {
                samples.iter().take_while(|s| **s == 0.0).count() as f64 / samples.len() as f64
            }
            _ => 0.0,
        }
    }

    /// Draws one value. Consumes randomness from `rng` only.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Law::Exponential { rate } => exp_draw(*rate, rng),
            Law::Deterministic { value } => *value,
            Law::Erlang { shape, rate } => (0..*shape).map(|_| exp_draw(*rate, rng)).sum(),
            Law::HyperExponential { weights, rates } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut branch = rates.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        branch = i;
                        break;
                    }
                }
                exp_draw(rates[branch], rng)
            }
            Law::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            Law::Empirical { samples } => samples[rng.random_range(0..samples.len())],
        }
    }

    /// Mean; the sample mean for empirical laws.
    pub fn mean(&self) -> f64 {
        match &self.law {
            Law::Exponential { rate } => 1.0 / rate,
            Law::Deterministic { value } => *value,
            Law::Erlang { shape, rate } => f64::from(*shape) / rate,
            Law::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, r)| w / r).sum()
            }
            Law::Uniform { lo, hi } => 0.5 * (lo + hi),
            Law::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }

    /// Laplace–Stieltjes transform `E[exp(-u S)]` for `u > 0`.
    ///
    /// Empirical laws use the plug-in average over their samples, which is
    /// only an estimate of the underlying law's transform.
    pub fn laplace(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) || u.is_nan() {
            return Err(Error::invalid(
                "u",
                format!("transform argument {u} must be positive"),
            ));
        }
        let value = match &self.law {
            Law::Exponential { rate } => rate / (rate + u),
            Law::Deterministic { value } => (-u * value).exp(),
            Law::Erlang { shape, rate } => (rate / (rate + u)).powi(*shape as i32),
            Law::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r / (r + u))
                .sum(),
            Law::Uniform { lo, hi } => {
                // (e^{-u lo} - e^{-u hi}) / (u (hi - lo)), written to avoid cancellation.
                let width = hi - lo;
                (-u * lo).exp() * (-(-u * width).exp_m1()) / (u * width)
            }
            Law::Empirical { samples } => {
                samples.iter().map(|s| (-u * s).exp()).sum::<f64>() / samples.len() as f64
            }
        };
        Ok(value)
    }
}

fn exp_draw<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    Exp::new(rate)
        .expect("rate validated at construction")
        .sample(rng)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.law {
            Law::Exponential { rate } => write!(f, "exp:{rate}"),
            Law::Deterministic { value } => write!(f, "det:{value}"),
            Law::Erlang { shape, rate } => write!(f, "erlang:{shape}:{rate}"),
            Law::HyperExponential { weights, rates } => {
                let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join("/");
                write!(f, "hyperexp:{}:{}", join(weights), join(rates))
            }
            Law::Uniform { lo, hi } => write!(f, "uniform:{lo}:{hi}"),
            Law::Empirical { samples } => write!(f, "empirical({} samples)", samples.len()),
        }
    }
}

/// Parses the compact command-line form or a JSON object.
///
/// Compact forms: `exp` (unit rate), `exp:RATE`, `det:VALUE`,
/// `erlang:SHAPE:RATE`, `hyperexp:W1/W2/..:R1/R2/..`, `uniform:LO:HI`,
/// `empirical:S1/S2/..`.
impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return Ok(serde_json::from_str(s)?);
        }
        let mut parts = s.split(':');
        let kind = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize, field: &str| -> Result<f64> {
            let raw = args
                .get(i)
                .ok_or_else(|| Error::invalid(field, format!("missing in `{s}`")))?;
            raw.parse::<f64>()
                .map_err(|_| Error::invalid(field, format!("`{raw}` is not a number")))
        };
        let list = |i: usize, field: &str| -> Result<Vec<f64>> {
            let raw = args
                .get(i)
                .ok_or_else(|| Error::invalid(field, format!("missing in `{s}`")))?;
            raw.split('/')
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| Error::invalid(field, format!("`{x}` is not a number")))
                })
                .collect()
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::invalid(
                    "distribution",
                    format!("`{s}` expects {n} parameter(s)"),
                ))
            }
        };
        match kind {
            "exp" | "exponential" | "M" if args.is_empty() => Self::exponential(1.0),
            "exp" | "exponential" => {
                arity(1)?;
                Self::exponential(num(0, "rate")?)
            }
            "det" | "deterministic" => {
                arity(1)?;
                Self::deterministic(num(0, "value")?)
            }
            "erlang" => {
                arity(2)?;
                let shape = num(0, "shape")?;
                if shape.fract() != 0.0 || shape < 1.0 || shape > f64::from(u32::MAX) {
                    return Err(Error::invalid(
                        "shape",
                        format!("{shape} is not a positive integer"),
                    ));
                }
                Self::erlang(shape as u32, num(1, "rate")?)
            }
            "hyperexp" | "hyper_exponential" => {
                arity(2)?;
                Self::hyper_exponential(list(0, "weights")?, list(1, "rates")?)
            }
            "uniform" => {
                arity(2)?;
                Self::uniform(num(0, "lo")?, num(1, "hi")?)
            }
            "empirical" => {
                arity(1)?;
                Self::empirical(list(0, "samples")?)
            }
            other => Err(Error::invalid(
                "distribution",
                format!("unknown law `{other}`"),
            )),
        }
    }
}
