//! FCFS single-server queue simulation.
//!
//! Departures follow `D_j = max(A_j, D_{j-1}) + S_j`, starting from an empty
//! system. The waiting time recorded per symbol is either the delay before
//! service starts or the full sojourn `D_j - A_j`.

use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::format::g17;
use crate::rng::{self, streams};
use crate::stats::{batch_means, MeanEstimate};
use crate::{Error, Result};

/// Which span of a symbol's stay counts as its waiting time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitingConvention {
    /// Time in queue before service starts, `D_j - A_j - S_j`.
    #[default]
    Delay,
    /// Time from arrival to departure, `D_j - A_j`.
    Sojourn,
}

impl std::str::FromStr for WaitingConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delay" => Ok(WaitingConvention::Delay),
            "sojourn" => Ok(WaitingConvention::Sojourn),
            other => Err(Error::invalid(
                "convention",
                format!("`{other}` is not delay or sojourn"),
            )),
        }
    }
}

/// Burn-in used when none is given: `max(10^4, n/100)`, capped at `n/10`
/// so short runs keep most of their symbols.
pub fn default_warmup(n_symbols: usize) -> usize {
    (n_symbols / 100).max(10_000).min(n_symbols / 10)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueConfig {
    pub inter_arrival: DistributionSpec,
    pub service: DistributionSpec,
    pub convention: WaitingConvention,
    pub n_symbols: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl QueueConfig {
    /// Builds and validates a configuration with the default convention
    /// (delay) and warmup.
    pub fn new(
        inter_arrival: DistributionSpec,
        service: DistributionSpec,
        n_symbols: usize,
        seed: u64,
    ) -> Result<Self> {
        let config = QueueConfig {
            inter_arrival,
            service,
            convention: WaitingConvention::Delay,
            n_symbols,
            warmup: default_warmup(n_symbols),
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Poisson arrivals at rate `lambda` into the given server.
    pub fn mg1(
        lambda: f64,
        service: DistributionSpec,
        n_symbols: usize,
        seed: u64,
    ) -> Result<Self> {
        let arrivals = DistributionSpec::exponential(lambda).map_err(|_| {
            Error::invalid(
                "lambda",
                format!("arrival rate {lambda} must be positive and finite"),
            )
        })?;
        Self::new(arrivals, service, n_symbols, seed)
    }

    /// Poisson arrivals at rate `lambda`, unit-rate exponential service.
    pub fn mm1(lambda: f64, n_symbols: usize, seed: u64) -> Result<Self> {
        Self::mg1(lambda, DistributionSpec::exponential(1.0)?, n_symbols, seed)
    }

    pub fn with_warmup(mut self, warmup: usize) -> Result<Self> {
        self.warmup = warmup;
        self.validate()?;
        Ok(self)
    }

    pub fn with_convention(mut self, convention: WaitingConvention) -> Self {
        self.convention = convention;
        self
    }

    /// Shorthand for `(warmup, post_warmup)` symbol counts: the queue runs
    /// `warmup + post_warmup` symbols in total.
    pub fn with_post_warmup(mut self, warmup: usize, post_warmup: usize) -> Result<Self> {
        self.n_symbols = warmup + post_warmup;
        self.warmup = warmup;
        self.validate()?;
        Ok(self)
    }

    pub fn arrival_rate(&self) -> f64 {
        1.0 / self.inter_arrival.mean()
    }

    pub fn service_rate(&self) -> f64 {
        1.0 / self.service.mean()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 {
            return Err(Error::invalid("n_symbols", "must be at least 1"));
        }
        if self.warmup >= self.n_symbols {
            return Err(Error::invalid(
                "warmup",
                format!(
                    "warmup {} must be below n_symbols {}",
                    self.warmup, self.n_symbols
                ),
            ));
        }
        let (arrival_rate, service_rate) = (self.arrival_rate(), self.service_rate());
        if arrival_rate >= service_rate {
            return Err(Error::Unstable {
                arrival_rate,
                service_rate,
            });
        }
        Ok(())
    }
}

/// Per-symbol epochs of one simulated run. All columns have equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct EventTrace {
    pub arrivals: Vec<f64>,
    pub services: Vec<f64>,
    pub departures: Vec<f64>,
    pub waits: Vec<f64>,
    pub convention: WaitingConvention,
    /// Leading symbols excluded from stationary estimates.
    pub warmup: usize,
    /// Arrival rate of the generating configuration.
    pub arrival_rate: f64,
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) -> f64 {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
        self.sum + self.carry
    }
}

/// Runs the queue described by `config`. The first arrival is at time
/// `A_1 = T_1` with `T_1` one inter-arrival draw, into an empty system.
pub fn simulate(config: &QueueConfig) -> Result<EventTrace> {
    config.validate()?;
    let n = config.n_symbols;
    let mut arrival_rng = rng::stream(config.seed, streams::ARRIVALS);
    let mut service_rng = rng::stream(config.seed, streams::SERVICE);

    let mut arrivals = Vec::with_capacity(n);
    let mut services = Vec::with_capacity(n);
    let mut departures = Vec::with_capacity(n);
    let mut waits = Vec::with_capacity(n);

    let mut clock = CompensatedSum::default();
    let mut last_departure = 0.0f64;
    for _ in 0..n {
        let a = clock.add(config.inter_arrival.sample(&mut arrival_rng));
        let s = config.service.sample(&mut service_rng);
        let start = a.max(last_departure);
        let d = start + s;
        let w = match config.convention {
            WaitingConvention::Delay => start - a,
            WaitingConvention::Sojourn => d - a,
        };
        arrivals.push(a);
        services.push(s);
        departures.push(d);
        waits.push(w);
        last_departure = d;
    }
    Ok(EventTrace {
        arrivals,
        services,
        departures,
        waits,
        convention: config.convention,
        warmup: config.warmup,
        arrival_rate: config.arrival_rate(),
    })
}

impl EventTrace {
    pub fn len(&self) -> usize {
        self.waits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waits.is_empty()
    }

    /// Waiting times after the warmup prefix.
    pub fn stationary_waits(&self) -> &[f64] {
        &self.waits[self.warmup.min(self.waits.len())..]
    }

    /// Delay before service for symbol `j`, regardless of the convention.
    pub fn delay(&self, j: usize) -> f64 {
        match self.convention {
            WaitingConvention::Delay => self.waits[j],
            WaitingConvention::Sojourn => self.waits[j] - self.services[j],
        }
    }

    /// Time average of `f(W_j)` over the post-warmup symbols, with a
    /// batch-means standard error.
    pub fn stationary_mean<F: Fn(f64) -> f64>(&self, f: F) -> Result<MeanEstimate> {
        let values: Vec<f64> = self.stationary_waits().iter().map(|&w| f(w)).collect();
        batch_means(&values)
    }

    /// Like [`EventTrace::stationary_mean`], restricted to a range of
    /// post-warmup indices.
    pub fn stationary_mean_over<F: Fn(f64) -> f64>(
        &self,
        range: Range<usize>,
        f: F,
    ) -> Result<MeanEstimate> {
        let waits = self.stationary_waits();
        if range.end > waits.len() || range.start > range.end {
            return Err(Error::invalid(
                "range",
                format!("{range:?} outside {} post-warmup samples", waits.len()),
            ));
        }
        let values: Vec<f64> = waits[range].iter().map(|&w| f(w)).collect();
        batch_means(&values)
    }

    /// Writes the trace as CSV with header `j,A,S,D,W` (1-based `j`).
    pub fn write_csv<W: Write>(&self, mut out: W, time_scale: f64) -> Result<()> {
        out.write_all(b"j,A,S,D,W\n")?;
        for j in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                j + 1,
                g17(self.arrivals[j] * time_scale),
                g17(self.services[j] * time_scale),
                g17(self.departures[j] * time_scale),
                g17(self.waits[j] * time_scale),
            )?;
        }
        Ok(())
    }
}
