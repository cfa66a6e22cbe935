//! Derivative-free scalar maximization and the service-law comparison
//! harness.

use serde::Serialize;

use crate::capacity::{mg1_alpha, mg1_capacity_value, UNIT_MEAN_TOL};
use crate::distributions::DistributionSpec;
use crate::{Error, Result};

/// Points in the bracketing pre-scan.
pub const SCAN_POINTS: usize = 64;
/// A scan whose max-min spread is below this is rejected as flat.
pub const FLAT_SPREAD: f64 = 1e-14;
/// Capacities may fall below the deterministic-service value by at most this
/// much before dominance is reported as violated.
pub const DOMINANCE_MARGIN: f64 = 1e-12;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

pub struct ScalarProblem<F> {
    pub objective: F,
    pub lo: f64,
    pub hi: f64,
    /// Target width of the final bracket, in the argument.
    pub tolerance: f64,
    pub max_evals: usize,
}

impl<F: Fn(f64) -> f64> ScalarProblem<F> {
    pub fn new(objective: F, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(
                "interval",
                format!("[{lo}, {hi}] is not a proper interval"),
            ));
        }
        Ok(ScalarProblem {
            objective,
            lo,
            hi,
            tolerance: 1e-6,
            max_evals: 200,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("{tolerance} must be positive"),
            ));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_max_evals(mut self, max_evals: usize) -> Self {
        self.max_evals = max_evals;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Optimum {
    pub argmax: f64,
    pub value: f64,
    pub evaluations: usize,
    /// The maximum was found against an end of the interval.
    pub boundary: bool,
}

/// Maximizes the objective: a `SCAN_POINTS` grid picks the best cell pair,
/// then golden-section search narrows it to `tolerance`. Global for
/// unimodal objectives.
pub fn maximize<F: Fn(f64) -> f64>(problem: &ScalarProblem<F>) -> Result<Optimum> {
    let f = &problem.objective;
    let (lo, hi) = (problem.lo, problem.hi);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i == SCAN_POINTS - 1 {
                hi
            } else {
                lo + i as f64 * step
            }
        })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut evaluations = SCAN_POINTS;
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::invalid(
            "objective",
            format!("not evaluable at {}", grid[i]),
        ));
    }
    let (mut best_i, mut max) = (0, f64::NEG_INFINITY);
    let mut min = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > max {
            best_i = i;
            max = v;
        }
        min = min.min(v);
    }
    if max - min < FLAT_SPREAD {
        return Err(Error::DegenerateObjective { spread: max - min });
    }

    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid[(best_i + 1).min(SCAN_POINTS - 1)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    evaluations += 2;
    while b - a > problem.tolerance {
        if evaluations >= problem.max_evals {
            return Err(Error::NotConverged {
                max_evals: problem.max_evals,
                width: b - a,
            });
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let argmax = 0.5 * (a + b);
    let value = f(argmax);
    evaluations += 1;
    let at_edge = (best_i == 0 && argmax - lo <= problem.tolerance)
        || (best_i == SCAN_POINTS - 1 && hi - argmax <= problem.tolerance);
    Ok(Optimum {
        argmax,
        value,
        evaluations,
        boundary: at_edge,
    })
}

/// Capacities of the M/GI/1 erasure queue-channel (`p(w) = 1 - e^{-kappa w}`)
/// across unit-mean service laws, against deterministic unit service.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub kappa: f64,
    pub lambdas: Vec<f64>,
    pub laws: Vec<String>,
    /// `capacities[i][j]`: law `j` at `lambdas[i]`.
    pub capacities: Vec<Vec<f64>>,
    /// Deterministic(1) service at each `lambdas[i]`.
    pub deterministic: Vec<f64>,
    pub deterministic_dominates: bool,
}

pub fn compare_service_laws(
    lambdas: &[f64],
    kappa: f64,
    laws: &[DistributionSpec],
) -> Result<DominanceReport> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas", "grid is empty"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::invalid("lambdas", format!("{l} outside (0, 1)")));
    }
    for law in laws {
        let mean = law.mean();
        if (mean - 1.0).abs() > UNIT_MEAN_TOL {
            return Err(Error::invalid(
                "service",
                format!("{law} has mean {mean}, expected 1"),
            ));
        }
        if law.mass_at_zero() > 0.0 {
            return Err(Error::invalid(
                "service",
                format!("{law} has an atom at zero"),
            ));
        }
    }
    let alphas: Vec<f64> = laws
        .iter()
        .map(|s| mg1_alpha(kappa, s))
        .collect::<Result<_>>()?;
    let det_alpha = mg1_alpha(kappa, &DistributionSpec::deterministic(1.0)?)?;

    let mut capacities = Vec::with_capacity(lambdas.len());
    let mut deterministic = Vec::with_capacity(lambdas.len());
    let mut dominates = true;
    for &lambda in lambdas {
        let det = mg1_capacity_value(lambda, det_alpha);
        let row: Vec<f64> = alphas
            .iter()
            .map(|&a| mg1_capacity_value(lambda, a))
            .collect();
        dominates &= row.iter().all(|&c| det >= c - DOMINANCE_MARGIN);
        capacities.push(row);
        deterministic.push(det);
    }
    Ok(DominanceReport {
        kappa,
        lambdas: lambdas.to_vec(),
        laws: laws.iter().map(ToString::to_string).collect(),
        capacities,
        deterministic,
        deterministic_dominates: dominates,
    })
}
