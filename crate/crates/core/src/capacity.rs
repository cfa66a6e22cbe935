//! Closed-form capacities and bounds of erasure and depolarizing
//! queue-channels, in bits per unit time.
//!
//! Most results here are `lambda * E[chi(W)]` for some single-use quantity
//! `chi` under the stationary waiting-time law; the M/GI/1 and M/M/1 forms
//! evaluate that expectation in closed form or by quadrature.

use std::cell::RefCell;

use serde::Serialize;

use crate::decoherence::{NoiseKind, PMap};
use crate::distributions::DistributionSpec;
use crate::entropy::{binary_entropy, depolarizing_holevo, erasure_holevo};
use crate::optimizer::{self, ScalarProblem};
use crate::quadrature::{integrate_exp_weighted, QuadOptions};
use crate::queue_sim::WaitingConvention;
use crate::stats::mean_with_error;
use crate::{Error, Result};

/// Search box for arrival rates; stability needs `lambda < 1`.
pub const LAMBDA_MIN: f64 = 1e-6;
pub const LAMBDA_MAX: f64 = 1.0 - 1e-6;

/// Tolerance on the unit service mean required by the M/GI/1 forms.
pub const UNIT_MEAN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Analytic,
    MonteCarlo,
    UpperBound,
    LowerBound,
}

/// What an estimate was computed for.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Context {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_map: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    pub dimension: u32,
    /// Whether the receiver knows arrival and departure epochs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_known: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<WaitingConvention>,
    pub formula: String,
    /// Set when a parameter sits on (or the result was pinned to) the edge
    /// of its admissible range.
    pub boundary: bool,
}

impl Context {
    pub fn new(lambda: f64, formula: impl Into<String>) -> Self {
        Context {
            lambda,
            dimension: 2,
            formula: formula.into(),
            ..Context::default()
        }
    }

    pub fn noise(mut self, noise: NoiseKind) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn dimension(mut self, d: u32) -> Self {
        self.dimension = d;
        self
    }

    pub fn timing_known(mut self, known: bool) -> Self {
        self.timing_known = Some(known);
        self
    }

    pub fn service(mut self, service: &DistributionSpec) -> Self {
        self.service = Some(service.to_string());
        self
    }

    pub fn p_map(mut self, p: &PMap) -> Self {
        self.p_map = Some(p.to_string());
        self
    }

    pub fn convention(mut self, c: WaitingConvention) -> Self {
        self.convention = Some(c);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
    pub context: Context,
}

impl CapacityEstimate {
    pub(crate) fn new(value: f64, std_error: f64, method: Method, context: Context) -> Self {
        let cap = context.lambda * f64::from(context.dimension).log2();
        debug_assert!(
            value >= -1e-12 && value <= cap + 1e-9,
            "capacity {value} outside [0, {cap}]"
        );
        CapacityEstimate {
            value: value.clamp(0.0, cap.max(0.0)),
            std_error,
            method,
            context,
        }
    }

    pub fn analytic(value: f64, context: Context) -> Self {
        Self::new(value, 0.0, Method::Analytic, context)
    }
}

fn check_lambda_positive(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            "lambda",
            format!("{lambda} must be positive and finite"),
        ))
    }
}

fn check_lambda_stable(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "lambda",
            format!("{lambda} must lie in (0, 1)"),
        ))
    }
}

fn check_unit(field: &str, x: f64, hi: f64) -> Result<()> {
    if (0.0..=hi).contains(&x) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{x} outside [0, {hi}]")))
    }
}

fn check_dimension(d: u32) -> Result<()> {
    if d >= 2 {
        Ok(())
    } else {
        Err(Error::invalid(
            "d",
            format!("dimension {d} must be at least 2"),
        ))
    }
}

/// Erasure queue-channel capacity `lambda * E[1 - p(W)]`, valid for any
/// stationary ergodic queue whether or not the receiver knows the timing.
pub fn erasure_capacity_general(lambda: f64, mean_survival: f64) -> Result<CapacityEstimate> {
    check_lambda_positive(lambda)?;
    check_unit("mean_survival", mean_survival, 1.0)?;
    let ctx = Context::new(lambda, "lambda*E[1-p(W)]").noise(NoiseKind::Erasure);
    Ok(CapacityEstimate::analytic(lambda * mean_survival, ctx))
}

/// Parameters of the M/GI/1 erasure queue-channel with `p(w) = 1 - e^{-kappa w}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MG1Params {
    pub lambda: f64,
    pub kappa: f64,
    pub service: DistributionSpec,
    /// `(1 - F~_S(kappa)) / kappa`.
    pub alpha: f64,
}

/// `alpha = (1 - F~_S(kappa)) / kappa` for a unit-mean service law.
pub fn mg1_alpha(kappa: f64, service: &DistributionSpec) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(
            "kappa",
            format!("{kappa} must be positive and finite"),
        ));
    }
    let mean = service.mean();
    if (mean - 1.0).abs() > UNIT_MEAN_TOL {
        return Err(Error::invalid(
            "service",
            format!("{service} has mean {mean}, expected 1"),
        ));
    }
    // 1 - F~(kappa) = E[1 - e^{-kappa S}], summed without cancellation for small kappa.
    let one_minus = 1.0 - service.laplace(kappa)?;
    Ok(one_minus / kappa)
}

impl MG1Params {
    pub fn new(lambda: f64, kappa: f64, service: DistributionSpec) -> Result<Self> {
        check_lambda_stable(lambda)?;
        let alpha = mg1_alpha(kappa, &service)?;
        Ok(MG1Params {
            lambda,
            kappa,
            service,
            alpha,
        })
    }
}

/// `lambda (1 - lambda) / (1 - alpha lambda)`.
pub fn mg1_capacity_value(lambda: f64, alpha: f64) -> f64 {
    lambda * (1.0 - lambda) / (1.0 - alpha * lambda)
}

/// Capacity of the M/GI/1 erasure queue-channel (unit-rate service,
/// delay before service as the waiting time).
pub fn mg1_closed_form(params: &MG1Params) -> Result<CapacityEstimate> {
    check_lambda_stable(params.lambda)?;
    let ctx = Context::new(params.lambda, "lambda(1-lambda)/(1-alpha*lambda)")
        .noise(NoiseKind::Erasure)
        .service(&params.service)
        .p_map(&PMap::ExpDecay {
            kappa: params.kappa,
        })
        .convention(WaitingConvention::Delay);
    Ok(CapacityEstimate::analytic(
        mg1_capacity_value(params.lambda, params.alpha),
        ctx,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalRate {
    pub lambda: f64,
    /// True when the optimum sits on the stability boundary or the edge of
    /// the search box.
    pub boundary: bool,
}

/// Capacity-maximizing arrival rate `1 / (1 + sqrt(1 - alpha))`.
///
/// `alpha = 1` gives `lambda = 1`, which is not stable; it is returned with
/// `boundary` set rather than as an error.
pub fn mg1_optimal_lambda(alpha: f64) -> Result<OptimalRate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} outside (0, 1]")));
    }
    Ok(OptimalRate {
        lambda: 1.0 / (1.0 + (1.0 - alpha).sqrt()),
        boundary: alpha == 1.0,
    })
}

/// Stationary waiting-time laws of the M/M/1 queue with unit service rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mm1WaitingLaw {
    /// Delay before service: an atom `1 - lambda` at zero plus
    /// `lambda * Exp(1 - lambda)`.
    Delay,
    /// Time in system: `Exp(1 - lambda)`.
    Sojourn,
    /// `Exp((1 - lambda) / lambda)`: exponential with the mean delay
    /// `lambda / (1 - lambda)`. This is the law behind the general-`p`
    /// M/M/1 capacity expression.
    MeanMatched,
}

impl From<WaitingConvention> for Mm1WaitingLaw {
    fn from(c: WaitingConvention) -> Self {
        match c {
            WaitingConvention::Delay => Mm1WaitingLaw::Delay,
            WaitingConvention::Sojourn => Mm1WaitingLaw::Sojourn,
        }
    }
}

/// `E[f(W)]` under an M/M/1 waiting law, by quadrature against the
/// exponential density. `f` must be bounded by `bound` in absolute value.
pub fn mm1_expectation<F>(lambda: f64, law: Mm1WaitingLaw, bound: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    check_lambda_stable(lambda)?;
    let failure = RefCell::new(None);
    let g = |w: f64| match f(w) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let opts = QuadOptions::default();
    let density_part = |rate: f64| -> Result<f64> {
        Ok(rate * integrate_exp_weighted(g, 0.0, rate, bound, opts)?.value)
    };
    let value = match law {
        Mm1WaitingLaw::Delay => (1.0 - lambda) * g(0.0) + lambda * density_part(1.0 - lambda)?,
        Mm1WaitingLaw::Sojourn => density_part(1.0 - lambda)?,
        Mm1WaitingLaw::MeanMatched => density_part((1.0 - lambda) / lambda)?,
    };
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// General-`p` M/M/1 erasure capacity
/// `lambda (1 - u0 p~(u0))` with `u0 = (1 - lambda) / lambda`, i.e.
/// `lambda E[1 - p(W)]` for `W ~ Exp(u0)`.
pub fn mm1_general_p_capacity(lambda: f64, p_map: &PMap) -> Result<CapacityEstimate> {
    check_lambda_stable(lambda)?;
    let u0 = (1.0 - lambda) / lambda;
    let mean_p = (u0 * p_map.laplace(u0)?).clamp(0.0, 1.0);
    let ctx = Context::new(lambda, "lambda(1-u0*p~(u0)), u0=(1-lambda)/lambda")
        .noise(NoiseKind::Erasure)
        .service(&DistributionSpec::exponential(1.0)?)
        .p_map(p_map);
    Ok(CapacityEstimate::analytic(lambda * (1.0 - mean_p), ctx))
}

/// Capacity-maximizing arrival rate for the general-`p` M/M/1 form:
/// `1 - argmin_{u in (0,1)} u (1 + p~(u / (1 - u)))`.
pub fn mm1_optimal_lambda_general_p(p_map: &PMap) -> Result<OptimalRate> {
    let failure = RefCell::new(None);
    let objective = |u: f64| match p_map.laplace(u / (1.0 - u)) {
        Ok(t) => -(u * (1.0 + t)),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let problem = ScalarProblem::new(objective, 1.0 - LAMBDA_MAX, 1.0 - LAMBDA_MIN)?;
    let best = optimizer::maximize(&problem);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let best = best?;
    Ok(OptimalRate {
        lambda: 1.0 - best.argmax,
        boundary: best.boundary,
    })
}

/// Depolarizing queue-channel capacity `lambda (1 - E[h(p(W)/2)])` when the
/// receiver knows arrival and departure epochs.
pub fn depolarizing_capacity(lambda: f64, mean_entropy: f64) -> Result<CapacityEstimate> {
    check_lambda_positive(lambda)?;
    check_unit("mean_entropy", mean_entropy, 1.0)?;
    let ctx = Context::new(lambda, "lambda*E[1-h(p(W)/2)]")
        .noise(NoiseKind::Depolarizing)
        .timing_known(true);
    Ok(CapacityEstimate::analytic(
        lambda * (1.0 - mean_entropy),
        ctx,
    ))
}

/// Bounds on the binary symmetric queue-channel capacity without timing
/// knowledge: `lambda (1 - h(E[phi]))` below, `lambda (1 - E[h(phi)])` above.
pub fn bsc_bounds_no_timing(
    lambda: f64,
    mean_phi: f64,
    mean_entropy: f64,
) -> Result<(CapacityEstimate, CapacityEstimate)> {
    check_lambda_positive(lambda)?;
    check_unit("mean_phi", mean_phi, 0.5)?;
    check_unit("mean_entropy", mean_entropy, 1.0)?;
    let jensen = binary_entropy(mean_phi);
    if mean_entropy > jensen + 1e-12 {
        return Err(Error::invalid(
            "mean_entropy",
            format!(
                "E[h(phi)] = {mean_entropy} exceeds h(E[phi]) = {jensen}; moments are inconsistent"
            ),
        ));
    }
    let upper_value = lambda * (1.0 - mean_entropy);
    let lower_value = (lambda * (1.0 - jensen)).min(upper_value);
    let ctx = Context::new(lambda, "")
        .noise(NoiseKind::Depolarizing)
        .timing_known(false);
    let lower = CapacityEstimate::new(
        lower_value,
        0.0,
        Method::LowerBound,
        Context {
            formula: "lambda*(1-h(E[phi(W)]))".into(),
            ..ctx.clone()
        },
    );
    let upper = CapacityEstimate::new(
        upper_value,
        0.0,
        Method::UpperBound,
        Context {
            formula: "lambda*(1-E[h(phi(W))])".into(),
            ..ctx
        },
    );
    Ok((lower, upper))
}

/// Single-use Holevo information for a qudit channel hit with probability `p`.
pub fn holevo_information(noise: NoiseKind, d: u32, p: f64) -> f64 {
    match noise {
        NoiseKind::Erasure => erasure_holevo(p, d),
        NoiseKind::Depolarizing => depolarizing_holevo(p, d),
    }
}

/// What is known about the law of `p(W)`.
#[derive(Clone, Copy, Debug)]
pub enum PMoments<'a> {
    /// `E[1 - p(W)]`; enough for erasure only.
    MeanSurvival(f64),
    /// Per-symbol values `p(W_j)` (a single value for constant `p`).
    Samples(&'a [f64]),
}

/// Qudit capacities: erasure `lambda log2(d) E[1 - p(W)]`, depolarizing
/// `lambda E[chi_d(p(W))]` (receiver knows the timing).
pub fn qudit_capacities(
    lambda: f64,
    d: u32,
    noise: NoiseKind,
    moments: PMoments<'_>,
) -> Result<CapacityEstimate> {
    check_lambda_positive(lambda)?;
    check_dimension(d)?;
    let mean_chi = match (noise, moments) {
        (NoiseKind::Erasure, PMoments::MeanSurvival(s)) => {
            check_unit("mean_survival", s, 1.0)?;
            f64::from(d).log2() * s
        }
        (_, PMoments::Samples(ps)) => {
            if ps.is_empty() {
                return Err(Error::InsufficientSamples { needed: 1, got: 0 });
            }
            for &p in ps {
                check_unit("p", p, 1.0)?;
            }
            ps.iter()
                .map(|&p| holevo_information(noise, d, p))
                .sum::<f64>()
                / ps.len() as f64
        }
        (NoiseKind::Depolarizing, PMoments::MeanSurvival(_)) => {
            return Err(Error::invalid(
                "moments",
                "depolarizing capacity needs the law of p(W), not only its mean",
            ))
        }
    };
    let formula = match noise {
        NoiseKind::Erasure => "lambda*log2(d)*E[1-p(W)]",
        NoiseKind::Depolarizing => "lambda*E[log2 d+(1-p+p/d)log2(1-p+p/d)+(d-1)(p/d)log2(p/d)]",
    };
    let mut ctx = Context::new(lambda, formula).noise(noise).dimension(d);
    if noise == NoiseKind::Depolarizing {
        ctx = ctx.timing_known(true);
    }
    Ok(CapacityEstimate::analytic(lambda * mean_chi, ctx))
}

/// Single-letter upper bound `lambda * mean(chi(W_i))` from per-symbol
/// Holevo values, with a batch-means standard error.
pub fn additive_upper_bound(lambda: f64, chi: &[f64], d: u32) -> Result<CapacityEstimate> {
    check_lambda_positive(lambda)?;
    check_dimension(d)?;
    if chi.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let top = f64::from(d).log2();
    if let Some(bad) = chi.iter().find(|c| !(0.0..=top).contains(*c)) {
        return Err(Error::invalid("chi", format!("{bad} outside [0, {top}]")));
    }
    let mean = mean_with_error(chi)?;
    let ctx = Context::new(lambda, "lambda*E[chi(N_W)]").dimension(d);
    Ok(CapacityEstimate::new(
        lambda * mean.estimate,
        lambda * mean.std_error,
        Method::UpperBound,
        ctx,
    ))
}
