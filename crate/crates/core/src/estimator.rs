//! Monte Carlo estimates of the stationary expectations behind each
//! capacity formula, read off a simulated trace.
//!
//! Every functional is evaluated per symbol and then averaged, so entropy
//! terms estimate `E[h(.)]`, never `h(E[.])`.

use serde::Serialize;

use crate::capacity::{bsc_bounds_no_timing, CapacityEstimate, Context, Method};
use crate::decoherence::{DecoherenceModel, NoiseKind, PMap};
use crate::entropy::binary_entropy;
use crate::queue_sim::EventTrace;
use crate::stats::{batch_means, MeanEstimate};
use crate::{Error, Result};

/// A bounded function of the waiting time whose stationary mean is wanted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `1 - p(W)`
    Survival,
    /// `exp(-kappa W)`; only for exponential-decay maps.
    Transform,
    /// `h(p(W) / 2)`
    EntropyOfHalfP,
    /// `phi(W) = p(W) / 2`
    Phi,
    /// `h(phi(W))`
    EntropyOfPhi,
}

#[derive(Clone, Copy, Debug)]
pub struct MomentRequest<'a> {
    pub functional: Functional,
    pub model: &'a DecoherenceModel,
}

impl<'a> MomentRequest<'a> {
    pub fn new(functional: Functional, model: &'a DecoherenceModel) -> Self {
        MomentRequest { functional, model }
    }
}

/// Per-symbol values of the requested functional over post-warmup symbols.
pub fn functional_samples(trace: &EventTrace, req: &MomentRequest<'_>) -> Result<Vec<f64>> {
    let waits = trace.stationary_waits();
    let model = req.model;
    match req.functional {
        Functional::Transform => {
            let kappa = match model.p_map {
                PMap::ExpDecay { kappa } => kappa,
                _ => {
                    return Err(Error::Unsupported(format!(
                        "transform functional needs an exponential-decay map, got {}",
                        model.p_map
                    )))
                }
            };
            Ok(waits.iter().map(|&w| (-kappa * w).exp()).collect())
        }
        Functional::Survival => waits.iter().map(|&w| Ok(1.0 - model.p_of(w)?)).collect(),
        Functional::Phi => waits.iter().map(|&w| model.phi(w)).collect(),
        Functional::EntropyOfHalfP | Functional::EntropyOfPhi => waits
            .iter()
            .map(|&w| Ok(binary_entropy(model.phi(w)?)))
            .collect(),
    }
}

/// Batch-means estimate of `E_pi[functional(W)]`.
pub fn estimate_moment(trace: &EventTrace, req: &MomentRequest<'_>) -> Result<MeanEstimate> {
    batch_means(&functional_samples(trace, req)?)
}

/// Per-symbol Holevo information `chi(N_{W_j})` over post-warmup symbols.
pub fn holevo_samples(trace: &EventTrace, model: &DecoherenceModel) -> Result<Vec<f64>> {
    trace
        .stationary_waits()
        .iter()
        .map(|&w| model.holevo(w))
        .collect()
}

/// Plug-in conditional information per use of the induced binary symmetric
/// channel, `1 - E^[h(phi(W))]`, with a batch-means standard error.
pub fn bsc_conditional_information(
    trace: &EventTrace,
    model: &DecoherenceModel,
) -> Result<MeanEstimate> {
    if model.noise != NoiseKind::Depolarizing || model.dimension != 2 {
        return Err(Error::Unsupported(format!(
            "binary symmetric channel needs depolarizing qubits, got {:?} with d = {}",
            model.noise, model.dimension
        )));
    }
    batch_means(&holevo_samples(trace, model)?)
}

/// A capacity, or a bracket around it when only bounds are known.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum McCapacity {
    Exact(CapacityEstimate),
    Bounds {
        lower: CapacityEstimate,
        upper: CapacityEstimate,
    },
}

impl McCapacity {
    pub fn exact(&self) -> Option<&CapacityEstimate> {
        match self {
            McCapacity::Exact(c) => Some(c),
            McCapacity::Bounds { .. } => None,
        }
    }
}

fn context_for(
    trace: &EventTrace,
    model: &DecoherenceModel,
    lambda: f64,
    timing_known: bool,
    formula: &str,
) -> Context {
    Context::new(lambda, formula)
        .noise(model.noise)
        .dimension(model.dimension)
        .timing_known(timing_known)
        .p_map(&model.p_map)
        .convention(trace.convention)
}

/// Plug-in capacity estimate from one trace.
///
/// Erasure gives `lambda * E^[log2(d) (1 - p(W))]` whatever `timing_known`
/// says. Depolarizing with timing known gives `lambda * E^[chi_d(p(W))]`,
/// which is `lambda (1 - E^[h(p(W)/2)])` for qubits. Without timing
/// knowledge (qubits only) the result is the pair of bounds.
pub fn mc_capacity(
    trace: &EventTrace,
    model: &DecoherenceModel,
    lambda: f64,
    timing_known: bool,
) -> Result<McCapacity> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(
            "lambda",
            format!("{lambda} must be positive and finite"),
        ));
    }
    match (model.noise, timing_known) {
        (NoiseKind::Erasure, _) | (NoiseKind::Depolarizing, true) => {
            let chi = batch_means(&holevo_samples(trace, model)?)?;
            let formula = match model.noise {
                NoiseKind::Erasure => "lambda*E^[log2(d)(1-p(W))]",
                NoiseKind::Depolarizing => "lambda*E^[chi_d(p(W))]",
            };
            let ctx = context_for(trace, model, lambda, timing_known, formula);
            Ok(McCapacity::Exact(CapacityEstimate::new(
                lambda * chi.estimate,
                lambda * chi.std_error,
                Method::MonteCarlo,
                ctx,
            )))
        }
        (NoiseKind::Depolarizing, false) => {
            if model.dimension != 2 {
                return Err(Error::Unsupported(format!(
                    "bounds without timing knowledge are for qubits, got d = {}",
                    model.dimension
                )));
            }
            let phi = estimate_moment(trace, &MomentRequest::new(Functional::Phi, model))?;
            let ent = estimate_moment(trace, &MomentRequest::new(Functional::EntropyOfPhi, model))?;
            let (mut lower, mut upper) = bsc_bounds_no_timing(lambda, phi.estimate, ent.estimate)?;
            // d/dx h(x) = log2((1 - x) / x)
            let slope = if phi.estimate > 0.0 {
                ((1.0 - phi.estimate) / phi.estimate).log2()
            } else {
                0.0
            };
            lower.std_error = lambda * slope.abs() * phi.std_error;
            upper.std_error = lambda * ent.std_error;
            lower.context = context_for(trace, model, lambda, false, &lower.context.formula);
            upper.context = context_for(trace, model, lambda, false, &upper.context.formula);
            Ok(McCapacity::Bounds { lower, upper })
        }
    }
}

/// Rejects comparisons across traces recorded under different waiting-time
/// conventions.
pub fn ensure_same_convention(a: &EventTrace, b: &EventTrace) -> Result<()> {
    if a.convention == b.convention {
        Ok(())
    } else {
        Err(Error::ConventionMismatch(a.convention, b.convention))
    }
}

/// Combines independent replications by inverse-variance weighting.
/// Replications with zero standard error are exact and, if present, are
/// averaged on their own.
pub fn merge_replications(estimates: &[CapacityEstimate]) -> Result<CapacityEstimate> {
    let first = estimates
        .first()
        .ok_or(Error::InsufficientSamples { needed: 1, got: 0 })?;
    for e in &estimates[1..] {
        match (first.context.convention, e.context.convention) {
            (Some(a), Some(b)) if a != b => return Err(Error::ConventionMismatch(a, b)),
            _ => {}
        }
        if e.method != first.method {
            return Err(Error::invalid(
                "method",
                format!("cannot merge {:?} with {:?}", first.method, e.method),
            ));
        }
    }
    let exact: Vec<f64> = estimates
        .iter()
        .filter(|e| e.std_error == 0.0)
        .map(|e| e.value)
        .collect();
    let (value, std_error) = if !exact.is_empty() {
        (exact.iter().sum::<f64>() / exact.len() as f64, 0.0)
    } else {
        let weights: Vec<f64> = estimates
            .iter()
            .map(|e| 1.0 / (e.std_error * e.std_error))
            .collect();
        let total: f64 = weights.iter().sum();
        let value = estimates
            .iter()
            .zip(&weights)
            .map(|(e, w)| e.value * w)
            .sum::<f64>()
            / total;
        (value, total.sqrt().recip())
    };
    Ok(CapacityEstimate {
        value,
        std_error,
        method: first.method,
        context: first.context.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{
        additive_upper_bound, depolarizing_capacity, mg1_closed_form, MG1Params,
    };
    use crate::distributions::DistributionSpec;
    use crate::queue_sim::{simulate, QueueConfig, WaitingConvention};
    use crate::rng;

    fn mm1_trace(lambda: f64, post: usize, seed: u64) -> EventTrace {
        let config = QueueConfig::mm1(lambda, 10, seed)
            .unwrap()
            .with_post_warmup(10_000, post)
            .unwrap();
        simulate(&config).unwrap()
    }

    #[test]
    fn noiseless_survival_is_exact() {
        let t = mm1_trace(0.5, 10_000, 1);
        let m = DecoherenceModel::erasure(PMap::constant(0.0).unwrap());
        let s = estimate_moment(&t, &MomentRequest::new(Functional::Survival, &m)).unwrap();
        assert_eq!((s.estimate, s.std_error), (1.0, 0.0));
        let c = mc_capacity(&t, &m, 0.5, true).unwrap();
        assert_eq!(c.exact().unwrap().value, 0.5);
    }

    #[test]
    fn constant_p_entropy() {
        let t = mm1_trace(0.5, 10_000, 2);
        let m = DecoherenceModel::depolarizing(PMap::constant(0.22).unwrap());
        let e = estimate_moment(&t, &MomentRequest::new(Functional::EntropyOfPhi, &m)).unwrap();
        assert!((e.estimate - binary_entropy(0.11)).abs() < 1e-12);
        assert_eq!(e.std_error, 0.0);
        assert!((e.estimate - 0.49992).abs() < 1e-5);
        let c = mc_capacity(&t, &m, 1.0, true).unwrap();
        assert!((c.exact().unwrap().value - (1.0 - binary_entropy(0.11))).abs() < 1e-9);
    }

    #[test]
    fn transform_needs_exp_decay() {
        let t = mm1_trace(0.5, 1000, 3);
        let m = DecoherenceModel::erasure(PMap::constant(0.5).unwrap());
        assert!(matches!(
            estimate_moment(&t, &MomentRequest::new(Functional::Transform, &m)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn mm1_transform_and_capacity() {
        let t = mm1_trace(0.5, 1_000_000, 4);
        let m = DecoherenceModel::erasure(PMap::exp_decay(1.0).unwrap());
        let tr = estimate_moment(&t, &MomentRequest::new(Functional::Transform, &m)).unwrap();
        assert!(
            (tr.estimate - 2.0 / 3.0).abs() < 3.0 * tr.std_error,
            "{tr:?}"
        );
        let c = mc_capacity(&t, &m, 0.5, true).unwrap();
        let c = c.exact().unwrap();
        let closed = mg1_closed_form(
            &MG1Params::new(0.5, 1.0, DistributionSpec::exponential(1.0).unwrap()).unwrap(),
        )
        .unwrap()
        .value;
        assert!(
            (c.value - closed).abs() < 3.0 * c.std_error,
            "{} vs {closed}",
            c.value
        );
        // Erasure capacity does not depend on timing knowledge.
        assert_eq!(
            mc_capacity(&t, &m, 0.5, false)
                .unwrap()
                .exact()
                .unwrap()
                .value,
            c.value
        );
    }

    #[test]
    fn bounds_without_timing_bracket_capacity() {
        let t = mm1_trace(0.7, 200_000, 5);
        let m = DecoherenceModel::depolarizing(PMap::exp_decay(0.5).unwrap());
        let known = mc_capacity(&t, &m, 0.7, true).unwrap();
        let known = known.exact().unwrap();
        match mc_capacity(&t, &m, 0.7, false).unwrap() {
            McCapacity::Bounds { lower, upper } => {
                assert!(lower.value < upper.value);
                assert!((upper.value - known.value).abs() < 1e-12);
                assert!(lower.std_error > 0.0 && upper.std_error > 0.0);
            }
            other => panic!("expected bounds, got {other:?}"),
        }
        let h = estimate_moment(&t, &MomentRequest::new(Functional::EntropyOfHalfP, &m)).unwrap();
        let formula = depolarizing_capacity(0.7, h.estimate).unwrap();
        assert!((formula.value - known.value).abs() < 1e-12);
        let qudit = m.clone().with_dimension(3).unwrap();
        assert!(mc_capacity(&t, &qudit, 0.7, false).is_err());
    }

    #[test]
    fn bound_equals_mc_on_same_trace() {
        let t = mm1_trace(0.4, 100_000, 6);
        for m in [
            DecoherenceModel::erasure(PMap::exp_decay(1.0).unwrap()),
            DecoherenceModel::depolarizing(PMap::exp_decay(1.0).unwrap()),
        ] {
            let mc = mc_capacity(&t, &m, 0.4, true).unwrap();
            let bound = additive_upper_bound(0.4, &holevo_samples(&t, &m).unwrap(), 2).unwrap();
            assert_eq!(mc.exact().unwrap().value, bound.value);
        }
    }

    #[test]
    fn channel_erasures_match_moment() {
        let t = mm1_trace(0.6, 500_000, 7);
        let m = DecoherenceModel::erasure(PMap::exp_decay(0.5).unwrap());
        let waits = t.stationary_waits();
        let out = m
            .apply_to_waits(
                &vec![1; waits.len()],
                waits,
                &mut rng::stream(7, rng::streams::NOISE),
            )
            .unwrap();
        let ind: Vec<f64> = out
            .outputs
            .iter()
            .map(|y| y.is_none() as u8 as f64)
            .collect();
        let direct = batch_means(&ind).unwrap();
        let surv = estimate_moment(&t, &MomentRequest::new(Functional::Survival, &m)).unwrap();
        let indirect = surv.affine(1.0, -1.0);
        let se = (direct.std_error.powi(2) + indirect.std_error.powi(2)).sqrt();
        assert!((direct.estimate - indirect.estimate).abs() < 4.0 * se);
    }

    #[test]
    fn standard_error_shrinks_with_samples() {
        let m = DecoherenceModel::erasure(PMap::exp_decay(1.0).unwrap());
        let req = MomentRequest::new(Functional::Survival, &m);
        let mut ratios = Vec::new();
        for rep in 0..10 {
            let short = estimate_moment(&mm1_trace(0.5, 100_000, 100 + rep), &req).unwrap();
            let long = estimate_moment(&mm1_trace(0.5, 200_000, 200 + rep), &req).unwrap();
            ratios.push(short.std_error / long.std_error);
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(
            (mean_ratio / 2f64.sqrt() - 1.0).abs() < 0.2,
            "ratio {mean_ratio}"
        );
    }

    #[test]
    fn merging() {
        let t = mm1_trace(0.5, 50_000, 8);
        let m = DecoherenceModel::erasure(PMap::exp_decay(1.0).unwrap());
        let a = mc_capacity(&t, &m, 0.5, true)
            .unwrap()
            .exact()
            .unwrap()
            .clone();
        let b = mc_capacity(&mm1_trace(0.5, 50_000, 9), &m, 0.5, true)
            .unwrap()
            .exact()
            .unwrap()
            .clone();
        let merged = merge_replications(&[a.clone(), b.clone()]).unwrap();
        assert!(merged.std_error < a.std_error.min(b.std_error));
        assert!(merged.value >= a.value.min(b.value) && merged.value <= a.value.max(b.value));

        let config = QueueConfig::mm1(0.5, 10, 9)
            .unwrap()
            .with_post_warmup(10_000, 50_000)
            .unwrap();
        let sojourn = simulate(&config.with_convention(WaitingConvention::Sojourn)).unwrap();
        let c = mc_capacity(&sojourn, &m, 0.5, true)
            .unwrap()
            .exact()
            .unwrap()
            .clone();
        assert!(matches!(
            merge_replications(&[a, c]),
            Err(Error::ConventionMismatch(..))
        ));
        assert!(ensure_same_convention(&t, &sojourn).is_err());
        assert!(merge_replications(&[]).is_err());
    }
}
