use proptest::prelude::*;

use qcap::capacity::{
    bsc_bounds_no_timing, mg1_alpha, mg1_capacity_value, mg1_optimal_lambda, qudit_capacities,
    PMoments,
};
use qcap::decoherence::{PMap, PTable};
use qcap::entropy::binary_entropy;
use qcap::optimizer::{compare_service_laws, maximize, ScalarProblem};
use qcap::queue_sim::{simulate, QueueConfig, WaitingConvention};
use qcap::{DistributionSpec, NoiseKind};

/// Unit-mean two-phase hyperexponential with first-branch weight `w` and
/// first-branch rate `r1`; the second rate is solved for the unit mean.
fn unit_hyperexp(w: f64, r1: f64) -> Option<DistributionSpec> {
    let rest = 1.0 - w / r1;
    if rest <= 1e-3 {
        return None;
    }
    let r2 = (1.0 - w) / rest;
    DistributionSpec::hyper_exponential(vec![w, 1.0 - w], vec![r1, r2]).ok()
}

fn monotone_table() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..5.0f64, 0.0..1.0f64), 1..8).prop_map(|mut pts| {
        let mut ws: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let mut ps: Vec<f64> = pts.iter().map(|p| p.1).collect();
        ws.sort_by(f64::total_cmp);
        ps.sort_by(f64::total_cmp);
        for (i, pt) in pts.iter_mut().enumerate() {
            *pt = (ws[i], ps[i]);
        }
        pts
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deterministic_service_dominates(
        w in 0.05..0.95f64,
        r1 in 1.05..20.0f64,
        shape in 1u32..6,
        half_width in 0.0..1.0f64,
        kappa in 0.01..5.0f64,
        lambda in 0.01..0.99f64,
    ) {
        let mut laws = vec![
            DistributionSpec::exponential(1.0).unwrap(),
            DistributionSpec::erlang(shape, f64::from(shape)).unwrap(),
        ];
        if half_width > 0.0 {
            laws.push(DistributionSpec::uniform(1.0 - half_width, 1.0 + half_width).unwrap());
        }
        if let Some(h) = unit_hyperexp(w, r1) {
            laws.push(h);
        }
        let report = compare_service_laws(&[lambda], kappa, &laws).unwrap();
        prop_assert!(report.deterministic_dominates, "{report:?}");
    }

    #[test]
    fn laplace_is_a_transform(u in 0.01..10.0f64, w in 0.05..0.95f64, r1 in 1.05..20.0f64) {
        if let Some(h) = unit_hyperexp(w, r1) {
            let t = h.laplace(u).unwrap();
            prop_assert!(t > 0.0 && t <= 1.0);
            prop_assert!(h.laplace(u * 1.5).unwrap() <= t);
            // Jensen: E[e^{-uS}] >= e^{-u E[S]}.
            prop_assert!(t >= (-u).exp() - 1e-15);
        }
    }

    #[test]
    fn alpha_in_unit_interval_and_capacity_bounded(kappa in 1e-3..50.0f64, lambda in 1e-3..0.999f64, shape in 1u32..5) {
        let s = DistributionSpec::erlang(shape, f64::from(shape)).unwrap();
        let a = mg1_alpha(kappa, &s).unwrap();
        prop_assert!(a > 0.0 && a < 1.0);
        let c = mg1_capacity_value(lambda, a);
        prop_assert!(c >= 0.0 && c <= lambda);
    }

    #[test]
    fn capacity_is_concave_in_lambda(alpha in 0.0..0.999f64) {
        let h = 1e-3;
        for i in 1..999 {
            let l = f64::from(i) * h;
            let d2 = mg1_capacity_value(l + h, alpha) - 2.0 * mg1_capacity_value(l, alpha)
                + mg1_capacity_value(l - h, alpha);
            prop_assert!(d2 <= 1e-9, "lambda {l}: {d2}");
        }
    }

    #[test]
    fn numeric_argmax_matches_closed_form(alpha in 0.01..0.999f64) {
        let f = |l: f64| mg1_capacity_value(l, alpha);
        let best = maximize(&ScalarProblem::new(f, 1e-6, 1.0 - 1e-6).unwrap().with_tolerance(1e-7).unwrap()).unwrap();
        let exact = mg1_optimal_lambda(alpha).unwrap().lambda;
        prop_assert!((best.argmax - exact).abs() < 1e-4, "{} vs {}", best.argmax, exact);
    }

    #[test]
    fn bsc_bounds_ordered(phis in prop::collection::vec(0.0..0.5f64, 1..50), lambda in 0.01..2.0f64) {
        let n = phis.len() as f64;
        let mean_phi = phis.iter().sum::<f64>() / n;
        let mean_h = phis.iter().map(|&p| binary_entropy(p)).sum::<f64>() / n;
        let (lo, hi) = bsc_bounds_no_timing(lambda, mean_phi, mean_h).unwrap();
        prop_assert!(lo.value <= hi.value);
        prop_assert!(hi.value <= lambda + 1e-15);
    }

    #[test]
    fn qubit_reduction(lambda in 0.01..1.0f64, p in 0.0..=1.0f64) {
        let e = qudit_capacities(lambda, 2, NoiseKind::Erasure, PMoments::Samples(&[p])).unwrap();
        prop_assert!((e.value - lambda * (1.0 - p)).abs() < 1e-12);
        let d = qudit_capacities(lambda, 2, NoiseKind::Depolarizing, PMoments::Samples(&[p])).unwrap();
        prop_assert!((d.value - lambda * (1.0 - binary_entropy(p / 2.0))).abs() < 1e-12);
    }

    #[test]
    fn table_maps_are_monotone(points in monotone_table(), a in 0.0..6.0f64, b in 0.0..6.0f64) {
        let table = PTable::new(points).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(table.eval(lo) <= table.eval(hi));
        let map = PMap::Table(table);
        let u = 0.7;
        let l = map.laplace(u).unwrap();
        // u p~(u) = E[p(T)] for T ~ Exp(u), so it lies in [0, 1].
        prop_assert!(u * l >= -1e-12 && u * l <= 1.0 + 1e-12);
    }

    #[test]
    fn queue_invariants(lambda in 0.05..0.95f64, seed in any::<u64>(), sojourn in any::<bool>()) {
        let convention = if sojourn { WaitingConvention::Sojourn } else { WaitingConvention::Delay };
        let config = QueueConfig::mm1(lambda, 500, seed).unwrap().with_warmup(10).unwrap().with_convention(convention);
        let t = simulate(&config).unwrap();
        for j in 0..t.len() {
            prop_assert!(t.departures[j] >= t.arrivals[j] + t.services[j] - 1e-9);
            prop_assert!(t.waits[j] >= 0.0);
            if j > 0 {
                prop_assert!(t.arrivals[j] >= t.arrivals[j - 1]);
                prop_assert!(t.departures[j] >= t.departures[j - 1]);
            }
        }
    }
}
