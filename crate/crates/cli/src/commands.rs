//! One function per subcommand. Each validates its inputs through the
//! library constructors, computes, and writes a single output.

use rayon::prelude::*;
use serde::Serialize;

use qcap::capacity::{
    bsc_bounds_no_timing, mg1_alpha, mg1_capacity_value, mg1_closed_form, mg1_optimal_lambda,
    mm1_expectation, mm1_general_p_capacity, mm1_optimal_lambda_general_p, qudit_capacities,
    Mm1WaitingLaw, PMoments,
};
use qcap::coding::{
    expected_erasure_fraction, phase_transition_midpoint, rate_sweep, write_sweep_csv,
    CodeExperimentReport,
};
use qcap::distributions::Law;
use qcap::entropy::binary_entropy;
use qcap::estimator::{holevo_samples, mc_capacity};
use qcap::format::g17;
use qcap::optimizer::{maximize, ScalarProblem};
use qcap::queue_sim::simulate;
use qcap::stats::batch_means;
use qcap::{DecoherenceModel, DistributionSpec, NoiseKind, PMap, QueueConfig, WaitingConvention};

use crate::args::{
    CapacityArgs, CodeTestArgs, Command, Common, OptimizeArgs, PArgs, SimulateArgs, SweepArgs,
    WaitLaw,
};
use crate::{emit, CliError};

const LAMBDA_LO: f64 = 1e-6;
const LAMBDA_HI: f64 = 1.0 - 1e-6;
const DEFAULT_WARMUP: usize = 10_000;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Capacity(a) => cmd_capacity(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::CodeTest(a) => cmd_code_test(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_mu(common: &Common) -> Result<f64, CliError> {
    let mu = common.mu;
    if mu > 0.0 && mu.is_finite() {
        Ok(mu)
    } else {
        Err(invalid(format!("mu: {mu} must be positive and finite")))
    }
}

/// A count such as `1000` or `1e6`.
pub fn parse_count(field: &str, raw: &str) -> Result<usize, CliError> {
    let bad = || invalid(format!("{field}: `{raw}` is not a nonnegative integer"));
    if let Ok(n) = raw.trim().parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = raw.trim().parse().map_err(|_| bad())?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 {
        Ok(x as usize)
    } else {
        Err(bad())
    }
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma list.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| invalid(format!("lambdas: `{s}` is not a number")))
    };
    let grid = if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(invalid(format!("lambdas: `{raw}` is not start:stop:count")));
        };
        let (start, stop, count) = (num(start)?, num(stop)?, parse_count("lambdas", count)?);
        match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        }
    } else {
        raw.split(',').map(num).collect::<Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err(invalid("lambdas: grid is empty"));
    }
    if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(invalid(format!("lambdas: {l} outside (0, 1)")));
    }
    Ok(grid)
}

fn parse_table(raw: &str) -> Result<Vec<(f64, f64)>, CliError> {
    raw.split(',')
        .map(|knot| {
            let (w, p) = knot
                .split_once(':')
                .ok_or_else(|| invalid(format!("p-table: knot `{knot}` is not w:p")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("p-table: `{s}` is not a number")))
            };
            Ok((num(w)?, num(p)?))
        })
        .collect()
}

pub fn p_map_from(p: &PArgs) -> Result<PMap, CliError> {
    Ok(match (p.kappa, p.p_const, &p.p_table) {
        (Some(0.0), _, _) => PMap::constant(0.0)?,
        (Some(k), _, _) => PMap::exp_decay(k)?,
        (_, Some(c), _) => PMap::constant(c)?,
        (_, _, Some(t)) => PMap::table(parse_table(t)?)?,
        _ => return Err(invalid("one of --kappa, --p-const, --p-table is required")),
    })
}

fn is_unit_exponential(s: &DistributionSpec) -> bool {
    matches!(s.law(), Law::Exponential { rate } if *rate == 1.0)
}

fn require_mm1(service: &DistributionSpec, what: &str) -> Result<(), CliError> {
    if is_unit_exponential(service) {
        Ok(())
    } else {
        Err(CliError::Core(qcap::Error::Unsupported(format!(
            "{what} needs exponential unit-rate service, got {service}"
        ))))
    }
}

fn json_bytes<T: Serialize>(record: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(record).map_err(qcap::Error::from)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn mm1_law(w: WaitLaw) -> Mm1WaitingLaw {
    match w {
        WaitLaw::Delay => Mm1WaitingLaw::Delay,
        WaitLaw::Sojourn => Mm1WaitingLaw::Sojourn,
        WaitLaw::MeanMatched => Mm1WaitingLaw::MeanMatched,
    }
}

#[derive(Debug, Serialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Serialize)]
pub struct CapacityRecord {
    pub command: &'static str,
    pub noise: NoiseKind,
    pub d: u32,
    pub lambda: f64,
    pub mu: f64,
    pub service: String,
    pub p_map: String,
    pub timing_known: bool,
    pub waiting_law: Option<Mm1WaitingLaw>,
    /// Bits per unit time; absent when only bounds are known.
    pub value: Option<f64>,
    pub bounds: Option<Bounds>,
    pub formula: String,
}

/// Capacity in service-time units: `(value, bounds, formula, waiting law)`.
type Computed = (Option<f64>, Option<Bounds>, String, Option<Mm1WaitingLaw>);

fn compute_capacity(a: &CapacityArgs, p_map: &PMap) -> Result<Computed, CliError> {
    let noise = NoiseKind::from(a.noise);
    let lambda = a.lambda;
    let d = a.d;
    let model = DecoherenceModel::new(p_map.clone(), noise).with_dimension(d)?;
    let bsc_bounds = |mean_phi: f64, mean_h: f64| -> Result<Bounds, CliError> {
        if d != 2 {
            return Err(CliError::Core(qcap::Error::Unsupported(format!(
                "bounds without timing knowledge are for qubits, got d = {d}"
            ))));
        }
        let (lo, hi) = bsc_bounds_no_timing(lambda, mean_phi, mean_h)?;
        Ok(Bounds {
            lower: lo.value,
            upper: hi.value,
        })
    };
    let no_timing = noise == NoiseKind::Depolarizing && !a.timing_known;

    if let Some(p) = p_map.constant_value() {
        if no_timing {
            let b = bsc_bounds(p / 2.0, binary_entropy(p / 2.0))?;
            return Ok((None, Some(b), "lambda*(1-h(p/2))".into(), None));
        }
        let c = qudit_capacities(lambda, d, noise, PMoments::Samples(&[p]))?;
        return Ok((Some(c.value), None, c.context.formula, None));
    }

    let law = mm1_law(a.convention);
    if noise == NoiseKind::Erasure && law == Mm1WaitingLaw::Delay {
        if let Some(kappa) = p_map.kappa() {
            let c = mg1_closed_form(&qcap::MG1Params::new(lambda, kappa, a.service.clone())?)?;
            let scale = f64::from(d).log2();
            return Ok((Some(c.value * scale), None, c.context.formula, Some(law)));
        }
    }
    require_mm1(&a.service, "this decoherence map")?;
    if noise == NoiseKind::Erasure && law == Mm1WaitingLaw::MeanMatched {
        let c = mm1_general_p_capacity(lambda, p_map)?;
        return Ok((
            Some(c.value * f64::from(d).log2()),
            None,
            c.context.formula,
            Some(law),
        ));
    }
    if no_timing {
        let phi = mm1_expectation(lambda, law, 0.5, |w| model.phi(w))?;
        let h = mm1_expectation(lambda, law, 1.0, |w| Ok(binary_entropy(model.phi(w)?)))?;
        return Ok((
            None,
            Some(bsc_bounds(phi, h)?),
            "lambda*(1-h(E[phi])) .. lambda*(1-E[h(phi)])".into(),
            Some(law),
        ));
    }
    let top = f64::from(d).log2();
    let chi = mm1_expectation(lambda, law, top, |w| model.holevo(w))?;
    Ok((
        Some(lambda * chi),
        None,
        "lambda*E[chi(N_W)]".into(),
        Some(law),
    ))
}

pub fn capacity_record(a: &CapacityArgs) -> Result<CapacityRecord, CliError> {
    let mu = check_mu(&a.common)?;
    let p_map = p_map_from(&a.p)?;
    let (value, bounds, formula, waiting_law) = compute_capacity(a, &p_map)?;
    Ok(CapacityRecord {
        command: "capacity",
        noise: a.noise.into(),
        d: a.d,
        lambda: a.lambda * mu,
        mu,
        service: a.service.to_string(),
        p_map: p_map.to_string(),
        timing_known: a.timing_known,
        waiting_law,
        value: value.map(|v| v * mu),
        bounds: bounds.map(|b| Bounds {
            lower: b.lower * mu,
            upper: b.upper * mu,
        }),
        formula,
    })
}

fn cmd_capacity(a: &CapacityArgs) -> Result<(), CliError> {
    let record = capacity_record(a)?;
    emit(a.common.output.as_deref(), &json_bytes(&record)?)
}

#[derive(Debug, Serialize)]
pub struct CurveSummary {
    pub kappa: f64,
    pub alpha: f64,
    pub argmax_closed_form: f64,
    pub argmax_numeric: f64,
    pub peak_capacity: f64,
    pub unimodal_on_grid: bool,
    pub grid_argmax: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub command: &'static str,
    pub service: String,
    pub mu: f64,
    pub grid_points: usize,
    pub curves: Vec<CurveSummary>,
}

/// Values rise then fall, with ties allowed.
fn unimodal(values: &[f64]) -> bool {
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    values[..=peak].windows(2).all(|w| w[1] >= w[0])
        && values[peak..].windows(2).all(|w| w[1] <= w[0])
}

struct McCell {
    value: f64,
    std_error: f64,
}

fn sweep_mc(a: &SweepArgs, grid: &[f64]) -> Result<Vec<Vec<McCell>>, CliError> {
    let symbols = parse_count("symbols", &a.symbols)?;
    let warmup = a.warmup.unwrap_or(DEFAULT_WARMUP);
    let models: Vec<DecoherenceModel> = a
        .kappas
        .iter()
        .map(|&k| Ok(DecoherenceModel::erasure(PMap::exp_decay(k)?)))
        .collect::<Result<_, CliError>>()?;
    // One trace per arrival rate, shared by every kappa.
    grid.par_iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let config =
                QueueConfig::mg1(lambda, a.service.clone(), 1, a.seed.wrapping_add(i as u64))?
                    .with_post_warmup(warmup, symbols)?;
            let trace = simulate(&config)?;
            models
                .iter()
                .map(|m| {
                    let c = mc_capacity(&trace, m, lambda, true)?;
                    let c = c.exact().expect("erasure capacity is exact");
                    Ok(McCell {
                        value: c.value,
                        std_error: c.std_error,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect()
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let mu = check_mu(&a.common)?;
    let grid = parse_grid(&a.lambdas)?;
    if a.kappas.is_empty() {
        return Err(invalid("kappas: list is empty"));
    }
    let alphas: Vec<f64> = a
        .kappas
        .iter()
        .map(|&k| mg1_alpha(k, &a.service))
        .collect::<Result<_, _>>()?;
    let mc = if a.mc {
        Some(sweep_mc(a, &grid)?)
    } else {
        None
    };

    let mut csv = String::from("lambda,kappa,capacity_analytic,capacity_mc,mc_stderr\n");
    let mut curves = Vec::new();
    for (j, (&kappa, &alpha)) in a.kappas.iter().zip(&alphas).enumerate() {
        let values: Vec<f64> = grid.iter().map(|&l| mg1_capacity_value(l, alpha)).collect();
        for (i, (&lambda, &value)) in grid.iter().zip(&values).enumerate() {
            let (mc_value, mc_se) = match &mc {
                Some(rows) => (g17(rows[i][j].value * mu), g17(rows[i][j].std_error * mu)),
                None => (String::new(), String::new()),
            };
            csv.push_str(&format!(
                "{},{},{},{mc_value},{mc_se}\n",
                g17(lambda * mu),
                g17(kappa * mu),
                g17(value * mu)
            ));
        }
        let best = maximize(
            &ScalarProblem::new(|l| mg1_capacity_value(l, alpha), LAMBDA_LO, LAMBDA_HI)?
                .with_tolerance(1e-8)?,
        )?;
        let grid_best = values
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map_or(0, |(i, _)| i);
        curves.push(CurveSummary {
            kappa: kappa * mu,
            alpha,
            argmax_closed_form: mg1_optimal_lambda(alpha)?.lambda * mu,
            argmax_numeric: best.argmax * mu,
            peak_capacity: best.value * mu,
            unimodal_on_grid: unimodal(&values),
            grid_argmax: grid[grid_best] * mu,
        });
    }
    emit(a.common.output.as_deref(), csv.as_bytes())?;
    if let Some(path) = &a.summary {
        let summary = SweepSummary {
            command: "sweep",
            service: a.service.to_string(),
            mu,
            grid_points: grid.len(),
            curves,
        };
        emit(Some(path), &json_bytes(&summary)?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct OptimizeRecord {
    pub command: &'static str,
    pub service: String,
    pub p_map: String,
    pub mu: f64,
    /// `mg1` (exponential-decay closed form) or `mean_matched`.
    pub route: &'static str,
    pub alpha: Option<f64>,
    pub lambda_star: f64,
    pub lambda_star_closed_form: Option<f64>,
    pub lambda_star_numeric: f64,
    /// Optimum of the mean-matched form, for comparison with the closed form.
    pub lambda_star_mean_matched: Option<f64>,
    pub capacity_at_optimum: f64,
    pub boundary: bool,
    pub evaluations: usize,
}

pub fn optimize_record(a: &OptimizeArgs) -> Result<OptimizeRecord, CliError> {
    let mu = check_mu(&a.common)?;
    let p_map = p_map_from(&a.p)?;
    let record = if let Some(kappa) = p_map.kappa() {
        let alpha = mg1_alpha(kappa, &a.service)?;
        let closed = mg1_optimal_lambda(alpha)?;
        let best = maximize(
            &ScalarProblem::new(|l| mg1_capacity_value(l, alpha), LAMBDA_LO, LAMBDA_HI)?
                .with_tolerance(a.tolerance)?,
        )?;
        let mean_matched = if is_unit_exponential(&a.service) {
            Some(mm1_optimal_lambda_general_p(&p_map)?.lambda * mu)
        } else {
            None
        };
        OptimizeRecord {
            command: "optimize",
            service: a.service.to_string(),
            p_map: p_map.to_string(),
            mu,
            route: "mg1",
            alpha: Some(alpha),
            lambda_star: closed.lambda * mu,
            lambda_star_closed_form: Some(closed.lambda * mu),
            lambda_star_numeric: best.argmax * mu,
            lambda_star_mean_matched: mean_matched,
            capacity_at_optimum: mg1_capacity_value(closed.lambda.min(LAMBDA_HI), alpha) * mu,
            boundary: closed.boundary || best.boundary,
            evaluations: best.evaluations,
        }
    } else {
        require_mm1(&a.service, "a tabulated decoherence map")?;
        let opt = mm1_optimal_lambda_general_p(&p_map)?;
        let failure = std::cell::RefCell::new(None);
        let f = |l: f64| match mm1_general_p_capacity(l, &p_map) {
            Ok(c) => c.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        let best =
            maximize(&ScalarProblem::new(f, LAMBDA_LO, LAMBDA_HI)?.with_tolerance(a.tolerance)?);
        if let Some(e) = failure.into_inner() {
            return Err(e.into());
        }
        let best = best?;
        OptimizeRecord {
            command: "optimize",
            service: a.service.to_string(),
            p_map: p_map.to_string(),
            mu,
            route: "mean_matched",
            alpha: None,
            lambda_star: opt.lambda * mu,
            lambda_star_closed_form: None,
            lambda_star_numeric: best.argmax * mu,
            lambda_star_mean_matched: Some(opt.lambda * mu),
            capacity_at_optimum: mm1_general_p_capacity(opt.lambda, &p_map)?.value * mu,
            boundary: opt.boundary || best.boundary,
            evaluations: best.evaluations,
        }
    };
    Ok(record)
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let record = optimize_record(a)?;
    emit(a.common.output.as_deref(), &json_bytes(&record)?)
}

#[derive(Debug, Serialize)]
pub struct CodeTestRecord {
    pub command: &'static str,
    pub n: usize,
    pub lambda: f64,
    pub kappa: f64,
    pub mu: f64,
    pub service: String,
    pub seed: u64,
    pub trials: usize,
    pub expected_erasure_fraction: f64,
    /// `lambda * mean(chi)` over the coding window.
    pub additive_upper_bound: f64,
    pub additive_upper_bound_stderr: f64,
    pub midpoint: Option<f64>,
    /// `lambda * k / n` for every multiplier with at least one success.
    pub achieved_rates: Vec<f64>,
    pub reports: Vec<CodeExperimentReport>,
}

pub fn code_test_record(a: &CodeTestArgs) -> Result<CodeTestRecord, CliError> {
    let mu = check_mu(&a.common)?;
    if a.n == 0 {
        return Err(invalid("n: block length must be positive"));
    }
    let model = DecoherenceModel::erasure(if a.kappa == 0.0 {
        PMap::constant(0.0)?
    } else {
        PMap::exp_decay(a.kappa)?
    });
    let config = QueueConfig::mg1(a.lambda, a.service.clone(), 1, a.seed)?
        .with_post_warmup(a.warmup.unwrap_or(DEFAULT_WARMUP), a.n)?;
    let trace = simulate(&config)?;
    let reports = rate_sweep(a.n, &a.multipliers, &trace, &model, a.trials, a.seed)?;
    let chi = batch_means(&holevo_samples(&trace, &model)?)?;
    Ok(CodeTestRecord {
        command: "code-test",
        n: a.n,
        lambda: a.lambda * mu,
        kappa: a.kappa * mu,
        mu,
        service: a.service.to_string(),
        seed: a.seed,
        trials: a.trials,
        expected_erasure_fraction: expected_erasure_fraction(&trace, &model, a.n)?,
        additive_upper_bound: a.lambda * chi.estimate * mu,
        additive_upper_bound_stderr: a.lambda * chi.std_error * mu,
        midpoint: phase_transition_midpoint(&reports),
        achieved_rates: reports
            .iter()
            .filter(|r| r.successes > 0)
            .map(|r| a.lambda * r.rate_per_use * mu)
            .collect(),
        reports,
    })
}

fn cmd_code_test(a: &CodeTestArgs) -> Result<(), CliError> {
    let record = code_test_record(a)?;
    let mut csv = Vec::new();
    write_sweep_csv(&record.reports, &mut csv)?;
    emit(a.common.output.as_deref(), &csv)?;
    if let Some(path) = &a.json {
        emit(Some(path), &json_bytes(&record)?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub command: &'static str,
    pub n: usize,
    pub warmup: usize,
    pub seed: u64,
    pub convention: WaitingConvention,
    pub arrival: String,
    pub service: String,
    pub mu: f64,
    pub arrival_rate: f64,
    /// Mean stationary waiting time; absent when too few symbols remain.
    pub mean_wait: Option<f64>,
    pub mean_wait_stderr: Option<f64>,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mu = check_mu(&a.common)?;
    let n = parse_count("n", &a.n)?;
    let arrival = match (&a.arrival, a.lambda) {
        (Some(law), _) => law.clone(),
        (None, Some(lambda)) => DistributionSpec::exponential(lambda)?,
        (None, None) => return Err(invalid("one of --arrival, --lambda is required")),
    };
    let mut config = QueueConfig::new(arrival, a.service.clone(), n, a.seed)?
        .with_convention(a.convention.into());
    if let Some(w) = a.warmup {
        config = config.with_warmup(w)?;
    }
    let trace = simulate(&config)?;
    let mut csv = Vec::new();
    trace.write_csv(&mut csv, 1.0 / mu)?;
    emit(a.common.output.as_deref(), &csv)?;
    if let Some(path) = &a.summary {
        let mean = trace.stationary_mean(|w| w).ok();
        let summary = SimulateSummary {
            command: "simulate",
            n,
            warmup: config.warmup,
            seed: a.seed,
            convention: config.convention,
            arrival: config.inter_arrival.to_string(),
            service: config.service.to_string(),
            mu,
            arrival_rate: config.arrival_rate() * mu,
            mean_wait: mean.map(|m| m.estimate / mu),
            mean_wait_stderr: mean.map(|m| m.std_error / mu),
        };
        emit(Some(path), &json_bytes(&summary)?)?;
    }
    Ok(())
}
