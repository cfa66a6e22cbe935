//! Random linear codes over GF(2) sent through the induced erasure
//! queue-channel, and the plug-in information estimate for the induced
//! binary symmetric queue-channel.

use std::io::Write;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::bitmatrix::{dot, BitMatrix, XorBasis};
use crate::decoherence::{DecoherenceModel, NoiseKind};
use crate::estimator::bsc_conditional_information;
use crate::format::g17;
use crate::queue_sim::EventTrace;
use crate::rng::{self, streams, Rng};
use crate::stats::MeanEstimate;
use crate::{Error, Result};

/// Binary linear code with a uniformly random `k x n` generator.
#[derive(Clone, Debug)]
pub struct LinearCode {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Column `j` of the generator, as a packed `k`-bit row.
    columns: BitMatrix,
}

impl LinearCode {
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "block length must be positive"));
        }
        if k > n {
            return Err(Error::invalid("k", format!("{k} exceeds block length {n}")));
        }
        let columns = BitMatrix::random(n, k, &mut rng::stream(seed, streams::CODEBOOK));
        Ok(LinearCode {
            n,
            k,
            seed,
            columns,
        })
    }

    /// The `k x n` generator matrix.
    pub fn generator(&self) -> BitMatrix {
        self.columns.transpose()
    }

    pub fn column(&self, j: usize) -> &[u64] {
        self.columns.row(j)
    }

    /// Codeword bits `m G` for a packed `k`-bit message.
    pub fn encode(&self, message: &[u64]) -> Vec<u32> {
        (0..self.n)
            .map(|j| u32::from(dot(self.column(j), message)))
            .collect()
    }

    pub fn random_message<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let mut m: Vec<u64> = (0..self.k.div_ceil(64)).map(|_| rng.random()).collect();
        if !self.k.is_multiple_of(64) {
            if let Some(last) = m.last_mut() {
                *last &= (1u64 << (self.k % 64)) - 1;
            }
        }
        m
    }
}

/// Recovers the message from the unerased coordinates, or `None` when they
/// do not pin it down uniquely.
pub fn decode_erasures(code: &LinearCode, received: &[Option<u32>]) -> Result<Option<Vec<u64>>> {
    if received.len() != code.n {
        return Err(Error::LengthMismatch {
            expected: code.n,
            got: received.len(),
        });
    }
    let k = code.k;
    if k == 0 {
        return Ok(Some(Vec::new()));
    }
    let mut remaining = received.iter().filter(|y| y.is_some()).count();
    let mut basis = XorBasis::new(k + 1, k);
    let width = (k + 1).div_ceil(64);
    let mut v = vec![0u64; width];
    for (j, y) in received.iter().enumerate() {
        let Some(y) = *y else { continue };
        if basis.rank() + remaining < k {
            return Ok(None);
        }
        remaining -= 1;
        let col = code.column(j);
        v[..col.len()].copy_from_slice(col);
        v[col.len()..].fill(0);
        if y == 1 {
            v[k / 64] |= 1 << (k % 64);
        }
        basis.insert(&mut v);
        if basis.is_full() {
            break;
        }
    }
    Ok(basis.solve().map(|mut x| {
        x.truncate(k.div_ceil(64));
        x
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub erasure_fraction: f64,
}

fn check_erasure_model(model: &DecoherenceModel) -> Result<()> {
    if model.noise != NoiseKind::Erasure || model.dimension != 2 {
        return Err(Error::Unsupported(format!(
            "coding experiments need binary erasure, got {:?} with d = {}",
            model.noise, model.dimension
        )));
    }
    Ok(())
}

fn coding_window(trace: &EventTrace, n: usize) -> Result<&[f64]> {
    let waits = trace.stationary_waits();
    if waits.len() < n {
        return Err(Error::InsufficientSamples {
            needed: n,
            got: waits.len(),
        });
    }
    Ok(&waits[..n])
}

/// One transmission of a uniform random message over the first `n`
/// post-warmup symbols of `trace`.
///
/// The rng is advanced by one draw before the channel noise, so the noise
/// realisation does not depend on `k`.
pub fn erasure_code_trial(
    code: &LinearCode,
    trace: &EventTrace,
    model: &DecoherenceModel,
    rng: &mut Rng,
) -> Result<TrialOutcome> {
    check_erasure_model(model)?;
    let waits = coding_window(trace, code.n)?;
    let message_seed: u64 = rng.random();
    let message = code.random_message(&mut rng::stream(message_seed, streams::MESSAGES));
    let sent = code.encode(&message);
    let received = model.apply_to_waits(&sent, waits, rng)?;
    let erasure_fraction = received.erasure_count() as f64 / code.n as f64;
    let success = decode_erasures(code, &received.outputs)? == Some(message);
    Ok(TrialOutcome {
        success,
        erasure_fraction,
    })
}

/// Mean erasure probability `(1/n) sum p(W_j)` over the coding window.
pub fn expected_erasure_fraction(
    trace: &EventTrace,
    model: &DecoherenceModel,
    n: usize,
) -> Result<f64> {
    let waits = coding_window(trace, n)?;
    let total = waits.iter().map(|&w| model.p_of(w)).sum::<Result<f64>>()?;
    Ok(total / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodeExperimentReport {
    pub multiplier: f64,
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub successes: usize,
    pub erasure_fractions: Vec<f64>,
    pub rate_per_use: f64,
    pub mean_unerased: f64,
}

impl CodeExperimentReport {
    pub fn success_frequency(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// For each multiplier `m`, runs `trials` transmissions of a fresh random
/// code with `k = round(m n (1 - e))`, where `e` is the expected erasure
/// fraction over the window. Trial `i` draws from stream `TRIALS + i`
/// for every multiplier.
pub fn rate_sweep(
    n: usize,
    multipliers: &[f64],
    trace: &EventTrace,
    model: &DecoherenceModel,
    trials: usize,
    seed: u64,
) -> Result<Vec<CodeExperimentReport>> {
    check_erasure_model(model)?;
    let mean_unerased = 1.0 - expected_erasure_fraction(trace, model, n)?;
    multipliers
        .iter()
        .enumerate()
        .map(|(idx, &m)| {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(Error::invalid(
                    "multiplier",
                    format!("{m} must be nonnegative"),
                ));
            }
            let k = ((m * n as f64 * mean_unerased).round() as usize).min(n);
            let code = LinearCode::random(n, k, seed.wrapping_add(idx as u64))?;
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut g = rng::stream(seed, streams::TRIALS + i as u64);
                    erasure_code_trial(&code, trace, model, &mut g)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CodeExperimentReport {
                multiplier: m,
                n,
                k,
                trials,
                successes: outcomes.iter().filter(|o| o.success).count(),
                erasure_fractions: outcomes.iter().map(|o| o.erasure_fraction).collect(),
                rate_per_use: k as f64 / n as f64,
                mean_unerased,
            })
        })
        .collect()
}

/// Multiplier at which the success frequency first falls through one half,
/// by linear interpolation between neighbouring multipliers.
pub fn phase_transition_midpoint(reports: &[CodeExperimentReport]) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r.multiplier, r.success_frequency()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.windows(2).find_map(|w| {
        let ((m0, f0), (m1, f1)) = (w[0], w[1]);
        (f0 >= 0.5 && f1 < 0.5).then(|| m0 + (f0 - 0.5) / (f0 - f1) * (m1 - m0))
    })
}

/// Writes `multiplier,k,trials,successes`.
pub fn write_sweep_csv<W: Write>(reports: &[CodeExperimentReport], mut out: W) -> Result<()> {
    writeln!(out, "multiplier,k,trials,successes")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{}",
            g17(r.multiplier),
            r.k,
            r.trials,
            r.successes
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BscInformation {
    pub per_use: MeanEstimate,
    pub bits_per_sec: MeanEstimate,
}

/// Plug-in `1 - E^[h(phi(W))]` per use and `lambda` times that per unit time.
pub fn bsc_information_estimate(
    trace: &EventTrace,
    model: &DecoherenceModel,
    lambda: f64,
) -> Result<BscInformation> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(
            "lambda",
            format!("{lambda} must be positive and finite"),
        ));
    }
    let per_use = bsc_conditional_information(trace, model)?;
    Ok(BscInformation {
        per_use,
        bits_per_sec: per_use.affine(0.0, lambda),
    })
}
