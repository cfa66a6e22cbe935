//! Waiting-time dependent noise.
//!
//! A symbol that waited `w` is hit with probability `p(w)`: erased, or (for
//! the depolarizing model) replaced by a uniformly random symbol. The classical
//! channel induced by measuring a depolarized qubit in a fixed basis is a
//! binary symmetric channel with crossover `phi(w) = p(w) / 2`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::de::Deserializer;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::entropy::{binary_entropy, depolarizing_holevo, erasure_holevo};
use crate::quadrature::{integrate, integrate_exp_weighted, QuadOptions};
use crate::queue_sim::EventTrace;
use crate::{Error, Result};

/// Piecewise-linear, nondecreasing `p` given by knots `(w_i, p_i)`.
///
/// Constant at `p_0` before the first knot and at the last value after the
/// final knot. Repeated `w` values encode jumps; at a jump the right-hand
/// value applies.
#[derive(Clone, Debug, PartialEq)]
pub struct PTable {
    points: Vec<(f64, f64)>,
}

impl PTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("points", "table needs at least one knot"));
        }
        for (i, &(w, p)) in points.iter().enumerate() {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(
                    "points",
                    format!("knot {i}: w = {w} must be finite and nonnegative"),
                ));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(
                    "points",
                    format!("knot {i}: p = {p} outside [0, 1]"),
                ));
            }
            if i > 0 {
                let (pw, pp) = points[i - 1];
                if w < pw {
                    return Err(Error::invalid(
                        "points",
                        format!("knot {i}: w = {w} decreases"),
                    ));
                }
                if p < pp {
                    return Err(Error::invalid(
                        "points",
                        format!("knot {i}: p = {p} decreases"),
                    ));
                }
            }
        }
        Ok(PTable { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, w: f64) -> f64 {
        let pts = &self.points;
        let idx = pts.partition_point(|&(x, _)| x <= w);
        if idx == 0 {
            return pts[0].1;
        }
        if idx == pts.len() {
            return pts[idx - 1].1;
        }
        let (w0, p0) = pts[idx - 1];
        let (w1, p1) = pts[idx];
        p0 + (p1 - p0) * (w - w0) / (w1 - w0)
    }

    fn laplace(&self, u: f64, opts: QuadOptions) -> Result<f64> {
        let pts = &self.points;
        let (first_w, first_p) = pts[0];
        // [0, w_0]: constant p_0.
        let mut total = first_p * (-(-u * first_w).exp_m1()) / u;
        for pair in pts.windows(2) {
            let ((w0, p0), (w1, p1)) = (pair[0], pair[1]);
            if w1 > w0 && (p0 > 0.0 || p1 > 0.0) {
                let slope = (p1 - p0) / (w1 - w0);
                total +=
                    integrate(|x| (p0 + slope * (x - w0)) * (-u * x).exp(), w0, w1, opts)?.value;
            }
        }
        let (last_w, last_p) = pts[pts.len() - 1];
        total += last_p * (-u * last_w).exp() / u;
        Ok(total)
    }
}

/// A user-supplied `p`. Values outside `[0, 1]` are rejected at evaluation.
#[derive(Clone)]
pub struct CustomP {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomP {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CustomP {
            label: label.into(),
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for CustomP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomP({})", self.label)
    }
}

/// The erasure/error probability as a function of waiting time.
#[derive(Clone, Debug)]
pub enum PMap {
    /// `p(w) = 1 - exp(-kappa w)`; `1/kappa` is the coherence time.
    ExpDecay {
        kappa: f64,
    },
    Table(PTable),
    Custom(CustomP),
}

impl PMap {
    pub fn exp_decay(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(
                "kappa",
                format!("{kappa} must be positive and finite"),
            ));
        }
        Ok(PMap::ExpDecay { kappa })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(PMap::Table(PTable::new(points)?))
    }

    /// `p(w) = p` for every `w`.
    pub fn constant(p: f64) -> Result<Self> {
        Self::table(vec![(0.0, p)])
    }

    pub fn custom(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        PMap::Custom(CustomP::new(label, f))
    }

    /// `Some(p)` when the map does not depend on `w`.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            PMap::Table(t) => {
                let first = t.points[0].1;
                t.points.iter().all(|&(_, p)| p == first).then_some(first)
            }
            _ => None,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            PMap::ExpDecay { kappa } => Some(*kappa),
            _ => None,
        }
    }

    /// `p(w)` for `w >= 0`.
    pub fn eval(&self, w: f64) -> Result<f64> {
        if !(w >= 0.0) {
            return Err(Error::invalid("w", format!("waiting time {w} is negative")));
        }
        match self {
            PMap::ExpDecay { kappa } => Ok(-(-kappa * w).exp_m1()),
            PMap::Table(t) => Ok(t.eval(w)),
            PMap::Custom(c) => {
                let p = (c.f)(w);
                if (0.0..=1.0).contains(&p) {
                    Ok(p)
                } else {
                    Err(Error::invalid(
                        "p_map",
                        format!("{} returned {p} at w = {w}", c.label),
                    ))
                }
            }
        }
    }

    /// Laplace transform of the function itself,
    /// `p~(u) = int_0^inf exp(-u x) p(x) dx`, for `u > 0`.
    pub fn laplace(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::invalid(
                "u",
                format!("transform argument {u} must be positive"),
            ));
        }
        let opts = QuadOptions::default();
        match self {
            PMap::ExpDecay { kappa } => Ok(kappa / (u * (u + kappa))),
            PMap::Table(t) => t.laplace(u, opts),
            PMap::Custom(c) => {
                let label = c.label.clone();
                let f = c.f.clone();
                let bad = std::cell::Cell::new(None);
                let value = integrate_exp_weighted(
                    |x| {
                        let p = f(x);
                        if !(0.0..=1.0).contains(&p) {
                            bad.set(Some((x, p)));
                        }
                        p.clamp(0.0, 1.0)
                    },
                    0.0,
                    u,
                    1.0,
                    opts,
                )?
                .value;
                if let Some((x, p)) = bad.get() {
                    return Err(Error::invalid(
                        "p_map",
                        format!("{label} returned {p} at w = {x}"),
                    ));
                }
                Ok(value)
            }
        }
    }
}

impl fmt::Display for PMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PMap::ExpDecay { kappa } => write!(f, "exp(kappa={kappa})"),
            PMap::Table(t) => write!(f, "table({} knots)", t.points.len()),
            PMap::Custom(c) => write!(f, "custom({})", c.label),
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PMapJson {
    Exp { kappa: f64 },
    Table { points: Vec<(f64, f64)> },
}

impl<'de> Deserialize<'de> for PMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PMapJson::deserialize(d)?;
        let map = match raw {
            PMapJson::Exp { kappa } => PMap::exp_decay(kappa),
            PMapJson::Table { points } => PMap::table(points),
        };
        map.map_err(serde::de::Error::custom)
    }
}

impl Serialize for PMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PMap::ExpDecay { kappa } => {
                let mut st = s.serialize_struct("PMap", 2)?;
                st.serialize_field("kind", "exp")?;
                st.serialize_field("kappa", kappa)?;
                st.end()
            }
            PMap::Table(t) => {
                let mut st = s.serialize_struct("PMap", 2)?;
                st.serialize_field("kind", "table")?;
                st.serialize_field("points", &t.points)?;
                st.end()
            }
            PMap::Custom(c) => {
                let mut st = s.serialize_struct("PMap", 2)?;
                st.serialize_field("kind", "custom")?;
                st.serialize_field("label", &c.label)?;
                st.end()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Erasure,
    Depolarizing,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "erasure" => Ok(NoiseKind::Erasure),
            "depolarizing" | "depolarising" => Ok(NoiseKind::Depolarizing),
            other => Err(Error::invalid(
                "noise",
                format!("`{other}` is not erasure or depolarizing"),
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoherenceModel {
    pub p_map: PMap,
    pub noise: NoiseKind,
    pub dimension: u32,
}

impl DecoherenceModel {
    /// A qubit (`d = 2`) model.
    pub fn new(p_map: PMap, noise: NoiseKind) -> Self {
        DecoherenceModel {
            p_map,
            noise,
            dimension: 2,
        }
    }

    pub fn erasure(p_map: PMap) -> Self {
        Self::new(p_map, NoiseKind::Erasure)
    }

    pub fn depolarizing(p_map: PMap) -> Self {
        Self::new(p_map, NoiseKind::Depolarizing)
    }

    pub fn with_dimension(mut self, d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(
                "d",
                format!("dimension {d} must be at least 2"),
            ));
        }
        self.dimension = d;
        Ok(self)
    }

    pub fn p_of(&self, w: f64) -> Result<f64> {
        self.p_map.eval(w)
    }

    /// Crossover probability of the induced binary symmetric channel.
    pub fn phi(&self, w: f64) -> Result<f64> {
        Ok(0.5 * self.p_of(w)?)
    }

    /// Holevo information of the single-use channel after waiting `w`.
    pub fn holevo(&self, w: f64) -> Result<f64> {
        let p = self.p_of(w)?;
        Ok(match self.noise {
            NoiseKind::Erasure => erasure_holevo(p, self.dimension),
            NoiseKind::Depolarizing if self.dimension == 2 => 1.0 - binary_entropy(0.5 * p),
            NoiseKind::Depolarizing => depolarizing_holevo(p, self.dimension),
        })
    }

    /// Passes `inputs` through the queue-channel, symbol `j` having waited
    /// `trace.waits[j]`. Every entry of the trace is used, warmup included.
    pub fn apply_channel<R: Rng + ?Sized>(
        &self,
        inputs: &[u32],
        trace: &EventTrace,
        rng: &mut R,
    ) -> Result<SymbolStream> {
        self.apply_to_waits(inputs, &trace.waits, rng)
    }

    /// Given the waiting times, symbols are hit independently, each with its
    /// own probability `p(W_j)`. One uniform draw is consumed per symbol.
    pub fn apply_to_waits<R: Rng + ?Sized>(
        &self,
        inputs: &[u32],
        waits: &[f64],
        rng: &mut R,
    ) -> Result<SymbolStream> {
        if inputs.len() != waits.len() {
            return Err(Error::LengthMismatch {
                expected: waits.len(),
                got: inputs.len(),
            });
        }
        if let Some(bad) = inputs.iter().find(|&&x| x >= self.dimension) {
            return Err(Error::invalid(
                "inputs",
                format!("symbol {bad} outside alphabet of size {}", self.dimension),
            ));
        }
        if self.noise == NoiseKind::Depolarizing && self.dimension != 2 {
            return Err(Error::Unsupported(format!(
                "depolarizing channel simulation needs d = 2, got d = {}",
                self.dimension
            )));
        }
        let mut outputs = Vec::with_capacity(inputs.len());
        for (&x, &w) in inputs.iter().zip(waits) {
            let p = self.p_of(w)?;
            let u: f64 = rng.random();
            let y = match self.noise {
                NoiseKind::Erasure => (u >= p).then_some(x),
                NoiseKind::Depolarizing => Some(if u < 0.5 * p { x ^ 1 } else { x }),
            };
            outputs.push(y);
        }
        Ok(SymbolStream {
            inputs: inputs.to_vec(),
            outputs,
        })
    }
}

/// Channel inputs and outputs; `None` marks an erased output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolStream {
    pub inputs: Vec<u32>,
    pub outputs: Vec<Option<u32>>,
}

impl SymbolStream {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn erased(&self, j: usize) -> bool {
        self.outputs[j].is_none()
    }

    pub fn flipped(&self, j: usize) -> bool {
        matches!(self.outputs[j], Some(y) if y != self.inputs[j])
    }

    pub fn erasure_count(&self) -> usize {
        self.outputs.iter().filter(|y| y.is_none()).count()
    }

    pub fn flip_count(&self) -> usize {
        (0..self.len()).filter(|&j| self.flipped(j)).count()
    }
}
