//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error estimate meets `max(abs_tol, rel_tol * |I|)` or the subdivision
//! budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (the last is the centre).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(
            "interval",
            format!("[{a}, {b}] must be finite"),
        ));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    if a > b {
        let r = integrate(f, b, a, opts)?;
        return Ok(Integral {
            value: -r.value,
            error: r.error,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut pieces = 1;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(Integral { value, error });
        }
        if pieces >= opts.max_subdivisions {
            return Err(Error::Quadrature {
                achieved: error,
                requested: target,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature {
                achieved: error,
                requested: target,
            });
        }
        let left = kronrod15(&f, worst.a, mid);
        let right = kronrod15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        pieces += 1;
        if pieces % 64 == 0 {
            // Re-sum to shed accumulated cancellation error.
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrates `f` over `[a, inf)` against the weight `e^{-rate x}`, i.e.
/// `int_a^inf f(x) e^{-rate x} dx`, for `f` bounded by `bound`.
///
/// The range is truncated where the weight's remaining mass
/// `bound * e^{-rate x} / rate` drops below `abs_tol`; the truncated tail is
/// added analytically assuming `f` is constant at its value on the cut.
pub fn integrate_exp_weighted<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    rate: f64,
    bound: f64,
    opts: QuadOptions,
) -> Result<Integral> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::invalid(
            "rate",
            format!("{rate} must be positive and finite"),
        ));
    }
    let start_mass = (-rate * a).exp() / rate;
    let tail_tol = (opts.abs_tol * 1e-2).max(f64::MIN_POSITIVE);
    let span = ((bound.max(1e-300) * start_mass) / tail_tol).ln().max(0.0) / rate;
    let cut = a + span;
    let body = if span > 0.0 {
        // Split the body so the weight varies by at most e^{-8} per piece.
        let chunk = 8.0 / rate;
        let mut acc = Integral {
            value: 0.0,
            error: 0.0,
        };
        let mut lo = a;
        while lo < cut {
            let hi = (lo + chunk).min(cut);
            let piece = integrate(|x| f(x) * (-rate * x).exp(), lo, hi, opts)?;
            acc.value += piece.value;
            acc.error += piece.error;
            lo = hi;
        }
        acc
    } else {
        Integral {
            value: 0.0,
            error: 0.0,
        }
    };
    let tail = f(cut) * (-rate * cut).exp() / rate;
    Ok(Integral {
        value: body.value + tail,
        error: body.error + tail.abs() * 1e-3,
    })
}
