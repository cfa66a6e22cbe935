//! Binary entropy and single-use Holevo quantities of the erasure and
//! depolarizing channels, all in bits.

/// `x log2 x` with the continuous extension `0 log2 0 = 0`.
fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy `h(x) = -x log2 x - (1-x) log2 (1-x)` on `[0, 1]`.
pub fn binary_entropy(x: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&x), "binary entropy of {x}");
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let h = -xlog2x(x) - xlog2x(1.0 - x);
    h.clamp(0.0, 1.0)
}

/// Holevo information of a d-dimensional erasure channel with erasure
/// probability `p`: `log2(d) (1 - p)`.
pub fn erasure_holevo(p: f64, d: u32) -> f64 {
    f64::from(d).log2() * (1.0 - p)
}

/// Holevo information of a d-dimensional depolarizing channel
/// `rho -> (1 - p) rho + p I/d`:
/// `log2 d + (1 - p + p/d) log2(1 - p + p/d) + (d - 1)(p/d) log2(p/d)`.
///
/// For `d = 2` this equals `1 - h(p/2)`.
pub fn depolarizing_holevo(p: f64, d: u32) -> f64 {
    let d = f64::from(d);
    let stay = 1.0 - p + p / d;
    let leak = p / d;
    let chi = d.log2() + xlog2x(stay) + (d - 1.0) * xlog2x(leak);
    chi.max(0.0)
}
