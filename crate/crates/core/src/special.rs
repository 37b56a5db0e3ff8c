//! Special functions in log space.

use statrs::function::erf::erfc;

pub(crate) const LN_2: f64 = std::f64::consts::LN_2;
/// ln(sqrt(2 pi))
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `a * ln(b)` with the convention `0 * ln(0) = 0`.
#[inline]
pub(crate) fn xlny(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

/// ln P(G >= z) for a standard Gaussian G.
pub(crate) fn ln_normal_tail(z: f64) -> f64 {
    if z < 25.0 {
        (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        // Mills ratio asymptotic series; relative error below 1e-12 for z >= 25
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
        -0.5 * z2 - z.ln() - LN_SQRT_2PI + series.ln()
    }
}

/// ln of `sum_{j < k} z^j / j!` for integer k >= 1 and z >= 0.
pub(crate) fn ln_poisson_partial_sum(k: u32, z: f64) -> f64 {
    let terms: Vec<f64> = (0..k)
        .map(|j| xlny(j as f64, z) - statrs::function::gamma::ln_gamma(j as f64 + 1.0))
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}
