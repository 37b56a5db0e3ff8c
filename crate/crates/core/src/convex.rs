//! Convex analysis of a free energy: inversion of `lambda'`, the Legendre
//! transform `J(x) = sup_eta { eta x - lambda(eta) }`, its curvature, its
//! asymptotic slope, and the rate function `I(x) = xi |x|^alpha`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_energy::FreeEnergyModel;
use crate::scaling::ScalingExponent;

/// Iteration budget shared by bracketing and refinement.
const MAX_ITERATIONS: usize = 200;
const REL_TOL: f64 = 1e-12;

/// Solves `lambda'(eta) = m` for `eta` in `(-xi, xi)`.
///
/// The bracket `[0, xi (1 - 2^-k)]` is expanded until it contains the root,
/// then refined by Illinois regula falsi with a bisection safeguard.
pub fn inverse_lambda_prime(model: &FreeEnergyModel, m: f64) -> Result<f64> {
    if m.is_nan() {
        return Err(Error::InvalidParameter("target slope is NaN".into()));
    }
    if m == 0.0 {
        return Ok(0.0);
    }
    if m < 0.0 {
        return inverse_lambda_prime(model, -m).map(|eta| -eta);
    }
    let xi = model.xi();
    if !(xi > 0.0) {
        return Err(Error::Domain { eta: 0.0, xi });
    }
    let f = |eta: f64| model.lambda_prime(eta).map(|d| d - m);

    let mut iterations = 0;
    let (mut lo, mut f_lo) = (0.0, -m);
    let (mut hi, mut f_hi);
    let mut k = 1;
    loop {
        hi = if xi.is_finite() {
            xi * (1.0 - 0.5f64.powi(k))
        } else {
            2.0f64.powi(k - 1)
        };
        if hi >= xi || iterations >= MAX_ITERATIONS {
            return Err(Error::ConvergenceFailure(format!(
                "no bracket for lambda' = {m} below xi = {xi} (reached lambda' = {})",
                f_lo + m
            )));
        }
        f_hi = f(hi)?;
        iterations += 1;
        if f_hi >= 0.0 {
            break;
        }
        (lo, f_lo) = (hi, f_hi);
        k += 1;
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }

    // side retained on the previous step: -1 low, +1 high
    let mut retained = 0;
    while iterations < MAX_ITERATIONS {
        let width = hi - lo;
        let mut eta = hi - f_hi * width / (f_hi - f_lo);
        if !(eta > lo && eta < hi) {
            eta = 0.5 * (lo + hi);
        }
        let value = f(eta)?;
        iterations += 1;
        if value.abs() <= REL_TOL * m || width <= 4.0 * f64::EPSILON * hi {
            return Ok(eta);
        }
        if value < 0.0 {
            (lo, f_lo) = (eta, value);
            if retained == 1 {
                f_hi *= 0.5;
            }
            retained = 1;
        } else {
            (hi, f_hi) = (eta, value);
            if retained == -1 {
                f_lo *= 0.5;
            }
            retained = -1;
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "lambda' = {m} not resolved in {MAX_ITERATIONS} iterations (bracket [{lo}, {hi}])"
    )))
}

/// Value and maximizer of the Legendre transform at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendrePoint {
    pub x: f64,
    pub value: f64,
    pub maximizer: f64,
}

pub fn legendre(model: &FreeEnergyModel, x: f64) -> Result<LegendrePoint> {
    let maximizer = inverse_lambda_prime(model, x)?;
    let value = if maximizer == 0.0 {
        0.0
    } else {
        (maximizer * x - model.lambda(maximizer)?).max(0.0)
    };
    Ok(LegendrePoint { x, value, maximizer })
}

/// `J''(b) = 1 / lambda''((lambda')^{-1}(b))`.
pub fn legendre_second(model: &FreeEnergyModel, b: f64) -> Result<f64> {
    let eta = inverse_lambda_prime(model, b)?;
    Ok(model.lambda_second(eta)?.recip())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeReport {
    /// `J(m)/m` at the largest grid point.
    pub slope: f64,
    /// `(m, J(m)/m)` along the grid.
    pub sequence: Vec<(f64, f64)>,
    pub non_decreasing: bool,
}

/// Tracks `J(m)/m` along an increasing grid; its limit is `xi`.
pub fn asymptotic_slope(model: &FreeEnergyModel, m_grid: &[f64]) -> Result<SlopeReport> {
    if m_grid.len() < 2 || m_grid.windows(2).any(|w| !(w[1] > w[0])) || !(m_grid[0] > 0.0) {
        return Err(Error::InvalidParameter("slope grid must be positive and strictly increasing".into()));
    }
    let (first, last) = (m_grid[0], m_grid[m_grid.len() - 1]);
    if last / first < 100.0 {
        return Err(Error::InvalidParameter(format!(
            "slope grid must span two decades, got [{first}, {last}]"
        )));
    }
    let sequence = m_grid
        .iter()
        .map(|&m| legendre(model, m).map(|p| (m, p.value / m)))
        .collect::<Result<Vec<_>>>()?;
    let non_decreasing = sequence.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12 * w[0].1.abs());
    Ok(SlopeReport {
        slope: sequence[sequence.len() - 1].1,
        sequence,
        non_decreasing,
    })
}

/// `I(x) = xi |x|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFunction {
    pub xi: f64,
    pub alpha: ScalingExponent,
}

impl RateFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.xi * x.abs().powf(self.alpha.value())
    }
}

pub fn rate_function(xi: f64, alpha: ScalingExponent) -> Result<RateFunction> {
    if xi > 0.0 && xi.is_finite() {
        Ok(RateFunction { xi, alpha })
    } else {
        Err(Error::InvalidParameter(format!("rate prefactor must be finite and positive, got {xi}")))
    }
}
