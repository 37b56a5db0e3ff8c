//! Subexponential Esscher tilt of a single variable.
//!
//! The tilted law is `e^{eta phi_a(y) - lambda(eta)} mu(dy)`. Powers of
//! two-sided exponential and Gaussian variables at their natural scale have
//! exact samplers; every other law goes through a numeric inverse CDF built
//! once per [`TiltedLaw`].

use std::sync::Arc;

use crate::convex::inverse_lambda_prime;
use crate::error::{Error, Result};
use crate::free_energy::FreeEnergyModel;
use crate::quadrature::{integrate, integrate_half_line, QuadratureConfig};
use crate::rng::RandomStream;
use crate::scaling::{phi, power_transform, signed_power, DistributionModel, ScalingExponent};

/// `eta_n = (lambda')^{-1}((n x)^alpha)`: the tilt that makes `n x` the
/// typical value of the tilted variable on the `phi_alpha` scale.
pub fn optimal_tilt(model: &FreeEnergyModel, n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("x must be positive, got {x}")));
    }
    inverse_lambda_prime(model, (n as f64 * x).powf(model.alpha().value()))
}

#[derive(Debug, Clone)]
enum Sampler {
    /// `eta = 0`: the base law itself.
    Base,
    /// Base `phi_p(Y)`, `Y` two-sided exponential, `alpha = 1/p`.
    ExpExact { p: f64 },
    /// Base `phi_p(G)`, `G` standard Gaussian, `alpha = 2/p`.
    GaussExact { p: f64 },
    Grid(Arc<InverseCdfGrid>),
}

#[derive(Debug, Clone)]
pub struct TiltedLaw {
    base: DistributionModel,
    alpha: ScalingExponent,
    eta: f64,
    log_normalizer: f64,
    sampler: Sampler,
}

fn exact_kind(base: &DistributionModel, alpha: ScalingExponent) -> Option<Sampler> {
    if let DistributionModel::PowerOf { base: inner, p } = base {
        let scale = alpha.value() * p;
        match **inner {
            DistributionModel::TwoSidedExponential if (scale - 1.0).abs() < 1e-12 => {
                return Some(Sampler::ExpExact { p: *p })
            }
            DistributionModel::StandardGaussian if (scale - 2.0).abs() < 1e-12 => {
                return Some(Sampler::GaussExact { p: *p })
            }
            _ => {}
        }
    }
    None
}

impl TiltedLaw {
    /// Tilt of the law paired with `model`, normalized by `model.lambda(eta)`.
    pub fn new(model: &FreeEnergyModel, eta: f64) -> Result<Self> {
        Self::build(model, eta, false)
    }

    /// Same law, always sampled through the numeric inverse CDF.
    pub fn with_generic_sampler(model: &FreeEnergyModel, eta: f64) -> Result<Self> {
        Self::build(model, eta, true)
    }

    fn build(model: &FreeEnergyModel, eta: f64, force_grid: bool) -> Result<Self> {
        let base = model
            .distribution()
            .ok_or_else(|| Error::InvalidParameter("free energy has no underlying law to tilt".into()))?;
        let alpha = model.alpha();
        let log_normalizer = model.lambda(eta)?;
        let sampler = if eta == 0.0 && !force_grid {
            Sampler::Base
        } else {
            match exact_kind(&base, alpha) {
                Some(s) if !force_grid => s,
                _ => Sampler::Grid(Arc::new(InverseCdfGrid::build(&base, alpha, eta, log_normalizer)?)),
            }
        };
        Ok(Self {
            base,
            alpha,
            eta,
            log_normalizer,
            sampler,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha(&self) -> ScalingExponent {
        self.alpha
    }

    pub fn base(&self) -> &DistributionModel {
        &self.base
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.sampler, Sampler::Grid(_))
    }

    /// `log dmu/dmu_tilde (y) = -eta phi_a(y) + lambda(eta)`.
    #[inline]
    pub fn log_weight(&self, y: f64) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        -self.eta * phi(self.alpha, y) + self.log_normalizer
    }

    pub fn ln_density(&self, y: f64) -> f64 {
        self.eta * phi(self.alpha, y) - self.log_normalizer + self.base.ln_density(y)
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Result<f64> {
        match &self.sampler {
            Sampler::Base => Ok(self.base.draw(rng)),
            Sampler::ExpExact { p } => {
                // density of phi_alpha(X) proportional to e^{eta y - |y|}
                let eta = self.eta;
                let positive = rng.open01() < 0.5 * (1.0 + eta);
                let e = -rng.open01().ln();
                let y = if positive { e / (1.0 - eta) } else { -e / (1.0 + eta) };
                Ok(signed_power(y, *p))
            }
            Sampler::GaussExact { p } => {
                let eta = self.eta;
                let right = (1.0 - 2.0 * eta).powf(-0.5);
                let left = (1.0 + 2.0 * eta).powf(-0.5);
                let positive = rng.open01() * (left + right) < right;
                let g: f64 = rand_distr::Distribution::<f64>::sample(&rand_distr::StandardNormal, rng).abs();
                let g = if positive { g * right } else { -g * left };
                Ok(signed_power(g, *p))
            }
            Sampler::Grid(grid) => {
                let u = grid.invert(rng.open01())?;
                Ok(signed_power(u, 1.0 / self.alpha.value()))
            }
        }
    }
}

/// One draw from the tilted law.
pub fn sample_tilted(law: &TiltedLaw, rng: &mut RandomStream) -> Result<f64> {
    law.sample(rng)
}

pub fn log_weight(law: &TiltedLaw, y: f64) -> f64 {
    law.log_weight(y)
}

pub const GRID_KNOTS: usize = 4096;
/// Tilted mass left outside the grid, split between the two tails.
const OUTSIDE_MASS: f64 = 1e-12;

/// Inverse CDF of the tilted law of `U = phi_a(X)` on a knot grid, with
/// monotone cubic Hermite interpolation of `u(F)` and exponential tails.
#[derive(Debug, Clone)]
pub struct InverseCdfGrid {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    /// `du/dF` at each knot, limited for monotonicity.
    slopes: Vec<f64>,
    left_rate: f64,
    right_rate: f64,
}

impl InverseCdfGrid {
    pub fn build(base: &DistributionModel, alpha: ScalingExponent, eta: f64, log_normalizer: f64) -> Result<Self> {
        let scaled = power_transform(base.clone(), alpha.value())?;
        let density = |u: f64| (eta * u + scaled.ln_density(u) - log_normalizer).exp();
        let cfg = QuadratureConfig::with_tolerances(1e-15, 1e-12);

        let tail_beyond = |edge: f64, sign: f64| -> Result<f64> {
            Ok(integrate_half_line(|t| density(sign * (edge + t)), &cfg)?.value)
        };
        let edge = |sign: f64| -> Result<(f64, f64)> {
            let target = 0.5 * OUTSIDE_MASS;
            let (mut lo, mut hi) = (0.0, 1.0);
            let mut mass_hi = tail_beyond(hi, sign)?;
            while mass_hi > target {
                lo = hi;
                hi *= 2.0;
                if hi > cfg.truncation_cap {
                    return Err(Error::GenericSamplerFailure(format!("tilted tail does not decay (eta = {eta})")));
                }
                mass_hi = tail_beyond(hi, sign)?;
            }
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let m = tail_beyond(mid, sign)?;
                if m > target {
                    lo = mid;
                } else {
                    (hi, mass_hi) = (mid, m);
                }
            }
            Ok((hi, mass_hi))
        };
        let (right_edge, right_mass) = edge(1.0)?;
        let (left_edge, left_mass) = edge(-1.0)?;

        // knots on both sides of the (possibly singular) origin
        let span = left_edge + right_edge;
        let n_left = (((GRID_KNOTS - 1) as f64 * left_edge / span).round() as usize).clamp(16, GRID_KNOTS - 17);
        let n_right = GRID_KNOTS - 1 - n_left;
        let mut knots = Vec::with_capacity(GRID_KNOTS);
        knots.extend((0..n_left).map(|k| -left_edge * (1.0 - k as f64 / n_left as f64)));
        knots.push(0.0);
        knots.extend((1..=n_right).map(|k| right_edge * k as f64 / n_right as f64));

        let mut cumulative = Vec::with_capacity(knots.len());
        let mut acc = left_mass;
        cumulative.push(acc);
        for w in knots.windows(2) {
            acc += integrate(density, w[0], w[1], &cfg)?.value;
            cumulative.push(acc);
        }
        let total = acc + right_mass;
        if !(total.is_finite() && (total - 1.0).abs() < 1e-6) {
            return Err(Error::GenericSamplerFailure(format!(
                "tilted mass {total} differs from 1; normalizer does not match the law"
            )));
        }
        let cdf: Vec<f64> = cumulative.iter().map(|c| c / total).collect();

        // Fritsch-Carlson limited slopes of u(F), seeded with 1/density
        let n = knots.len();
        let secant: Vec<f64> = (0..n - 1)
            .map(|k| {
                let df = cdf[k + 1] - cdf[k];
                if df > 0.0 {
                    (knots[k + 1] - knots[k]) / df
                } else {
                    0.0
                }
            })
            .collect();
        let mut slopes: Vec<f64> = knots
            .iter()
            .map(|&u| {
                let d = density(u);
                if d.is_finite() && d > 0.0 {
                    1.0 / d
                } else {
                    0.0
                }
            })
            .collect();
        for k in 0..n - 1 {
            let s = secant[k];
            if s == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / s;
            let b = slopes[k + 1] / s;
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let t = 3.0 / r2.sqrt();
                slopes[k] = t * a * s;
                slopes[k + 1] = t * b * s;
            }
        }

        // exponential tails whose mass matches the truncated mass
        let right_rate = density(right_edge) / (right_mass / total);
        let left_rate = density(-left_edge) / (left_mass / total);
        if !(right_rate > 0.0 && left_rate > 0.0 && right_rate.is_finite() && left_rate.is_finite()) {
            return Err(Error::GenericSamplerFailure("degenerate tail fit".into()));
        }
        Ok(Self {
            knots,
            cdf,
            slopes,
            left_rate,
            right_rate,
        })
    }

    pub fn invert(&self, v: f64) -> Result<f64> {
        let n = self.knots.len();
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::GenericSamplerFailure(format!("uniform draw {v} outside (0, 1)")));
        }
        if v < self.cdf[0] {
            return Ok(self.knots[0] + (v / self.cdf[0]).ln() / self.left_rate);
        }
        if v >= self.cdf[n - 1] {
            return Ok(self.knots[n - 1] - ((1.0 - v) / (1.0 - self.cdf[n - 1])).ln() / self.right_rate);
        }
        // cdf[k] <= v < cdf[k+1]
        let k = self.cdf.partition_point(|&c| c <= v).saturating_sub(1).min(n - 2);
        let (f0, f1) = (self.cdf[k], self.cdf[k + 1]);
        let h = f1 - f0;
        if !(h > 0.0) {
            return Err(Error::GenericSamplerFailure(format!("empty grid cell at u = {}", self.knots[k])));
        }
        let t = (v - f0) / h;
        let (u0, u1) = (self.knots[k], self.knots[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let u = (2.0 * t3 - 3.0 * t2 + 1.0) * u0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * u1 + (t3 - t2) * m1;
        if u.is_finite() {
            Ok(u.clamp(u0, u1))
        } else {
            Err(Error::GenericSamplerFailure(format!("non-finite interpolation in cell {k}")))
        }
    }
}
