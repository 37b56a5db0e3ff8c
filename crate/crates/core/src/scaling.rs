//! Scaling functions `phi_a(x) = sign(x) |x|^a` and the catalog of symmetric
//! base laws with their power transforms.

use std::fmt;

use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::special::{ln_normal_tail, ln_poisson_partial_sum, xlny, LN_2, LN_SQRT_2PI};

/// Exponent of a subexponential scaling function, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct ScalingExponent(f64);

impl ScalingExponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidParameter(format!("scaling exponent must lie in (0, 1), got {alpha}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for ScalingExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `sign(x) |x|^p` for any positive power, with `sign(0) = 0`.
#[inline]
pub fn signed_power(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x.abs()
    } else if p == 0.5 {
        x.signum() * x.abs().sqrt()
    } else {
        x.signum() * x.abs().powf(p)
    }
}

#[inline]
pub fn phi(alpha: ScalingExponent, x: f64) -> f64 {
    signed_power(x, alpha.value())
}

#[inline]
pub fn phi_inverse(alpha: ScalingExponent, y: f64) -> f64 {
    signed_power(y, 1.0 / alpha.value())
}

/// A symmetric law on the real line with finite moments of every order.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionModel {
    /// Density `e^{-|y|}/2`.
    TwoSidedExponential,
    StandardGaussian,
    /// `eps * Gamma(shape, 1)` with an independent uniform sign `eps`.
    SymmetrizedGamma { shape: f64 },
    /// Law of `phi_p(Y)` for `Y` distributed as `base`.
    PowerOf { base: Box<DistributionModel>, p: f64 },
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TwoSidedExponential => write!(f, "TwoSidedExponential"),
            Self::StandardGaussian => write!(f, "StandardGaussian"),
            Self::SymmetrizedGamma { shape } => write!(f, "SymmetrizedGamma({shape})"),
            Self::PowerOf { base, p } => write!(f, "PowerOf({base}, {p})"),
        }
    }
}

/// Law of `phi_p(Y)` for `Y ~ base`.
///
/// Nested powers collapse, `phi_q(phi_p(Y)) = phi_{pq}(Y)`, and a unit power
/// returns the base law unchanged.
pub fn power_transform(base: DistributionModel, p: f64) -> Result<DistributionModel> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("power must be positive and finite, got {p}")));
    }
    let (inner, total) = match base {
        DistributionModel::PowerOf { base, p: q } => (*base, q * p),
        other => (other, p),
    };
    if total == 1.0 {
        Ok(inner)
    } else {
        Ok(DistributionModel::PowerOf {
            base: Box::new(inner),
            p: total,
        })
    }
}

impl DistributionModel {
    pub fn symmetrized_gamma(shape: f64) -> Result<Self> {
        if shape > 0.0 && shape.is_finite() {
            Ok(Self::SymmetrizedGamma { shape })
        } else {
            Err(Error::InvalidParameter(format!("gamma shape must be positive, got {shape}")))
        }
    }

    /// `a` such that `ln P(|X| >= z) ~ -c z^a`.
    pub fn tail_exponent(&self) -> f64 {
        match self {
            Self::TwoSidedExponential | Self::SymmetrizedGamma { .. } => 1.0,
            Self::StandardGaussian => 2.0,
            Self::PowerOf { base, p } => base.tail_exponent() / p,
        }
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        match self {
            Self::TwoSidedExponential => -x.abs() - LN_2,
            Self::StandardGaussian => -0.5 * x * x - LN_SQRT_2PI,
            Self::SymmetrizedGamma { shape } => {
                xlny(shape - 1.0, x.abs()) - x.abs() - LN_2 - ln_gamma(*shape)
            }
            Self::PowerOf { base, p } => {
                let y = signed_power(x, 1.0 / p);
                base.ln_density(y) - p.ln() + xlny(1.0 / p - 1.0, x.abs())
            }
        }
    }

    /// Density at `x`; `+inf` at the origin for powers `p > 1`.
    pub fn density(&self, x: f64) -> f64 {
        self.ln_density(x).exp()
    }

    pub fn has_closed_tail(&self) -> bool {
        match self {
            Self::TwoSidedExponential | Self::StandardGaussian => true,
            Self::SymmetrizedGamma { shape } => shape.fract() == 0.0,
            Self::PowerOf { base, .. } => base.has_closed_tail(),
        }
    }

    /// ln P(X >= z) for `z >= 0`.
    pub fn ln_tail(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::InvalidParameter(format!("tail point must be nonnegative, got {z}")));
        }
        match self {
            Self::TwoSidedExponential => Ok(-z - LN_2),
            Self::StandardGaussian => Ok(ln_normal_tail(z)),
            Self::SymmetrizedGamma { shape } => {
                if shape.fract() != 0.0 {
                    return Err(Error::Unsupported(self.to_string()));
                }
                Ok(-z + ln_poisson_partial_sum(*shape as u32, z) - LN_2)
            }
            Self::PowerOf { base, p } => base.ln_tail(z.powf(1.0 / p)),
        }
    }

    /// Exact P(X >= z) for `z >= 0` where a closed form exists.
    pub fn tail(&self, z: f64) -> Result<f64> {
        match self {
            Self::StandardGaussian if z < 25.0 => {
                Ok(0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2))
            }
            _ => self.ln_tail(z).map(f64::exp),
        }
    }

    /// E|X|^r for real `r > -1`.
    pub fn abs_moment(&self, r: f64) -> f64 {
        match self {
            Self::TwoSidedExponential => gamma(r + 1.0),
            Self::StandardGaussian => {
                (0.5 * r * LN_2 + ln_gamma(0.5 * (r + 1.0)) - 0.5 * std::f64::consts::PI.ln()).exp()
            }
            Self::SymmetrizedGamma { shape } => (ln_gamma(shape + r) - ln_gamma(*shape)).exp(),
            Self::PowerOf { base, p } => base.abs_moment(p * r),
        }
    }

    /// One draw using the caller's stream.
    pub fn draw(&self, rng: &mut RandomStream) -> f64 {
        match self {
            Self::TwoSidedExponential => {
                let u = rng.open01();
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
            Self::StandardGaussian => StandardNormal.sample(rng),
            Self::SymmetrizedGamma { shape } => {
                let g: f64 = Gamma::new(*shape, 1.0).expect("validated shape").sample(rng);
                if rng.coin() {
                    g
                } else {
                    -g
                }
            }
            Self::PowerOf { base, p } => signed_power(base.draw(rng), *p),
        }
    }
}

/// `count` i.i.d. draws from `model`.
pub fn sample(model: &DistributionModel, rng: &mut RandomStream, count: usize) -> Vec<f64> {
    (0..count).map(|_| model.draw(rng)).collect()
}
