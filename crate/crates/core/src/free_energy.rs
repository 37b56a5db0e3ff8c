//! Scaled free energies `lambda(eta) = log E[exp(eta * phi_a(X))]`.
//!
//! Two closed-form models cover powers of two-sided exponential and Gaussian
//! variables; [`NumericModel`] handles any catalog law by quadrature in the
//! scaled coordinate `u = phi_a(x)`. All evaluations are restricted to the
//! open domain `(-xi, xi)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_half_line, QuadratureConfig};
use crate::scaling::{power_transform, DistributionModel, ScalingExponent};

/// `lambda''(eta) / lambda'(eta)^2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct RelativeVariance(pub f64);

impl RelativeVariance {
    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FreeEnergyModel {
    /// `X = phi_p(Y)`, `Y` two-sided exponential, `alpha = 1/p`:
    /// `lambda(eta) = -log(1 - eta^2)` on `(-1, 1)`.
    ExpPower { p: f64, alpha: ScalingExponent },
    /// `X = phi_p(G)`, `G` standard Gaussian, `alpha = 2/p`:
    /// `lambda(eta) = log(f(eta)/2)` with
    /// `f(eta) = (1 + 2 eta)^(-1/2) + (1 - 2 eta)^(-1/2)` on `(-1/2, 1/2)`.
    GaussPower { p: f64, alpha: ScalingExponent },
    Numeric(Box<NumericModel>),
    /// `lambda(eta) = eta^2 / 2` cut to `(-xi, xi)`. Its slope stays bounded
    /// at the boundary, so it is a non-steep test fixture.
    BoundedSlope { xi: f64, alpha: ScalingExponent },
}

pub fn exp_power_model(p: f64) -> Result<FreeEnergyModel> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exp-power model needs p > 1, got {p}")));
    }
    Ok(FreeEnergyModel::ExpPower {
        p,
        alpha: ScalingExponent::new(1.0 / p)?,
    })
}

pub fn gauss_power_model(p: f64) -> Result<FreeEnergyModel> {
    if !(p > 2.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("gauss-power model needs p > 2, got {p}")));
    }
    Ok(FreeEnergyModel::GaussPower {
        p,
        alpha: ScalingExponent::new(2.0 / p)?,
    })
}

pub fn bounded_slope_fixture() -> FreeEnergyModel {
    FreeEnergyModel::BoundedSlope {
        xi: 1.0,
        alpha: ScalingExponent::new(0.5).expect("constant in range"),
    }
}

/// Quadrature-backed free energy of `dist` at scale `alpha`.
pub fn numeric_model(dist: DistributionModel, alpha: ScalingExponent) -> Result<FreeEnergyModel> {
    NumericModel::new(dist, alpha, NumericModel::default_quadrature()).map(|m| FreeEnergyModel::Numeric(Box::new(m)))
}

/// Gaussian-power helper `f` and its first two derivatives.
fn gauss_f(eta: f64) -> (f64, f64, f64) {
    let a = (1.0 + 2.0 * eta).recip();
    let b = (1.0 - 2.0 * eta).recip();
    let (sa, sb) = (a.sqrt(), b.sqrt());
    let f = sa + sb;
    let f1 = -a * sa + b * sb;
    let f2 = 3.0 * (a * a * sa + b * b * sb);
    (f, f1, f2)
}

impl FreeEnergyModel {
    pub fn alpha(&self) -> ScalingExponent {
        match self {
            Self::ExpPower { alpha, .. } | Self::GaussPower { alpha, .. } | Self::BoundedSlope { alpha, .. } => *alpha,
            Self::Numeric(m) => m.alpha,
        }
    }

    /// Half-width of the domain; `f64::INFINITY` when every eta is admissible.
    pub fn xi(&self) -> f64 {
        match self {
            Self::ExpPower { .. } => 1.0,
            Self::GaussPower { .. } => 0.5,
            Self::Numeric(m) => m.xi,
            Self::BoundedSlope { xi, .. } => *xi,
        }
    }

    /// The law whose free energy this is, when there is one.
    pub fn distribution(&self) -> Option<DistributionModel> {
        match self {
            Self::ExpPower { p, .. } => power_transform(DistributionModel::TwoSidedExponential, *p).ok(),
            Self::GaussPower { p, .. } => power_transform(DistributionModel::StandardGaussian, *p).ok(),
            Self::Numeric(m) => Some(m.dist.clone()),
            Self::BoundedSlope { .. } => None,
        }
    }

    pub fn in_domain(&self, eta: f64) -> bool {
        eta.abs() < self.xi()
    }

    fn check_domain(&self, eta: f64) -> Result<()> {
        if self.in_domain(eta) {
            Ok(())
        } else {
            Err(Error::Domain { eta, xi: self.xi() })
        }
    }

    pub fn lambda(&self, eta: f64) -> Result<f64> {
        self.check_domain(eta)?;
        Ok(match self {
            Self::ExpPower { .. } => -((1.0 - eta) * (1.0 + eta)).ln(),
            Self::GaussPower { .. } => (0.5 * gauss_f(eta).0).ln(),
            Self::Numeric(m) => m.lambda(eta)?,
            Self::BoundedSlope { .. } => 0.5 * eta * eta,
        })
    }

    pub fn lambda_prime(&self, eta: f64) -> Result<f64> {
        self.check_domain(eta)?;
        Ok(match self {
            Self::ExpPower { .. } => 2.0 * eta / ((1.0 - eta) * (1.0 + eta)),
            Self::GaussPower { .. } => {
                let (f, f1, _) = gauss_f(eta);
                f1 / f
            }
            Self::Numeric(m) => m.lambda_prime(eta)?,
            Self::BoundedSlope { .. } => eta,
        })
    }

    pub fn lambda_second(&self, eta: f64) -> Result<f64> {
        self.check_domain(eta)?;
        Ok(match self {
            Self::ExpPower { .. } => {
                let d = (1.0 - eta) * (1.0 + eta);
                2.0 * (1.0 + eta * eta) / (d * d)
            }
            Self::GaussPower { .. } => {
                let (f, f1, f2) = gauss_f(eta);
                (f * f2 - f1 * f1) / (f * f)
            }
            Self::Numeric(m) => m.lambda_second(eta)?,
            Self::BoundedSlope { .. } => 1.0,
        })
    }
}

pub fn relative_variance(model: &FreeEnergyModel, eta: f64) -> Result<RelativeVariance> {
    if eta == 0.0 {
        return Err(Error::UndefinedAtZero);
    }
    let slope = model.lambda_prime(eta)?;
    let curvature = model.lambda_second(eta)?;
    Ok(RelativeVariance(curvature / (slope * slope)))
}

/// Free energy of an arbitrary catalog law, evaluated by adaptive quadrature.
///
/// Works with the law of `U = phi_a(X)`, whose density `g` is even, so every
/// integral folds onto `[0, inf)`:
/// `E[e^{eta U}] = int 2 cosh(eta u) g(u) du`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericModel {
    pub dist: DistributionModel,
    pub alpha: ScalingExponent,
    /// Law of `phi_alpha(X)`.
    pub scaled: DistributionModel,
    pub xi: f64,
    pub quadrature: QuadratureConfig,
}

/// ln(1e-16): the integrand is negligible below this log-level.
const LN_NEGLIGIBLE: f64 = -36.841_361_487_904_734;

impl NumericModel {
    pub fn default_quadrature() -> QuadratureConfig {
        QuadratureConfig::with_tolerances(1e-12, 1e-11)
    }

    pub fn new(dist: DistributionModel, alpha: ScalingExponent, quadrature: QuadratureConfig) -> Result<Self> {
        let scaled = power_transform(dist.clone(), alpha.value())?;
        let xi = estimate_xi(&scaled, quadrature.truncation_cap)?;
        Ok(Self {
            dist,
            alpha,
            scaled,
            xi,
            quadrature,
        })
    }

    /// Log-level used to keep the integrand in floating range:
    /// the largest of `eta u + ln g(u)` on a coarse geometric scan.
    fn log_shift(&self, eta: f64) -> f64 {
        let mut shift = 0.0_f64;
        let mut u = 1.0 / 16.0;
        while u <= self.quadrature.truncation_cap {
            let level = eta.abs() * u + self.scaled.ln_density(u);
            if level.is_finite() {
                shift = shift.max(level);
            }
            u *= 2.0;
        }
        shift
    }

    /// `int_0^inf h(u) [e^{eta u} ± e^{-eta u}] g(u) du * e^{-shift}` style
    /// integrals, with the caller choosing the combination.
    fn fold<F: Fn(f64, f64, f64) -> f64>(&self, eta: f64, shift: f64, h: F) -> Result<f64> {
        let g = &self.scaled;
        let out = integrate_half_line(
            |u| {
                let base = g.ln_density(u) - shift;
                let plus = (eta * u + base).exp();
                let minus = (-eta * u + base).exp();
                h(u, plus, minus)
            },
            &self.quadrature,
        )?;
        Ok(out.value)
    }

    fn mass(&self, eta: f64, shift: f64) -> Result<f64> {
        self.fold(eta, shift, |_, plus, minus| plus + minus)
    }

    fn first_moment(&self, eta: f64, shift: f64) -> Result<f64> {
        // plus - minus via expm1 keeps precision for small eta u
        let g = &self.scaled;
        let out = integrate_half_line(
            |u| {
                let base = g.ln_density(u) - shift;
                let minus = (-eta * u + base).exp();
                if (eta * u).abs() < 0.5 {
                    u * minus * (2.0 * eta * u).exp_m1()
                } else {
                    u * ((eta * u + base).exp() - minus)
                }
            },
            &self.quadrature,
        )?;
        Ok(out.value)
    }

    pub fn lambda(&self, eta: f64) -> Result<f64> {
        let shift = self.log_shift(eta);
        Ok(shift + self.mass(eta, shift)?.ln())
    }

    pub fn lambda_prime(&self, eta: f64) -> Result<f64> {
        if eta == 0.0 {
            return Ok(0.0);
        }
        let shift = self.log_shift(eta);
        Ok(self.first_moment(eta, shift)? / self.mass(eta, shift)?)
    }

    /// Tilted variance of `U`, integrated as a central moment.
    pub fn lambda_second(&self, eta: f64) -> Result<f64> {
        let shift = self.log_shift(eta);
        let mass = self.mass(eta, shift)?;
        let mean = if eta == 0.0 {
            0.0
        } else {
            self.first_moment(eta, shift)? / mass
        };
        let central = self.fold(eta, shift, |u, plus, minus| {
            (u - mean).powi(2) * plus + (u + mean).powi(2) * minus
        })?;
        Ok(central / mass)
    }
}

/// Domain half-width of `E[e^{eta U}]` for the scaled law `U`.
///
/// `eta` is admissible when the integrand `e^{eta z} P(U >= z)` (or the
/// density when no closed tail exists) has fallen below 1e-16 at the
/// truncation cap. The boundary is located by bisection.
fn estimate_xi(scaled: &DistributionModel, cap: f64) -> Result<f64> {
    let level_at_cap = if scaled.has_closed_tail() {
        scaled.ln_tail(cap)?
    } else {
        scaled.ln_density(cap)
    };
    let converges = |eta: f64| eta * cap + level_at_cap < LN_NEGLIGIBLE;
    const ETA_MAX: f64 = 1e6;
    if converges(ETA_MAX) {
        return Ok(f64::INFINITY);
    }
    if !converges(0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while converges(hi) {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp2() -> FreeEnergyModel {
        exp_power_model(2.0).unwrap()
    }
    fn gauss4() -> FreeEnergyModel {
        gauss_power_model(4.0).unwrap()
    }

    #[test]
    fn constructors_validate() {
        assert!(exp_power_model(1.0).is_err());
        assert!(gauss_power_model(2.0).is_err());
        assert_eq!(exp_power_model(3.0).unwrap().alpha().value(), 1.0 / 3.0);
        assert_eq!(gauss_power_model(5.0).unwrap().alpha().value(), 0.4);
    }

    #[test]
    fn exp_power_examples() {
        let m = exp2();
        assert_eq!(m.lambda(0.0).unwrap(), 0.0);
        assert!((m.lambda(0.5).unwrap() - 0.287_682_072_451_780_9).abs() < 1e-15);
        assert!((m.lambda_prime(0.5).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(matches!(m.lambda(1.0), Err(Error::Domain { .. })));
        assert!(matches!(m.lambda(-1.2), Err(Error::Domain { .. })));
    }

    #[test]
    fn gauss_power_examples() {
        let m = gauss4();
        assert!(m.lambda(0.0).unwrap().abs() < 1e-16);
        let d: Vec<f64> = [0.2, 0.4, 0.49].iter().map(|&e| m.lambda_prime(e).unwrap()).collect();
        assert!(d[0] < d[1] && d[1] < d[2]);
        let v = relative_variance(&m, 0.4999).unwrap().value();
        assert!((2.0..=2.05).contains(&v), "{v}");
        assert!(matches!(m.lambda(0.5), Err(Error::Domain { .. })));
        // lambda''(0) = E[G^4] = 3
        assert!((m.lambda_second(0.0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn relative_variance_examples() {
        let m = exp2();
        assert!((relative_variance(&m, 0.5).unwrap().value() - 2.5).abs() < 1e-14);
        let v = relative_variance(&m, 0.999).unwrap().value();
        assert!((1.0..=1.01).contains(&v), "{v}");
        assert_eq!(relative_variance(&m, 0.0), Err(Error::UndefinedAtZero));
        assert!(matches!(relative_variance(&m, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn numeric_domain_estimates() {
        let a = ScalingExponent::new(0.5).unwrap();
        let exp = numeric_model(power_transform(DistributionModel::TwoSidedExponential, 2.0).unwrap(), a).unwrap();
        assert!((exp.xi() - 1.0).abs() < 1e-6, "{}", exp.xi());
        let gauss = numeric_model(power_transform(DistributionModel::StandardGaussian, 4.0).unwrap(), a).unwrap();
        assert!((gauss.xi() - 0.5).abs() < 1e-6, "{}", gauss.xi());
        // light tail at this scale: every eta admissible
        let light = numeric_model(DistributionModel::StandardGaussian, a).unwrap();
        assert_eq!(light.xi(), f64::INFINITY);
        // density-only route (non-integer gamma shape)
        let g = numeric_model(
            power_transform(DistributionModel::SymmetrizedGamma { shape: 2.5 }, 2.0).unwrap(),
            a,
        )
        .unwrap();
        assert!((g.xi() - 1.0).abs() < 1e-5, "{}", g.xi());
    }

    #[test]
    fn numeric_matches_closed_forms() {
        let a = ScalingExponent::new(0.5).unwrap();
        let exp = numeric_model(power_transform(DistributionModel::TwoSidedExponential, 2.0).unwrap(), a).unwrap();
        assert!((exp.lambda(0.5).unwrap() + 0.75f64.ln()).abs() < 1e-6);
        assert!(exp.lambda(0.0).unwrap().abs() < 1e-10);
        let gauss = numeric_model(power_transform(DistributionModel::StandardGaussian, 4.0).unwrap(), a).unwrap();
        assert!((gauss.lambda(0.3).unwrap() - gauss4().lambda(0.3).unwrap()).abs() < 1e-6);
        assert!(gauss.lambda(0.0).unwrap().abs() < 1e-10);
        assert_eq!(gauss.lambda_prime(0.0).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_gamma_free_energy() {
        // U = eps Gamma(k): E e^{eta U} = ((1-eta)^-k + (1+eta)^-k) / 2
        let a = ScalingExponent::new(0.5).unwrap();
        let m = numeric_model(power_transform(DistributionModel::SymmetrizedGamma { shape: 3.0 }, 2.0).unwrap(), a).unwrap();
        for eta in [-0.8f64, -0.3, 0.1, 0.6, 0.9] {
            let exact = (0.5 * ((1.0 - eta).powi(-3) + (1.0 + eta).powi(-3))).ln();
            assert!((m.lambda(eta).unwrap() - exact).abs() < 1e-8, "{eta}");
        }
    }

    #[test]
    fn bounded_slope_fixture_is_flat() {
        let m = bounded_slope_fixture();
        assert_eq!(m.lambda_prime(0.999_999).unwrap(), 0.999_999);
        assert!(m.distribution().is_none());
    }
}
