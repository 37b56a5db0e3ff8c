//! Exponential-moment inequalities at the `phi_alpha` scale and the
//! integration-by-parts identity for truncated exponential moments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_energy::FreeEnergyModel;
use crate::quadrature::{integrate_half_line, integrate_with_breaks, QuadratureConfig};
use crate::scaling::DistributionModel;

/// `P(X >= z) <= exp(-eta z^a + lambda(eta))` for `0 < eta < xi`.
pub fn subexp_tchebychev_bound(fe: &FreeEnergyModel, eta: f64, z: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < fe.xi()) {
        return Err(Error::Domain { eta, xi: fe.xi() });
    }
    if !(z > 0.0) {
        return Err(Error::InvalidParameter(format!("z must be positive, got {z}")));
    }
    Ok((-eta * z.powf(fe.alpha().value()) + fe.lambda(eta)?).exp())
}

/// Bound on `P(|Z - EZ| > a)` for `Z = phi_a(X~_eta)`:
/// `max(E e^{k(Z - EZ - a)}, E e^{k(EZ - Z - a)})`, written through `lambda`.
pub fn symmetrized_tchebychev_bound(fe: &FreeEnergyModel, k: f64, a: f64, eta: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
    }
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!("a must be nonnegative, got {a}")));
    }
    let xi = fe.xi();
    if !fe.in_domain(eta + k) {
        return Err(Error::Domain { eta: eta + k, xi });
    }
    if !fe.in_domain(eta - k) {
        return Err(Error::Domain { eta: eta - k, xi });
    }
    let base = fe.lambda(eta)?;
    let mean = fe.lambda_prime(eta)?;
    let upper = -k * (mean + a) + fe.lambda(eta + k)? - base;
    let lower = k * (mean - a) + fe.lambda(eta - k)? - base;
    Ok(upper.max(lower).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IbpCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_diff: f64,
}

fn check_cfg() -> QuadratureConfig {
    QuadratureConfig::with_tolerances(1e-13, 1e-12)
}

/// `P(X >= z)`, from the closed form when available, else by quadrature.
fn survival(dist: &DistributionModel, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if z < 0.0 {
        return Ok(1.0 - survival(dist, -z, cfg)?);
    }
    if dist.has_closed_tail() {
        return dist.tail(z);
    }
    if z == 0.0 {
        return Ok(0.5);
    }
    Ok(integrate_half_line(|t| dist.density(z + t), cfg)?.value)
}

/// Both sides of
/// `E[e^{aX} 1{r1 <= X <= r2}] = a int_{r1}^{r2} e^{az} P(X >= z) dz
///  + e^{a r1} P(X >= r1) - e^{a r2} P(X >= r2)`.
pub fn ibp_identity_check(dist: &DistributionModel, a: f64, r1: f64, r2: f64) -> Result<IbpCheck> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    if !(r2 > r1) {
        return Err(Error::InvalidParameter(format!("need r1 < r2, got [{r1}, {r2}]")));
    }
    let cfg = check_cfg();
    let breaks: Vec<f64> = if r1 < 0.0 && r2 > 0.0 { vec![0.0] } else { vec![] };
    let lhs = integrate_with_breaks(|z| (a * z).exp() * dist.density(z), r1, r2, &breaks, &cfg)?.value;
    // without a closed tail each node runs an inner quadrature
    let tail_term = integrate_with_breaks(
        |z| (a * z).exp() * survival(dist, z, &cfg).unwrap_or(f64::NAN),
        r1,
        r2,
        &breaks,
        &cfg,
    )?
    .value;
    let rhs = a * tail_term + (a * r1).exp() * survival(dist, r1, &cfg)? - (a * r2).exp() * survival(dist, r2, &cfg)?;
    Ok(IbpCheck {
        lhs,
        rhs,
        abs_diff: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_energy::{exp_power_model, gauss_power_model};

    #[test]
    fn tchebychev_example() {
        let fe = exp_power_model(2.0).unwrap();
        let b = subexp_tchebychev_bound(&fe, 0.9, 100.0).unwrap();
        assert!((b - (-9.0 - 0.19f64.ln()).exp()).abs() < 1e-18);
        assert!((b / 6.47e-4 - 1.0).abs() < 5e-3);
        assert!(0.5 * (-10.0f64).exp() <= b);
        assert!(subexp_tchebychev_bound(&fe, 1.0, 4.0).is_err());
        assert!(subexp_tchebychev_bound(&fe, 0.0, 4.0).is_err());
        assert!((subexp_tchebychev_bound(&fe, 1e-12, 4.0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn symmetrized_examples() {
        let fe = exp_power_model(2.0).unwrap();
        let l = |e: f64| fe.lambda(e).unwrap();
        let b = symmetrized_tchebychev_bound(&fe, 0.2, 5.0, 0.5).unwrap();
        let upper = (-0.2 * (4.0 / 3.0 + 5.0) + l(0.7) - l(0.5)).exp();
        assert!(b >= upper);
        assert!((b - upper).abs() < 1e-15);
        assert!(symmetrized_tchebychev_bound(&fe, 0.2, 0.0, 0.5).unwrap() >= 1.0);
        assert!(matches!(symmetrized_tchebychev_bound(&fe, 0.5, 1.0, 0.5), Err(Error::Domain { .. })));
        let g = gauss_power_model(4.0).unwrap();
        let mut last = f64::INFINITY;
        for a in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let b = symmetrized_tchebychev_bound(&g, 0.1, a, 0.3).unwrap();
            assert!(b <= last);
            last = b;
        }
    }

    #[test]
    fn ibp_examples() {
        let r = ibp_identity_check(&DistributionModel::TwoSidedExponential, 0.5, -1.0, 1.0).unwrap();
        assert!(r.abs_diff <= 1e-6, "{r:?}");
        let r = ibp_identity_check(&DistributionModel::StandardGaussian, 0.3, -2.0, 2.0).unwrap();
        assert!(r.abs_diff <= 1e-6, "{r:?}");
        let r = ibp_identity_check(&DistributionModel::StandardGaussian, 0.3, 0.4, 0.4 + 1e-9).unwrap();
        assert!(r.lhs.abs() < 1e-8 && r.rhs.abs() < 1e-8 && r.abs_diff < 1e-12);
    }

    #[test]
    fn ibp_without_closed_tail() {
        let d = DistributionModel::SymmetrizedGamma { shape: 1.5 };
        let r = ibp_identity_check(&d, 0.4, -1.0, 3.0).unwrap();
        assert!(r.abs_diff <= 1e-6, "{r:?}");
    }
}
