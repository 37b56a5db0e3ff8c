//! Adaptive Gauss–Kronrod quadrature.
//!
//! The 21-point Kronrod rule with its embedded 10-point Gauss rule, driven by
//! global bisection of the interval with the largest error estimate.
//! Half-line integrals are computed on doubling panels `[2^k, 2^(k+1)]`; the
//! first panel `[0, 1]` is mapped through `u = t^2`, which removes the
//! `u^(-1/2)` endpoint singularity of power-transformed densities and softens
//! milder ones.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of intervals kept by one adaptive run.
    pub max_subdivisions: usize,
    /// Half-line integrals are declared divergent when the integrand is still
    /// not negligible at this abscissa.
    pub truncation_cap: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 4000,
            truncation_cap: 1e8,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077958109831074,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

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

/// One application of the 21-point rule on `[a, b]`; returns the Kronrod
/// value and the QUADPACK-style error estimate.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("finite bounds required, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral { value: 0.0, abs_error: 0.0 });
    }
    let (value, error) = gk21(&f, a, b);
    if !value.is_finite() {
        return Err(Error::QuadratureFailure(format!("non-finite integrand on [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;

    loop {
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= cfg.max_subdivisions {
            return Err(Error::QuadratureFailure(format!(
                "subdivision limit {} reached on [{a}, {b}] (error {total_err:.3e} > {target:.3e})",
                cfg.max_subdivisions
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine precision; accept its contribution
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::QuadratureFailure(format!("non-finite integrand on [{}, {}]", worst.a, worst.b)));
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum for accuracy; incremental updates accumulate rounding
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let abs_error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, abs_error })
}

/// Integrates over `[a, b]` split at the given interior break points.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    let mut points = vec![a];
    points.extend(breaks.iter().copied().filter(|&p| p > a && p < b));
    points.push(b);
    points.sort_by(f64::total_cmp);
    let mut out = Integral { value: 0.0, abs_error: 0.0 };
    for w in points.windows(2) {
        let piece = integrate(&f, w[0], w[1], cfg)?;
        out.value += piece.value;
        out.abs_error += piece.abs_error;
    }
    Ok(out)
}

/// Integral of `f` over `[0, +inf)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<Integral> {
    let head = integrate(|t: f64| 2.0 * t * f(t * t), 0.0, 1.0, cfg)?;
    let mut value = head.value;
    let mut abs_error = head.abs_error;
    let mut quiet_panels = 0;
    let mut lo = 1.0_f64;
    while lo < cfg.truncation_cap {
        let hi = 2.0 * lo;
        let panel_cfg = QuadratureConfig {
            abs_tol: cfg.abs_tol / 64.0,
            ..*cfg
        };
        let panel = integrate(&f, lo, hi, &panel_cfg)?;
        value += panel.value;
        abs_error += panel.abs_error;
        let negligible = cfg.rel_tol * 1e-3 * value.abs();
        let edge = (f(hi) * hi).abs();
        if hi >= 8.0 && panel.value.abs() <= negligible.max(cfg.abs_tol * 1e-3) && edge <= negligible.max(cfg.abs_tol * 1e-3) {
            quiet_panels += 1;
            if quiet_panels >= 2 {
                return Ok(Integral { value, abs_error });
            }
        } else {
            quiet_panels = 0;
        }
        lo = hi;
    }
    Err(Error::QuadratureFailure(format!(
        "integrand not negligible at truncation cap {:e}",
        cfg.truncation_cap
    )))
}

/// Integral of `f` over the real line, split at 0.
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, cfg: &QuadratureConfig) -> Result<Integral> {
    let right = integrate_half_line(&f, cfg)?;
    let left = integrate_half_line(|u| f(-u), cfg)?;
    Ok(Integral {
        value: right.value + left.value,
        abs_error: right.abs_error + left.abs_error,
    })
}
