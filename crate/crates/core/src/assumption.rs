//! Numerical check of second-order essential smoothness for a free energy:
//! bounded domain, steepness at the boundary, and bounded relative variance
//! with the monotonicity of `lambda''` and `V` near the boundary.
//!
//! Every verdict is evidence on a finite grid, not a proof. Reports say so in
//! their `status` field.

use rayon::prelude::*;

use crate::convex::inverse_lambda_prime;
use crate::error::{Error, Result};
use crate::free_energy::FreeEnergyModel;
use crate::json;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    /// Number of grid points approaching the boundary.
    pub points: usize,
    /// The grid starts at `start_fraction * xi`.
    pub start_fraction: f64,
    /// The grid ends at `(1 - end_gap) * xi`.
    pub end_gap: f64,
    /// `xi0` is searched among grid points at or above `xi0_fraction * xi`.
    pub xi0_fraction: f64,
    /// `lambda'` at the last grid point must exceed this.
    pub steepness_threshold: f64,
    /// `omega` is the grid supremum of `V` inflated by this factor.
    pub safety_factor: f64,
    /// Relative slack for the pairwise monotonicity comparisons.
    pub slack: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            points: 64,
            start_fraction: 0.5,
            end_gap: 1e-6,
            xi0_fraction: 0.999,
            steepness_threshold: 1e5,
            safety_factor: 1.05,
            slack: 1e-9,
        }
    }
}

pub const STATUS_SUPPORTED: &str = "numerically supported";
pub const STATUS_UNVERIFIED: &str = "unverified";
pub const STATUS_INFINITE: &str = "infinite domain: the LDP at this scale is trivial";

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `f64::INFINITY` for an unbounded domain.
    pub xi: f64,
    pub domain_nontrivial_bounded: bool,
    pub steepness_ok: bool,
    /// `lambda'` along the grid.
    pub steepness_sequence: Vec<f64>,
    pub xi0: f64,
    pub omega: f64,
    pub lambda_second_nondecreasing: bool,
    pub v_nonincreasing: bool,
    pub grid: Vec<f64>,
    /// `V` along the grid.
    pub relative_variance: Vec<f64>,
    pub status: &'static str,
}

impl AssumptionReport {
    pub fn all_ok(&self) -> bool {
        self.domain_nontrivial_bounded && self.steepness_ok && self.lambda_second_nondecreasing && self.v_nonincreasing
    }

    /// JSON document, numbers with 17 significant digits. An infinite `xi`
    /// is written as the string `"+inf"`.
    pub fn to_json(&self) -> String {
        let xi = if self.xi == f64::INFINITY {
            json::string("+inf")
        } else {
            json::number(self.xi)
        };
        let seq = |v: &[f64]| json::array(v.iter().map(|&x| json::number(x)));
        json::object(&[
            ("xi", xi),
            ("domain_nontrivial_bounded", self.domain_nontrivial_bounded.to_string()),
            ("steepness_ok", self.steepness_ok.to_string()),
            ("steepness_sequence", seq(&self.steepness_sequence)),
            ("xi0", json::number(self.xi0)),
            ("omega", json::number(self.omega)),
            ("lambda_second_nondecreasing", self.lambda_second_nondecreasing.to_string()),
            ("V_nonincreasing", self.v_nonincreasing.to_string()),
            ("grid", seq(&self.grid)),
            ("V", seq(&self.relative_variance)),
            ("status", json::string(self.status)),
        ])
    }
}

/// Geometric approach to `xi`: gaps to the boundary decay from
/// `1 - start_fraction` to `end_gap` (relative to `xi`).
fn approach_grid(xi: f64, cfg: &CheckConfig) -> Vec<f64> {
    let first_gap = 1.0 - cfg.start_fraction;
    let n = cfg.points.max(2);
    let ratio = (cfg.end_gap / first_gap).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| xi * (1.0 - first_gap * ratio.powi(k as i32))).collect()
}

fn holds_from(values: &[f64], start: usize, slack: f64, increasing: bool) -> bool {
    values[start..].windows(2).all(|w| {
        let tol = slack * w[0].abs().max(1.0);
        if increasing {
            w[1] >= w[0] - tol
        } else {
            w[1] <= w[0] + tol
        }
    })
}

pub fn check(model: &FreeEnergyModel, cfg: &CheckConfig) -> Result<AssumptionReport> {
    if !(cfg.start_fraction > 0.0 && cfg.start_fraction < 1.0 && cfg.end_gap > 0.0 && cfg.end_gap < 1.0 - cfg.start_fraction) {
        return Err(Error::InvalidParameter("check grid must satisfy 0 < start_fraction < 1 - end_gap < 1".into()));
    }
    let xi = model.xi();
    if xi == 0.0 {
        return Err(Error::Domain { eta: 0.0, xi });
    }
    if xi == f64::INFINITY {
        return Ok(AssumptionReport {
            xi,
            domain_nontrivial_bounded: false,
            steepness_ok: false,
            steepness_sequence: Vec::new(),
            xi0: f64::NAN,
            omega: f64::NAN,
            lambda_second_nondecreasing: false,
            v_nonincreasing: false,
            grid: Vec::new(),
            relative_variance: Vec::new(),
            status: STATUS_INFINITE,
        });
    }

    let grid = approach_grid(xi, cfg);
    let evaluated = grid
        .par_iter()
        .map(|&eta| Ok((model.lambda_prime(eta)?, model.lambda_second(eta)?)))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let slopes: Vec<f64> = evaluated.iter().map(|e| e.0).collect();
    let curvatures: Vec<f64> = evaluated.iter().map(|e| e.1).collect();
    let v: Vec<f64> = evaluated.iter().map(|&(d1, d2)| d2 / (d1 * d1)).collect();

    let steepness_ok = slopes.windows(2).all(|w| w[1] > w[0]) && slopes[slopes.len() - 1] > cfg.steepness_threshold;

    let first_candidate = grid.iter().position(|&eta| eta >= cfg.xi0_fraction * xi).unwrap_or(grid.len() - 1);
    let xi0_index = (first_candidate..grid.len() - 1).find(|&i| {
        holds_from(&curvatures, i, cfg.slack, true) && holds_from(&v, i, cfg.slack, false)
    });

    let sup = |from: usize| v[from..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (xi0, omega, monotone, status) = match xi0_index {
        Some(i) => (grid[i], cfg.safety_factor * sup(i), true, STATUS_SUPPORTED),
        // upper half of the domain; the grid starts at start_fraction * xi
        None => {
            let half = grid.iter().position(|&eta| eta >= 0.5 * xi).unwrap_or(0);
            (grid[half], cfg.safety_factor * sup(half), false, STATUS_UNVERIFIED)
        }
    };
    let status = if steepness_ok { status } else { STATUS_UNVERIFIED };

    Ok(AssumptionReport {
        xi,
        domain_nontrivial_bounded: xi > 0.0 && xi.is_finite(),
        steepness_ok,
        steepness_sequence: slopes,
        xi0,
        omega,
        lambda_second_nondecreasing: monotone,
        v_nonincreasing: monotone,
        grid,
        relative_variance: v,
        status,
    })
}

/// One entry of the refined-condition diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedPoint {
    pub n: u64,
    pub eta: f64,
    /// `V(eta_n) / n^alpha`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedCondition {
    pub points: Vec<RefinedPoint>,
    /// Last ratio below half the first.
    pub decaying: bool,
}

/// `V(eta_n) / n^alpha` with `eta_n = (lambda')^{-1}((n x)^alpha)`.
pub fn refined_condition(model: &FreeEnergyModel, x: f64, n_grid: &[u64]) -> Result<RefinedCondition> {
    if n_grid.is_empty() {
        return Err(Error::InvalidParameter("refined condition needs a nonempty n grid".into()));
    }
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("x must be positive, got {x}")));
    }
    let alpha = model.alpha().value();
    let points = n_grid
        .iter()
        .map(|&n| {
            let scale = (n as f64).powf(alpha);
            let eta = inverse_lambda_prime(model, (n as f64 * x).powf(alpha))?;
            let v = model.lambda_second(eta)? / model.lambda_prime(eta)?.powi(2);
            Ok(RefinedPoint { n, eta, ratio: v / scale })
        })
        .collect::<Result<Vec<_>>>()?;
    let decaying = points.len() > 1 && points[points.len() - 1].ratio < 0.5 * points[0].ratio;
    Ok(RefinedCondition { points, decaying })
}
