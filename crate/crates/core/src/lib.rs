//! Subexponential large deviations toolkit.
// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assumption;
pub mod bounds;
pub mod convex;
pub mod error;
pub mod estimators;
pub mod free_energy;
pub mod json;
pub mod quadrature;
pub mod rng;
pub mod scaling;
mod special;
pub mod tilted;

pub use error::{Error, Result};
pub use free_energy::{
    bounded_slope_fixture, exp_power_model, gauss_power_model, numeric_model, relative_variance, FreeEnergyModel,
    NumericModel, RelativeVariance,
};
pub use rng::RandomStream;
pub use scaling::{phi, phi_inverse, power_transform, sample, signed_power, DistributionModel, ScalingExponent};
pub use convex::{
    asymptotic_slope, inverse_lambda_prime, legendre, legendre_second, rate_function, LegendrePoint, RateFunction,
    SlopeReport,
};
pub use assumption::{check, refined_condition, AssumptionReport, CheckConfig, RefinedCondition};
pub use tilted::{log_weight, optimal_tilt, sample_tilted, TiltedLaw};
pub use estimators::{
    big_jump_diagnostics, esscher_is, esscher_is_with_tilt, naive_mc, rate_sweep, shift_is, shift_is_with_offset,
    BigJumpReport, EstimatorResult, EventShape, EventSpec, Method, RatePoint, CSV_HEADER, RATE_SWEEP_HEADER,
};
pub use bounds::{ibp_identity_check, subexp_tchebychev_bound, symmetrized_tchebychev_bound, IbpCheck};
