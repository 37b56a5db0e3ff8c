//! Shared fixtures for the benchmarks.

use subexp_core::{exp_power_model, gauss_power_model, DistributionModel, EventSpec, FreeEnergyModel};

/// The two closed-form models with their laws.
pub fn worked_examples() -> Vec<(&'static str, FreeEnergyModel, DistributionModel)> {
    [
        ("exp-p2", exp_power_model(2.0).expect("valid p")),
        ("gauss-p4", gauss_power_model(4.0).expect("valid p")),
    ]
    .into_iter()
    .map(|(name, fe)| {
        let dist = fe.distribution().expect("closed-form models carry a law");
        (name, fe, dist)
    })
    .collect()
}

/// `S_n >= x` at `n = 100`, `x = 1`.
pub fn reference_event() -> EventSpec {
    EventSpec::tail(100, 1.0).expect("valid event")
}
