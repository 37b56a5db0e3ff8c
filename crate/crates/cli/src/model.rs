use clap::ValueEnum;
use subexp_core::{
    bounded_slope_fixture, exp_power_model, gauss_power_model, numeric_model, power_transform, DistributionModel,
    FreeEnergyModel, ScalingExponent,
};

use crate::{Failure, Options};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// phi_p of a two-sided exponential, alpha = 1/p.
    ExpPower,
    /// phi_p of a standard Gaussian, alpha = 2/p.
    GaussPower,
    /// phi_p of a symmetrized gamma variable, free energy by quadrature.
    SymGamma,
    /// Non-steep test fixture lambda = eta^2/2 on (-1, 1); has no sampler.
    BoundedSlope,
}

pub struct Model {
    pub fe: FreeEnergyModel,
    pub dist: Option<DistributionModel>,
    pub label: String,
}

impl Model {
    pub fn dist(&self) -> Result<&DistributionModel, Failure> {
        self.dist
            .as_ref()
            .ok_or_else(|| Failure::usage(format!("model {} has no distribution to sample", self.label)))
    }

    pub fn alpha(&self) -> f64 {
        self.fe.alpha().value()
    }
}

fn paired_alpha(given: Option<f64>, expected: f64, name: &str) -> Result<(), Failure> {
    match given {
        Some(a) if (a - expected).abs() > 1e-12 * expected => Err(Failure::usage(format!(
            "{name} fixes alpha = {expected}, got --alpha {a}"
        ))),
        _ => Ok(()),
    }
}

pub fn build(opts: &Options) -> Result<Model, Failure> {
    let kind = opts.model.unwrap_or(ModelKind::ExpPower);
    let p = opts.p.unwrap_or(2.0);
    let model = match kind {
        ModelKind::ExpPower => {
            paired_alpha(opts.alpha, 1.0 / p, "exp-power")?;
            let fe = exp_power_model(p)?;
            Model {
                dist: fe.distribution(),
                fe,
                label: format!("exp-power(p={p})"),
            }
        }
        ModelKind::GaussPower => {
            paired_alpha(opts.alpha, 2.0 / p, "gauss-power")?;
            let fe = gauss_power_model(p)?;
            Model {
                dist: fe.distribution(),
                fe,
                label: format!("gauss-power(p={p})"),
            }
        }
        ModelKind::SymGamma => {
            let k = opts.gamma_shape.unwrap_or(2.0);
            let dist = power_transform(DistributionModel::symmetrized_gamma(k)?, p)?;
            let alpha = ScalingExponent::new(opts.alpha.unwrap_or(1.0 / p))?;
            let fe = numeric_model(dist.clone(), alpha)?;
            Model {
                dist: Some(dist),
                fe,
                label: format!("sym-gamma(k={k}, p={p}, alpha={})", alpha.value()),
            }
        }
        ModelKind::BoundedSlope => Model {
            fe: bounded_slope_fixture(),
            dist: None,
            label: "bounded-slope".into(),
        },
    };
    Ok(model)
}
