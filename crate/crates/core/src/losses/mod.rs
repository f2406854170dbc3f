//! Training objectives.
//!
//! Pointwise losses (cross-entropy, focal, the margin loss), the weight
//! tables behind the reweighted variants, the group mean-discrepancy penalty,
//! and [`composite_objective`], which assembles a batch objective for any
//! [`LossVariant`].

mod objective;
mod pointwise;
mod weights;

pub use objective::{
    composite_objective, composite_objective_with_grad, Batch, LossContext, ObjectiveBreakdown,
    ObjectiveGradients,
};
pub use pointwise::{
    cross_entropy, cross_entropy_grad, focal_loss, focal_loss_grad, ldam_loss, ldam_loss_grad,
    mmd_penalty, mmd_penalty_grad,
};
pub use weights::{
    class_weights, group_instance_weights, ldam_margins, smoothed_inverse_frequency, MarginVector,
    WeightTable,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LossVariant {
    Vanilla,
    Cw,
    Iw,
    Focal,
    Ldam,
    LdamCw,
    LdamIw,
    LdamAdv,
    LdamReg,
}

impl LossVariant {
    pub const ALL: [LossVariant; 9] = [
        LossVariant::Vanilla,
        LossVariant::Cw,
        LossVariant::Iw,
        LossVariant::Focal,
        LossVariant::Ldam,
        LossVariant::LdamCw,
        LossVariant::LdamIw,
        LossVariant::LdamAdv,
        LossVariant::LdamReg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossVariant::Vanilla => "VANILLA",
            LossVariant::Cw => "CW",
            LossVariant::Iw => "IW",
            LossVariant::Focal => "FOCAL",
            LossVariant::Ldam => "LDAM",
            LossVariant::LdamCw => "LDAM_CW",
            LossVariant::LdamIw => "LDAM_IW",
            LossVariant::LdamAdv => "LDAM_ADV",
            LossVariant::LdamReg => "LDAM_REG",
        }
    }

    pub fn uses_margins(self) -> bool {
        matches!(
            self,
            LossVariant::Ldam
                | LossVariant::LdamCw
                | LossVariant::LdamIw
                | LossVariant::LdamAdv
                | LossVariant::LdamReg
        )
    }

    pub fn needs_groups(self) -> bool {
        matches!(
            self,
            LossVariant::Iw | LossVariant::LdamIw | LossVariant::LdamAdv | LossVariant::LdamReg
        )
    }

    pub fn needs_adversary(self) -> bool {
        self == LossVariant::LdamAdv
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        LossVariant::ALL
            .into_iter()
            .find(|v| v.name() == upper)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown loss variant {s:?}")))
    }
}

fn default_beta() -> f64 {
    0.9999
}

fn default_gamma() -> f64 {
    2.0
}

/// Objective variant plus its hyperparameters. Parameters a variant does not
/// use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub variant: LossVariant,
    /// Margin scale.
    #[serde(default, alias = "C")]
    pub c: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default, alias = "lambda")]
    pub lambda_adv: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl LossSpec {
    pub fn new(variant: LossVariant) -> Self {
        Self {
            variant,
            c: 0.0,
            beta: default_beta(),
            rho: 0.0,
            lambda_adv: 0.0,
            gamma: default_gamma(),
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambda(mut self, lambda_adv: f64) -> Self {
        self.lambda_adv = lambda_adv;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")))
            }
        };
        check("C", self.c)?;
        check("rho", self.rho)?;
        check("lambda_adv", self.lambda_adv)?;
        check("gamma", self.gamma)?;
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument(format!("beta = {} must lie in [0, 1)", self.beta)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in LossVariant::ALL {
            assert_eq!(v.name().parse::<LossVariant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
        assert_eq!("ldam-reg".parse::<LossVariant>().unwrap(), LossVariant::LdamReg);
        assert!("dice".parse::<LossVariant>().is_err());
    }

    #[test]
    fn spec_defaults_from_json() {
        let spec: LossSpec = serde_json::from_str(r#"{"variant":"LDAM_IW","C":0.5}"#).unwrap();
        assert_eq!(spec.c, 0.5);
        assert_eq!(spec.beta, 0.9999);
        assert_eq!(spec.gamma, 2.0);
        assert!(spec.validate().is_ok());
        assert!(spec.with_beta(1.0).validate().is_err());
        assert!(spec.with_rho(-1.0).validate().is_err());
    }
}
