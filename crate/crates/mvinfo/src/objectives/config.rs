//! Objective configuration: base loss, regularizer and their constants.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLoss {
    Simclr,
    Byol,
    Barlowtwins,
    Supervised,
}

impl std::str::FromStr for BaseLoss {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simclr" => Ok(BaseLoss::Simclr),
            "byol" => Ok(BaseLoss::Byol),
            "barlowtwins" => Ok(BaseLoss::Barlowtwins),
            "supervised" => Ok(BaseLoss::Supervised),
            other => Err(Error::Domain(format!("unknown base loss '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regularizer {
    None,
    Rc,
    Lbe,
    Mibip,
}

impl std::str::FromStr for Regularizer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Regularizer::None),
            "rc" => Ok(Regularizer::Rc),
            "lbe" => Ok(Regularizer::Lbe),
            "mibip" => Ok(Regularizer::Mibip),
            other => Err(Error::Domain(format!("unknown regularizer '{other}'"))),
        }
    }
}

/// All loss-side constants. Defaults: tau 0.5, sigma 0.1, rho 0.05,
/// lambda grid point 1.0 on both views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub base: BaseLoss,
    pub reg: Regularizer,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    pub sigma: f64,
    pub rho: f64,
    pub ema_decay: f64,
    pub bt_off_diag: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            base: BaseLoss::Simclr,
            reg: Regularizer::None,
            lambda1: 1.0,
            lambda2: 1.0,
            tau: 0.5,
            sigma: 0.1,
            rho: 0.05,
            ema_decay: 0.99,
            bt_off_diag: 0.005,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Config("lambda1/lambda2 must be >= 0".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::Config("tau must be > 0".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::Config("sigma must be > 0".into()));
        }
        if self.rho <= 0.0 {
            return Err(Error::Config("rho must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::Config("ema_decay must lie in [0, 1)".into()));
        }
        if self.bt_off_diag < 0.0 {
            return Err(Error::Config("bt_off_diag must be >= 0".into()));
        }
        Ok(())
    }
}
