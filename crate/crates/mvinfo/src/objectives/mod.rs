//! Training objectives: baseline contrastive losses, the RC and LBE
//! regularizers, the MIB/IP elimination term, and variational MI
//! estimators.

pub mod config;
pub mod estimators;
pub mod losses;
pub mod model;

pub use config::{BaseLoss, ObjectiveConfig, Regularizer};
pub use estimators::{estimate_mi, gaussian_pair_batch, MiEstimator};
pub use losses::{
    barlow_twins, byol_loss, ema_update, lbe_loss, mibip_loss, nt_xent, rc_loss, reparameterize,
};
pub use model::{combined_loss, LossGraph, Model};
