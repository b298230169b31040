//! Multi-view information-theory laboratory.
//!
//! Exact verification of the information identities behind contrastive
//! learning on small discrete systems, plus a toy-scale training stack
//! (dense-tensor autodiff, contrastive objectives with I(z,v)-increasing
//! regularizers, probes) over synthetic multi-view data.

pub mod autodiff;
pub mod error;
pub mod info;
pub mod objectives;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
