//! Synthetic data: discrete shared-latent systems for exact verification
//! and continuous multi-view batches for training experiments.

pub mod batch_io;
pub mod continuous;
pub mod discrete;

pub use batch_io::{read_batch, write_batch};
pub use continuous::{quantile_bins, sample_continuous, ContinuousSpec, Latents, MultiViewBatch};
pub use discrete::{make_discrete_system, DiscreteSystemSpec};
