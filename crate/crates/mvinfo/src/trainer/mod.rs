//! Training loop and frozen-representation evaluation probes.

pub mod probe;
pub mod train;

pub use probe::{linear_probe, ridge_probe, MetricKind, ProbeResult};
pub use train::{encode_v1, train, Optimizer, Schedule, TrainRun};
