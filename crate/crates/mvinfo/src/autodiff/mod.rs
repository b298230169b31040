//! Minimal dense-tensor engine with reverse-mode differentiation, seeded
//! MLPs and first-order optimizers. 64-bit floats throughout.

pub mod checkpoint;
pub mod gradcheck;
pub mod mlp;
pub mod optim;
pub mod tape;
pub mod tensor;

pub use checkpoint::{load_mlp, save_mlp};
pub use gradcheck::max_grad_error;
pub use mlp::{Activation, MlpParams, MlpVars};
pub use optim::{sgd_step, AdamState};
pub use tape::{Gradients, Tape, Var};
pub use tensor::{matmul, matmul_t, transpose, Tensor};
