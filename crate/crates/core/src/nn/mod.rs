//! Dense-network substrate: matrices, MLPs, gradients, optimizers and checkpoints.

pub mod checkpoint;
mod matrix;
mod mlp;
mod optim;

pub use checkpoint::Checkpoint;
pub use matrix::Matrix;
pub use mlp::{glorot_limit, sigmoid, Activation, Dense, ForwardCache, Gradients, LayerGrads, Mlp};
pub use optim::{accumulate_grads, adam_step, sgd_step, AdamState};
