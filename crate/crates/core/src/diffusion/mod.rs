//! Quantum-walk diffusion layers.
//!
//! A layer turns node features `X` into `X̂ = P X`, where row `v` of `P` is
//! the node distribution of a walk started at `v`. For the quantum modes the
//! coin at step `t` on node `v` is `exp(i G)`, with the Hermitian `G` an
//! affine function of `v`'s input features. The mean of `X̂` over nodes
//! feeds a one-hidden-layer perceptron.

mod coin_params;
mod kernel;
mod model;

pub use coin_params::{coin_from_features, generator_len, hermitian_from_reals, hermitian_param_gradient, CoinParams};
pub use kernel::{kernel_registry, Boson2, Classical, CoinGradient, Quantum1, WalkKernel};
pub use model::{
    diffusion_forward, loss, loss_grad, target_of, Checkpoint, CheckpointParams,
    ForwardPass, Model, ModelConfig, ParamLayout, Pooling,
};
