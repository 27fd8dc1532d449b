//! Minimal differentiable-network substrate.

pub mod loss;
pub mod network;
pub mod optim;
pub mod simplex;

pub use loss::{cross_entropy, entropy, kl_divergence, softmax_cross_entropy, squared_error};
pub use network::{network_forward, network_gradient, Activation, Dense, Gradients, Mode, NetworkParams, Tape};
pub use optim::{optimizer_step, AdamConfig, OptState};
pub use simplex::{
    argmax, concrete_sample, gumbel, tempered_softmax, tempered_softmax_backward, ConcreteSample,
    SimplexVector,
};
