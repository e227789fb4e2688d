//! Minimal reverse-mode automatic differentiation.
//!
//! A [`Graph`] records ops eagerly; [`Graph::backward`] walks the record in
//! reverse once. Only the ops the temporal model needs are provided.

mod adam;
mod graph;
pub(crate) mod kernels;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use graph::{Gradients, Graph, Var};
pub use kernels::key_range;
pub use tensor::Tensor;
pub(crate) use tensor::argmax;

#[cfg(test)]
pub(crate) mod gradcheck;
