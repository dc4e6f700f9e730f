//! Dense f64 tensors with a reverse-mode gradient tape.
//!
//! [`Tensor`] is a plain value: a shape and row-major data. Differentiable
//! computation happens through [`Var`] handles recorded on a [`Tape`]; calling
//! [`Tape::backward`] on a scalar populates gradient buffers for every leaf
//! that the loss depends on.

mod checkpoint;
mod rng;
mod tape;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use rng::Rng;
pub use tape::{Tape, Var};
pub use tensor::Tensor;

#[cfg(test)]
pub(crate) mod gradcheck;
