//! A small dense-tensor engine with tape-based reverse-mode automatic
//! differentiation.
//!
//! Everything is `f64` and row-major. A [`Graph`] records every operation
//! applied to its [`Var`] handles; [`Graph::backward`] walks the tape in
//! reverse and accumulates gradients into every node that requires one.
//! Trainable weights live outside the graph in a [`ParamStore`] and are
//! bound into a fresh graph for each forward pass.

mod error;
mod graph;
mod ops;
mod tensor;

pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod optim;
pub mod params;
pub mod rng;

pub use error::{NnError, Result};
pub use graph::{Graph, Var};
pub use ops::{BatchNormMode, BatchStats};
pub use params::{BoundParams, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor;
