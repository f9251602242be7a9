//! Dense linear algebra, reverse-mode autodiff, and first-order optimizers.

mod linalg;
mod matrix;
mod optimizer;
mod tape;

pub use linalg::symmetric_eigen;
pub use matrix::Matrix;
pub use optimizer::{Optimizer, OptimizerKind};
pub use tape::{Aggregation, Axis, NodeId, ReduceKind, Tape};
