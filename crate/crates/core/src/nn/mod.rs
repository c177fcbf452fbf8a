//! Dense network engine: matrices, MLP forward/backward, Adam and step decay.

mod adam;
mod matrix;
mod mlp;
mod schedule;

pub use adam::{AdamParams, AdamState};
pub use matrix::Matrix;
pub use mlp::{ForwardCache, Mlp, OutputHeads, ParamGrads};
pub use schedule::LrSchedule;
