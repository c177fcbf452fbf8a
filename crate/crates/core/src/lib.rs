//! Preference-conditioned multi-objective training for small MLPs.

mod error;

pub mod data;
pub mod experiment;
pub mod nn;
pub mod objectives;
pub mod pareto;
pub mod preference;
pub mod train;

pub use error::{Error, Result};
