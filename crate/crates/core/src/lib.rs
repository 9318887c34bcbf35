pub mod baselines;
pub mod critic;
pub mod diffcore;
pub mod envs;
pub mod harness;
pub mod error;
pub mod policy;
pub mod spectral;
pub mod training;

pub use error::{Error, Result};
