//! Certified concentration bounds for functionals of α-stable vectors and of
//! Poisson configurations with stable Lévy measure, with Monte Carlo checks.

pub mod bounds_mean;
pub mod bounds_median;
pub mod certificate;
pub mod cli;
pub mod chernoff;
pub mod error;
pub mod levy;
pub mod mc_verifier;
pub mod roots;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
