//! Sampling, reconstruction and sieve estimates in model spaces
//! `K_Θ = H² ⊖ Θ H²` of meromorphic inner functions on the real line.

pub mod clark;
pub mod cli;
pub mod error;
pub mod harness;
pub mod inner;
pub mod kernel;
pub mod quadrature;
pub mod reconstruct;
pub mod report;
pub mod sieve;

pub use error::{Error, Result};
pub use inner::{BlaschkeZero, InnerFunctionSpec};
