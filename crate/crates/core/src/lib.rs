//! Quasi-Monte Carlo on the 2-torus with cubic-field Kronecker sequences.

pub mod diophantine;
pub mod discrepancy;
pub mod error;
pub mod fixedpoint;
pub mod fourier;
pub mod integrate;
pub mod geometry;
pub mod harness;
mod quadrature;
pub mod sequences;

pub use error::{Error, Result};
