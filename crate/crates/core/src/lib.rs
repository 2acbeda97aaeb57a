//! Numerical checks of the estimates behind Allard- and Brakke-type
//! ε-regularity: discrete varifolds, weighted monotonicity, oscillation decay,
//! improvement of flatness, graph extraction, Brakke flows and the Gaussian
//! density.

pub mod brakke;
pub mod cutoff;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod huisken;
pub mod monotonicity;
pub mod par;
pub mod regularity;
pub mod spatial;
pub mod varifold;

pub use error::{Error, Result};
