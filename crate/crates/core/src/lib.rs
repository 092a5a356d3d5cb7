//! Environmental-determinacy simulator: pointer-basis differentiation,
//! stable differentiation chains and quantum causal models over small
//! dense Hilbert spaces.

pub mod chains;
pub mod differentiation;
pub mod error;
pub mod qcm;
pub mod quantum;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
