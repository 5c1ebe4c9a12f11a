//! Simulation and verification toolkit for Lambda-coalescents: exact
//! jump-chain rates and laws, path simulation with tree statistics,
//! samplers for the limiting stable functionals, and distribution-level
//! verification runners comparing the two.

// Argument guards use negated float comparisons (`!(x > 0.0 && ...)`)
// on purpose: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod error;
pub mod limits;
pub mod measures;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{CoalError, Result};
