//! Run-and-tumble bacteria with an internal chemotaxis pathway.
//!
//! The crate simulates ensembles of 1-D (or 2-D/3-D) run-and-tumble
//! particles whose tumbling rate is driven by a stochastic activity variable,
//! analyzes the resulting path lengths and mean squared displacement, and
//! evaluates the constants of the fractional diffusion limit.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod limit_theory;
pub mod pathway;
pub mod pipeline;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod simulator;
pub mod statistics;
pub mod validation;

pub use error::{Error, Result};
