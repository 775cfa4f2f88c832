//! Geometric-programming synthesis of positive linear systems.
//!
//! Parameters of a positive LTI system are tuned by compiling norm bounds
//! (H², H∞, Hankel, Schatten, structured robustness, delay gains) into
//! geometric programs, solving them in the log domain, and checking every
//! solution with independent numerical oracles.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod cli;
pub mod error;
pub mod gpsolve;
pub mod posyalg;
pub mod synth;
pub mod sysmodel;

pub use error::{Error, Result};
