//! Distributed fixed-confidence best-arm identification in linear bandits.
//!
//! `M` agents pull arms described by context vectors, share sufficient
//! statistics through a coordinator whenever their local design matrix has
//! grown enough, and stop as soon as any agent can certify the best arm.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the CLI live in the `distlingape-sim` crate.
//!
//! Module map:
//! - [`linalg`]: regularized design matrices with rank-one updates.
//! - [`bai`]: confidence radii, gaps, direction selection and stopping.
//! - [`lp`]: the L1-minimal representation used by the ratio strategy.
//! - [`protocol`]: agents, coordinator, communication trigger and the run loop.
//! - [`env`]: the synthetic benchmark and the small-cell service scenario.
//! - [`baselines`]: centralized M-batch OFUL and cumulative delay curves.
#![no_std]
// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod bai;
pub mod env;
mod error;
pub mod linalg;
pub mod lp;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
