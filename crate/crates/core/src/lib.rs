//! K-tier heterogeneous network coverage with line-of-sight blockage.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod laplace;
pub mod model;
pub mod montecarlo;
pub mod propagation;
pub mod quad;
pub mod report;
pub mod special;

pub use error::{Error, Result};
