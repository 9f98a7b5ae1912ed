//! Causal effect estimation with many candidate proxies, some of them invalid.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data_io;
pub mod error;
pub mod estimators;
pub mod identification;
pub mod lasso;
pub mod linalg;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
