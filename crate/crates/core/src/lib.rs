//! Probability-scale residuals (PSRs) for ordinal, continuous, count, binary
//! and right-censored outcomes, PSR-based model diagnostics, and
//! covariate-adjusted rank correlation built from PSRs.

pub mod assoc;
pub mod cli;
pub mod data;
pub mod diag;
pub mod dist;
pub mod error;
pub mod fit;
pub mod linalg;
pub mod psr;
pub mod rng;

pub use error::{Error, Result};
