//! Relative deviation bounds for binary classification and generalization
//! bounds for unbounded losses with bounded moments, together with the exact
//! and Monte Carlo oracles that certify them.

// `!(x > 0.0)` is the NaN-rejecting form used throughout; tabulated
// constants keep their published digits
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod binomial;
pub mod bounds;
pub mod capacity;
pub mod mc;
pub mod report;
mod error;
mod numeric;

pub use error::{Error, Result};
