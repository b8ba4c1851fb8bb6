//! U- and V-statistics with unbounded kernels.
//!
//! The crate computes the plug-in estimators `U(F_n)`, the U-statistic
//! `U_n`, their asymptotic variance through the projection measures of the
//! kernel, draws from the Gaussian limit functional, and runs Monte Carlo
//! experiments that compare the finite-sample laws with the limit.

// `!(x > 0.0)` is the NaN-rejecting comparison throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bv;
pub mod datagen;
pub mod empirical;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod quadrature;
pub mod special;
pub mod summation;
pub mod vstat;

pub use error::{Error, Result};
