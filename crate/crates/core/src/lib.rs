//! Sparse superposition codes over memoryless channels with rotationally
//! invariant coding matrices.
//!
//! The crate has two halves that are meant to be checked against each other:
//!
//! * a finite-size simulator: [`code`] builds messages and codewords,
//!   [`ensembles`] draws coding matrices held as SVD factors, [`channels`]
//!   corrupts codewords, and [`gvamp`] decodes them;
//! * an asymptotic predictor: [`replica`] solves the replica-symmetric
//!   stationary equations, locates the algorithmic and information-theoretic
//!   rate thresholds, analyses the error floor and the large-section-size
//!   capacity criterion.
//!
//! [`harness`] ties both together into reproducible CSV-producing sweeps and
//! backs the `sscodes` command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod code;
pub mod ensembles;
mod error;
pub mod gvamp;
pub mod harness;
pub mod quadrature;
pub mod replica;
pub mod special;

pub use error::{Error, Result};
