//! Exact construction and analysis of McMullen's density.
//!
//! The density is built on the unit square by repeatedly covering the edges
//! of every square (and of its concentric core) with rings of much smaller
//! squares. This crate constructs the finite-depth density exactly in
//! rational arithmetic, checks its integral constraints, evaluates the
//! quantitative machinery of the nonrealizability argument and probes
//! attempted realizations numerically.
//!
//! Modules:
//! - [`hierarchy`]: construction parameters and the nested square geometry.
//! - [`density`]: level values, exact evaluation and integration.
//! - [`curves`]: polyline lengths, vertical length and the proof's checkers.
//! - [`bounds`]: the contradiction inequality and excluded stretch constants.
//! - [`probe`]: transport-based realizations and distortion measurement.
//! - [`nets`]: separated nets generated from the density.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod curves;
pub mod density;
mod error;
pub mod exact;
pub mod geometry;
pub mod hierarchy;
pub mod nets;
pub mod probe;

pub use error::{Error, Result};
pub use exact::Rational;
pub use geometry::{Point, Rect};
