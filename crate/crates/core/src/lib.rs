//! Solver for monotone operator equations `F(u) = h` on `R^n`.
//!
//! The solve runs in three layers:
//!
//! * [`flow`] integrates `v' = -(F'(v) + aI)^{-1} [F(v) + a v - h]` for a fixed
//!   `a > 0`. Its residual decays exactly like `e^{-t}`, and its limit `u_a`
//!   solves the regularized equation `F(u_a) + a u_a = h`.
//! * [`continuation`] sends `a` to zero along a geometric schedule with warm
//!   starts. It certifies that `|u_a|` stays bounded, that the `u_a` settle,
//!   and that the limit satisfies a Minty-type variational inequality.
//! * [`validate`] samples the hypotheses the solve relies on: monotonicity
//!   `(F(u) - F(v), u - v) >= 0` and coercivity `(u, F(u)) / |u| -> inf`.
//!
//! [`gallery`] provides named operators, including negative cases that
//! violate each hypothesis.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuation;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod gallery;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod report;
pub mod sampling;
pub mod validate;
pub mod vector;

pub use error::{Error, Result};
pub use operator::{DeclaredFlags, OperatorSpec};
pub use report::ValidatorReport;
pub use vector::{DenseMatrix, HVector};
