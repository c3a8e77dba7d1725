//! Finite-volume solvers for 1-D hyperbolic balance laws with stiff relaxation
//! and their diffusive late-time limits.
//!
//! The building blocks are layered: [`densecore`] for small dense linear
//! algebra, [`system`] for the model abstraction and grids, [`models`] for the
//! concrete systems, [`chapman_enskog`] for effective-equation extraction,
//! [`hll`] and [`ap_scheme`] for the schemes, [`parabolic_ref`] for the limit
//! equation, and [`harness`] for configuration and run orchestration.

// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ap_scheme;
pub mod chapman_enskog;
pub mod densecore;
pub mod error;
pub mod harness;
pub mod hll;
pub mod models;
pub mod parabolic_ref;
pub mod system;

pub use error::{Error, Result};
