//! Stability certification toolkit for time-delay PI+RI reset control loops.
//!
//! This crate holds the allocation-only algorithmic core:
//!
//! * [`model`]: plant/controller descriptions and the closed-loop and
//!   sampled-data matrix models derived from them.
//! * [`legendre`]: shifted Legendre polynomials on `[-h, 0]` and the constant
//!   projection matrices used by the integral inequalities.
//! * [`lmi`]: the matrix-inequality stability conditions, assembled as affine
//!   functions of the decision variables, plus eigenvalue re-verification.
//! * [`sim`]: a method-of-steps simulator for the reset system and its
//!   sampled-data counterpart, reset laws and decay-rate estimation.
//!
//! Solving the conditions requires a semidefinite backend; see the
//! `resetcert` crate for one.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod legendre;
pub mod lmi;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
