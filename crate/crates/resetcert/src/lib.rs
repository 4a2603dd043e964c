//! Certification, search and simulation front end for PI+RI reset loops.

// links the system BLAS/LAPACK used by the semidefinite backend
use openblas_src as _;

pub mod error;
pub mod cli;
pub mod config;
pub mod format;
pub mod sdp;
pub mod search;

pub use error::{Error, Result};
