//! Quantile-based Random Kaczmarz for linear systems with sparsely corrupted
//! right-hand sides.
//!
//! A system `A x = b_t` with unit-norm rows is observed through a right-hand
//! side `b` in which up to a `beta` fraction of the entries were replaced by
//! arbitrary values. The quantile solver iterates classical Kaczmarz
//! projections but restricts each random pick to the equations whose current
//! residual lies in the lower q-quantile, which keeps grossly corrupted
//! equations out of the update with overwhelming frequency.
//!
//! The crate provides:
//!
//! - [`linalg`]: dense matrices, row normalization, extremal singular values,
//!   residuals, and the quantile selection primitive;
//! - [`corruption`]: synthetic ground-truth systems and beta-sparse
//!   corruption models, with text-file persistence;
//! - [`solvers`]: the projection step, all row-selection strategies, the
//!   blind solver loop, and an exact one-step expectation oracle;
//! - [`spectral`]: subset-restricted extremal singular values, the
//!   convergence condition and rate constant, and the truncated-Gaussian
//!   threshold heuristic;
//! - [`harness`]: seeded experiment batches, method comparisons, and the
//!   per-iterate verification suite behind the `qrk` CLI.

pub mod corruption;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
