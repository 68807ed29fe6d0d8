//! Identification of governing PDEs from noisy spatiotemporal grid data.
//!
//! The pipeline runs in five stages, each in its own module:
//!
//! 1. [`field`]: gridded space-time data, calibrated noise and point sampling.
//! 2. [`denoise`]: truncated-SVD denoising with automatic elbow detection.
//! 3. [`dictionary`]: finite-difference derivatives, candidate term
//!    enumeration and design-matrix assembly/standardization.
//! 4. [`solvers`]: sparsity-promoting regressions (LASSO, randomized LASSO,
//!    IHT, debiased IHT, HTP, STRidge) and least-squares refits.
//! 5. [`stability`]: stability selection over a regularization path, which
//!    turns any of the solvers into a threshold-based model selector.
//!
//! [`simulate`] produces ground-truth Burgers and Gray-Scott data and
//! [`experiments`] runs the achievability and solver-comparison studies.
//!
//! Parallel execution is controlled by [`Exec`]; with the `parallel` feature
//! disabled everything runs sequentially and produces identical results.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod denoise;
pub mod dictionary;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod field;
pub mod io;
pub mod rng;
pub mod simulate;
pub mod solvers;
pub mod stability;

pub use error::{Error, Result};
pub use exec::Exec;
pub use field::{Field, Region, SampleSet};
