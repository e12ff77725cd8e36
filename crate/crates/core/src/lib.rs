//! Greedy recovery of block-sparse vectors from noisy linear measurements.
//!
//! The crate covers the whole estimation pipeline for the model `y = D x + w`,
//! where `D` is an `L x N` dictionary partitioned into `M` blocks of `d`
//! unit-norm atoms and `x` has at most `k` nonzero blocks:
//!
//! * [`linalg`]: dense column-major matrices, blocked dictionary views,
//!   QR-based restricted least squares and spectral norms.
//! * [`coherence`]: coherence, block coherence and sub-coherence, plus an
//!   executable check of the Gram-matrix eigenvalue bounds they imply.
//! * [`dictgen`]: seeded random dictionaries with orthonormal blocks,
//!   block-sparse test signals and noisy measurements.
//! * [`estimators`]: block thresholding (BTH), block OMP (BOMP), their scalar
//!   `d = 1` forms, the support oracle and a tiny exhaustive ML search.
//! * [`bounds`]: closed-form recovery guarantees for bounded and Gaussian
//!   noise, the Cramér–Rao bound, and the chi-square tail bounds behind them.
//!
//! Everything here is `no_std` + `alloc`. The `std` feature only switches the
//! math backends to their std implementations and enables runtime SIMD
//! detection in the matrix multiply kernel.
#![no_std]
#![warn(missing_docs)]
// `!(x >= 0.0)` is the NaN-rejecting form used throughout input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod coherence;
pub mod dictgen;
mod error;
pub mod estimators;
pub mod linalg;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{BlockSparseVector, BlockedDictionary, Matrix};
