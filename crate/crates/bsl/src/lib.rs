//! Command line tools, file formats and the Monte Carlo harness built on
//! [`bsl_core`].
//!
//! - [`format`]: `BSL1` dictionary text files, signal and observation JSON.
//! - [`experiments`]: error-versus-noise sweeps and guarantee tables.
//! - [`presets`]: built-in sweep and table configurations.
//! - [`cli`]: the `bsl` binary.

#![warn(missing_docs)]

pub mod cli;
pub mod experiments;
pub mod format;
pub mod presets;
