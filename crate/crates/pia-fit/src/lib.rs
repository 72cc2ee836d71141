//! Command-line harness for least-squares B-spline fitting experiments.
//!
//! This crate wraps the [`mlspia`] fitting library with everything an
//! experiment needs around the numerics: dataset loading and generation,
//! problem assembly (parameters, knots, spectra, weights), side-by-side
//! method comparisons, spectral analysis with dense eigenvalue verification,
//! and self-contained JSON reports whose `config` block reproduces the run.
//!
//! The binary exposes the subcommands `fit-curve`, `fit-surface`, `compare`,
//! `analyze`, `table1`, and `generate`; the same functionality is available
//! programmatically through [`commands`].

pub mod commands;
pub mod config;
pub mod datagen;
pub mod eigencheck;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;

pub use config::RunConfig;
pub use error::{CliError, Result};
