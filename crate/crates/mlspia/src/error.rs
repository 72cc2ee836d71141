//! Error type shared across the fitting pipeline.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while setting up or running a fit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A curve or surface parameter fell outside the clamped domain.
    #[error("parameter {0} lies outside the basis domain [0, 1]")]
    ParameterOutOfDomain(f64),

    /// Sizes, degrees or counts that make the requested setup impossible.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two objects that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input data that defeats a construction (zero chords, duplicate points, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// An inner numerical procedure failed to converge or produced garbage.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Weights that violate the convergence region of the iteration.
    #[error("weights outside the convergence region: {0}")]
    Weights(String),

    /// A diagnostic routine was asked to densify something too large.
    #[error("matrix side {size} exceeds the diagnostic size cap of {cap}")]
    SizeCap { size: usize, cap: usize },

    /// An iteration step produced a non-finite value; the usual cause is
    /// weights far outside the convergence region.
    #[error("iteration produced a non-finite value at step {step}")]
    NonFinite { step: usize },
}
