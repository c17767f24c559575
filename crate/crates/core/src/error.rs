//! Error type shared across the crate.

use thiserror::Error;

/// Unified error for all library operations.
#[derive(Debug, Error)]
pub enum CwError {
    /// Invalid or degenerate geometry (bad Jacobian, non-convex quad, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Invalid user configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Inconsistent system topology (ports that do not match, over-shared ports, ...).
    #[error("topology error: {0}")]
    Topology(String),

    /// Out-of-range or duplicate index.
    #[error("index error: {0}")]
    Index(String),

    /// A matrix expected to be SPD failed its factorization.
    #[error("matrix is not positive definite: {0}")]
    NotSpd(String),

    /// Failure while lifting a port trace into a component interior.
    #[error("lifting error: {0}")]
    Lifting(String),

    /// The trained library does not cover a requested configuration.
    #[error("library error: {0}")]
    Library(String),

    /// Operation requires a state that has not been reached (e.g. unsolved system).
    #[error("state error: {0}")]
    State(String),

    /// Caller violated an operation contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Generic numerical failure (eigensolver breakdown, non-convergence, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed persisted data (bad magic, checksum, or layout).
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CwError>;

impl CwError {
    /// Process exit code for the CLI: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CwError::Config(_) => 2,
            _ => 3,
        }
    }
}
