//! A posteriori residual-based error certification of reduced solutions:
//! the condensed residual of the zero-padded reduced solution, spectral
//! bound constants, and bounds for the solution state, compliance, and
//! compliance sensitivity.
//!
//! Bound evaluation needs the full-order condensed operator, so it is an
//! offline verification feature, not part of optimization iterations.

mod constants;
mod residual;
mod theorems;

pub use constants::{bound_constants, extreme_eigenvalues, BoundConstants};
pub use residual::{embed_reduced, extended_residual};
pub use theorems::{
    certify, compliance_error_bound, sensitivity_error_bound, solution_error_bound, ErrorReport,
};
