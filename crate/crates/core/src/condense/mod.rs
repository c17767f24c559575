//! Static condensation of reference components onto their ports and
//! assembly/solution of the condensed system for an instantiated topology.
//!
//! With elasticity lifting every interface bubble vanishes, interface
//! functions are parameter independent, and the instantiated component
//! stiffness is a pure scaling `K^i(mu) = s(mu_i) * Kbar^i` of an offline
//! block. A Laplacian lifting path is retained behind `LiftKind::Laplacian`
//! to cross-check that both routes produce the same condensed operator.

mod component_op;
mod system;

pub use component_op::{ComponentOperator, LiftKind, LocalSchur, SkeletonBasis};
pub use system::{CondensedModel, CondensedSystem};
