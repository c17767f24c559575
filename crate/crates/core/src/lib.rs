//! Component-wise reduced-order modeling and topology optimization of 2D
//! lattice structures.
//!
//! The crate builds lattices from a small library of reference components
//! (joints and struts), condenses each component onto its ports via Schur
//! complements, trains reduced port bases offline by pairwise sampling，and
//! minimizes compliance over per-component densities with certified a
//! posteriori error bounds.

pub mod bounds;
pub mod commands;
pub mod condense;
pub mod error;
pub mod fem;
pub mod fom;
pub mod io;
pub mod model;
pub mod opt;
pub mod train;

pub use error::{CwError, Result};
