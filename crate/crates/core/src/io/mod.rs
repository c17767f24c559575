//! Configuration parsing, trained-library persistence, and field export.

mod config;
mod libfile;
mod vtk;

pub use config::{
    read_densities, write_densities, InitMode, LatticeConfig, LoadSpec, OptimizeConfig,
    PortSel, RunConfig, TrainingConfig,
};
pub use libfile::{load_library, save_library};
pub use vtk::{write_vtk_fields, ComponentField};
