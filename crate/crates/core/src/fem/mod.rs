//! Plane-stress linear-elasticity finite elements on quadrilateral meshes.
//!
//! Bilinear (Q1) quads with 2x2 Gauss quadrature, sparse symmetric assembly,
//! Dirichlet elimination and a cached sparse Cholesky solve. Degrees of
//! freedom are node-major with interleaved components: dof(n, c) = 2n + c.

mod assemble;
mod element;
mod material;
mod mesh;
mod sparse;

pub use assemble::{assemble, assemble_laplace, assemble_mass, lumped_port_weights};
pub use element::{
    element_mass, element_stiffness, element_stress, von_mises_2d, GAUSS_2X2,
};
pub use material::PlaneStressMaterial;
pub use mesh::QuadMesh;
pub use sparse::{apply_dirichlet, solve_spd, DirichletReduction, SpdFactor, SparseSpdMatrix};
