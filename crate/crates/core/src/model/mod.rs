//! Reference-component library, procedural joint/strut geometry,
//! instantiation via rigid transformation maps, and port bookkeeping.

mod design;
mod geometry;
mod reference;
mod topology;
mod transform;

pub use design::DesignState;
pub use geometry::{
    make_joint, make_strut, make_strut_with, make_vertical_strut, GeometryParams, JOINT_PORT_E,
    JOINT_PORT_N, JOINT_PORT_S, JOINT_PORT_W,
};
pub use reference::{Port, ReferenceComponent};
pub use topology::{
    build_lattice, BoundaryPortSel, Instance, LatticeRefs, LatticeSpec, PortDofMap, PortRef,
    Side, SystemTopology, PORT_MATCH_TOL,
};
pub use transform::{QuarterRotation, TransformationMap};
