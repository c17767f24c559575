//! Shared fixtures for integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;

use cwrom::condense::ComponentOperator;
use cwrom::fem::PlaneStressMaterial;
use cwrom::model::{
    build_lattice, make_joint, make_strut, make_vertical_strut, GeometryParams, LatticeRefs,
    LatticeSpec, SystemTopology,
};

pub const JOINT: usize = 0;
pub const HSTRUT: usize = 1;
pub const VSTRUT: usize = 2;

pub fn aluminum() -> PlaneStressMaterial {
    PlaneStressMaterial::new(69e9, 0.3).unwrap()
}

/// Reference library at a given port resolution (nodes across a port).
pub fn library(across: usize) -> (Vec<ComponentOperator>, GeometryParams) {
    let geo = GeometryParams::default();
    let mat = aluminum();
    let ops = vec![
        ComponentOperator::new(make_joint(across, &geo, mat).unwrap()).unwrap(),
        ComponentOperator::new(make_strut(across, &geo, mat).unwrap()).unwrap(),
        ComponentOperator::new(make_vertical_strut(across, &geo, mat).unwrap()).unwrap(),
    ];
    (ops, geo)
}

pub fn lattice_refs() -> LatticeRefs {
    LatticeRefs {
        joint: JOINT,
        hstrut: HSTRUT,
        vstrut: VSTRUT,
    }
}

pub fn refcomps(ops: &[ComponentOperator]) -> Vec<cwrom::model::ReferenceComponent> {
    ops.iter().map(|o| o.reference.clone()).collect()
}

/// Full nodal trace bases (identity) per reference component.
pub fn nodal_bases(ops: &[ComponentOperator]) -> Vec<Vec<DMatrix<f64>>> {
    ops.iter()
        .map(|op| {
            (0..op.num_ports())
                .map(|j| {
                    let n = op.port_dofs(j).len();
                    DMatrix::identity(n, n)
                })
                .collect()
        })
        .collect()
}

/// The ring of Fig-2 style: 2x2 joints with 4 struts.
pub fn ring_topology(ops: &[ComponentOperator], geo: &GeometryParams) -> SystemTopology {
    let spec = LatticeSpec {
        cols: 2,
        rows: 2,
        stub_struts: vec![],
        dirichlet: vec![],
        loads: vec![],
    };
    build_lattice(&refcomps(ops), lattice_refs(), &spec, geo).unwrap()
}
