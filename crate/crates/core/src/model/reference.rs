use std::collections::BTreeSet;

use crate::error::{CwError, Result};
use crate::fem::{PlaneStressMaterial, QuadMesh};

/// One component boundary segment where the component may connect to a
/// neighbor or carry boundary conditions. Nodes are ordered by arclength
/// from the endpoint with lexicographically smaller coordinates.
#[derive(Debug, Clone)]
pub struct Port {
    nodes: Vec<usize>,
}

impl Port {
    pub fn new(nodes: Vec<usize>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Scalar dofs carried by the port (two displacement components per node).
    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    /// Global mesh dofs in port ordering, components interleaved.
    pub fn dofs(&self) -> Vec<usize> {
        self.nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect()
    }

    pub fn coords(&self, mesh: &QuadMesh) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|&n| mesh.nodes()[n]).collect()
    }

    /// Polyline length of the port.
    pub fn length(&self, mesh: &QuadMesh) -> f64 {
        let c = self.coords(mesh);
        c.windows(2)
            .map(|w| {
                let dx = w[1][0] - w[0][0];
                let dy = w[1][1] - w[0][1];
                (dx * dx + dy * dy).sqrt()
            })
            .sum()
    }
}

/// One entry of the offline component library: mesh, ports, material.
#[derive(Debug, Clone)]
pub struct ReferenceComponent {
    pub name: String,
    pub mesh: QuadMesh,
    pub ports: Vec<Port>,
    pub material: PlaneStressMaterial,
    pub thickness: f64,
}

impl ReferenceComponent {
    pub fn new(
        name: impl Into<String>,
        mesh: QuadMesh,
        ports: Vec<Port>,
        material: PlaneStressMaterial,
        thickness: f64,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (j, port) in ports.iter().enumerate() {
            for &n in port.nodes() {
                if n >= mesh.num_nodes() {
                    return Err(CwError::Index(format!(
                        "port {j} references node {n} outside the mesh"
                    )));
                }
                if !seen.insert(n) {
                    return Err(CwError::Topology(format!(
                        "ports are not mutually disjoint: node {n} appears twice"
                    )));
                }
            }
        }
        if !(thickness > 0.0) {
            return Err(CwError::Config("thickness must be positive".into()));
        }
        Ok(Self {
            name: name.into(),
            mesh,
            ports,
            material,
            thickness,
        })
    }

    pub fn num_ports(&self) -> usize {
        self.ports.len()
    }

    /// Material volume (mesh area times thickness).
    pub fn volume(&self) -> f64 {
        self.mesh.area() * self.thickness
    }
}
