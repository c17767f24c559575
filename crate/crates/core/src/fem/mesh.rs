use std::collections::{BTreeMap, BTreeSet};

use crate::error::{CwError, Result};

use super::element::jacobian_at_gauss_points;

/// Quadrilateral mesh with counter-clockwise elements and named boundary
/// node sets.
#[derive(Debug, Clone)]
pub struct QuadMesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    boundary_tags: BTreeMap<String, BTreeSet<usize>>,
}

impl QuadMesh {
    /// Build a mesh, validating node indices and element Jacobians.
    pub fn new(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 4]>) -> Result<Self> {
        for (i, p) in nodes.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(CwError::Geometry(format!("node {i} has non-finite coordinates")));
            }
        }
        for (e, conn) in elements.iter().enumerate() {
            for &n in conn {
                if n >= nodes.len() {
                    return Err(CwError::Index(format!(
                        "element {e} references node {n} out of {}",
                        nodes.len()
                    )));
                }
            }
            let coords = [
                nodes[conn[0]],
                nodes[conn[1]],
                nodes[conn[2]],
                nodes[conn[3]],
            ];
            for det in jacobian_at_gauss_points(&coords) {
                if !(det > 0.0) {
                    return Err(CwError::Geometry(format!(
                        "element {e} has non-positive Jacobian determinant {det}"
                    )));
                }
            }
        }
        Ok(Self {
            nodes,
            elements,
            boundary_tags: BTreeMap::new(),
        })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Two scalar displacement dofs per node.
    pub fn num_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        let c = self.elements[e];
        [
            self.nodes[c[0]],
            self.nodes[c[1]],
            self.nodes[c[2]],
            self.nodes[c[3]],
        ]
    }

    pub fn tag_boundary(&mut self, name: &str, nodes: impl IntoIterator<Item = usize>) {
        self.boundary_tags
            .entry(name.to_string())
            .or_default()
            .extend(nodes);
    }

    pub fn boundary_tag(&self, name: &str) -> Option<&BTreeSet<usize>> {
        self.boundary_tags.get(name)
    }

    /// Total mesh area from the element Jacobians (2x2 Gauss, exact for
    /// bilinear geometry).
    pub fn area(&self) -> f64 {
        (0..self.elements.len())
            .map(|e| {
                let coords = self.element_coords(e);
                jacobian_at_gauss_points(&coords).iter().sum::<f64>()
            })
            .sum()
    }
}
