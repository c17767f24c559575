//! Procedural meshes for the two reference component shapes: a rectangular
//! strut and a chamfered-cross joint.
//!
//! All patches are built from shared edge-node arrays so coincident patch
//! boundaries are bit-identical and weld exactly. Ports carry one node row
//! and conform node-to-node across components meshed at the same port
//! resolution.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};
use crate::fem::{PlaneStressMaterial, QuadMesh};

use super::reference::{Port, ReferenceComponent};

/// Component geometry configuration (meters).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometryParams {
    /// Physical port length; all ports share it.
    pub port_length: f64,
    /// Strut length between its two end ports.
    pub strut_length: f64,
    /// Joint footprint side; ports are centered on each side and the four
    /// corners are chamfered at 45 degrees between port ends.
    pub joint_side: f64,
    /// Out-of-plane thickness for the plane-stress model.
    pub thickness: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            port_length: 0.01,
            strut_length: 0.05,
            // port length plus two 45-degree chamfer legs of port/sqrt(2):
            // reproduces the published cantilever compliance within 0.5%
            joint_side: 0.01 * (1.0 + std::f64::consts::SQRT_2),
            thickness: 1.0,
        }
    }
}

const WELD_SCALE: f64 = 1e12;

fn weld_key(p: [f64; 2]) -> (i64, i64) {
    ((p[0] * WELD_SCALE).round() as i64, (p[1] * WELD_SCALE).round() as i64)
}

/// Incremental mesh builder that merges coincident nodes.
struct MeshBuilder {
    nodes: Vec<[f64; 2]>,
    lookup: HashMap<(i64, i64), usize>,
    elements: Vec<[usize; 4]>,
}

type Grid = Vec<Vec<[f64; 2]>>; // grid[j][i], j = 0..=ny, i = 0..=nx

impl MeshBuilder {
    fn new() -> Self {
        Self {
            nodes: Vec::new(),
            lookup: HashMap::new(),
            elements: Vec::new(),
        }
    }

    fn node(&mut self, p: [f64; 2]) -> usize {
        *self.lookup.entry(weld_key(p)).or_insert_with(|| {
            self.nodes.push(p);
            self.nodes.len() - 1
        })
    }

    fn add_grid(&mut self, grid: &Grid) {
        let ny = grid.len() - 1;
        let nx = grid[0].len() - 1;
        // flip the i direction if the parametrization is left-handed
        let a = grid[0][0];
        let b = grid[0][nx];
        let c = grid[ny][0];
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let flip = det < 0.0;
        let ids: Vec<Vec<usize>> = grid
            .iter()
            .map(|row| {
                let mut r: Vec<usize> = row.iter().map(|&p| self.node(p)).collect();
                if flip {
                    r.reverse();
                }
                r
            })
            .collect();
        for j in 0..ny {
            for i in 0..nx {
                self.elements
                    .push([ids[j][i], ids[j][i + 1], ids[j + 1][i + 1], ids[j + 1][i]]);
            }
        }
    }

    fn finish(self) -> Result<(QuadMesh, HashMap<(i64, i64), usize>)> {
        let lookup = self.lookup.clone();
        Ok((QuadMesh::new(self.nodes, self.elements)?, lookup))
    }
}

/// Nodes of a straight edge split into `n` equal cells (n + 1 nodes).
fn edge_nodes(p0: [f64; 2], p1: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            [p0[0] + (p1[0] - p0[0]) * t, p0[1] + (p1[1] - p0[1]) * t]
        })
        .collect()
}

fn reversed(edge: &[[f64; 2]]) -> Vec<[f64; 2]> {
    edge.iter().rev().copied().collect()
}

/// Transfinite (Coons) patch from four boundary node arrays. Boundary rows
/// and columns are copied verbatim so shared edges remain bit-identical.
fn grid_from_edges(
    south: &[[f64; 2]],
    north: &[[f64; 2]],
    west: &[[f64; 2]],
    east: &[[f64; 2]],
) -> Grid {
    let nx = south.len() - 1;
    let ny = west.len() - 1;
    debug_assert_eq!(north.len(), nx + 1);
    debug_assert_eq!(east.len(), ny + 1);
    let p00 = south[0];
    let p10 = south[nx];
    let p01 = north[0];
    let p11 = north[nx];
    let mut grid: Grid = vec![vec![[0.0, 0.0]; nx + 1]; ny + 1];
    for j in 0..=ny {
        for i in 0..=nx {
            grid[j][i] = if j == 0 {
                south[i]
            } else if j == ny {
                north[i]
            } else if i == 0 {
                west[j]
            } else if i == nx {
                east[j]
            } else {
                let u = i as f64 / nx as f64;
                let v = j as f64 / ny as f64;
                let mut p = [0.0; 2];
                for d in 0..2 {
                    p[d] = (1.0 - v) * south[i][d] + v * north[i][d] + (1.0 - u) * west[j][d]
                        + u * east[j][d]
                        - ((1.0 - u) * (1.0 - v) * p00[d]
                            + u * (1.0 - v) * p10[d]
                            + u * v * p11[d]
                            + (1.0 - u) * v * p01[d]);
                }
                p
            };
        }
    }
    grid
}

/// Quad-mesh a triangle from three quad patches meeting at the centroid.
///
/// `leg_a`, `leg_b` run from the right-angle corner to the two far vertices
/// (m cells each); `hyp` runs between the far vertices (even cell count mm,
/// with mm = m or m - 1 to satisfy the quad-mesh parity constraint).
fn tri_grids(leg_a: &[[f64; 2]], leg_b: &[[f64; 2]], hyp: &[[f64; 2]]) -> Result<[Grid; 3]> {
    let m = leg_a.len() - 1;
    let mm = hyp.len() - 1;
    if leg_b.len() - 1 != m || mm % 2 != 0 || mm < 2 || mm > 2 * (m - 1).max(1) {
        return Err(CwError::Geometry(format!(
            "triangle patch with legs {m} and hypotenuse {mm} cells cannot be quad-meshed"
        )));
    }
    let s = mm / 2; // split distance from the right-angle corner along each leg
    let w = m - s; // interior edge cells toward the hypotenuse midpoint
    let c = leg_a[0];
    let a = leg_a[m];
    let b = leg_b[m];
    let o = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
    let m_ca = leg_a[s];
    let m_cb = leg_b[s];
    let m_ab = hyp[s];
    let e_ca_o = edge_nodes(m_ca, o, s);
    let e_cb_o = edge_nodes(m_cb, o, s);
    let e_ab_o = edge_nodes(m_ab, o, w);
    // quad at C: [C, M_ca, O, M_cb]
    let qc = grid_from_edges(&leg_a[..=s], &e_cb_o, &leg_b[..=s], &e_ca_o);
    // quad at A: [A, M_ab, O, M_ca]  (hyp runs A -> B so A->M_ab = hyp[..=s])
    let qa = grid_from_edges(&hyp[..=s], &e_ca_o, &reversed(&leg_a[s..]), &e_ab_o);
    // quad at B: [B, M_cb, O, M_ab]
    let qb = grid_from_edges(
        &reversed(&leg_b[s..]),
        &e_ab_o,
        &reversed(&hyp[s..]),
        &e_cb_o,
    );
    Ok([qc, qa, qb])
}

fn port_from_edge(builder_lookup: &HashMap<(i64, i64), usize>, edge: &[[f64; 2]]) -> Result<Port> {
    let mut nodes = Vec::with_capacity(edge.len());
    for &p in edge {
        let id = builder_lookup.get(&weld_key(p)).copied().ok_or_else(|| {
            CwError::Geometry(format!("port node at ({}, {}) missing from mesh", p[0], p[1]))
        })?;
        nodes.push(id);
    }
    Ok(Port::new(nodes))
}

/// Horizontal strut: a `length x port_length` rectangle with ports on the
/// two short ends, ordered [west, east]. `across_nodes` is the node count
/// across a port; the along-axis cell count keeps cells square by default.
pub fn make_strut(
    across_nodes: usize,
    params: &GeometryParams,
    material: PlaneStressMaterial,
) -> Result<ReferenceComponent> {
    let n = across_cells(across_nodes)?;
    let along = ((params.strut_length / params.port_length) * n as f64).round() as usize;
    make_strut_with(across_nodes, along.max(1), params, material)
}

/// Horizontal strut with an explicit along-axis cell count (allows
/// non-square cells, e.g. to reproduce particular element counts).
pub fn make_strut_with(
    across_nodes: usize,
    along_cells: usize,
    params: &GeometryParams,
    material: PlaneStressMaterial,
) -> Result<ReferenceComponent> {
    let n = across_cells(across_nodes)?;
    let p = params.port_length;
    let len = params.strut_length;
    let south = edge_nodes([0.0, 0.0], [len, 0.0], along_cells);
    let north = edge_nodes([0.0, p], [len, p], along_cells);
    let west = edge_nodes([0.0, 0.0], [0.0, p], n);
    let east = edge_nodes([len, 0.0], [len, p], n);
    let mut b = MeshBuilder::new();
    b.add_grid(&grid_from_edges(&south, &north, &west, &east));
    let (mesh, lookup) = b.finish()?;
    let ports = vec![port_from_edge(&lookup, &west)?, port_from_edge(&lookup, &east)?];
    ReferenceComponent::new("strut_h", mesh, ports, material, params.thickness)
}

/// Vertical strut, registered as its own reference component so that every
/// instantiation stays a pure translation. Ports ordered [south, north].
pub fn make_vertical_strut(
    across_nodes: usize,
    params: &GeometryParams,
    material: PlaneStressMaterial,
) -> Result<ReferenceComponent> {
    let n = across_cells(across_nodes)?;
    let along = (((params.strut_length / params.port_length) * n as f64).round() as usize).max(1);
    let p = params.port_length;
    let len = params.strut_length;
    let south = edge_nodes([0.0, 0.0], [p, 0.0], n);
    let north = edge_nodes([0.0, len], [p, len], n);
    let west = edge_nodes([0.0, 0.0], [0.0, len], along);
    let east = edge_nodes([p, 0.0], [p, len], along);
    let mut b = MeshBuilder::new();
    b.add_grid(&grid_from_edges(&south, &north, &west, &east));
    let (mesh, lookup) = b.finish()?;
    let ports = vec![port_from_edge(&lookup, &south)?, port_from_edge(&lookup, &north)?];
    ReferenceComponent::new("strut_v", mesh, ports, material, params.thickness)
}

/// Joint port order: [north, east, south, west].
pub const JOINT_PORT_N: usize = 0;
pub const JOINT_PORT_E: usize = 1;
pub const JOINT_PORT_S: usize = 2;
pub const JOINT_PORT_W: usize = 3;

/// Chamfered-cross joint: a square footprint with a port centered on each
/// side and 45-degree chamfers connecting adjacent port ends.
pub fn make_joint(
    across_nodes: usize,
    params: &GeometryParams,
    material: PlaneStressMaterial,
) -> Result<ReferenceComponent> {
    let n = across_cells(across_nodes)?;
    let p = params.port_length;
    let side = params.joint_side;
    let d = (side - p) / 2.0;
    if !(d > 0.0) {
        return Err(CwError::Config(format!(
            "joint_side {side} must exceed port_length {p}"
        )));
    }
    // arm depth cells; legs of the corner triangles need at least 2
    let m = ((d / p) * n as f64).round().max(2.0) as usize;
    let xs = [0.0, d, d + p, side];
    let pt = |i: usize, j: usize| [xs[i], xs[j]];
    let cnt = [m, n, m];

    // shared edge arrays of the 3x3 block layout
    let mut h: Vec<Vec<Option<Vec<[f64; 2]>>>> = vec![vec![None; 4]; 3];
    let mut v: Vec<Vec<Option<Vec<[f64; 2]>>>> = vec![vec![None; 3]; 4];
    for i in 0..3 {
        for j in 0..4 {
            h[i][j] = Some(edge_nodes(pt(i, j), pt(i + 1, j), cnt[i]));
        }
    }
    for i in 0..4 {
        for j in 0..3 {
            v[i][j] = Some(edge_nodes(pt(i, j), pt(i, j + 1), cnt[j]));
        }
    }
    let h = |i: usize, j: usize| h[i][j].as_ref().unwrap().as_slice();
    let v = |i: usize, j: usize| v[i][j].as_ref().unwrap().as_slice();

    let mut b = MeshBuilder::new();
    // center and four arms
    b.add_grid(&grid_from_edges(h(1, 1), h(1, 2), v(1, 1), v(2, 1)));
    b.add_grid(&grid_from_edges(h(0, 1), h(0, 2), v(0, 1), v(1, 1)));
    b.add_grid(&grid_from_edges(h(2, 1), h(2, 2), v(2, 1), v(3, 1)));
    b.add_grid(&grid_from_edges(h(1, 0), h(1, 1), v(1, 0), v(2, 0)));
    b.add_grid(&grid_from_edges(h(1, 2), h(1, 3), v(1, 2), v(2, 2)));

    // chamfered corners: (leg to side port end, leg to top/bottom port end)
    let mm = if m % 2 == 0 { m } else { m - 1 };
    let chamfer = |a: [f64; 2], bb: [f64; 2]| edge_nodes(a, bb, mm);
    let corners: [(Vec<[f64; 2]>, Vec<[f64; 2]>, Vec<[f64; 2]>); 4] = [
        // SW: C = (d, d), A = (0, d), B = (d, 0)
        (reversed(h(0, 1)), reversed(v(1, 0)), chamfer(pt(0, 1), pt(1, 0))),
        // NW: C = (d, d + p), A = (0, d + p), B = (d, side)
        (reversed(h(0, 2)), v(1, 2).to_vec(), chamfer(pt(0, 2), pt(1, 3))),
        // SE: C = (d + p, d), A = (side, d), B = (d + p, 0)
        (h(2, 1).to_vec(), reversed(v(2, 0)), chamfer(pt(3, 1), pt(2, 0))),
        // NE: C = (d + p, d + p), A = (side, d + p), B = (d + p, side)
        (h(2, 2).to_vec(), v(2, 2).to_vec(), chamfer(pt(3, 2), pt(2, 3))),
    ];
    for (leg_a, leg_b, hyp) in &corners {
        for g in tri_grids(leg_a, leg_b, hyp)? {
            b.add_grid(&g);
        }
    }

    let (mesh, lookup) = b.finish()?;
    let ports = vec![
        port_from_edge(&lookup, h(1, 3))?, // north
        port_from_edge(&lookup, v(3, 1))?, // east
        port_from_edge(&lookup, h(1, 0))?, // south
        port_from_edge(&lookup, v(0, 1))?, // west
    ];
    ReferenceComponent::new("joint", mesh, ports, material, params.thickness)
}

fn across_cells(across_nodes: usize) -> Result<usize> {
    if across_nodes < 2 {
        return Err(CwError::Config(format!(
            "port resolution must be at least 2 nodes, got {across_nodes}"
        )));
    }
    Ok(across_nodes - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat() -> PlaneStressMaterial {
        PlaneStressMaterial::new(69e9, 0.3).unwrap()
    }

    #[test]
    fn strut_has_two_ports_and_requested_element_count() {
        let params = GeometryParams::default();
        let s = make_strut_with(39, 100, &params, mat()).unwrap();
        assert_eq!(s.num_ports(), 2);
        assert_eq!(s.mesh.num_elements(), 3800);
        assert_eq!(s.ports[0].num_nodes(), 39);
        assert_eq!(s.ports[0].num_dofs(), 78);
    }

    #[test]
    fn strut_square_cells_by_default() {
        let s = make_strut(9, &GeometryParams::default(), mat()).unwrap();
        // 8 across x 40 along
        assert_eq!(s.mesh.num_elements(), 320);
        assert!((s.mesh.area() - 0.05 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn joint_has_four_ports_and_chamfered_area() {
        let params = GeometryParams::default();
        for across in [5usize, 8, 9] {
            let j = make_joint(across, &params, mat()).unwrap();
            assert_eq!(j.num_ports(), 4);
            for port in &j.ports {
                assert_eq!(port.num_nodes(), across);
                assert!((port.length(&j.mesh) - 0.01).abs() < 1e-12);
            }
            // footprint minus four chamfer triangles with leg d
            let d = (params.joint_side - params.port_length) / 2.0;
            let area = params.joint_side.powi(2) - 2.0 * d * d;
            assert!(
                (j.mesh.area() - area).abs() < 1e-10 * area,
                "area {} vs {area}",
                j.mesh.area()
            );
        }
    }

    #[test]
    fn rejects_tiny_resolution() {
        let params = GeometryParams::default();
        assert!(matches!(
            make_strut(1, &params, mat()),
            Err(CwError::Config(_))
        ));
        assert!(matches!(
            make_joint(1, &params, mat()),
            Err(CwError::Config(_))
        ));
    }

    #[test]
    fn joint_and_strut_ports_conform() {
        let params = GeometryParams::default();
        let j = make_joint(9, &params, mat()).unwrap();
        let s = make_strut(9, &params, mat()).unwrap();
        // joint east port shifted to origin must coincide with strut west port
        let je = j.ports[JOINT_PORT_E].coords(&j.mesh);
        let sw = s.ports[0].coords(&s.mesh);
        let d = (params.joint_side - params.port_length) / 2.0;
        for (a, b) in je.iter().zip(&sw) {
            assert!((a[0] - params.joint_side - b[0]).abs() < 1e-12);
            assert!((a[1] - d - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn port_ordering_is_canonical() {
        let j = make_joint(6, &GeometryParams::default(), mat()).unwrap();
        for port in &j.ports {
            let c = port.coords(&j.mesh);
            let first = c.first().unwrap();
            let last = c.last().unwrap();
            assert!(
                (first[0], first[1]) < (last[0], last[1]),
                "port endpoints out of lexicographic order"
            );
            // strictly monotone along the port
            for w in c.windows(2) {
                assert!((w[0][0], w[0][1]) < (w[1][0], w[1][1]));
            }
        }
    }

    #[test]
    fn odd_arm_resolution_still_meshes() {
        // odd cell counts exercise the reduced-parity chamfer edge
        let j = make_joint(8, &GeometryParams::default(), mat()).unwrap();
        assert!(j.mesh.num_elements() > 0);
    }
}
