use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{CwError, Result};

use super::geometry::GeometryParams;
use super::reference::ReferenceComponent;
use super::transform::TransformationMap;

/// Positional tolerance for deciding that two instantiated ports coincide.
pub const PORT_MATCH_TOL: f64 = 1e-9;

/// One instantiated component: a library entry plus its placement.
#[derive(Debug, Clone)]
pub struct Instance {
    pub reference: usize,
    pub map: TransformationMap,
}

/// A (component, local port) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortRef {
    pub instance: usize,
    pub port: usize,
}

/// One global port: a coincident pair of local ports in the interior, or a
/// single local port on the system boundary.
#[derive(Debug, Clone)]
pub struct GlobalPort {
    pub members: Vec<PortRef>,
    pub dirichlet: bool,
    /// Constant traction (N/m) applied along the port, if any.
    pub traction: Option<[f64; 2]>,
}

/// Instantiated components, their connectivity sets, and boundary data.
#[derive(Debug, Clone)]
pub struct SystemTopology {
    pub instances: Vec<Instance>,
    pub global_ports: Vec<GlobalPort>,
    /// instance index -> local port index -> global port index
    port_of: Vec<Vec<usize>>,
}

impl SystemTopology {
    /// Construct connectivity by geometric coincidence of instantiated
    /// port node sequences.
    pub fn build(library: &[ReferenceComponent], instances: Vec<Instance>) -> Result<Self> {
        for inst in &instances {
            if inst.reference >= library.len() {
                return Err(CwError::Index(format!(
                    "instance references library entry {} of {}",
                    inst.reference,
                    library.len()
                )));
            }
        }
        // bucket ports by quantized midpoint (global ports are far apart
        // compared to the matching tolerance)
        let quant = 1e-6;
        let mut buckets: HashMap<(i64, i64), Vec<PortRef>> = HashMap::new();
        let mut coords: Vec<Vec<Vec<[f64; 2]>>> = Vec::with_capacity(instances.len());
        for (i, inst) in instances.iter().enumerate() {
            let rc = &library[inst.reference];
            let mut per_port = Vec::with_capacity(rc.ports.len());
            for (j, port) in rc.ports.iter().enumerate() {
                let pts: Vec<[f64; 2]> = port
                    .coords(&rc.mesh)
                    .iter()
                    .map(|&p| inst.map.apply(p))
                    .collect();
                let first = pts[0];
                let last = pts[pts.len() - 1];
                let mid = [(first[0] + last[0]) / 2.0, (first[1] + last[1]) / 2.0];
                let key = ((mid[0] / quant).round() as i64, (mid[1] / quant).round() as i64);
                buckets.entry(key).or_default().push(PortRef { instance: i, port: j });
                per_port.push(pts);
            }
            coords.push(per_port);
        }

        let mut global_ports: Vec<GlobalPort> = Vec::new();
        let mut port_of: Vec<Vec<usize>> =
            instances.iter().map(|inst| vec![usize::MAX; library[inst.reference].ports.len()]).collect();
        let mut keys: Vec<(i64, i64)> = buckets.keys().copied().collect();
        keys.sort();
        for key in keys {
            let members = &buckets[&key];
            match members.len() {
                1 => {
                    port_of[members[0].instance][members[0].port] = global_ports.len();
                    global_ports.push(GlobalPort {
                        members: members.clone(),
                        dirichlet: false,
                        traction: None,
                    });
                }
                2 => {
                    let a = &coords[members[0].instance][members[0].port];
                    let b = &coords[members[1].instance][members[1].port];
                    if a.len() != b.len() {
                        return Err(CwError::Topology(format!(
                            "paired ports have {} and {} nodes; port discretizations must match",
                            a.len(),
                            b.len()
                        )));
                    }
                    for (pa, pb) in a.iter().zip(b) {
                        let d = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
                        if d > PORT_MATCH_TOL {
                            return Err(CwError::Topology(format!(
                                "paired port nodes deviate by {d:.3e} m"
                            )));
                        }
                    }
                    for m in members {
                        port_of[m.instance][m.port] = global_ports.len();
                    }
                    global_ports.push(GlobalPort {
                        members: members.clone(),
                        dirichlet: false,
                        traction: None,
                    });
                }
                n => {
                    return Err(CwError::Topology(format!(
                        "{n} local ports coincide near bucket {key:?}; at most two may share a port"
                    )));
                }
            }
        }
        Ok(Self {
            instances,
            global_ports,
            port_of,
        })
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn num_global_ports(&self) -> usize {
        self.global_ports.len()
    }

    /// Global port index for a local (instance, port) pair.
    pub fn global_port(&self, instance: usize, port: usize) -> usize {
        self.port_of[instance][port]
    }

    /// Instantiated coordinates of a global port's nodes (canonical order).
    pub fn port_coords(&self, library: &[ReferenceComponent], g: usize) -> Vec<[f64; 2]> {
        let m = self.global_ports[g].members[0];
        let inst = &self.instances[m.instance];
        let rc = &library[inst.reference];
        rc.ports[m.port]
            .coords(&rc.mesh)
            .iter()
            .map(|&p| inst.map.apply(p))
            .collect()
    }

    /// Find the global port whose midpoint is nearest to `point`.
    pub fn find_port_near(
        &self,
        library: &[ReferenceComponent],
        point: [f64; 2],
        tol: f64,
    ) -> Result<usize> {
        let mut best = (f64::INFINITY, usize::MAX);
        for g in 0..self.global_ports.len() {
            let pts = self.port_coords(library, g);
            let mid = [
                (pts[0][0] + pts[pts.len() - 1][0]) / 2.0,
                (pts[0][1] + pts[pts.len() - 1][1]) / 2.0,
            ];
            let d = ((mid[0] - point[0]).powi(2) + (mid[1] - point[1]).powi(2)).sqrt();
            if d < best.0 {
                best = (d, g);
            }
        }
        if best.0 > tol {
            return Err(CwError::Topology(format!(
                "no port found near ({}, {}); nearest is {:.3e} m away",
                point[0], point[1], best.0
            )));
        }
        Ok(best.1)
    }

    pub fn set_dirichlet(&mut self, g: usize) {
        self.global_ports[g].dirichlet = true;
    }

    pub fn set_traction(&mut self, g: usize, t: [f64; 2]) {
        self.global_ports[g].traction = Some(t);
    }

    /// Component volumes, thickness-scaled.
    pub fn volumes(&self, library: &[ReferenceComponent]) -> Vec<f64> {
        self.instances
            .iter()
            .map(|inst| library[inst.reference].volume())
            .collect()
    }
}

/// Map from (instance, local port, basis index) to a condensed dof index.
/// Dirichlet ports are excluded.
#[derive(Debug, Clone)]
pub struct PortDofMap {
    /// per global port: Some(offset) into the condensed vector, or None if
    /// the port is eliminated by a Dirichlet condition
    offsets: Vec<Option<usize>>,
    sizes: Vec<usize>,
    total: usize,
}

impl PortDofMap {
    /// `sizes[g]` is the number of active basis functions on global port g.
    pub fn new(topology: &SystemTopology, sizes: &[usize]) -> Self {
        assert_eq!(sizes.len(), topology.num_global_ports());
        let mut offsets = vec![None; sizes.len()];
        let mut total = 0;
        for (g, gp) in topology.global_ports.iter().enumerate() {
            if !gp.dirichlet {
                offsets[g] = Some(total);
                total += sizes[g];
            }
        }
        Self {
            offsets,
            sizes: sizes.to_vec(),
            total,
        }
    }

    pub fn total_dofs(&self) -> usize {
        self.total
    }

    pub fn port_size(&self, g: usize) -> usize {
        self.sizes[g]
    }

    /// Condensed block offset of global port `g`, None when eliminated.
    pub fn port_offset(&self, g: usize) -> Option<usize> {
        self.offsets[g]
    }

    /// Condensed dof for basis function `k` of local port (i, j).
    pub fn dof(&self, topology: &SystemTopology, i: usize, j: usize, k: usize) -> Option<usize> {
        let g = topology.global_port(i, j);
        debug_assert!(k < self.sizes[g]);
        self.offsets[g].map(|o| o + k)
    }
}

/// Sides of a rectangular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Selects a boundary port on a lattice side; `index` counts rows (left and
/// right sides) or columns (bottom and top), zero-based from bottom-left.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryPortSel {
    pub side: Side,
    pub index: usize,
}

/// Rectangular lattice description: joints on a `cols x rows` grid of
/// vertices, struts on every edge, optional stub struts extending outward
/// from one or more sides, Dirichlet ports and port tractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub cols: usize,
    pub rows: usize,
    #[serde(default)]
    pub stub_struts: Vec<Side>,
    #[serde(default)]
    pub dirichlet: Vec<BoundaryPortSel>,
    #[serde(default)]
    pub loads: Vec<(BoundaryPortSel, [f64; 2])>,
}

/// Library slots expected by `build_lattice`.
#[derive(Debug, Clone, Copy)]
pub struct LatticeRefs {
    pub joint: usize,
    pub hstrut: usize,
    pub vstrut: usize,
}

/// Assemble a lattice topology from the grid description.
///
/// Joint (c, r) sits at (c * pitch, r * pitch) with pitch = joint_side +
/// strut_length; struts fill every horizontal and vertical edge.
pub fn build_lattice(
    library: &[ReferenceComponent],
    refs: LatticeRefs,
    spec: &LatticeSpec,
    geo: &GeometryParams,
) -> Result<SystemTopology> {
    if spec.cols < 1 || spec.rows < 1 {
        return Err(CwError::Config("lattice needs at least one joint".into()));
    }
    let side = geo.joint_side;
    let len = geo.strut_length;
    let d = (side - geo.port_length) / 2.0;
    let pitch = side + len;
    let mut instances = Vec::new();
    let at = |x: f64, y: f64| TransformationMap::translation([x, y]);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            instances.push(Instance {
                reference: refs.joint,
                map: at(c as f64 * pitch, r as f64 * pitch),
            });
        }
    }
    for r in 0..spec.rows {
        for c in 0..spec.cols.saturating_sub(1) {
            instances.push(Instance {
                reference: refs.hstrut,
                map: at(c as f64 * pitch + side, r as f64 * pitch + d),
            });
        }
    }
    for r in 0..spec.rows.saturating_sub(1) {
        for c in 0..spec.cols {
            instances.push(Instance {
                reference: refs.vstrut,
                map: at(c as f64 * pitch + d, r as f64 * pitch + side),
            });
        }
    }
    for &s in &spec.stub_struts {
        match s {
            Side::Left => {
                for r in 0..spec.rows {
                    instances.push(Instance {
                        reference: refs.hstrut,
                        map: at(-len, r as f64 * pitch + d),
                    });
                }
            }
            Side::Right => {
                for r in 0..spec.rows {
                    instances.push(Instance {
                        reference: refs.hstrut,
                        map: at((spec.cols - 1) as f64 * pitch + side, r as f64 * pitch + d),
                    });
                }
            }
            Side::Bottom => {
                for c in 0..spec.cols {
                    instances.push(Instance {
                        reference: refs.vstrut,
                        map: at(c as f64 * pitch + d, -len),
                    });
                }
            }
            Side::Top => {
                for c in 0..spec.cols {
                    instances.push(Instance {
                        reference: refs.vstrut,
                        map: at(c as f64 * pitch + d, (spec.rows - 1) as f64 * pitch + side),
                    });
                }
            }
        }
    }
    let mut topo = SystemTopology::build(library, instances)?;

    // boundary port midpoints, accounting for stubs
    let has_stub = |s: Side| spec.stub_struts.contains(&s);
    let midpoint = |sel: &BoundaryPortSel| -> Result<[f64; 2]> {
        let (max_idx, along_rows) = match sel.side {
            Side::Left | Side::Right => (spec.rows, true),
            Side::Bottom | Side::Top => (spec.cols, false),
        };
        if sel.index >= max_idx {
            return Err(CwError::Config(format!(
                "boundary port index {} out of range {max_idx}",
                sel.index
            )));
        }
        let lane = sel.index as f64 * pitch + d + geo.port_length / 2.0;
        Ok(match sel.side {
            Side::Left => [if has_stub(Side::Left) { -len } else { 0.0 }, lane],
            Side::Right => {
                let x0 = (spec.cols - 1) as f64 * pitch + side;
                [if has_stub(Side::Right) { x0 + len } else { x0 }, lane]
            }
            Side::Bottom => [lane, if has_stub(Side::Bottom) { -len } else { 0.0 }],
            Side::Top => {
                let y0 = (spec.rows - 1) as f64 * pitch + side;
                [lane, if has_stub(Side::Top) { y0 + len } else { y0 }]
            }
        })
        .map(|p| if along_rows { p } else { p })
    };
    for sel in &spec.dirichlet {
        let g = topo.find_port_near(library, midpoint(sel)?, 1e-6)?;
        topo.set_dirichlet(g);
    }
    for (sel, t) in &spec.loads {
        let g = topo.find_port_near(library, midpoint(sel)?, 1e-6)?;
        if topo.global_ports[g].dirichlet {
            return Err(CwError::Config(
                "a port cannot carry both a Dirichlet condition and a traction".into(),
            ));
        }
        topo.set_traction(g, *t);
    }
    Ok(topo)
}
