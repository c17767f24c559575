//! Legacy-text VTK unstructured-grid export of per-component fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::fem::QuadMesh;
use crate::model::TransformationMap;

/// One instantiated component's fields, referenced for export.
pub struct ComponentField<'a> {
    pub mesh: &'a QuadMesh,
    pub map: &'a TransformationMap,
    /// nodal displacements, components interleaved
    pub displacement: &'a [f64],
    /// per-element Von Mises stress
    pub von_mises: &'a [f64],
    pub density: f64,
}

/// Write components into one unstructured-grid file. Nodes shared between
/// components along ports are duplicated, which viewers accept.
pub fn write_vtk_fields(path: &Path, title: &str, fields: &[ComponentField]) -> Result<()> {
    let total_nodes: usize = fields.iter().map(|f| f.mesh.num_nodes()).sum();
    let total_cells: usize = fields.iter().map(|f| f.mesh.num_elements()).sum();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {total_nodes} double");
    for f in fields {
        for p in f.mesh.nodes() {
            let q = f.map.apply(*p);
            let _ = writeln!(out, "{:.9e} {:.9e} 0.0", q[0], q[1]);
        }
    }
    let _ = writeln!(out, "CELLS {total_cells} {}", 5 * total_cells);
    let mut offset = 0usize;
    for f in fields {
        for conn in f.mesh.elements() {
            let _ = writeln!(
                out,
                "4 {} {} {} {}",
                conn[0] + offset,
                conn[1] + offset,
                conn[2] + offset,
                conn[3] + offset
            );
        }
        offset += f.mesh.num_nodes();
    }
    let _ = writeln!(out, "CELL_TYPES {total_cells}");
    for _ in 0..total_cells {
        out.push_str("9\n");
    }
    let _ = writeln!(out, "POINT_DATA {total_nodes}");
    out.push_str("VECTORS displacement double\n");
    for f in fields {
        for n in 0..f.mesh.num_nodes() {
            let _ = writeln!(
                out,
                "{:.9e} {:.9e} 0.0",
                f.displacement[2 * n],
                f.displacement[2 * n + 1]
            );
        }
    }
    let _ = writeln!(out, "CELL_DATA {total_cells}");
    out.push_str("SCALARS von_mises double 1\nLOOKUP_TABLE default\n");
    for f in fields {
        for v in f.von_mises {
            let _ = writeln!(out, "{v:.9e}");
        }
    }
    out.push_str("SCALARS density double 1\nLOOKUP_TABLE default\n");
    for f in fields {
        for _ in 0..f.mesh.num_elements() {
            let _ = writeln!(out, "{:.9e}", f.density);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TransformationMap;

    #[test]
    fn writes_well_formed_legacy_file() {
        let mesh = QuadMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2, 3]],
        )
        .unwrap();
        let map = TransformationMap::translation([0.5, 0.0]);
        let disp = vec![0.0; 8];
        let vm = vec![1.5];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.vtk");
        write_vtk_fields(
            &path,
            "test",
            &[ComponentField {
                mesh: &mesh,
                map: &map,
                displacement: &disp,
                von_mises: &vm,
                density: 0.7,
            }],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("CELLS 1 5"));
        assert!(text.contains("CELL_TYPES 1"));
        assert!(text.contains("VECTORS displacement double"));
        assert!(text.contains("SCALARS von_mises double 1"));
        // translated coordinates present
        assert!(text.contains("1.500000000e0"));
    }
}
