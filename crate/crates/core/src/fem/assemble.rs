use crate::error::{CwError, Result};

use super::element::{element_mass, element_stiffness, shape_derivs, GAUSS_2X2};
use super::material::PlaneStressMaterial;
use super::mesh::QuadMesh;
use super::sparse::SparseSpdMatrix;

/// Assemble the global stiffness matrix, `K = sum_e scale_e * K_e`.
///
/// `scale` holds one positive factor per element (density interpolation);
/// pass all ones for the unscaled operator.
pub fn assemble(
    mesh: &QuadMesh,
    mat: &PlaneStressMaterial,
    thickness: f64,
    scale: &[f64],
) -> Result<SparseSpdMatrix> {
    if scale.len() != mesh.num_elements() {
        return Err(CwError::Contract(format!(
            "scale length {} does not match element count {}",
            scale.len(),
            mesh.num_elements()
        )));
    }
    let mut triplets = Vec::with_capacity(mesh.num_elements() * 64);
    for e in 0..mesh.num_elements() {
        let coords = mesh.element_coords(e);
        let ke = element_stiffness(&coords, mat, thickness)?;
        let conn = mesh.elements()[e];
        let s = scale[e];
        for a in 0..4 {
            for ca in 0..2 {
                let row = 2 * conn[a] + ca;
                for b in 0..4 {
                    for cb in 0..2 {
                        let col = 2 * conn[b] + cb;
                        let v = s * ke[(2 * a + ca, 2 * b + cb)];
                        if v != 0.0 {
                            triplets.push((row, col, v));
                        }
                    }
                }
            }
        }
    }
    SparseSpdMatrix::from_triplets(mesh.num_dofs(), &triplets)
}

/// Assemble the consistent mass matrix (unit density, thickness-scaled),
/// used for area-weighted L2 inner products of displacement fields.
pub fn assemble_mass(mesh: &QuadMesh, thickness: f64) -> Result<SparseSpdMatrix> {
    let mut triplets = Vec::with_capacity(mesh.num_elements() * 64);
    for e in 0..mesh.num_elements() {
        let coords = mesh.element_coords(e);
        let me = element_mass(&coords, thickness)?;
        let conn = mesh.elements()[e];
        for a in 0..4 {
            for ca in 0..2 {
                let row = 2 * conn[a] + ca;
                for b in 0..4 {
                    for cb in 0..2 {
                        let v = me[(2 * a + ca, 2 * b + cb)];
                        if v != 0.0 {
                            triplets.push((row, 2 * conn[b] + cb, v));
                        }
                    }
                }
            }
        }
    }
    SparseSpdMatrix::from_triplets(mesh.num_dofs(), &triplets)
}

/// Assemble the component-wise scalar Laplacian acting on both displacement
/// components independently.
pub fn assemble_laplace(mesh: &QuadMesh) -> Result<SparseSpdMatrix> {
    let mut triplets = Vec::with_capacity(mesh.num_elements() * 32);
    for e in 0..mesh.num_elements() {
        let coords = mesh.element_coords(e);
        let conn = mesh.elements()[e];
        let mut le = [[0.0; 4]; 4];
        for gp in GAUSS_2X2 {
            let d = shape_derivs(gp[0], gp[1]);
            let mut j = [[0.0; 2]; 2];
            for a in 0..4 {
                j[0][0] += d[a][0] * coords[a][0];
                j[0][1] += d[a][0] * coords[a][1];
                j[1][0] += d[a][1] * coords[a][0];
                j[1][1] += d[a][1] * coords[a][1];
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(CwError::Geometry(format!(
                    "element {e} has non-positive Jacobian"
                )));
            }
            let inv = [
                [j[1][1] / det, -j[0][1] / det],
                [-j[1][0] / det, j[0][0] / det],
            ];
            let grads: Vec<[f64; 2]> = (0..4)
                .map(|a| {
                    [
                        inv[0][0] * d[a][0] + inv[0][1] * d[a][1],
                        inv[1][0] * d[a][0] + inv[1][1] * d[a][1],
                    ]
                })
                .collect();
            for a in 0..4 {
                for b in 0..4 {
                    le[a][b] += (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]) * det;
                }
            }
        }
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..2 {
                    triplets.push((2 * conn[a] + c, 2 * conn[b] + c, le[a][b]));
                }
            }
        }
    }
    SparseSpdMatrix::from_triplets(mesh.num_dofs(), &triplets)
}

/// Consistent 1D integration weights along a polyline of node coordinates:
/// `sum_i w_i f_i` equals the integral of the piecewise-linear interpolant.
pub fn lumped_port_weights(coords: &[[f64; 2]]) -> Vec<f64> {
    let n = coords.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let dx = coords[i + 1][0] - coords[i][0];
        let dy = coords[i + 1][1] - coords[i][1];
        let h = (dx * dx + dy * dy).sqrt();
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sparse::{apply_dirichlet, solve_spd};

    fn grid_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> QuadMesh {
        let mut nodes = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
            }
        }
        let mut elements = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let n0 = j * (nx + 1) + i;
                elements.push([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]);
            }
        }
        QuadMesh::new(nodes, elements).unwrap()
    }

    #[test]
    fn single_element_equals_element_stiffness() {
        let mesh = grid_mesh(1, 1, 1.0, 1.0);
        let mat = PlaneStressMaterial::new(2.0, 0.3).unwrap();
        let k = assemble(&mesh, &mat, 1.0, &[1.0]).unwrap();
        let ke = element_stiffness(&mesh.element_coords(0), &mat, 1.0).unwrap();
        let kd = k.to_dense();
        let conn = mesh.elements()[0];
        for a in 0..4 {
            for b in 0..4 {
                for ca in 0..2 {
                    for cb in 0..2 {
                        let g = kd[(2 * conn[a] + ca, 2 * conn[b] + cb)];
                        let l = ke[(2 * a + ca, 2 * b + cb)];
                        assert_eq!(g, l);
                    }
                }
            }
        }
    }

    #[test]
    fn assembled_matrix_exactly_symmetric() {
        let mesh = grid_mesh(3, 2, 1.0, 0.7);
        let mat = PlaneStressMaterial::new(1.0e6, 0.3).unwrap();
        let scale: Vec<f64> = (0..6).map(|e| 0.5 + e as f64 * 0.1).collect();
        let k = assemble(&mesh, &mat, 1.0, &scale).unwrap();
        assert_eq!(k.asymmetry(), 0.0);
    }

    #[test]
    fn annihilates_rigid_translations() {
        let mesh = grid_mesh(4, 3, 2.0, 1.5);
        let mat = PlaneStressMaterial::new(69e9, 0.3).unwrap();
        let k = assemble(&mesh, &mat, 1.0, &vec![1.0; 12]).unwrap();
        let n = mesh.num_dofs();
        for c in 0..2 {
            let r: Vec<f64> = (0..n).map(|d| if d % 2 == c { 1.0 } else { 0.0 }).collect();
            let kr = k.matvec(&r);
            let worst = kr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst <= 1e-10 * k.max_abs());
        }
    }

    /// Patch test: a 2x2 patch under affine boundary displacement reproduces
    /// the constant-strain field to machine precision.
    #[test]
    fn patch_test_constant_strain() {
        let mesh = grid_mesh(2, 2, 1.0, 1.0);
        let mat = PlaneStressMaterial::new(100.0, 0.3).unwrap();
        let k = assemble(&mesh, &mat, 1.0, &vec![1.0; 4]).unwrap();
        // affine field u = A x + b
        let a = [[0.02, 0.01], [-0.005, 0.03]];
        let exact: Vec<f64> = mesh
            .nodes()
            .iter()
            .flat_map(|p| {
                [
                    a[0][0] * p[0] + a[0][1] * p[1] + 0.001,
                    a[1][0] * p[0] + a[1][1] * p[1] - 0.002,
                ]
            })
            .collect();
        // fix all boundary nodes to the affine values, solve for the interior
        let mut fixed = Vec::new();
        for (i, p) in mesh.nodes().iter().enumerate() {
            let on_boundary = p[0] < 1e-12 || p[0] > 1.0 - 1e-12 || p[1] < 1e-12 || p[1] > 1.0 - 1e-12;
            if on_boundary {
                fixed.push((2 * i, exact[2 * i]));
                fixed.push((2 * i + 1, exact[2 * i + 1]));
            }
        }
        let f = vec![0.0; mesh.num_dofs()];
        let (kr, fr, red) = apply_dirichlet(&k, &f, &fixed).unwrap();
        let u = solve_spd(&kr, &fr).unwrap();
        let full = red.recover(&u);
        for d in 0..mesh.num_dofs() {
            assert!(
                (full[d] - exact[d]).abs() <= 1e-10 * 0.03,
                "dof {d}: {} vs {}",
                full[d],
                exact[d]
            );
        }
    }

    #[test]
    fn cantilever_tip_matches_dense_oracle() {
        // 1-element square fixed on the left edge, unit traction on the right.
        let mesh = grid_mesh(1, 1, 1.0, 1.0);
        let mat = PlaneStressMaterial::new(10.0, 0.25).unwrap();
        let k = assemble(&mesh, &mat, 1.0, &[1.0]).unwrap();
        let mut f = vec![0.0; 8];
        // consistent load for unit x-traction on the right edge (nodes 1, 2)
        f[2] = 0.5;
        f[4] = 0.5;
        let fixed = [(0, 0.0), (1, 0.0), (6, 0.0), (7, 0.0)];
        let (kr, fr, red) = apply_dirichlet(&k, &f, &fixed).unwrap();
        let u = red.recover(&solve_spd(&kr, &fr).unwrap());

        let kd = k.to_dense();
        let keep = [2usize, 3, 4, 5];
        let mut kdd = nalgebra::DMatrix::zeros(4, 4);
        let mut fd = nalgebra::DVector::zeros(4);
        for (i, &r) in keep.iter().enumerate() {
            fd[i] = f[r];
            for (j, &c) in keep.iter().enumerate() {
                kdd[(i, j)] = kd[(r, c)];
            }
        }
        let ud = kdd.cholesky().unwrap().solve(&fd);
        for (i, &d) in keep.iter().enumerate() {
            assert!((u[d] - ud[i]).abs() <= 1e-12 * ud.amax());
        }
    }

    #[test]
    fn port_weights_integrate_linear_functions() {
        let coords: Vec<[f64; 2]> = (0..=10).map(|i| [0.0, 0.01 * i as f64 / 10.0]).collect();
        let w = lumped_port_weights(&coords);
        let total: f64 = w.iter().sum();
        assert!((total - 0.01).abs() < 1e-15);
        // integral of f(y) = y over [0, 0.01] is 5e-5
        let int: f64 = w
            .iter()
            .zip(&coords)
            .map(|(wi, p)| wi * p[1])
            .sum();
        assert!((int - 5e-5).abs() < 1e-18);
    }

    #[test]
    fn mass_matrix_integrates_area() {
        let mesh = grid_mesh(3, 3, 0.5, 0.25);
        let m = assemble_mass(&mesh, 2.0).unwrap();
        let ones_x: Vec<f64> = (0..mesh.num_dofs())
            .map(|d| if d % 2 == 0 { 1.0 } else { 0.0 })
            .collect();
        let v = m.matvec(&ones_x);
        let total: f64 = v.iter().zip(&ones_x).map(|(a, b)| a * b).sum();
        // area * thickness = 0.125 * 2
        assert!((total - 0.25).abs() < 1e-12);
    }
}
