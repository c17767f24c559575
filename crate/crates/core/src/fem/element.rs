use nalgebra::{Matrix3, SMatrix, SVector};

use crate::error::{CwError, Result};

use super::material::PlaneStressMaterial;

/// 2x2 Gauss points on [-1, 1]^2, weight 1 each.
pub const GAUSS_2X2: [[f64; 2]; 4] = {
    const G: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)
    [[-G, -G], [G, -G], [G, G], [-G, G]]
};

/// Bilinear shape functions at (xi, eta).
pub(crate) fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ]
}

/// Shape function derivatives with respect to (xi, eta).
pub(crate) fn shape_derivs(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ]
}

/// Jacobian matrix of the isoparametric map at (xi, eta).
fn jacobian(coords: &[[f64; 2]; 4], xi: f64, eta: f64) -> [[f64; 2]; 2] {
    let d = shape_derivs(xi, eta);
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        j[0][0] += d[a][0] * coords[a][0];
        j[0][1] += d[a][0] * coords[a][1];
        j[1][0] += d[a][1] * coords[a][0];
        j[1][1] += d[a][1] * coords[a][1];
    }
    j
}

/// Jacobian determinants at the four 2x2 Gauss points.
pub(crate) fn jacobian_at_gauss_points(coords: &[[f64; 2]; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (k, gp) in GAUSS_2X2.iter().enumerate() {
        let j = jacobian(coords, gp[0], gp[1]);
        out[k] = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    }
    out
}

/// Strain-displacement matrix and Jacobian determinant at (xi, eta).
fn b_matrix(coords: &[[f64; 2]; 4], xi: f64, eta: f64) -> Result<(SMatrix<f64, 3, 8>, f64)> {
    let j = jacobian(coords, xi, eta);
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if !(det > 0.0) {
        return Err(CwError::Geometry(format!(
            "non-positive Jacobian determinant {det}"
        )));
    }
    let inv = [
        [j[1][1] / det, -j[0][1] / det],
        [-j[1][0] / det, j[0][0] / det],
    ];
    let d = shape_derivs(xi, eta);
    let mut b = SMatrix::<f64, 3, 8>::zeros();
    for a in 0..4 {
        let dx = inv[0][0] * d[a][0] + inv[0][1] * d[a][1];
        let dy = inv[1][0] * d[a][0] + inv[1][1] * d[a][1];
        b[(0, 2 * a)] = dx;
        b[(1, 2 * a + 1)] = dy;
        b[(2, 2 * a)] = dy;
        b[(2, 2 * a + 1)] = dx;
    }
    Ok((b, det))
}

/// Q1 plane-stress element stiffness (8x8, dofs interleaved per node).
pub fn element_stiffness(
    coords: &[[f64; 2]; 4],
    mat: &PlaneStressMaterial,
    thickness: f64,
) -> Result<SMatrix<f64, 8, 8>> {
    let d = mat.constitutive();
    let mut k = SMatrix::<f64, 8, 8>::zeros();
    for gp in GAUSS_2X2 {
        let (b, det) = b_matrix(coords, gp[0], gp[1])?;
        k += b.transpose() * d * b * (det * thickness);
    }
    // symmetrize: B^T D B accumulation is symmetric only up to rounding
    k = (k + k.transpose()) * 0.5;
    Ok(k)
}

/// Consistent element mass for area-weighted L2 inner products
/// (unit density; scaled by thickness).
pub fn element_mass(coords: &[[f64; 2]; 4], thickness: f64) -> Result<SMatrix<f64, 8, 8>> {
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    for gp in GAUSS_2X2 {
        let n = shape(gp[0], gp[1]);
        let j = jacobian(coords, gp[0], gp[1]);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det > 0.0) {
            return Err(CwError::Geometry(format!(
                "non-positive Jacobian determinant {det}"
            )));
        }
        for a in 0..4 {
            for b in 0..4 {
                let v = n[a] * n[b] * det * thickness;
                m[(2 * a, 2 * b)] += v;
                m[(2 * a + 1, 2 * b + 1)] += v;
            }
        }
    }
    Ok(m)
}

/// Stress [sig_xx, sig_yy, tau_xy] at element center from nodal displacements.
pub fn element_stress(
    coords: &[[f64; 2]; 4],
    mat: &PlaneStressMaterial,
    u: &SVector<f64, 8>,
) -> Result<SVector<f64, 3>> {
    let (b, _) = b_matrix(coords, 0.0, 0.0)?;
    let d: Matrix3<f64> = mat.constitutive();
    Ok(d * b * u)
}

/// Plane-stress Von Mises equivalent stress.
pub fn von_mises_2d(s: &SVector<f64, 3>) -> f64 {
    let (sx, sy, t) = (s[0], s[1], s[2]);
    (sx * sx - sx * sy + sy * sy + 3.0 * t * t).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SMatrix;

    fn unit_square() -> [[f64; 2]; 4] {
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    /// Independent oracle: same integrand evaluated with 10x10 Gauss quadrature.
    fn stiffness_oracle(
        coords: &[[f64; 2]; 4],
        mat: &PlaneStressMaterial,
        thickness: f64,
    ) -> SMatrix<f64, 8, 8> {
        // 10-point Gauss-Legendre nodes/weights on [-1, 1].
        let (pts, wts) = gauss_legendre_10();
        let d = mat.constitutive();
        let mut k = SMatrix::<f64, 8, 8>::zeros();
        for (i, &xi) in pts.iter().enumerate() {
            for (j, &eta) in pts.iter().enumerate() {
                let (b, det) = b_matrix(coords, xi, eta).unwrap();
                k += b.transpose() * d * b * (det * thickness * wts[i] * wts[j]);
            }
        }
        k
    }

    fn gauss_legendre_10() -> ([f64; 10], [f64; 10]) {
        // Roots of P_10 by Newton iteration on Legendre recurrence.
        let mut pts = [0.0; 10];
        let mut wts = [0.0; 10];
        let n = 10usize;
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_pair(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_pair(n, x);
            pts[i] = x;
            wts[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (pts, wts)
    }

    fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    }

    #[test]
    fn rigid_translation_nullspace() {
        let mat = PlaneStressMaterial::new(3.0e7, 0.25).unwrap();
        let coords = [[0.1, -0.2], [1.3, 0.0], [1.1, 1.2], [-0.1, 0.9]];
        let k = element_stiffness(&coords, &mat, 1.0).unwrap();
        let tx = SVector::<f64, 8>::from_fn(|i, _| if i % 2 == 0 { 1.0 } else { 0.0 });
        let ty = SVector::<f64, 8>::from_fn(|i, _| if i % 2 == 1 { 1.0 } else { 0.0 });
        let scale = k.amax();
        assert!((k * tx).amax() <= 1e-12 * scale);
        assert!((k * ty).amax() <= 1e-12 * scale);
    }

    #[test]
    fn three_zero_eigenvalues() {
        let mat = PlaneStressMaterial::new(1.0, 0.3).unwrap();
        let k = element_stiffness(&unit_square(), &mat, 1.0).unwrap();
        let eig = nalgebra::SymmetricEigen::new(k);
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let zero = ev.iter().filter(|&&v| v.abs() < 1e-12).count();
        assert_eq!(zero, 3, "eigenvalues: {ev:?}");
        assert!(ev[0] > -1e-12);
    }

    #[test]
    fn linear_in_young_modulus() {
        let coords = [[0.0, 0.0], [2.0, 0.1], [2.2, 1.4], [-0.2, 1.1]];
        let m1 = PlaneStressMaterial::new(1.0e6, 0.3).unwrap();
        let m2 = PlaneStressMaterial::new(2.0e6, 0.3).unwrap();
        let k1 = element_stiffness(&coords, &m1, 1.0).unwrap();
        let k2 = element_stiffness(&coords, &m2, 1.0).unwrap();
        assert!((k2 - k1 * 2.0).amax() <= 1e-9 * k1.amax());
        // Same homogeneity in the thickness factor.
        let kt = element_stiffness(&coords, &m1, 3.0).unwrap();
        assert!((kt - k1 * 3.0).amax() <= 1e-9 * k1.amax());
    }

    #[test]
    fn matches_high_order_quadrature_oracle() {
        let mat = PlaneStressMaterial::new(1.0, 0.0).unwrap();
        let k = element_stiffness(&unit_square(), &mat, 1.0).unwrap();
        let k_ref = stiffness_oracle(&unit_square(), &mat, 1.0);
        assert!((k - k_ref).amax() <= 1e-12);
        // On an affine (parallelogram) element the integrand is still
        // polynomial and 2x2 Gauss remains exact.
        let par = [[0.0, 0.0], [1.0, 0.2], [1.3, 1.4], [0.3, 1.2]];
        let mat2 = PlaneStressMaterial::new(2.5, 0.3).unwrap();
        let k = element_stiffness(&par, &mat2, 1.0).unwrap();
        let k_ref = stiffness_oracle(&par, &mat2, 1.0);
        assert!((k - k_ref).amax() <= 1e-12 * k_ref.amax());
    }

    #[test]
    fn symmetric_psd() {
        let mat = PlaneStressMaterial::new(69e9, 0.3).unwrap();
        let coords = [[0.0, 0.0], [0.01, 0.0], [0.013, 0.011], [0.0, 0.012]];
        let k = element_stiffness(&coords, &mat, 1.0).unwrap();
        assert!((k - k.transpose()).amax() <= 1e-6 * k.amax());
    }

    #[test]
    fn degenerate_quad_rejected() {
        let mat = PlaneStressMaterial::new(1.0, 0.3).unwrap();
        // Bow-tie ordering flips the Jacobian sign.
        let coords = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        assert!(matches!(
            element_stiffness(&coords, &mat, 1.0),
            Err(CwError::Geometry(_))
        ));
    }
}
