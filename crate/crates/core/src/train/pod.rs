//! POD compression of snapshot sets into orthonormal reduced port bases.

use nalgebra::DMatrix;

use crate::error::{CwError, Result};

use super::pairwise::SnapshotSet;

/// Basis truncation rule.
#[derive(Debug, Clone, Copy)]
pub enum PodTruncation {
    /// keep exactly this many basis functions (constants included)
    Size(usize),
    /// keep the smallest basis whose discarded singular-value energy is
    /// below this fraction of the total
    EnergyTol(f64),
}

/// Orthonormal reduced port basis. The two constant displacement modes are
/// always the first columns, followed by POD modes in decreasing
/// singular-value order; a basis of size m is the first m columns.
#[derive(Debug, Clone)]
pub struct TrainedPortSpace {
    chi: DMatrix<f64>,
    singular_values: Vec<f64>,
    /// default truncation (columns), constants included
    pub default_size: usize,
    /// whether the requested size exceeded the snapshot rank
    pub truncated: bool,
}

impl TrainedPortSpace {
    /// Port trace dimension (scalar dofs).
    pub fn dim(&self) -> usize {
        self.chi.nrows()
    }

    /// Largest usable basis size (2 constants + snapshot rank).
    pub fn available(&self) -> usize {
        self.chi.ncols()
    }

    /// Singular values of the mean-corrected snapshot matrix.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// First `m` basis vectors.
    pub fn basis(&self, m: usize) -> Result<DMatrix<f64>> {
        if m == 0 || m > self.available() {
            return Err(CwError::Library(format!(
                "requested basis size {m}, available 1..={}",
                self.available()
            )));
        }
        Ok(self.chi.columns(0, m).into_owned())
    }

    /// Orthonormal completion of the basis to the full port dimension,
    /// with the trained columns as a prefix. Deterministic.
    pub fn completed(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut cols: Vec<nalgebra::DVector<f64>> = (0..self.chi.ncols())
            .map(|c| self.chi.column(c).into_owned())
            .collect();
        let mut k = 0usize;
        while cols.len() < n && k < n {
            let mut v = nalgebra::DVector::<f64>::zeros(n);
            v[k] = 1.0;
            for _ in 0..2 {
                for q in &cols {
                    let d = q.dot(&v);
                    v -= q * d;
                }
            }
            let norm = v.norm();
            if norm > 1e-8 {
                cols.push(v / norm);
            }
            k += 1;
        }
        let mut out = DMatrix::<f64>::zeros(n, cols.len());
        for (c, col) in cols.iter().enumerate() {
            out.set_column(c, col);
        }
        out
    }

    /// Construct directly from an orthonormal matrix (used for tests and
    /// deserialization).
    pub fn from_parts(chi: DMatrix<f64>, singular_values: Vec<f64>, default_size: usize) -> Self {
        Self {
            chi,
            singular_values,
            default_size,
            truncated: false,
        }
    }

    pub fn raw(&self) -> &DMatrix<f64> {
        &self.chi
    }
}

/// Compress a snapshot set: explicit constant modes per displacement
/// component are prepended, the snapshots are projected off them, and the
/// left singular vectors of the remainder follow in energy order.
pub fn pod(snapshots: &SnapshotSet, trunc: PodTruncation) -> Result<TrainedPortSpace> {
    let s = &snapshots.data;
    if s.ncols() == 0 {
        return Err(CwError::Contract("empty snapshot set".into()));
    }
    let dim = s.nrows();
    let n_nodes = dim / 2;
    let inv = 1.0 / (n_nodes as f64).sqrt();
    let mut constants = DMatrix::<f64>::zeros(dim, 2);
    for node in 0..n_nodes {
        constants[(2 * node, 0)] = inv;
        constants[(2 * node + 1, 1)] = inv;
    }
    // project snapshots off the constant modes (Euclidean)
    let proj = &constants * (constants.transpose() * s);
    let deflated = s - proj;
    let mut svd = deflated.svd(true, false);
    svd.sort_by_singular_values();
    let u = svd
        .u
        .ok_or_else(|| CwError::Numeric("SVD did not produce singular vectors".into()))?;
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let total_energy: f64 = sv.iter().map(|v| v * v).sum();
    let rank = sv
        .iter()
        .filter(|&&v| v > 1e-12 * sv.first().copied().unwrap_or(0.0).max(1e-300))
        .count()
        .min(dim.saturating_sub(2));

    let available = 2 + rank;
    let mut chi = DMatrix::<f64>::zeros(dim, available);
    chi.set_column(0, &constants.column(0).into_owned());
    chi.set_column(1, &constants.column(1).into_owned());
    for c in 0..rank {
        let mut v = u.column(c).into_owned();
        // one re-orthogonalization pass against the constants
        for q in 0..2 {
            let d = constants.column(q).dot(&v);
            v -= constants.column(q) * d;
        }
        let norm = v.norm();
        if norm > 0.0 {
            v /= norm;
        }
        chi.set_column(2 + c, &v);
    }

    let (requested, truncated) = match trunc {
        PodTruncation::Size(m) => (m.max(1), m > available),
        PodTruncation::EnergyTol(tol) => {
            let mut keep = rank;
            let mut tail = 0.0;
            for q in (0..rank).rev() {
                let t = tail + sv[q] * sv[q];
                if t < tol * total_energy {
                    tail = t;
                    keep = q;
                } else {
                    break;
                }
            }
            (2 + keep, false)
        }
    };
    let default_size = requested.min(available);
    Ok(TrainedPortSpace {
        chi,
        singular_values: sv[..rank].to_vec(),
        default_size,
        truncated,
    })
}
