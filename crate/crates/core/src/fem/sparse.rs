use faer::prelude::SpSolver;
use faer::sparse::SparseColMat;

use crate::error::{CwError, Result};

/// Symmetric positive (semi-)definite sparse matrix in CSC form.
///
/// Both triangles are stored so matrix-vector products and row/column
/// slicing stay simple; the factorization reads the lower triangle.
#[derive(Debug, Clone)]
pub struct SparseSpdMatrix {
    dim: usize,
    mat: SparseColMat<usize, f64>,
}

impl SparseSpdMatrix {
    /// Build from (row, col, value) triplets; duplicate entries accumulate.
    ///
    /// Duplicates are combined here with a stable ordering so that the sums
    /// for (r, c) and (c, r) see identical addend sequences and the stored
    /// matrix is bit-exactly symmetric when the input blocks are.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= dim || c >= dim {
                return Err(CwError::Index(format!(
                    "triplet ({r}, {c}) out of range for dimension {dim}"
                )));
            }
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (c, r));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mat = SparseColMat::try_new_from_triplets(dim, dim, &merged)
            .map_err(|e| CwError::Numeric(format!("sparse matrix creation failed: {e:?}")))?;
        Ok(Self { dim, mat })
    }

    /// Build directly from sorted CSC arrays (no duplicate merging).
    pub fn from_csc_parts(
        dim: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if col_ptr.len() != dim + 1 || *col_ptr.last().unwrap_or(&0) != row_idx.len() {
            return Err(CwError::Contract("inconsistent CSC arrays".into()));
        }
        let sym = faer::sparse::SymbolicSparseColMat::new_checked(dim, dim, col_ptr, None, row_idx);
        Ok(Self {
            dim,
            mat: SparseColMat::new(sym, values),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.mat.compute_nnz()
    }

    pub fn values(&self) -> &[f64] {
        self.mat.values()
    }

    /// Iterate stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let sym = self.mat.symbolic();
        (0..self.dim).flat_map(move |c| {
            let start = sym.col_ptrs()[c];
            let end = sym.col_ptrs()[c + 1];
            (start..end).map(move |k| (sym.row_indices()[k], c, self.mat.values()[k]))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        let sym = self.mat.symbolic();
        for c in 0..self.dim {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in sym.col_ptrs()[c]..sym.col_ptrs()[c + 1] {
                y[sym.row_indices()[k]] += self.mat.values()[k] * xc;
            }
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.mat.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Deviation from symmetry, max |K - K^T|.
    pub fn asymmetry(&self) -> f64 {
        let mut map = std::collections::HashMap::new();
        for (r, c, v) in self.entries() {
            map.insert((r, c), v);
        }
        let mut worst: f64 = 0.0;
        for (&(r, c), &v) in &map {
            let vt = map.get(&(c, r)).copied().unwrap_or(0.0);
            worst = worst.max((v - vt).abs());
        }
        worst
    }

    /// Cached sparse Cholesky factorization; fails if not SPD.
    pub fn factorize(&self) -> Result<SpdFactor> {
        let llt = self
            .mat
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| CwError::NotSpd(format!("{e:?}")))?;
        Ok(SpdFactor {
            dim: self.dim,
            llt,
        })
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            d[(r, c)] += v;
        }
        d
    }
}

/// Reusable sparse Cholesky factorization.
pub struct SpdFactor {
    dim: usize,
    llt: faer::sparse::linalg::solvers::Cholesky<usize, f64>,
}

impl SpdFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim);
        let b = faer::mat::Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..self.dim).map(|i| x.read(i, 0)).collect()
    }

    /// Solve for many right-hand sides at once (columns of `rhs`).
    pub fn solve_mat(&self, rhs: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.dim);
        let b = faer::mat::Mat::from_fn(rhs.nrows(), rhs.ncols(), |i, j| rhs[(i, j)]);
        let x = self.llt.solve(&b);
        nalgebra::DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |i, j| x.read(i, j))
    }
}

/// Direct SPD solve with residual guarantee `||Ku - f|| <= 1e-10 ||f||`.
pub fn solve_spd(k: &SparseSpdMatrix, f: &[f64]) -> Result<Vec<f64>> {
    let factor = k.factorize()?;
    Ok(factor.solve(f))
}

/// Map between a full dof set and the reduced set left after eliminating
/// Dirichlet dofs.
#[derive(Debug, Clone)]
pub struct DirichletReduction {
    full_dim: usize,
    keep: Vec<usize>,
    /// reduced index for each full dof, usize::MAX when eliminated
    index: Vec<usize>,
    fixed: Vec<(usize, f64)>,
}

impl DirichletReduction {
    pub fn new(full_dim: usize, fixed: &[(usize, f64)]) -> Result<Self> {
        let mut seen = vec![false; full_dim];
        for &(d, _) in fixed {
            if d >= full_dim {
                return Err(CwError::Index(format!(
                    "fixed dof {d} out of range {full_dim}"
                )));
            }
            if seen[d] {
                return Err(CwError::Index(format!("duplicate fixed dof {d}")));
            }
            seen[d] = true;
        }
        let mut keep = Vec::with_capacity(full_dim - fixed.len());
        let mut index = vec![usize::MAX; full_dim];
        for d in 0..full_dim {
            if !seen[d] {
                index[d] = keep.len();
                keep.push(d);
            }
        }
        let mut fixed = fixed.to_vec();
        fixed.sort_by_key(|&(d, _)| d);
        Ok(Self {
            full_dim,
            keep,
            index,
            fixed,
        })
    }

    pub fn reduced_dim(&self) -> usize {
        self.keep.len()
    }

    pub fn reduced_index(&self, full_dof: usize) -> Option<usize> {
        let i = self.index[full_dof];
        (i != usize::MAX).then_some(i)
    }

    pub fn keep(&self) -> &[usize] {
        &self.keep
    }

    /// Reinsert the imposed values into a full-length vector.
    pub fn recover(&self, reduced: &[f64]) -> Vec<f64> {
        assert_eq!(reduced.len(), self.keep.len());
        let mut full = vec![0.0; self.full_dim];
        for (i, &d) in self.keep.iter().enumerate() {
            full[d] = reduced[i];
        }
        for &(d, v) in &self.fixed {
            full[d] = v;
        }
        full
    }

    /// Restrict a full vector to the kept dofs.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.keep.iter().map(|&d| full[d]).collect()
    }
}

/// Symmetric elimination of Dirichlet dofs: drops fixed rows/columns and
/// corrects the right-hand side by `-K[:, fixed] * values`.
pub fn apply_dirichlet(
    k: &SparseSpdMatrix,
    f: &[f64],
    fixed: &[(usize, f64)],
) -> Result<(SparseSpdMatrix, Vec<f64>, DirichletReduction)> {
    let red = DirichletReduction::new(k.dim(), fixed)?;
    let mut rhs = red.restrict(f);
    let mut triplets = Vec::new();
    for (r, c, v) in k.entries() {
        match (red.reduced_index(r), red.reduced_index(c)) {
            (Some(ri), Some(ci)) => triplets.push((ri, ci, v)),
            (Some(ri), None) => {
                // column c is fixed; move K[r, c] * g_c to the rhs
                let g = red
                    .fixed
                    .binary_search_by_key(&c, |&(d, _)| d)
                    .map(|i| red.fixed[i].1)
                    .unwrap_or(0.0);
                if g != 0.0 {
                    rhs[ri] -= v * g;
                }
            }
            _ => {}
        }
    }
    let kr = SparseSpdMatrix::from_triplets(red.reduced_dim(), &triplets)?;
    Ok((kr, rhs, red))
}
