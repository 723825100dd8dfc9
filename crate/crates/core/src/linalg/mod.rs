//! Compressed sparse row storage, scatter-add assembly and a Jacobi
//! preconditioned conjugate-gradient solver for SPD systems.

mod cg;

pub use cg::{cg_solve, cg_solve_with, CgOptions, CgSolution};

use crate::error::{Error, Result};
use crate::exec;

/// Square matrix in compressed sparse row format. Column indices are sorted
/// and unique within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values in storage order; the sparsity pattern is fixed.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Storage position of entry `(row, col)` if it is in the pattern.
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.n {
            return None;
        }
        let (lo, hi) = (self.row_offsets[row], self.row_offsets[row + 1]);
        self.col_indices[lo..hi].binary_search(&col).ok().map(|p| lo + p)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.values[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        exec::for_each_mut(y, |i, yi| {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for p in lo..hi {
                acc += self.values[p] * x[self.col_indices[p]];
            }
            *yi = acc;
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Largest |a_ij - a_ji| relative to the largest |a_ij|.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for p in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[p];
                worst = worst.max((self.values[p] - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Entry-wise `self + s * other` for two matrices sharing one pattern.
    pub fn add_scaled_same_pattern(&mut self, s: f64, other: &SparseMatrix) -> Result<()> {
        if self.row_offsets != other.row_offsets || self.col_indices != other.col_indices {
            return Err(Error::InvalidParameter("sparsity patterns differ".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }
}

/// Triplet accumulator; duplicates are summed on [`finalize`](Self::finalize).
#[derive(Clone, Debug)]
pub struct MatrixBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl MatrixBuilder {
    pub fn new(n: usize) -> Self {
        MatrixBuilder { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        MatrixBuilder { n, entries: Vec::with_capacity(cap) }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        for idx in [row, col] {
            if idx >= self.n {
                return Err(Error::IndexOutOfRange { kind: "matrix row/column", index: idx, len: self.n });
            }
        }
        self.entries.push((row, col, value));
        Ok(())
    }

    /// Sorts by (row, col) and sums duplicates. The result does not depend
    /// on insertion order up to floating-point reassociation of duplicates,
    /// which are summed in a stable order.
    pub fn finalize(mut self) -> SparseMatrix {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_offsets = vec![0usize; self.n + 1];
        let mut col_indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_offsets[i + 1] += row_offsets[i];
        }
        SparseMatrix { n: self.n, row_offsets, col_indices, values }
    }
}

/// SPD matrix, right-hand side and the set of constrained degrees of freedom.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet_mask: Vec<bool>,
}

impl SparseSystem {
    /// Eliminates constrained rows and columns to the identity with a
    /// homogeneous boundary value.
    pub fn new(mut matrix: SparseMatrix, mut rhs: Vec<f64>, dirichlet_mask: Vec<bool>) -> Result<Self> {
        let n = matrix.dim();
        for len in [rhs.len(), dirichlet_mask.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        for i in 0..n {
            let (lo, hi) = (matrix.row_offsets[i], matrix.row_offsets[i + 1]);
            for p in lo..hi {
                let j = matrix.col_indices[p];
                if dirichlet_mask[i] || dirichlet_mask[j] {
                    matrix.values[p] = if i == j { 1.0 } else { 0.0 };
                }
            }
            if dirichlet_mask[i] {
                rhs[i] = 0.0;
            }
        }
        Ok(SparseSystem { matrix, rhs, dirichlet_mask })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}
