//! Sparse symmetric positive-definite solves backed by faer's Cholesky.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Target normwise backward error `‖b − Ax‖ / (‖A‖ ‖x‖ + ‖b‖)` (max norms)
/// of every linear solve.
pub const LINEAR_TOL: f64 = 1e-12;
const MAX_REFINEMENT: usize = 4;

/// Symmetric matrix stored as its lower triangle.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    n: usize,
    lower: SparseColMat<usize, f64>,
}

impl SymmetricMatrix {
    /// Builds from `(row, col, value)` entries with `row ≥ col`; duplicates add.
    pub fn from_lower_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        if entries.iter().any(|&(r, c, _)| r < c || r >= n) {
            return Err(Error::LinearSolve("entry outside the lower triangle".into()));
        }
        let lower =
            SparseColMat::try_new_from_triplets(n, n, &triplets).map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        Ok(Self { n, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.lower.compute_nnz()
    }

    /// `y = A x` using both triangles.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let sym = self.lower.symbolic();
        let vals = self.lower.val();
        for c in 0..self.n {
            let range = sym.col_range(c);
            for (r, v) in sym.row_idx()[range.clone()].iter().zip(&vals[range]) {
                y[*r] += v * x[c];
                if *r != c {
                    y[c] += v * x[*r];
                }
            }
        }
        y
    }

    /// `‖A‖∞`, the largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        let sym = self.lower.symbolic();
        let vals = self.lower.val();
        for c in 0..self.n {
            let range = sym.col_range(c);
            for (r, v) in sym.row_idx()[range.clone()].iter().zip(&vals[range]) {
                rows[*r] += v.abs();
                if *r != c {
                    rows[c] += v.abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Diagonal entries.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        let sym = self.lower.symbolic();
        let vals = self.lower.val();
        for (c, dc) in d.iter_mut().enumerate() {
            let range = sym.col_range(c);
            for (r, v) in sym.row_idx()[range.clone()].iter().zip(&vals[range]) {
                if *r == c {
                    *dc += v;
                }
            }
        }
        d
    }
}

/// Cholesky solver that keeps the symbolic analysis between calls with the
/// same sparsity pattern.
#[derive(Debug, Default)]
pub struct CholeskySolver {
    symbolic: Option<(Vec<usize>, Vec<usize>, SymbolicLlt<usize>)>,
}

impl CholeskySolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `A x = b` to backward error [`LINEAR_TOL`], refining
    /// iteratively when the first back-substitution falls short.
    pub fn solve(&mut self, a: &SymmetricMatrix, b: &[f64]) -> Result<Vec<f64>> {
        let pattern = a.lower.symbolic();
        let symbolic = match &self.symbolic {
            Some((ptr, idx, sym)) if ptr == pattern.col_ptr() && idx == pattern.row_idx() => sym.clone(),
            _ => {
                let sym =
                    SymbolicLlt::try_new(pattern, Side::Lower).map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
                self.symbolic = Some((pattern.col_ptr().to_vec(), pattern.row_idx().to_vec(), sym.clone()));
                sym
            }
        };
        let llt = Llt::try_new_with_symbolic(symbolic, a.lower.as_ref(), Side::Lower)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let solve = |rhs: &[f64]| -> Vec<f64> {
            let m = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
            let x = llt.solve(&m);
            (0..rhs.len()).map(|i| x[(i, 0)]).collect()
        };
        let a_norm = a.norm_inf();
        let b_norm = norm_inf(b);
        let mut x = solve(b);
        if b_norm == 0.0 {
            return Ok(x);
        }
        let mut err = f64::INFINITY;
        for pass in 0..=MAX_REFINEMENT {
            let ax = a.mul(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            err = norm_inf(&r) / (a_norm * norm_inf(&x) + b_norm);
            if !err.is_finite() {
                return Err(Error::LinearSolve("non-finite residual".into()));
            }
            if err <= LINEAR_TOL || pass == MAX_REFINEMENT {
                break;
            }
            let dx = solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        if err <= LINEAR_TOL {
            Ok(x)
        } else {
            Err(Error::LinearSolve(format!(
                "backward error {err:e} after {MAX_REFINEMENT} refinements"
            )))
        }
    }
}

/// Max norm.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Euclidean norm with a fixed summation order.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
