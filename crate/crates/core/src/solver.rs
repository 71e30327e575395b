//! Sparse direct solution with LU factorization and partial pivoting.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet as FaerTriplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Normwise backward error above which a solve is reported as failed.
pub const BACKWARD_ERROR_TOL: f64 = 1e-9;

const REFINEMENT_STEPS: usize = 2;

/// Makes the factorization independent of the thread count.
pub fn set_deterministic() {
    faer::set_global_parallelism(faer::Par::Seq);
}

pub struct Factorization {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).finish()
    }
}

impl Factorization {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Layout(format!(
                "cannot factor a {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = matrix.nrows();
        if let Some(t) = matrix.iter().find(|t| !t.val.is_finite()) {
            return Err(Error::solver(
                format!("non-finite matrix entry at ({}, {})", t.row, t.col),
                Some(t.row),
            ));
        }
        let trips: Vec<_> = matrix
            .iter()
            .map(|t| FaerTriplet::new(t.row, t.col, t.val))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::solver(format!("matrix conversion failed: {e:?}"), None))?;
        let lu = a.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::solver(
                format!("structurally singular matrix (column {index})"),
                Some(index),
            ),
            other => Error::solver(format!("factorization failed: {other:?}"), None),
        })?;
        Ok(Factorization { n, lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub n: usize,
    pub nnz: usize,
    /// `|b - A x|_inf / (|A|_inf |x|_inf + |b|_inf)`
    pub backward_error: f64,
    pub refinement_steps: usize,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn matrix_inf_norm(a: &SparseMatrix) -> f64 {
    (0..a.nrows())
        .map(|r| a.row(r).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn backward_error(a: &SparseMatrix, a_norm: f64, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.matvec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let denom = a_norm * inf_norm(x) + inf_norm(b);
    let err = if denom == 0.0 { 0.0 } else { inf_norm(&r) / denom };
    (r, err)
}

/// Solves with an existing factorization, then refines iteratively.
pub fn solve_factored(a: &SparseMatrix, fact: &Factorization, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    if b.len() != a.nrows() || fact.dim() != a.nrows() {
        return Err(Error::Layout(format!(
            "right-hand side of length {} for a system of size {}",
            b.len(),
            a.nrows()
        )));
    }
    let a_norm = matrix_inf_norm(a);
    let mut x = fact.solve(b);
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::solver("numerically singular matrix (non-finite solution)", Some(i)));
    }
    let (mut r, mut err) = backward_error(a, a_norm, &x, b);
    let mut steps = 0;
    while steps < REFINEMENT_STEPS && err > f64::EPSILON {
        let dx = fact.solve(&r);
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let (r2, e2) = backward_error(a, a_norm, &cand, b);
        steps += 1;
        if !(e2 < err) {
            break;
        }
        x = cand;
        r = r2;
        err = e2;
    }
    if !(err <= BACKWARD_ERROR_TOL) {
        return Err(Error::solver(
            format!("backward error {err:.3e} exceeds {BACKWARD_ERROR_TOL:.0e}"),
            None,
        ));
    }
    Ok((
        x,
        SolveReport {
            n: a.nrows(),
            nnz: a.nnz(),
            backward_error: err,
            refinement_steps: steps,
        },
    ))
}

pub fn solve(a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
    let fact = Factorization::new(a)?;
    solve_factored(a, &fact, b)
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// power iteration from a fixed start vector.
fn power_iteration(n: usize, max_iter: usize, op: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    normalize(&mut v);
    let mut est = 0.0;
    for _ in 0..max_iter {
        let mut w = op(&v);
        let next = normalize(&mut w);
        if !next.is_finite() {
            return f64::INFINITY;
        }
        v = w;
        let done = (next - est).abs() <= 1e-8 * next;
        est = next;
        if done {
            break;
        }
    }
    est
}

/// Spectral condition number estimate `sigma_max / sigma_min` from power
/// iterations on `A^T A` and `(A^T A)^-1`.
pub fn estimate_condition(a: &SparseMatrix, fact: &Factorization, max_iter: usize) -> f64 {
    let at = a.transpose();
    let n = a.nrows();
    let big = power_iteration(n, max_iter, |v| at.matvec(&a.matvec(v)));
    let inv = power_iteration(n, max_iter, |v| fact.solve(&fact.solve_transpose(v)));
    (big * inv).sqrt()
}
