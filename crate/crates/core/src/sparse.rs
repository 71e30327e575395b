//! Compressed sparse row storage built from triplets.

use std::io::Write;

use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub val: f64,
}

impl Triplet {
    pub fn new(row: usize, col: usize, val: f64) -> Self {
        Triplet { row, col, val }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Duplicates are summed in their input order, so the result is
    /// reproducible bit for bit for a fixed triplet sequence.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<Triplet>) -> Self {
        triplets.par_sort_by_key(|t| (t.row, t.col));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for t in &triplets {
            assert!(t.row < nrows && t.col < ncols, "triplet out of bounds");
            if last == Some((t.row, t.col)) {
                *values.last_mut().unwrap() += t.val;
            } else {
                col_idx.push(t.col);
                values.push(t.val);
                row_ptr[t.row + 1] += 1;
                last = Some((t.row, t.col));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = Triplet> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        match self.col_idx[s..e].binary_search(&c) {
            Ok(k) => self.values[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let trips = self.iter().map(|t| Triplet::new(t.col, t.row, t.val)).collect();
        SparseMatrix::from_triplets(self.ncols, self.nrows, trips)
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + other`; patterns are merged.
    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let trips = self.iter().chain(other.iter()).collect();
        SparseMatrix::from_triplets(self.nrows, self.ncols, trips)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for t in self.iter() {
            d[t.row][t.col] += t.val;
        }
        d
    }

    /// `max |A - A^T| / max |A|`.
    pub fn asymmetry(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let diff = self.add(&self.transpose().scaled(-1.0));
        diff.max_abs() / m
    }

    /// MatrixMarket coordinate format, 1-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for t in self.iter() {
            writeln!(out, "{} {} {:.17e}", t.row + 1, t.col + 1, t.val)?;
        }
        Ok(())
    }
}
