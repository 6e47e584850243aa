//! Sparse symmetric storage and the iterative machinery built on it.

mod cholesky;
mod ic0;
mod pcg;
mod schur;

use std::io::{self, Write};

pub use cholesky::BandCholesky;
pub use ic0::IcFactor;
pub use pcg::{pcg, PcgConfig, PcgOutcome};
pub use schur::{A1Solver, InnerMode, SchurOperator};

use crate::error::SolverError;

/// A symmetric linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), SolverError>;
}

/// Identity map, used for unpreconditioned CG.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), SolverError> {
        y.copy_from_slice(x);
        Ok(())
    }
}

/// Symmetric matrix holding only its lower triangle (diagonal included) in
/// compressed rows with sorted column indices. The pattern is fixed at
/// construction; entries that cancel to zero stay stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Builds a zero matrix with the given lower-triangle pattern.
    /// `pattern[i]` lists the columns `j <= i` of row `i`; it is sorted and
    /// deduplicated here, and the diagonal is always included.
    pub fn from_pattern(mut pattern: Vec<Vec<usize>>) -> Self {
        let n = pattern.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for (i, row) in pattern.iter_mut().enumerate() {
            row.push(i);
            row.retain(|&j| j <= i);
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Self { n, row_ptr, cols, vals }
    }

    /// Builds from `(row, col, value)` triplets; either triangle may be given,
    /// duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut pattern = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            pattern[r].push(c);
        }
        let mut m = Self::from_pattern(pattern);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let mut t = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate().take(i + 1) {
                if v != 0.0 || i == j {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, &t)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let start = self.row_ptr[r];
        self.cols[start..self.row_ptr[r + 1]].binary_search(&c).ok().map(|k| start + k)
    }

    /// Entry `(i, j)`; zero outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index(i, j).map_or(0.0, |k| self.vals[k])
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.vals[self.row_ptr[i + 1] - 1]
    }

    /// Adds `v` to the symmetric pair `(i, j)`/`(j, i)`.
    ///
    /// Panics if the position lies outside the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index(i, j).unwrap_or_else(|| panic!("({i}, {j}) outside sparsity pattern"));
        self.vals[k] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let (j, v) = (self.cols[k], self.vals[k]);
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        d
    }

    /// `A + B` on the union of both patterns.
    pub fn plus(&self, other: &SparseSym) -> SparseSym {
        assert_eq!(self.n, other.n);
        let mut pattern = vec![Vec::new(); self.n];
        for (i, p) in pattern.iter_mut().enumerate() {
            p.extend_from_slice(self.row(i).0);
            p.extend_from_slice(other.row(i).0);
        }
        let mut out = SparseSym::from_pattern(pattern);
        for m in [self, other] {
            for i in 0..m.n {
                let (cols, vals) = m.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    out.add(i, j, v);
                }
            }
        }
        out
    }

    /// Half bandwidth: `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).map(|i| self.row(i).0.first().map_or(0, |&j| i - j)).max().unwrap_or(0)
    }

    /// Writes the full matrix as `row col value` triplets (1-based, both
    /// triangles), preceded by a `%% n n nnz` size line.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        let offdiag = self.cols.len() - self.n;
        writeln!(w, "%% {} {} {}", self.n, self.n, self.n + 2 * offdiag)?;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
                if j != i {
                    writeln!(w, "{} {} {:.17e}", j + 1, i + 1, v)?;
                }
            }
        }
        Ok(())
    }
}

impl LinearOperator for SparseSym {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), SolverError> {
        self.matvec(x, y);
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_uses_symmetric_completion() {
        let dense = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, -2.0], vec![0.0, -2.0, 5.0]];
        let a = SparseSym::from_dense(&dense);
        assert_eq!(a.nnz_lower(), 5);
        let y = a.mul(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![6.0, 1.0, 11.0]);
        assert_eq!(a.to_dense(), dense);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.bandwidth(), 1);
    }

    #[test]
    fn triplet_export() {
        let a = SparseSym::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("%% 2 2 4"));
    }

    #[test]
    fn plus_merges_patterns() {
        let a = SparseSym::from_triplets(3, &[(0, 0, 1.0), (1, 0, 2.0)]);
        let b = SparseSym::from_triplets(3, &[(2, 1, 3.0), (0, 0, 1.0)]);
        let c = a.plus(&b);
        assert_eq!(c.get(0, 0), 2.0);
        assert_eq!(c.get(0, 1), 2.0);
        assert_eq!(c.get(1, 2), 3.0);
    }
}
