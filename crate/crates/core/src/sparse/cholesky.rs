use super::{LinearOperator, SparseSym};
use crate::error::SolverError;

/// Exact Cholesky factor `A = L Lᵀ` in band storage. Row `i` keeps columns
/// `i - bw ..= i`; with the row-major node ordering of the grid the half
/// bandwidth is about `nx`, so storage is `O(N · nx)`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    // Row i, column j stored at i * (bw + 1) + (j + bw - i).
    band: Vec<f64>,
}

impl BandCholesky {
    pub fn new(a: &SparseSym) -> Result<Self, SolverError> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                band[i * w + j + bw - i] = v;
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = band[i * w + j + bw - i];
                for k in jlo..j {
                    s -= band[i * w + k + bw - i] * band[j * w + k + bw - j];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(SolverError::NotPositiveDefinite { pivot: i, value: s });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + j + bw - i] = s / band[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.band[i * w + k + bw - i] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.band[i * w + bw];
            let xi = x[i];
            for k in i.saturating_sub(bw)..i {
                x[k] -= self.band[i * w + k + bw - i] * xi;
            }
        }
    }
}

impl LinearOperator for BandCholesky {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), SolverError> {
        y.copy_from_slice(x);
        self.solve_in_place(y);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_banded_spd_system() {
        let m = 7;
        let n = m * m;
        let mut t = Vec::new();
        for k in 0..n {
            t.push((k, k, 4.5));
            if k % m > 0 {
                t.push((k, k - 1, -1.0));
            }
            if k >= m {
                t.push((k, k - m, -1.0));
            }
        }
        let a = SparseSym::from_triplets(n, &t);
        let chol = BandCholesky::new(&a).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = a.mul(&x_true);
        chol.solve_in_place(&mut x);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = SparseSym::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(BandCholesky::new(&a), Err(SolverError::NotPositiveDefinite { pivot: 1, .. })));
    }
}
