use super::{LinearOperator, SparseSym};
use crate::error::SolverError;

const MAX_SHIFT_RETRIES: usize = 20;

/// Zero-fill incomplete Cholesky factor `A ≈ R Rᵀ` with `R` lower triangular
/// on the pattern of the source's lower triangle.
#[derive(Debug, Clone)]
pub struct IcFactor {
    factor: SparseSym,
    shift: f64,
}

impl IcFactor {
    /// Factors `a`. On a non-positive pivot the diagonal is shifted by
    /// `1e-3 · max diag`, doubling on each retry.
    pub fn new(a: &SparseSym) -> Result<Self, SolverError> {
        if let Some(f) = try_factor(a, 0.0) {
            return Ok(Self { factor: f, shift: 0.0 });
        }
        let max_diag = (0..a.dim()).map(|i| a.diag(i).abs()).fold(0.0, f64::max);
        let mut shift = 1e-3 * max_diag;
        for _ in 0..MAX_SHIFT_RETRIES {
            if let Some(f) = try_factor(a, shift) {
                return Ok(Self { factor: f, shift });
            }
            shift *= 2.0;
        }
        Err(SolverError::FactorizationFailed { retries: MAX_SHIFT_RETRIES })
    }

    /// Diagonal shift that was needed (zero for a clean factorization).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// The lower-triangular factor, stored in the same layout as its source.
    pub fn factor(&self) -> &SparseSym {
        &self.factor
    }

    /// Solves `R Rᵀ x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.factor.dim();
        // R y = b
        for i in 0..n {
            let (cols, vals) = self.factor.row(i);
            let last = cols.len() - 1;
            let mut s = x[i];
            for k in 0..last {
                s -= vals[k] * x[cols[k]];
            }
            x[i] = s / vals[last];
        }
        // Rᵀ x = y, column sweep over the rows of R.
        for i in (0..n).rev() {
            let (cols, vals) = self.factor.row(i);
            let last = cols.len() - 1;
            x[i] /= vals[last];
            let xi = x[i];
            for k in 0..last {
                x[cols[k]] -= vals[k] * xi;
            }
        }
    }
}

fn try_factor(a: &SparseSym, shift: f64) -> Option<SparseSym> {
    let mut r = a.clone();
    let n = a.dim();
    for i in 0..n {
        let start = r.row_ptr[i];
        let end = r.row_ptr[i + 1];
        for kk in start..end {
            let j = r.cols[kk];
            // Sparse dot product of rows i and j over columns < j.
            let mut s = r.vals[kk];
            if j == i {
                s += shift;
            }
            let (mut p, mut q) = (start, r.row_ptr[j]);
            let qend = r.row_ptr[j + 1];
            while p < kk && q < qend {
                let (cp, cq) = (r.cols[p], r.cols[q]);
                if cq >= j {
                    break;
                }
                match cp.cmp(&cq) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        s -= r.vals[p] * r.vals[q];
                        p += 1;
                        q += 1;
                    }
                }
            }
            if j == i {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                r.vals[kk] = s.sqrt();
            } else {
                r.vals[kk] = s / r.diag(j);
            }
        }
    }
    Some(r)
}

impl LinearOperator for IcFactor {
    fn dim(&self) -> usize {
        self.factor.dim()
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
    use crate::sparse::{pcg, Identity};
    use nalgebra::DMatrix;

    fn laplacian_2d(m: usize) -> SparseSym {
        let n = m * m;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                t.push((k, k, 4.0));
                if i > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if j > 0 {
                    t.push((k, k - m, -1.0));
                }
            }
        }
        SparseSym::from_triplets(n, &t)
    }

    #[test]
    fn diagonal_matrix_factors_exactly() {
        let a = SparseSym::from_dense(&[vec![4.0, 0.0], vec![0.0, 9.0]]);
        let ic = IcFactor::new(&a).unwrap();
        assert_eq!(ic.factor().diag(0), 2.0);
        assert_eq!(ic.factor().diag(1), 3.0);
        assert_eq!(ic.shift(), 0.0);
    }

    #[test]
    fn tridiagonal_matches_dense_cholesky() {
        let n = 8;
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = 3.0 + i as f64 * 0.1;
            if i > 0 {
                dense[i][i - 1] = -1.0;
                dense[i - 1][i] = -1.0;
            }
        }
        let a = SparseSym::from_dense(&dense);
        let ic = IcFactor::new(&a).unwrap();
        let m = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
        let l = m.cholesky().unwrap().l();
        for i in 0..n {
            for j in 0..=i {
                assert!((ic.factor().get(i, j) - l[(i, j)]).abs() < 1e-14, "({i}, {j})");
            }
        }
        // The preconditioner is then an exact inverse.
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let out = pcg(&a, &ic, &b, 1e-13, 10).unwrap();
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn pattern_has_no_fill() {
        let a = laplacian_2d(6);
        let ic = IcFactor::new(&a).unwrap();
        assert_eq!(ic.factor().nnz_lower(), a.nnz_lower());
        for i in 0..a.dim() {
            assert!(ic.factor().diag(i) > 0.0);
            assert_eq!(ic.factor().row(i).0, a.row(i).0);
        }
    }

    #[test]
    fn preconditioning_reduces_iterations() {
        let a = laplacian_2d(10);
        let b: Vec<f64> = (0..a.dim()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let plain = pcg(&a, &Identity(a.dim()), &b, 1e-10, 1000).unwrap();
        let ic = IcFactor::new(&a).unwrap();
        let pre = pcg(&a, &ic, &b, 1e-10, 1000).unwrap();
        assert!(pre.iterations < plain.iterations, "{} vs {}", pre.iterations, plain.iterations);
    }

    #[test]
    fn indefinite_input_triggers_shift() {
        let a = SparseSym::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let ic = IcFactor::new(&a).unwrap();
        assert!(ic.shift() > 0.0);
        let neg = SparseSym::from_dense(&[vec![0.0]]);
        assert!(matches!(IcFactor::new(&neg), Err(SolverError::FactorizationFailed { .. })));
    }
}
