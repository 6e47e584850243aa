use super::{dot, norm2, LinearOperator};
use crate::error::SolverError;

/// Tolerances for the outer and nested conjugate-gradient solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgConfig {
    /// Target relative residual `‖b − Ax‖₂ / ‖b‖₂`.
    pub rel_tol: f64,
    /// Iteration cap; `None` means `10 · N`.
    pub max_iter: Option<usize>,
    /// Relative tolerance of nested `A1` solves.
    pub inner_rel_tol: f64,
}

impl Default for PcgConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_iter: None, inner_rel_tol: 1e-12 }
    }
}

impl PcgConfig {
    /// Same configuration with outer tolerance `rel_tol`; the inner
    /// tolerance is tightened to match if needed.
    pub fn with_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, inner_rel_tol: self.inner_rel_tol.min(rel_tol), ..self }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol));
        }
        if !(self.inner_rel_tol > 0.0 && self.inner_rel_tol <= self.rel_tol) {
            return Err(format!(
                "inner_rel_tol must lie in (0, rel_tol = {}], got {}",
                self.rel_tol, self.inner_rel_tol
            ));
        }
        if self.max_iter == Some(0) {
            return Err("max_iter must be positive".into());
        }
        Ok(())
    }

    pub fn max_iter_for(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(10 * n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual before the first iteration and after each one.
    pub residual_history: Vec<f64>,
}

impl PcgOutcome {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// Preconditioned conjugate gradients from a zero initial guess.
///
/// Convergence is declared on the recursively updated residual and then
/// confirmed against the true residual `b − Ax`; if the two have drifted
/// apart the iteration restarts from the true residual.
pub fn pcg(
    a: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<PcgOutcome, SolverError> {
    let n = a.dim();
    if b.len() != n || precond.dim() != n {
        return Err(SolverError::Dimension { expected: n, got: b.len().min(precond.dim()) });
    }
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(PcgOutcome { x, iterations: 0, residual_history: vec![0.0] });
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    precond.apply(&r, &mut z)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = vec![1.0];
    let mut iterations = 0;

    loop {
        if iterations >= max_iter {
            return Err(SolverError::NotConverged { iterations, residual: *history.last().unwrap() });
        }
        if !(rz > 0.0) {
            return Err(SolverError::Breakdown { iteration: iterations, curvature: rz });
        }
        a.apply(&p, &mut q)?;
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(SolverError::Breakdown { iteration: iterations, curvature });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        iterations += 1;
        let mut rel = norm2(&r) / bnorm;

        if rel <= rel_tol {
            a.apply(&x, &mut q)?;
            for i in 0..n {
                r[i] = b[i] - q[i];
            }
            rel = norm2(&r) / bnorm;
            history.push(rel);
            if rel <= rel_tol {
                return Ok(PcgOutcome { x, iterations, residual_history: history });
            }
            precond.apply(&r, &mut z)?;
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        history.push(rel);

        precond.apply(&r, &mut z)?;
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{Identity, SparseSym};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_converges_in_one_step() {
        let a = SparseSym::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let b = [3.0, -1.0, 2.0];
        let out = pcg(&a, &Identity(3), &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, b.to_vec());
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseSym::from_dense(&[vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 3.0]]);
        let out = pcg(&a, &Identity(3), &[1.0, 2.0, 3.0], 1e-14, 10).unwrap();
        for v in out.x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn random_spd_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = g.transpose() * &g + DMatrix::identity(n, n);
        let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let exact = a.clone().cholesky().unwrap().solve(&b);

        let dense: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
        let sa = SparseSym::from_dense(&dense);
        let out = pcg(&sa, &Identity(n), b.as_slice(), 1e-13, 1000).unwrap();
        let err = (DVector::from_vec(out.x.clone()) - &exact).norm() / exact.norm();
        assert!(err < 1e-8, "relative error {err}");
        assert!(out.final_residual() <= 1e-13);
        assert!(out.residual_history.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn indefinite_operator_breaks_down() {
        let a = SparseSym::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        let err = pcg(&a, &Identity(2), &[1.0, 1.0], 1e-10, 10).unwrap_err();
        assert!(matches!(err, SolverError::Breakdown { .. }));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
        }
        let a = SparseSym::from_triplets(n, &t);
        let err = pcg(&a, &Identity(n), &vec![1.0; n], 1e-12, 3).unwrap_err();
        assert!(matches!(err, SolverError::NotConverged { iterations: 3, .. }));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = SparseSym::from_dense(&[vec![2.0]]);
        let out = pcg(&a, &Identity(1), &[0.0], 1e-10, 5).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0]);
    }

    #[test]
    fn config_validation() {
        assert!(PcgConfig::default().validate().is_ok());
        assert!(PcgConfig { rel_tol: 1e-14, ..Default::default() }.validate().is_err());
        assert!(PcgConfig { rel_tol: 1.5, ..Default::default() }.validate().is_err());
        assert!(PcgConfig::default().with_tol(1e-14).validate().is_ok());
        assert_eq!(PcgConfig::default().max_iter_for(7), 70);
    }
}
