use std::cell::Cell;

use super::{pcg, BandCholesky, IcFactor, LinearOperator, PcgConfig, SparseSym};
use crate::error::SolverError;

/// How systems with `A1` are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMode {
    /// Nested PCG preconditioned by IC(0) of `P1`.
    #[default]
    Implicit,
    /// Cached band Cholesky factor of `A1`.
    Direct,
}

enum Backend {
    Implicit(IcFactor),
    Direct(BandCholesky),
}

/// Solver for `A1 z = b`, counting the work it does.
pub struct A1Solver<'a> {
    a1: &'a SparseSym,
    backend: Backend,
    tol: f64,
    max_iter: usize,
    solves: Cell<usize>,
    iterations: Cell<usize>,
}

impl<'a> A1Solver<'a> {
    pub fn new(a1: &'a SparseSym, p1: &SparseSym, mode: InnerMode, cfg: &PcgConfig) -> Result<Self, SolverError> {
        let backend = match mode {
            InnerMode::Implicit => Backend::Implicit(IcFactor::new(p1)?),
            InnerMode::Direct => Backend::Direct(BandCholesky::new(a1)?),
        };
        Ok(Self {
            a1,
            backend,
            tol: cfg.inner_rel_tol,
            max_iter: cfg.max_iter_for(a1.dim()),
            solves: Cell::new(0),
            iterations: Cell::new(0),
        })
    }

    pub fn mode(&self) -> InnerMode {
        match self.backend {
            Backend::Implicit(_) => InnerMode::Implicit,
            Backend::Direct(_) => InnerMode::Direct,
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.solves.set(self.solves.get() + 1);
        match &self.backend {
            Backend::Implicit(ic) => {
                let out = pcg(self.a1, ic, b, self.tol, self.max_iter)?;
                self.iterations.set(self.iterations.get() + out.iterations);
                Ok(out.x)
            }
            Backend::Direct(chol) => {
                let mut x = b.to_vec();
                chol.solve_in_place(&mut x);
                Ok(x)
            }
        }
    }

    /// Number of `A1` solves performed so far.
    pub fn solves(&self) -> usize {
        self.solves.get()
    }

    /// Total nested PCG iterations so far (zero in direct mode).
    pub fn inner_iterations(&self) -> usize {
        self.iterations.get()
    }
}

impl LinearOperator for A1Solver<'_> {
    fn dim(&self) -> usize {
        self.a1.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), SolverError> {
        let z = self.solve(x)?;
        y.copy_from_slice(&z);
        Ok(())
    }
}

/// Matrix-free Schur complement `S = A1 + A2ᵀ A1⁻¹ A2`.
///
/// `A2` is stored symmetric, so `A2ᵀ = A2`.
pub struct SchurOperator<'a> {
    a1: &'a SparseSym,
    a2: &'a SparseSym,
    inner: &'a A1Solver<'a>,
}

impl<'a> SchurOperator<'a> {
    pub fn new(a1: &'a SparseSym, a2: &'a SparseSym, inner: &'a A1Solver<'a>) -> Self {
        Self { a1, a2, inner }
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y)?;
        Ok(y)
    }
}

impl LinearOperator for SchurOperator<'_> {
    fn dim(&self) -> usize {
        self.a1.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<(), SolverError> {
        if x.len() != self.dim() {
            return Err(SolverError::Dimension { expected: self.dim(), got: x.len() });
        }
        self.a1.matvec(x, y);
        let a2x = self.a2.mul(x);
        if a2x.iter().all(|v| *v == 0.0) {
            return Ok(());
        }
        let z = self.inner.solve(&a2x)?;
        let a2z = self.a2.mul(&z);
        for (yi, v) in y.iter_mut().zip(a2z) {
            *yi += v;
        }
        Ok(())
    }
}
