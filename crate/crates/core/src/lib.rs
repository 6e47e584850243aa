//! Finite elements for the complex Helmholtz equation `∇·L∇u = Mu` built on a
//! saddle-point variational principle.
//!
//! Writing `u = u' + i u''` and splitting `L`, `M` into real and imaginary
//! parts gives a real block system `[[A1, A2ᵀ], [A2, −A1]]` whose diagonal
//! block `A1` is symmetric positive definite whenever `Im L` and `Im M` are
//! positive. Eliminating `α''` leaves two SPD solves with `A1` and with the
//! Schur complement `A1 + A2ᵀA1⁻¹A2`, handled by nested preconditioned
//! conjugate gradients.
//!
//! Modules, bottom-up:
//!
//! - [`grid`]: rectangular grids and bilinear hat functions;
//! - [`coeff`]: coefficient fields, admissibility and rotation by `e^{iθ}`;
//! - [`assemble`]: element matrices and the block system for Dirichlet,
//!   Neumann and Robin data;
//! - [`sparse`]: symmetric sparse storage, IC(0), PCG and the Schur operator;
//! - [`solve`]: the full solution algorithm and the saddle functional;
//! - [`verify`]: error norms, the complex Galerkin reference solver,
//!   convergence studies, spectra and parameter sweeps;
//! - [`config`] and [`cli`]: problem files and the command-line runner.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assemble;
pub mod cli;
pub mod coeff;
pub mod config;
pub mod error;
pub mod expr;
pub mod grid;
pub mod quadrature;
pub mod solve;
pub mod sparse;
pub mod verify;

pub use assemble::{assemble_system, element_blocks, BcKind, BlockSystem, BoundaryData, DirichletData};
pub use coeff::{AcousticParams, Axis, CoefficientField, CoefficientModel, LCoeff};
pub use error::{Error, Result, SolverError};
pub use grid::{Grid, Rect};
pub use num_complex::{c64, Complex64};
pub use solve::{saddle_functional, solve, ProblemSpec, ProblemTemplate, RotationPolicy, SolutionField, SolverConfig};
pub use sparse::{InnerMode, PcgConfig};
