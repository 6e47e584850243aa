//! Two-stage Schur-complement solution of the saddle-point block system.
//!
//! Eliminating `α''` from the block system leaves
//! `(A1 + A2ᵀA1⁻¹A2) α' = b1 + A2ᵀA1⁻¹b2`, which is SPD and solved by PCG
//! preconditioned with `A1`; `α''` then follows from `A1 α'' = A2 α' − b2`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::assemble::{assemble_system, BlockSystem, BoundaryData};
use crate::coeff::{CoefficientField, CoefficientModel};
use crate::error::{Error, Result, SolverError};
use crate::grid::{Grid, Rect};
use crate::quadrature::rect_rule;
use crate::sparse::{pcg, A1Solver, InnerMode, PcgConfig, SchurOperator};

/// How coefficients are rotated by `e^{iθ}` before assembly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RotationPolicy {
    /// Use the coefficients as given; they must already be admissible.
    Off,
    Explicit(f64),
    /// Max-margin rotation of all coefficient values into the upper half-plane.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub pcg: PcgConfig,
    pub mode: InnerMode,
    /// Maximum number of block-residual correction passes after the first
    /// two-stage solve.
    pub refine_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { pcg: PcgConfig::default(), mode: InnerMode::Implicit, refine_steps: 3 }
    }
}

/// A fully specified boundary-value problem on a concrete grid.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub field: CoefficientField,
    pub bc: BoundaryData,
    pub solver: SolverConfig,
    pub rotation: RotationPolicy,
}

impl ProblemSpec {
    pub fn new(grid: Grid, field: CoefficientField, bc: BoundaryData) -> Self {
        Self { grid, field, bc, solver: SolverConfig::default(), rotation: RotationPolicy::default() }
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_rotation(mut self, rotation: RotationPolicy) -> Self {
        self.rotation = rotation;
        self
    }

    /// Rotation angle selected by the policy.
    pub fn rotation_angle(&self) -> Result<f64> {
        match self.rotation {
            RotationPolicy::Off => Ok(0.0),
            RotationPolicy::Explicit(t) => Ok(t),
            RotationPolicy::Auto => self.field.auto_rotation_angle(),
        }
    }

    /// Rotated coefficients and boundary data, checked for admissibility.
    pub fn prepared(&self) -> Result<(f64, CoefficientField, BoundaryData)> {
        let theta = self.rotation_angle()?;
        let field = if theta == 0.0 { self.field.clone() } else { self.field.rotate(theta) };
        let adm = field.admissibility();
        if !adm.ok {
            return Err(Error::Inadmissible(format!(
                "after rotation by {theta:.6} rad: min Im L = {:.3e}, min Im M = {:.3e}; both must be positive",
                adm.min_im_l, adm.min_im_m
            )));
        }
        let bc = self.bc.rotated(theta);
        bc.validate()?;
        Ok((theta, field, bc))
    }

    pub fn assemble(&self) -> Result<(f64, CoefficientField, BlockSystem)> {
        let (theta, field, bc) = self.prepared()?;
        let sys = assemble_system(&self.grid, &field, &bc)?;
        Ok((theta, field, sys))
    }
}

/// A problem independent of grid resolution: studies instantiate it on
/// several grids.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub domain: Rect,
    pub coefficients: CoefficientModel,
    pub bc: BoundaryData,
    pub solver: SolverConfig,
    pub rotation: RotationPolicy,
}

impl ProblemTemplate {
    pub fn new(domain: Rect, coefficients: CoefficientModel, bc: BoundaryData) -> Self {
        Self { domain, coefficients, bc, solver: SolverConfig::default(), rotation: RotationPolicy::default() }
    }

    pub fn instantiate(&self, nx: usize, ny: usize) -> Result<ProblemSpec> {
        let grid = Grid::new(self.domain, nx, ny)?;
        let field = self.coefficients.sample(&grid)?;
        Ok(ProblemSpec { grid, field, bc: self.bc.clone(), solver: self.solver, rotation: self.rotation })
    }

    pub fn square(&self, n: usize) -> Result<ProblemSpec> {
        self.instantiate(n, n)
    }
}

/// Work and accuracy record of one solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Outer PCG iterations on the Schur complement (step 4), summed over
    /// refinement passes.
    pub outer_iterations: usize,
    /// Outer iterations of the first pass only.
    pub first_pass_iterations: usize,
    /// Nested PCG iterations spent in steps 3, 4 and 6 respectively.
    pub step3_inner_iterations: usize,
    pub step4_inner_iterations: usize,
    pub step6_inner_iterations: usize,
    /// Number of `A1` solves overall.
    pub a1_solves: usize,
    pub refinement_passes: usize,
    /// Relative residual of the full block system at exit.
    pub block_residual: f64,
    /// Outer PCG residual history of the first pass.
    pub outer_residual_history: Vec<f64>,
    pub assembly_time: Duration,
    pub solve_time: Duration,
}

/// Computed field `u = u' + i u''` with its free-node coefficients.
#[derive(Debug, Clone)]
pub struct SolutionField {
    grid: Grid,
    pub alpha_re: Vec<f64>,
    pub alpha_im: Vec<f64>,
    nodal: Vec<Complex64>,
    pub theta_applied: f64,
    pub stats: SolveStats,
}

impl SolutionField {
    /// Wraps nodal values computed elsewhere (e.g. by a reference solver).
    pub fn from_nodal(grid: Grid, nodal: Vec<Complex64>) -> Result<Self> {
        if nodal.len() != grid.num_nodes() {
            return Err(Error::InvalidParameter(format!(
                "{} nodal values for {} nodes",
                nodal.len(),
                grid.num_nodes()
            )));
        }
        Ok(Self {
            grid,
            alpha_re: Vec::new(),
            alpha_im: Vec::new(),
            nodal,
            theta_applied: 0.0,
            stats: SolveStats::default(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nodal(&self) -> &[Complex64] {
        &self.nodal
    }

    pub fn nodal_re(&self) -> Vec<f64> {
        self.nodal.iter().map(|v| v.re).collect()
    }

    pub fn nodal_im(&self) -> Vec<f64> {
        self.nodal.iter().map(|v| v.im).collect()
    }

    /// Value and gradient inside element `e` (the point may lie on its
    /// closure).
    pub fn eval_in_element(&self, e: usize, x: f64, y: f64) -> (Complex64, [Complex64; 2]) {
        let (v, g) = self.grid.local_shape(e, x, y);
        let nodes = self.grid.element_nodes(e);
        let mut u = Complex64::new(0.0, 0.0);
        let mut du = [Complex64::new(0.0, 0.0); 2];
        for k in 0..4 {
            let val = self.nodal[nodes[k]];
            u += val * v[k];
            du[0] += val * g[k][0];
            du[1] += val * g[k][1];
        }
        (u, du)
    }

    pub fn value_at(&self, x: f64, y: f64) -> Result<Complex64> {
        let e = self.grid.locate(x, y)?;
        Ok(self.eval_in_element(e, x, y).0)
    }

    pub fn evaluate(&self, points: &[[f64; 2]]) -> Result<Vec<Complex64>> {
        points.iter().map(|&[x, y]| self.value_at(x, y)).collect()
    }

    /// Relative nodal max-norm distance to another field on the same grid.
    pub fn max_rel_diff(&self, other: &SolutionField) -> f64 {
        let scale = self.nodal.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = self.nodal.iter().zip(&other.nodal).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    /// `x,y,u_re,u_im` rows over all grid nodes, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,u_re,u_im")?;
        for (k, u) in self.nodal.iter().enumerate() {
            let [x, y] = self.grid.node_coords(k);
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", x, y, u.re, u.im)?;
        }
        Ok(())
    }

    /// `key = value` lines describing the run.
    pub fn metadata(&self) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "nx = {}", self.grid.nx());
        let _ = writeln!(out, "ny = {}", self.grid.ny());
        let _ = writeln!(out, "h = {:.16e}", self.grid.h());
        let _ = writeln!(out, "unknowns = {}", self.alpha_re.len());
        let _ = writeln!(out, "theta_applied = {:.16e}", self.theta_applied);
        let _ = writeln!(out, "outer_iterations = {}", s.outer_iterations);
        let _ = writeln!(out, "first_pass_outer_iterations = {}", s.first_pass_iterations);
        let _ = writeln!(out, "step3_inner_iterations = {}", s.step3_inner_iterations);
        let _ = writeln!(out, "step4_inner_iterations = {}", s.step4_inner_iterations);
        let _ = writeln!(out, "step6_inner_iterations = {}", s.step6_inner_iterations);
        let _ = writeln!(out, "a1_solves = {}", s.a1_solves);
        let _ = writeln!(out, "refinement_passes = {}", s.refinement_passes);
        let _ = writeln!(out, "block_residual = {:.6e}", s.block_residual);
        let _ = writeln!(out, "outer_final_residual = {:.6e}", s.outer_residual_history.last().copied().unwrap_or(0.0));
        let _ = writeln!(out, "assembly_seconds = {:.6}", s.assembly_time.as_secs_f64());
        let _ = writeln!(out, "solve_seconds = {:.6}", s.solve_time.as_secs_f64());
        out
    }
}

struct TwoStage {
    x1: Vec<f64>,
    x2: Vec<f64>,
    outer_iterations: usize,
    history: Vec<f64>,
}

fn stage(stage: &'static str) -> impl Fn(SolverError) -> Error {
    move |source| Error::Stage { stage, source }
}

/// Steps 3–6: solves the block system with right-hand side `(r1, r2)`.
fn two_stage(
    sys: &BlockSystem,
    inner: &A1Solver<'_>,
    r1: &[f64],
    r2: &[f64],
    cfg: &PcgConfig,
    counters: &mut SolveStats,
) -> Result<TwoStage> {
    let n = sys.n();
    let before = inner.inner_iterations();
    let z = inner.solve(r2).map_err(stage("step 3 (w1 = b1 + A2ᵀA1⁻¹b2)"))?;
    let a2z = sys.a2.mul(&z);
    let w1: Vec<f64> = r1.iter().zip(&a2z).map(|(a, b)| a + b).collect();
    let after3 = inner.inner_iterations();
    counters.step3_inner_iterations += after3 - before;

    let schur = SchurOperator::new(&sys.a1, &sys.a2, inner);
    let outer = pcg(&schur, inner, &w1, cfg.rel_tol, cfg.max_iter_for(n))
        .map_err(stage("step 4 (Schur complement PCG)"))?;
    let after4 = inner.inner_iterations();
    counters.step4_inner_iterations += after4 - after3;

    let a2x = sys.a2.mul(&outer.x);
    let w2: Vec<f64> = a2x.iter().zip(r2).map(|(a, b)| a - b).collect();
    let x2 = inner.solve(&w2).map_err(stage("step 6 (A1 α'' = A2 α' − b2)"))?;
    counters.step6_inner_iterations += inner.inner_iterations() - after4;

    Ok(TwoStage { x1: outer.x, x2, outer_iterations: outer.iterations, history: outer.residual_history })
}

/// Solves an assembled block system, refining against the full block
/// residual until it is within `10 · rel_tol` or the pass budget is spent.
pub fn solve_block_system(
    sys: &BlockSystem,
    solver: &SolverConfig,
) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
    solver.pcg.validate().map_err(Error::InvalidParameter)?;
    let mut stats = SolveStats::default();
    let inner = A1Solver::new(&sys.a1, &sys.p1, solver.mode, &solver.pcg).map_err(stage("preconditioner setup"))?;

    let first = two_stage(sys, &inner, &sys.b1, &sys.b2, &solver.pcg, &mut stats)?;
    stats.outer_iterations = first.outer_iterations;
    stats.first_pass_iterations = first.outer_iterations;
    stats.outer_residual_history = first.history;
    let (mut x1, mut x2) = (first.x1, first.x2);

    let target = 10.0 * solver.pcg.rel_tol;
    let mut res = sys.relative_block_residual(&x1, &x2);
    while res > target && stats.refinement_passes < solver.refine_steps {
        let (r1, r2) = sys.block_residual(&x1, &x2);
        let corr = two_stage(sys, &inner, &r1, &r2, &solver.pcg, &mut stats)?;
        stats.outer_iterations += corr.outer_iterations;
        for (x, d) in x1.iter_mut().zip(&corr.x1) {
            *x += d;
        }
        for (x, d) in x2.iter_mut().zip(&corr.x2) {
            *x += d;
        }
        stats.refinement_passes += 1;
        res = sys.relative_block_residual(&x1, &x2);
    }
    stats.block_residual = res;
    stats.a1_solves = inner.solves();
    Ok((x1, x2, stats))
}

/// Runs the full algorithm: rotation, assembly, the two-stage Schur solve and
/// residual verification.
pub fn solve(spec: &ProblemSpec) -> Result<SolutionField> {
    let t0 = Instant::now();
    let (theta, _field, sys) = spec.assemble()?;
    let assembly_time = t0.elapsed();
    let t1 = Instant::now();
    let (alpha_re, alpha_im, mut stats) = solve_block_system(&sys, &spec.solver)?;
    stats.solve_time = t1.elapsed();
    stats.assembly_time = assembly_time;
    let nodal = sys.expand(&alpha_re, &alpha_im);
    Ok(SolutionField { grid: spec.grid.clone(), alpha_re, alpha_im, nodal, theta_applied: theta, stats })
}

/// The saddle functional
/// `Y(u', u'') = ∫ F'·Z''F' + 2 F'·Z'F'' − F''·Z''F''` with `F = (∇u, u)`,
/// for nodal fields `u'`, `u''` on every grid node.
pub fn saddle_functional(grid: &Grid, field: &CoefficientField, u_re: &[f64], u_im: &[f64]) -> f64 {
    let mut total = 0.0;
    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        let l = field.l(e);
        let m = field.m(e);
        let (lre, lim) = (l.re(), l.im());
        let [ox, oy] = grid.element_origin(e);
        for (x, y, w) in rect_rule(2, ox, oy, grid.hx(), grid.hy()) {
            let (v, g) = grid.local_shape(e, x, y);
            let mut f1 = [0.0; 3];
            let mut f2 = [0.0; 3];
            for k in 0..4 {
                let (a, b) = (u_re[nodes[k]], u_im[nodes[k]]);
                f1[0] += a * g[k][0];
                f1[1] += a * g[k][1];
                f1[2] += a * v[k];
                f2[0] += b * g[k][0];
                f2[1] += b * g[k][1];
                f2[2] += b * v[k];
            }
            let zi = [lim[0], lim[1], m.im];
            let zr = [lre[0], lre[1], m.re];
            let mut q = 0.0;
            for c in 0..3 {
                q += f1[c] * zi[c] * f1[c] + 2.0 * f1[c] * zr[c] * f2[c] - f2[c] * zi[c] * f2[c];
            }
            total += w * q;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_dirichlet_data_gives_zero() {
        let g = Grid::square(Rect::unit(), 7).unwrap();
        let f = CoefficientField::constant(&g, c(3.0, 2.0), c(1.0, 4.0));
        let sol = solve(&ProblemSpec::new(g, f, BoundaryData::dirichlet(|_, _| c(0.0, 0.0)))).unwrap();
        assert!(sol.nodal().iter().all(|v| v.norm() == 0.0));
        assert_eq!(sol.value_at(0.3, 0.4).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn evaluation_reproduces_boundary_data_and_averages() {
        let g = Grid::square(Rect::unit(), 6).unwrap();
        let f = CoefficientField::constant(&g, c(1.0, 1.0), c(2.0, 2.0));
        let data = |x: f64, y: f64| c((x + y).exp(), x * y);
        let sol = solve(&ProblemSpec::new(g.clone(), f, BoundaryData::dirichlet(data))).unwrap();
        for &n in g.boundary_nodes() {
            let [x, y] = g.node_coords(n);
            assert_eq!(sol.value_at(x, y).unwrap(), data(x, y));
        }
        let e = 7;
        let [cx, cy] = g.element_centroid(e);
        let avg: Complex64 = g.element_nodes(e).iter().map(|&n| sol.nodal()[n]).sum::<Complex64>() / 4.0;
        assert!((sol.value_at(cx, cy).unwrap() - avg).norm() < 1e-14);
        assert!(sol.value_at(1.5, 0.0).is_err());
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 37);
        assert!(sol.metadata().contains("theta_applied"));
    }

    #[test]
    fn functional_signs() {
        let g = Grid::square(Rect::unit(), 5).unwrap();
        let zero = vec![0.0; g.num_nodes()];
        let f = CoefficientField::constant(&g, c(0.0, 2.0), c(0.0, 1.0));
        assert_eq!(saddle_functional(&g, &f, &zero, &zero), 0.0);
        let u: Vec<f64> = (0..g.num_nodes()).map(|k| (k as f64).sin()).collect();
        assert!(saddle_functional(&g, &f, &u, &zero) > 0.0);
        assert!(saddle_functional(&g, &f, &zero, &u) < 0.0);
    }

    #[test]
    fn inadmissible_without_rotation_is_rejected() {
        let g = Grid::square(Rect::unit(), 4).unwrap();
        let f = CoefficientField::constant(&g, c(2.0, -0.003), c(3.0, -0.0004));
        let spec = ProblemSpec::new(g, f, BoundaryData::dirichlet(|_, _| c(1.0, 0.0)));
        assert!(matches!(solve(&spec.clone().with_rotation(RotationPolicy::Off)), Err(Error::Inadmissible(_))));
        assert!(solve(&spec.with_rotation(RotationPolicy::Auto)).is_ok());
    }

    #[test]
    fn direct_and_implicit_modes_agree() {
        let g = Grid::square(Rect::unit(), 9).unwrap();
        let f = CoefficientField::constant(&g, c(3.0, 2.0), c(1.0, 4.0));
        let bc = BoundaryData::dirichlet(|x, y| c(x.cos(), y.sin()));
        let spec = ProblemSpec::new(g, f, bc).with_rotation(RotationPolicy::Off);
        let imp = solve(&spec).unwrap();
        let direct_cfg = SolverConfig { mode: InnerMode::Direct, ..Default::default() };
        let dir = solve(&spec.clone().with_solver(direct_cfg)).unwrap();
        assert!(imp.max_rel_diff(&dir) < 1e-9);
        assert_eq!(dir.stats.step4_inner_iterations, 0);
        assert!(imp.stats.block_residual <= 1e-9);
    }
}
