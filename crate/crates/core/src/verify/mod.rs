//! Error measurement, the reference solver, convergence studies, spectra and
//! parameter sweeps.

mod oracle;
mod spectrum;
mod sweeps;

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Duration;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::rect_rule;
use crate::solve::{solve, ProblemTemplate, SolutionField};

pub use oracle::{galerkin_oracle, ORACLE_MAX_SIDE};
pub use spectrum::{constitutive_moduli, constitutive_spectrum, schur_spectrum, spread, SchurSpectrum, SCHUR_MAX_UNKNOWNS};
pub use sweeps::{
    acoustic_template, omega_sweep, pcg_iteration_sweep, reference_solution, PLANE_WAVE_ANGLE, rotation_sweep, OmegaRow, OmegaSweep, PcgCell,
    PcgSweep, RotationRow, RotationStatus, RotationSweep,
};

/// Step of the central differences used when no analytic gradient is given.
pub const FD_STEP: f64 = 1e-6;

/// A field `u = u' + i u''` with a gradient, used as the reference for error
/// measurement.
pub trait ExactSolution: Send + Sync {
    fn value(&self, x: f64, y: f64) -> Complex64;

    /// Gradient; defaults to central differences with step [`FD_STEP`].
    fn gradient(&self, x: f64, y: f64) -> [Complex64; 2] {
        let h = FD_STEP;
        [
            (self.value(x + h, y) - self.value(x - h, y)) / (2.0 * h),
            (self.value(x, y + h) - self.value(x, y - h)) / (2.0 * h),
        ]
    }
}

type ValueFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
type GradFn = Arc<dyn Fn(f64, f64) -> [Complex64; 2] + Send + Sync>;

/// Closed-form reference solution.
#[derive(Clone)]
pub struct Analytic {
    u: ValueFn,
    grad: Option<GradFn>,
}

impl Analytic {
    pub fn new(u: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { u: Arc::new(u), grad: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(f64, f64) -> [Complex64; 2] + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    /// `e^{x+y}`, the solution of the manufactured problem with
    /// `L = 1+i`, `M = 2(1+i)`.
    pub fn exp_sum() -> Self {
        Self::new(|x, y| Complex64::new((x + y).exp(), 0.0)).with_gradient(|x, y| {
            let v = Complex64::new((x + y).exp(), 0.0);
            [v, v]
        })
    }

    /// Plane wave `e^{i k·x}` with complex wave vector `k`.
    pub fn plane_wave(k: [Complex64; 2]) -> Self {
        let i = Complex64::new(0.0, 1.0);
        Self::new(move |x, y| (i * (k[0] * x + k[1] * y)).exp()).with_gradient(move |x, y| {
            let v = (i * (k[0] * x + k[1] * y)).exp();
            [i * k[0] * v, i * k[1] * v]
        })
    }
}

impl std::fmt::Debug for Analytic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analytic").field("analytic_gradient", &self.grad.is_some()).finish()
    }
}

impl ExactSolution for Analytic {
    fn value(&self, x: f64, y: f64) -> Complex64 {
        (self.u)(x, y)
    }

    fn gradient(&self, x: f64, y: f64) -> [Complex64; 2] {
        match &self.grad {
            Some(g) => g(x, y),
            None => {
                let h = FD_STEP;
                [
                    (self.value(x + h, y) - self.value(x - h, y)) / (2.0 * h),
                    (self.value(x, y + h) - self.value(x, y - h)) / (2.0 * h),
                ]
            }
        }
    }
}

/// A discrete field used as a reference. Its gradient is the elementwise
/// bilinear gradient, so errors should be integrated on its own grid.
impl ExactSolution for SolutionField {
    fn value(&self, x: f64, y: f64) -> Complex64 {
        let e = self.grid().locate(x, y).expect("reference evaluated outside its domain");
        self.eval_in_element(e, x, y).0
    }

    fn gradient(&self, x: f64, y: f64) -> [Complex64; 2] {
        let e = self.grid().locate(x, y).expect("reference evaluated outside its domain");
        self.eval_in_element(e, x, y).1
    }
}

/// Errors of one computed field against a reference.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    /// `‖(u' − u'_N, u'' − u''_N)‖²_V`.
    pub v2: f64,
    /// Squared H¹ errors of the real and imaginary parts.
    pub h1_sq: [f64; 2],
    /// Squared L² errors of the real and imaginary parts.
    pub l2_sq: [f64; 2],
    /// `‖(u', u'')‖²_V` of the reference.
    pub reference_v2: f64,
    pub h: f64,
    /// Nodes per side.
    pub n: usize,
    pub outer_iterations: usize,
    pub wall_time: Duration,
}

impl ErrorReport {
    /// `‖e‖_V / ‖u‖_V`.
    pub fn relative(&self) -> f64 {
        if self.reference_v2 > 0.0 {
            (self.v2 / self.reference_v2).sqrt()
        } else {
            self.v2.sqrt()
        }
    }

    /// Checks `V² = H¹(u' err)² + H¹(u'' err)²`.
    pub fn decomposition_defect(&self) -> f64 {
        (self.v2 - self.h1_sq[0] - self.h1_sq[1]).abs()
    }
}

/// V-norm error of `sol` against `exact`, integrated with an
/// `order × order` Gauss rule on every element of `sol`'s grid.
pub fn v_norm_error(sol: &SolutionField, exact: &dyn ExactSolution, order: usize) -> ErrorReport {
    v_norm_error_on(sol, exact, sol.grid(), order)
}

/// As [`v_norm_error`], integrating over the elements of `quad_grid`, which
/// must cover the same domain. Use the finer of two nested grids so both
/// fields are smooth on every quadrature cell.
pub fn v_norm_error_on(sol: &SolutionField, exact: &dyn ExactSolution, quad_grid: &Grid, order: usize) -> ErrorReport {
    let mut l2 = [0.0; 2];
    let mut semi = [0.0; 2];
    let mut ref_v2 = 0.0;
    for e in 0..quad_grid.num_elements() {
        let [ox, oy] = quad_grid.element_origin(e);
        let [cx, cy] = quad_grid.element_centroid(e);
        let se = sol.grid().locate(cx, cy).expect("quadrature grid outside the solution domain");
        for (x, y, w) in rect_rule(order, ox, oy, quad_grid.hx(), quad_grid.hy()) {
            let (uh, gh) = sol.eval_in_element(se, x, y);
            let u = exact.value(x, y);
            let g = exact.gradient(x, y);
            let d = u - uh;
            let dg = [g[0] - gh[0], g[1] - gh[1]];
            l2[0] += w * d.re * d.re;
            l2[1] += w * d.im * d.im;
            semi[0] += w * (dg[0].re * dg[0].re + dg[1].re * dg[1].re);
            semi[1] += w * (dg[0].im * dg[0].im + dg[1].im * dg[1].im);
            ref_v2 += w * (u.norm_sqr() + g[0].norm_sqr() + g[1].norm_sqr());
        }
    }
    let h1_sq = [l2[0] + semi[0], l2[1] + semi[1]];
    ErrorReport {
        v2: h1_sq[0] + h1_sq[1],
        h1_sq,
        l2_sq: l2,
        reference_v2: ref_v2,
        h: sol.grid().h(),
        n: sol.grid().nx(),
        outer_iterations: sol.stats.outer_iterations,
        wall_time: sol.stats.assembly_time + sol.stats.solve_time,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub report: ErrorReport,
}

/// Errors on a sequence of refining grids with the fitted rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln V²` against `ln h`; `None` when some error
    /// vanishes.
    pub slope: Option<f64>,
    /// Set when the finest grid served as the reference.
    pub reference_note: Option<String>,
}

impl ConvergenceStudy {
    /// CSV with columns `N,h,V2err,slope_so_far` and a trailing
    /// `# slope,<value>` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,h,V2err,H1err_re,H1err_im,L2err_re,L2err_im,rel_err,outer_iterations,slope_so_far\n");
        for (k, r) in self.rows.iter().enumerate() {
            let so_far = if k == 0 { None } else { least_squares_slope(&self.rows[..=k]) };
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
                r.n,
                r.h,
                r.report.v2,
                r.report.h1_sq[0].sqrt(),
                r.report.h1_sq[1].sqrt(),
                r.report.l2_sq[0].sqrt(),
                r.report.l2_sq[1].sqrt(),
                r.report.relative(),
                r.report.outer_iterations,
                fmt_opt(so_far)
            );
        }
        let _ = writeln!(out, "# slope,{}", fmt_opt(self.slope));
        if let Some(note) = &self.reference_note {
            let _ = writeln!(out, "# note,{note}");
        }
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |s| format!("{s:.16e}"))
}

fn least_squares_slope(rows: &[ConvergenceRow]) -> Option<f64> {
    if rows.iter().any(|r| !(r.report.v2 > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), r.report.v2.ln())).collect();
    fit_slope(&pts)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Solves `template` on the square grids `ns` (nodes per side, strictly
/// increasing, at least three) and measures V-norm errors.
///
/// With `exact = None` the finest grid is solved as well and used as the
/// reference for the others; it is then not part of the table.
pub fn convergence_study(
    template: &ProblemTemplate,
    ns: &[usize],
    exact: Option<&dyn ExactSolution>,
) -> Result<ConvergenceStudy> {
    if ns.len() < 3 {
        return Err(Error::Study(format!("a convergence study needs at least 3 grids, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Study("grid sizes must be strictly increasing".into()));
    }
    let (table_ns, reference) = match exact {
        Some(_) => (ns, None),
        None => {
            let finest = *ns.last().unwrap();
            (&ns[..ns.len() - 1], Some(solve(&template.square(finest)?)?))
        }
    };
    let solutions: Vec<Result<SolutionField>> =
        table_ns.par_iter().map(|&n| template.square(n).and_then(|spec| solve(&spec))).collect();
    let mut rows = Vec::with_capacity(table_ns.len());
    for (sol, &n) in solutions.into_iter().zip(table_ns) {
        let sol = sol?;
        let report = match (&reference, exact) {
            (Some(r), _) => v_norm_error_on(&sol, r, r.grid(), 3),
            (None, Some(ex)) => v_norm_error(&sol, ex, 3),
            (None, None) => unreachable!(),
        };
        rows.push(ConvergenceRow { n, h: sol.grid().h(), report });
    }
    let slope = least_squares_slope(&rows);
    let reference_note = reference.map(|r| {
        format!("errors measured against the {}x{} solution, not an exact solution", r.grid().nx(), r.grid().ny())
    });
    Ok(ConvergenceStudy { rows, slope, reference_note })
}
