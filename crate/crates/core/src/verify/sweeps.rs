use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{galerkin_oracle, v_norm_error_on, Analytic, ORACLE_MAX_SIDE};
use crate::assemble::BoundaryData;
use crate::coeff::{AcousticParams, CoefficientModel};
use crate::error::{Error, Result};
use crate::grid::{Grid, Rect};
use crate::solve::{solve, ProblemTemplate, RotationPolicy, SolutionField};

/// Reference for a template on the `n × n` grid: the complex Galerkin
/// solution on the nested grid with `2n − 1` nodes per side.
pub fn reference_solution(template: &ProblemTemplate, n: usize) -> Result<SolutionField> {
    let side = 2 * n - 1;
    if side > ORACLE_MAX_SIDE {
        return Err(Error::SizeLimit { what: "reference grid side", size: side, limit: ORACLE_MAX_SIDE });
    }
    let grid = Grid::new(template.domain, side, side)?;
    let field = template.coefficients.sample(&grid)?;
    let u = galerkin_oracle(&grid, &field, &template.bc)?;
    SolutionField::from_nodal(grid, u)
}

fn csv_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// One cell of a PCG iteration sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PcgCell {
    pub n: usize,
    pub tol: f64,
    /// Outer iterations of the first Schur pass, or the failure message.
    pub iterations: std::result::Result<usize, String>,
    pub inner_iterations: usize,
    pub block_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgSweep {
    pub cells: Vec<PcgCell>,
}

impl PcgSweep {
    /// `max − min` of the outer iteration counts at tolerance `tol`; `None`
    /// if any cell in that row failed.
    pub fn flatness(&self, tol: f64) -> Option<usize> {
        let row: Vec<&PcgCell> = self.cells.iter().filter(|c| c.tol == tol).collect();
        let its: Option<Vec<usize>> = row.iter().map(|c| c.iterations.as_ref().ok().copied()).collect();
        let its = its?;
        Some(its.iter().max()? - its.iter().min()?)
    }

    pub fn failures(&self) -> Vec<&PcgCell> {
        self.cells.iter().filter(|c| c.iterations.is_err()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,tol,outer_iterations,inner_iterations,block_residual,status\n");
        for c in &self.cells {
            let (it, status) = match &c.iterations {
                Ok(k) => (k.to_string(), "ok".to_string()),
                Err(e) => (String::new(), format!("\"failed: {}\"", e.replace('"', "'"))),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.n,
                csv_f(c.tol),
                it,
                c.inner_iterations,
                csv_f(c.block_residual),
                status
            );
        }
        out
    }
}

/// Outer PCG iterations needed on `n × n` grids for each tolerance.
/// Failures are recorded in their cell.
pub fn pcg_iteration_sweep(template: &ProblemTemplate, ns: &[usize], tols: &[f64]) -> PcgSweep {
    let jobs: Vec<(usize, f64)> = ns.iter().flat_map(|&n| tols.iter().map(move |&t| (n, t))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, tol)| {
            let mut t = template.clone();
            t.solver.pcg = t.solver.pcg.with_tol(tol);
            match t.square(n).and_then(|spec| solve(&spec)) {
                Ok(sol) => PcgCell {
                    n,
                    tol,
                    iterations: Ok(sol.stats.first_pass_iterations),
                    inner_iterations: sol.stats.step3_inner_iterations
                        + sol.stats.step4_inner_iterations
                        + sol.stats.step6_inner_iterations,
                    block_residual: sol.stats.block_residual,
                },
                Err(e) => PcgCell { n, tol, iterations: Err(e.to_string()), inner_iterations: 0, block_residual: f64::NAN },
            }
        })
        .collect();
    PcgSweep { cells }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RotationStatus {
    Solved {
        /// Relative V-norm error against the reference.
        error: f64,
        /// Relative nodal max-norm distance to the θ = 0 solution.
        diff_from_unrotated: f64,
        outer_iterations: usize,
    },
    /// Rotation leaves `Im L` or `Im M` non-positive somewhere; not solved.
    Inadmissible,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationRow {
    pub theta: f64,
    /// Distance of θ to the nearest end of the admissible arc (negative
    /// outside it).
    pub boundary_distance: f64,
    pub status: RotationStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationSweep {
    /// Admissible rotation angles `(lo, hi)`, open interval.
    pub arc: (f64, f64),
    pub n: usize,
    /// Error of the unrotated solution against the reference.
    pub unrotated_error: f64,
    pub rows: Vec<RotationRow>,
}

impl RotationSweep {
    /// Largest `error / unrotated_error` over solved rows at least `margin`
    /// inside the arc.
    pub fn max_error_ratio(&self, margin: f64) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.boundary_distance >= margin)
            .filter_map(|r| match r.status {
                RotationStatus::Solved { error, .. } => Some(error / self.unrotated_error),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    /// Largest distance to the unrotated solution over solved rows.
    pub fn max_diff(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| match r.status {
                RotationStatus::Solved { diff_from_unrotated, .. } => Some(diff_from_unrotated),
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,boundary_distance,status,error,diff_from_unrotated,outer_iterations\n");
        for r in &self.rows {
            let tail = match &r.status {
                RotationStatus::Solved { error, diff_from_unrotated, outer_iterations } => {
                    format!("ok,{},{},{}", csv_f(*error), csv_f(*diff_from_unrotated), outer_iterations)
                }
                RotationStatus::Inadmissible => "inadmissible,,,".to_string(),
                RotationStatus::Failed(e) => format!("\"failed: {}\",,,", e.replace('"', "'")),
            };
            let _ = writeln!(out, "{},{},{}", csv_f(r.theta), csv_f(r.boundary_distance), tail);
        }
        let _ = writeln!(out, "# arc,{},{}", csv_f(self.arc.0), csv_f(self.arc.1));
        let _ = writeln!(out, "# unrotated_error,{}", csv_f(self.unrotated_error));
        out
    }
}

/// Solves the template on an `n × n` grid for every rotation angle and
/// compares each result with the unrotated solution and with the reference
/// from [`reference_solution`].
pub fn rotation_sweep(template: &ProblemTemplate, n: usize, thetas: &[f64]) -> Result<RotationSweep> {
    let base = {
        let mut t = template.clone();
        t.rotation = RotationPolicy::Off;
        t.square(n)?
    };
    let arc = base.field.admissible_arc()?;
    let reference = reference_solution(template, n)?;
    let unrotated = if base.field.admissibility().ok {
        solve(&base)?
    } else {
        let u = galerkin_oracle(&base.grid, &base.field, &base.bc)?;
        SolutionField::from_nodal(base.grid.clone(), u)?
    };
    let unrotated_error = v_norm_error_on(&unrotated, &reference, reference.grid(), 3).relative();

    let rows = thetas
        .par_iter()
        .map(|&theta| {
            let boundary_distance = (theta - arc.0).min(arc.1 - theta);
            let status = if !base.field.rotate(theta).admissibility().ok {
                RotationStatus::Inadmissible
            } else {
                match solve(&base.clone().with_rotation(RotationPolicy::Explicit(theta))) {
                    Ok(sol) => RotationStatus::Solved {
                        error: v_norm_error_on(&sol, &reference, reference.grid(), 3).relative(),
                        diff_from_unrotated: sol.max_rel_diff(&unrotated),
                        outer_iterations: sol.stats.outer_iterations,
                    },
                    Err(e) => RotationStatus::Failed(e.to_string()),
                }
            };
            RotationRow { theta, boundary_distance, status }
        })
        .collect();
    Ok(RotationSweep { arc, n, unrotated_error, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaRow {
    pub omega: f64,
    pub n: usize,
    pub h: f64,
    /// Relative V-norm error against the refined Galerkin reference.
    pub error: std::result::Result<f64, String>,
    /// Relative V-norm error against the exact plane wave.
    pub exact_error: f64,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSweep {
    pub cells_per_wavelength: f64,
    pub rows: Vec<OmegaRow>,
}

impl OmegaSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,N,h,omega_h,error,exact_error,outer_iterations,status\n");
        for r in &self.rows {
            let (err, status) = match &r.error {
                Ok(e) => (csv_f(*e), "ok".to_string()),
                Err(m) => (String::new(), format!("\"failed: {}\"", m.replace('"', "'"))),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_f(r.omega),
                r.n,
                csv_f(r.h),
                csv_f(r.omega * r.h),
                err,
                csv_f(r.exact_error),
                r.outer_iterations,
                status
            );
        }
        out
    }
}

/// Propagation direction of the plane wave used in [`omega_sweep`].
pub const PLANE_WAVE_ANGLE: f64 = std::f64::consts::PI / 6.0;

/// Grid side for frequency `omega` at roughly `cpw` elements per wavelength
/// on a domain of extent `len`, with at least 3 nodes.
fn grid_side(p: &AcousticParams, cpw: f64, len: f64) -> Result<usize> {
    let k = p.wavenumber()?;
    let h = TAU / (cpw * k);
    Ok(((len / h).ceil() as usize + 1).max(3))
}

/// Acoustic problem `∇·(−1/ρ)∇u = (ω²/κ)u` with Dirichlet data from the
/// exact plane wave `e^{ik·x}`, `k·k = ω²ρ/κ`.
pub fn acoustic_template(domain: Rect, rho: Complex64, kappa: Complex64, omega: f64) -> Result<(ProblemTemplate, Analytic)> {
    let p = AcousticParams { rho, kappa, omega };
    p.coefficients()?;
    let k = omega * (rho / kappa).sqrt();
    let kv = [k * PLANE_WAVE_ANGLE.cos(), k * PLANE_WAVE_ANGLE.sin()];
    let exact = Analytic::plane_wave(kv);
    let i = Complex64::new(0.0, 1.0);
    let bc = BoundaryData::dirichlet(move |x, y| (i * (kv[0] * x + kv[1] * y)).exp());
    Ok((ProblemTemplate::new(domain, CoefficientModel::Acoustic(p), bc), exact))
}

/// For each frequency, solves the acoustic problem on a grid with
/// `cells_per_wavelength` elements per wavelength (so `ω·h` is roughly
/// constant) and measures the error against the refined reference.
pub fn omega_sweep(
    domain: Rect,
    rho: Complex64,
    kappa: Complex64,
    omegas: &[f64],
    cells_per_wavelength: f64,
) -> Result<OmegaSweep> {
    if !(cells_per_wavelength > 0.0) {
        return Err(Error::InvalidParameter("cells per wavelength must be positive".into()));
    }
    let len = (domain.x1 - domain.x0).max(domain.y1 - domain.y0);
    let mut plan = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let (template, exact) = acoustic_template(domain, rho, kappa, omega)?;
        let n = grid_side(&AcousticParams { rho, kappa, omega }, cells_per_wavelength, len)?;
        if 2 * n - 1 > ORACLE_MAX_SIDE {
            return Err(Error::SizeLimit { what: "omega sweep reference grid side", size: 2 * n - 1, limit: ORACLE_MAX_SIDE });
        }
        plan.push((omega, n, template, exact));
    }
    let rows = plan
        .par_iter()
        .map(|(omega, n, template, exact)| {
            let run = || -> Result<(f64, f64, usize, f64)> {
                let sol = solve(&template.square(*n)?)?;
                let reference = reference_solution(template, *n)?;
                let e = v_norm_error_on(&sol, &reference, reference.grid(), 3).relative();
                let ex = v_norm_error_on(&sol, exact, reference.grid(), 3).relative();
                Ok((e, ex, sol.stats.outer_iterations, sol.grid().h()))
            };
            match run() {
                Ok((e, ex, it, h)) => {
                    OmegaRow { omega: *omega, n: *n, h, error: Ok(e), exact_error: ex, outer_iterations: it }
                }
                Err(err) => OmegaRow {
                    omega: *omega,
                    n: *n,
                    h: f64::NAN,
                    error: Err(err.to_string()),
                    exact_error: f64::NAN,
                    outer_iterations: 0,
                },
            }
        })
        .collect();
    Ok(OmegaSweep { cells_per_wavelength, rows })
}
