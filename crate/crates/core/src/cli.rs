//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or usage, 2 malformed or invalid input,
//! 3 inadmissible coefficients or boundary data, 4 solver failure
//! (including partially failed sweeps, whose failures are listed in
//! `failures.txt`).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::config::{parse_config, parse_mode, parse_theta, Config, ConfigErrorKind};
use crate::error::Error;
use crate::solve::{solve, RotationPolicy};
use crate::sparse::InnerMode;
use crate::verify::{
    constitutive_spectrum, convergence_study, omega_sweep, pcg_iteration_sweep, rotation_sweep, schur_spectrum, Analytic,
    ExactSolution, RotationStatus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_ADMISSIBILITY: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// Default number of interior rotation angles in a rotation sweep.
const DEFAULT_THETA_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Solve one problem and write solution.csv.
    Solve,
    /// Errors on a sequence of grids and the fitted convergence slope.
    Convergence,
    /// Constitutive and Schur-complement eigenvalues.
    Spectrum,
    /// Outer PCG iterations over grid sizes and tolerances.
    PcgSweep,
    /// Errors for rotation angles across the admissible arc.
    RotationSweep,
    /// Acoustic plane-wave errors over frequencies.
    OmegaSweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Convergence => "convergence",
            Command::Spectrum => "spectrum",
            Command::PcgSweep => "pcg-sweep",
            Command::RotationSweep => "rotation-sweep",
            Command::OmegaSweep => "omega-sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "helmsaddle", version, about = "Saddle-point finite elements for the complex Helmholtz equation")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Problem file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Inner A1 solver: implicit (IC(0)-preconditioned CG) or direct (band Cholesky).
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<InnerMode>,
    /// Outer relative tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Coefficient rotation: auto, off, or an angle in radians.
    #[arg(long, value_parser = parse_theta, allow_hyphen_values = true)]
    pub theta: Option<RotationPolicy>,
}

/// A failed run: exit code and message.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

impl Failure {
    fn new(code: i32, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_IO, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Inadmissible(_) | Error::RotationInfeasible { .. } | Error::InvalidBoundary(_) => EXIT_ADMISSIBILITY,
        Error::Solver(_) | Error::Stage { .. } => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

/// Files written by a run and the lines of `meta.txt`.
#[derive(Debug, Default)]
struct Report {
    files: Vec<(String, String)>,
    meta: String,
    failures: Vec<String>,
}

impl Report {
    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.meta, "{key} = {value}");
    }
}

fn policy_str(p: RotationPolicy) -> String {
    match p {
        RotationPolicy::Off => "off".into(),
        RotationPolicy::Auto => "auto".into(),
        RotationPolicy::Explicit(t) => format!("{t}"),
    }
}

fn load(cli: &Cli) -> Result<Config, Failure> {
    let text = fs::read_to_string(&cli.config).map_err(|e| Failure::io(&cli.config, e))?;
    let mut cfg = parse_config(&text).map_err(|e| {
        let code = match e.kind {
            ConfigErrorKind::Syntax => EXIT_INPUT,
            ConfigErrorKind::Admissibility => EXIT_ADMISSIBILITY,
        };
        Failure::new(code, format!("{}: {e}", cli.config.display()))
    })?;
    let solver = &mut cfg.template.solver;
    if let Some(m) = cli.mode {
        solver.mode = m;
    }
    if let Some(t) = cli.tol {
        solver.pcg = solver.pcg.with_tol(t);
    }
    solver.pcg.validate().map_err(|e| Failure::new(EXIT_INPUT, e))?;
    if let Some(t) = cli.theta {
        cfg.template.rotation = t;
    }
    Ok(cfg)
}

fn required<'a, T>(v: &'a Option<T>, cmd: Command, key: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| Failure::new(EXIT_INPUT, format!("{} needs [study] {key}", cmd.name())))
}

fn run_solve(cfg: &Config, r: &mut Report) -> Result<(), Failure> {
    let sol = solve(&cfg.template.instantiate(cfg.nx, cfg.ny)?)?;
    let mut csv = Vec::new();
    sol.write_csv(&mut csv).expect("writing to memory");
    r.file("solution.csv", String::from_utf8(csv).expect("csv is ascii"));
    r.meta.push_str(&sol.metadata());
    Ok(())
}

fn run_convergence(cfg: &Config, r: &mut Report) -> Result<(), Failure> {
    let ns = required(&cfg.study.n_list, Command::Convergence, "n_list")?;
    let exact = cfg.study.exact.clone().map(|e| Analytic::new(move |x, y| e.eval(x, y)));
    let study = convergence_study(&cfg.template, ns, exact.as_ref().map(|a| a as &dyn ExactSolution))?;
    r.file("convergence.csv", study.to_csv());
    r.meta("reference", if exact.is_some() { "exact" } else { "finest grid" });
    match study.slope {
        Some(s) => r.meta("slope", format!("{s:.6}")),
        None => r.meta("slope", "undefined"),
    }
    Ok(())
}

fn run_spectrum(cfg: &Config, r: &mut Report) -> Result<(), Failure> {
    let spec = cfg.template.instantiate(cfg.nx, cfg.ny)?;
    let (theta, field, sys) = spec.assemble()?;
    let e = cfg.study.element;
    if e >= field.len() {
        return Err(Failure::new(EXIT_INPUT, format!("element {e} out of range (grid has {} elements)", field.len())));
    }
    let cs = constitutive_spectrum(&field, e);
    let mut csv = String::from("index,eigenvalue\n");
    for (k, v) in cs.iter().enumerate() {
        let _ = writeln!(csv, "{k},{v:.16e}");
    }
    r.file("spectrum_constitutive.csv", csv);

    let s = schur_spectrum(&sys)?;
    let mut csv = String::from("index,raw,preconditioned\n");
    for (k, (a, b)) in s.raw.iter().zip(&s.preconditioned).enumerate() {
        let _ = writeln!(csv, "{k},{a:.16e},{b:.16e}");
    }
    r.file("spectrum_schur.csv", csv);
    r.meta("theta_applied", format!("{theta:.16e}"));
    r.meta("element", e);
    r.meta("unknowns", sys.n());
    r.meta("raw_spread", format!("{:.6e}", s.raw_spread()));
    r.meta("preconditioned_spread", format!("{:.6e}", s.preconditioned_spread()));
    Ok(())
}

fn run_pcg_sweep(cfg: &Config, r: &mut Report) -> Result<(), Failure> {
    let ns = required(&cfg.study.n_list, Command::PcgSweep, "n_list")?;
    let tols = required(&cfg.study.tol_list, Command::PcgSweep, "tol_list")?;
    let sweep = pcg_iteration_sweep(&cfg.template, ns, tols);
    r.file("pcg_sweep.csv", sweep.to_csv());
    for &tol in tols {
        if let Some(spread) = sweep.flatness(tol) {
            r.meta(&format!("iteration_spread[{tol:e}]"), spread);
        }
    }
    for c in sweep.failures() {
        if let Err(m) = &c.iterations {
            r.failures.push(format!("N={} tol={:e}: {m}", c.n, c.tol));
        }
    }
    Ok(())
}

fn run_rotation_sweep(cfg: &Config, r: &mut Report) -> Result<(), Failure> {
    let thetas = match (&cfg.study.theta_list, cfg.study.theta_steps) {
        (Some(list), _) => list.clone(),
        (None, steps) => {
            let steps = steps.unwrap_or(DEFAULT_THETA_STEPS).max(1);
            let field = cfg.template.coefficients.sample(&crate::grid::Grid::new(cfg.template.domain, cfg.nx, cfg.nx)?)?;
            let (lo, hi) = field.admissible_arc()?;
            (1..=steps).map(|k| lo + (hi - lo) * k as f64 / (steps + 1) as f64).collect()
        }
    };
    if cfg.nx != cfg.ny {
        return Err(Failure::new(EXIT_INPUT, "rotation-sweep needs a square grid (use n)"));
    }
    let sweep = rotation_sweep(&cfg.template, cfg.nx, &thetas)?;
    r.file("rotation_sweep.csv", sweep.to_csv());
    r.meta("arc_lo", format!("{:.16e}", sweep.arc.0));
    r.meta("arc_hi", format!("{:.16e}", sweep.arc.1));
    r.meta("unrotated_error", format!("{:.6e}", sweep.unrotated_error));
    r.meta("max_diff_from_unrotated", format!("{:.6e}", sweep.max_diff()));
    for row in &sweep.rows {
        if let RotationStatus::Failed(m) = &row.status {
            r.failures.push(format!("theta={}: {m}", row.theta));
        }
    }
    Ok(())
}

fn run_omega_sweep(cfg: &Config, r: &mut Report) -> Result<(), Failure> {
    let (rho, kappa) = cfg
        .acoustic
        .ok_or_else(|| Failure::new(EXIT_INPUT, "omega-sweep needs coefficient model \"acoustic\""))?;
    let omegas = required(&cfg.study.omega_list, Command::OmegaSweep, "omega_list")?;
    let sweep = omega_sweep(cfg.template.domain, rho, kappa, omegas, cfg.study.cells_per_wavelength)?;
    r.file("omega_sweep.csv", sweep.to_csv());
    r.meta("cells_per_wavelength", sweep.cells_per_wavelength);
    for row in &sweep.rows {
        if let Err(m) = &row.error {
            r.failures.push(format!("omega={}: {m}", row.omega));
        }
    }
    Ok(())
}

/// Runs a command and returns the exit code; messages go to stderr.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if cli.jobs == 0 {
        return Err(Failure::new(EXIT_IO, "--jobs must be at least 1"));
    }
    let cfg = load(cli)?;
    fs::create_dir_all(&cli.out).map_err(|e| Failure::io(&cli.out, e))?;

    let mut r = Report::default();
    r.meta("command", cli.command.name());
    r.meta("config", cli.config.display());
    r.meta("jobs", cli.jobs);
    r.meta("mode", if cfg.template.solver.mode == InnerMode::Direct { "direct" } else { "implicit" });
    r.meta("rel_tol", format!("{:e}", cfg.template.solver.pcg.rel_tol));
    r.meta("inner_rel_tol", format!("{:e}", cfg.template.solver.pcg.inner_rel_tol));
    r.meta("theta", policy_str(cfg.template.rotation));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    let start = Instant::now();
    let outcome = pool.install(|| match cli.command {
        Command::Solve => run_solve(&cfg, &mut r),
        Command::Convergence => run_convergence(&cfg, &mut r),
        Command::Spectrum => run_spectrum(&cfg, &mut r),
        Command::PcgSweep => run_pcg_sweep(&cfg, &mut r),
        Command::RotationSweep => run_rotation_sweep(&cfg, &mut r),
        Command::OmegaSweep => run_omega_sweep(&cfg, &mut r),
    });
    r.meta("wall_seconds", format!("{:.6}", start.elapsed().as_secs_f64()));

    let outcome = outcome.and_then(|()| {
        if r.failures.is_empty() {
            Ok(())
        } else {
            Err(Failure::new(EXIT_SOLVER, format!("{} sweep entries failed, see failures.txt", r.failures.len())))
        }
    });
    match &outcome {
        Ok(()) => r.meta("status", "ok"),
        Err(f) => {
            r.meta("status", "failed");
            r.meta("exit_code", f.code);
            r.meta("error", f.msg.replace('\n', " "));
        }
    }
    if !r.failures.is_empty() {
        let mut text = r.failures.join("\n");
        text.push('\n');
        r.file("failures.txt", text);
    }
    let meta = std::mem::take(&mut r.meta);
    r.file("meta.txt", meta);
    for (name, contents) in &r.files {
        let path = cli.out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
    }
    outcome
}
