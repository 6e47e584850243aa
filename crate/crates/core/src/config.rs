//! Problem files.
//!
//! A problem file is TOML with the sections `[domain]`, `[coefficients]`,
//! `[boundary]`, `[solver]` and `[study]`. Unknown sections and keys are
//! rejected, and every error carries the line it refers to. Complex values
//! are numbers or expression strings such as `"3+2i"`; position-dependent
//! data are expressions in `x` and `y` (see [`crate::expr`]).
//!
//! ```toml
//! [domain]
//! x = [0.0, 1.0]        # default [0, 1]
//! y = [0.0, 1.0]        # default [0, 1]
//! n = 30                # nodes per side, default 17; or nx / ny
//!
//! [coefficients]
//! model = "layered"     # constant | layered | bar | disk | random | acoustic | expression
//! axis = "y"
//! interface = 0.5
//! lower = { L = "3+2i", M = "1+4i" }
//! upper = { L = "0.5+0.001i", M = "3+7i" }
//!
//! [boundary]
//! kind = "dirichlet"    # dirichlet (f) | neumann (g) | robin (a, g)
//! f = "cos(1.5x)cos(1.5y) + i sin(x)sin(y)"
//!
//! [solver]
//! rel_tol = 1e-10       # outer PCG tolerance
//! inner_rel_tol = 1e-12 # nested A1 solves; default min(1e-12, rel_tol)
//! max_iter = 1000       # default 10 × unknowns
//! mode = "implicit"     # implicit | direct
//! theta = "auto"        # auto | off | angle in radians
//! refine_steps = 3
//!
//! [study]
//! n_list = [17, 33, 65] # convergence, pcg-sweep
//! tol_list = [1e-4, 1e-8]
//! theta_list = [0.0, 0.5] # or theta_steps = 40 across the admissible arc
//! omega_list = [1, 10, 30]
//! cells_per_wavelength = 6
//! exact = "exp(x+y)"    # convergence reference; default: finest grid
//! element = 0           # element for the constitutive spectrum
//! ```
//!
//! Coefficient models and their keys:
//!
//! - `constant`: `L`, `M`, optional `L_yy` for anisotropic `L`;
//! - `layered`: `axis`, `interface`, `lower`, `upper` (phase tables);
//! - `bar`: `from`, `to`, `width`, `inside`, `outside`;
//! - `disk`: `center`, `radius`, `inside`, `outside`;
//! - `random`: `seed`, `lo`, `hi` (real and imaginary parts uniform in `(lo, hi)`);
//! - `acoustic`: `rho`, `kappa`, `omega` with `L = -1/ρ`, `M = ω²/κ`;
//! - `expression`: `L`, `M` as expressions in `x`, `y`, sampled at element centres.
//!
//! A phase table is `{ L = ..., M = ..., L_yy = ... }` with `L_yy` optional.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;
use toml::Spanned;

use crate::assemble::BoundaryData;
use crate::coeff::{AcousticParams, Axis, CoefficientModel, LCoeff, Phase};
use crate::expr::{parse_constant, Expr};
use crate::grid::Rect;
use crate::solve::{ProblemTemplate, RotationPolicy, SolverConfig};
use crate::sparse::{InnerMode, PcgConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigErrorKind {
    /// Malformed TOML, unknown or misplaced keys, bad values.
    Syntax,
    /// A well-formed value that violates an admissibility rule.
    Admissibility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    pub line: Option<usize>,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.msg),
            None => f.write_str(&self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Study parameters; which ones are needed depends on the command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyConfig {
    pub n_list: Option<Vec<usize>>,
    pub tol_list: Option<Vec<f64>>,
    pub theta_list: Option<Vec<f64>>,
    pub theta_steps: Option<usize>,
    pub omega_list: Option<Vec<f64>>,
    pub cells_per_wavelength: f64,
    pub exact: Option<Expr>,
    pub element: usize,
}

/// A parsed problem file.
#[derive(Debug, Clone)]
pub struct Config {
    pub template: ProblemTemplate,
    pub nx: usize,
    pub ny: usize,
    pub study: StudyConfig,
    /// `(ρ, κ)` when the coefficients come from the acoustic model.
    pub acoustic: Option<(Complex64, Complex64)>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
enum Value {
    Num(f64),
    Str(String),
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    domain: RawDomain,
    coefficients: Spanned<RawCoefficients>,
    boundary: Spanned<RawBoundary>,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    study: RawStudy,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    x: Option<Spanned<[f64; 2]>>,
    y: Option<Spanned<[f64; 2]>>,
    n: Option<Spanned<usize>>,
    nx: Option<Spanned<usize>>,
    ny: Option<Spanned<usize>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawPhase {
    L: Spanned<Value>,
    M: Spanned<Value>,
    L_yy: Option<Spanned<Value>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawCoefficients {
    model: Option<Spanned<String>>,
    L: Option<Spanned<Value>>,
    M: Option<Spanned<Value>>,
    L_yy: Option<Spanned<Value>>,
    axis: Option<Spanned<String>>,
    interface: Option<Spanned<f64>>,
    lower: Option<Spanned<RawPhase>>,
    upper: Option<Spanned<RawPhase>>,
    from: Option<Spanned<[f64; 2]>>,
    to: Option<Spanned<[f64; 2]>>,
    width: Option<Spanned<f64>>,
    center: Option<Spanned<[f64; 2]>>,
    radius: Option<Spanned<f64>>,
    inside: Option<Spanned<RawPhase>>,
    outside: Option<Spanned<RawPhase>>,
    seed: Option<Spanned<u64>>,
    lo: Option<Spanned<f64>>,
    hi: Option<Spanned<f64>>,
    rho: Option<Spanned<Value>>,
    kappa: Option<Spanned<Value>>,
    omega: Option<Spanned<f64>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct RawBoundary {
    kind: Spanned<String>,
    f: Option<Spanned<Value>>,
    g: Option<Spanned<Value>>,
    a: Option<Spanned<Value>>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    rel_tol: Option<Spanned<f64>>,
    inner_rel_tol: Option<Spanned<f64>>,
    max_iter: Option<Spanned<usize>>,
    mode: Option<Spanned<String>>,
    theta: Option<Spanned<Value>>,
    refine_steps: Option<Spanned<usize>>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    n_list: Option<Spanned<Vec<usize>>>,
    tol_list: Option<Spanned<Vec<f64>>>,
    theta_list: Option<Spanned<Vec<f64>>>,
    theta_steps: Option<Spanned<usize>>,
    omega_list: Option<Spanned<Vec<f64>>>,
    cells_per_wavelength: Option<Spanned<f64>>,
    exact: Option<Spanned<String>>,
    element: Option<Spanned<usize>>,
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn line(&self, offset: usize) -> usize {
        self.src[..offset.min(self.src.len())].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: std::ops::Range<usize>, msg: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError { kind: ConfigErrorKind::Syntax, line: Some(self.line(span.start)), msg: msg.into() })
    }

    fn constant(&self, key: &str, v: &Spanned<Value>) -> Result<Complex64, ConfigError> {
        match v.get_ref() {
            Value::Num(x) => Ok(Complex64::new(*x, 0.0)),
            Value::Str(s) => parse_constant(s).or_else(|e| self.err(v.span(), format!("{key}: {e}"))),
        }
    }

    fn expression(&self, key: &str, v: &Spanned<Value>) -> Result<Expr, ConfigError> {
        let src = match v.get_ref() {
            Value::Num(x) => format!("{x:?}"),
            Value::Str(s) => s.clone(),
        };
        Expr::parse(&src).or_else(|e| self.err(v.span(), format!("{key}: {e}")))
    }

    fn phase(&self, key: &str, p: &Spanned<RawPhase>) -> Result<Phase, ConfigError> {
        let r = p.get_ref();
        let l = self.constant(&format!("{key}.L"), &r.L)?;
        let m = self.constant(&format!("{key}.M"), &r.M)?;
        let lyy = match &r.L_yy {
            Some(v) => self.constant(&format!("{key}.L_yy"), v)?,
            None => l,
        };
        Ok((LCoeff::diagonal(l, lyy), m))
    }
}

fn required<'a, T>(ctx: &Ctx, table: std::ops::Range<usize>, model: &str, key: &str, v: &'a Option<T>) -> Result<&'a T, ConfigError> {
    match v {
        Some(v) => Ok(v),
        None => ctx.err(table, format!("coefficient model '{model}' requires the key '{key}'")),
    }
}

fn coefficients(ctx: &Ctx, raw: &Spanned<RawCoefficients>) -> Result<(CoefficientModel, Option<(Complex64, Complex64)>), ConfigError> {
    let span = raw.span();
    let c = raw.get_ref();
    let model = c.model.as_ref().map_or("constant", |m| m.get_ref().as_str());
    let allowed: &[&str] = match model {
        "constant" | "expression" => &["L", "M", "L_yy"],
        "layered" => &["axis", "interface", "lower", "upper"],
        "bar" => &["from", "to", "width", "inside", "outside"],
        "disk" => &["center", "radius", "inside", "outside"],
        "random" => &["seed", "lo", "hi"],
        "acoustic" => &["rho", "kappa", "omega"],
        other => {
            let s = c.model.as_ref().unwrap().span();
            return ctx.err(
                s,
                format!("unknown coefficient model '{other}'; expected constant, layered, bar, disk, random, acoustic or expression"),
            );
        }
    };
    let present: [(&str, Option<std::ops::Range<usize>>); 20] = [
        ("L", c.L.as_ref().map(Spanned::span)),
        ("M", c.M.as_ref().map(Spanned::span)),
        ("L_yy", c.L_yy.as_ref().map(Spanned::span)),
        ("axis", c.axis.as_ref().map(Spanned::span)),
        ("interface", c.interface.as_ref().map(Spanned::span)),
        ("lower", c.lower.as_ref().map(Spanned::span)),
        ("upper", c.upper.as_ref().map(Spanned::span)),
        ("from", c.from.as_ref().map(Spanned::span)),
        ("to", c.to.as_ref().map(Spanned::span)),
        ("width", c.width.as_ref().map(Spanned::span)),
        ("center", c.center.as_ref().map(Spanned::span)),
        ("radius", c.radius.as_ref().map(Spanned::span)),
        ("inside", c.inside.as_ref().map(Spanned::span)),
        ("outside", c.outside.as_ref().map(Spanned::span)),
        ("seed", c.seed.as_ref().map(Spanned::span)),
        ("lo", c.lo.as_ref().map(Spanned::span)),
        ("hi", c.hi.as_ref().map(Spanned::span)),
        ("rho", c.rho.as_ref().map(Spanned::span)),
        ("kappa", c.kappa.as_ref().map(Spanned::span)),
        ("omega", c.omega.as_ref().map(Spanned::span)),
    ];
    for (key, s) in present {
        if let Some(s) = s {
            if !allowed.contains(&key) {
                return ctx.err(s, format!("key '{key}' does not apply to coefficient model '{model}'"));
            }
        }
    }
    macro_rules! req {
        ($k:literal, $v:expr) => {
            required(ctx, span.clone(), model, $k, $v)
        };
    }
    Ok(match model {
        "constant" => {
            let l = ctx.constant("L", req!("L", &c.L)?)?;
            let m = ctx.constant("M", req!("M", &c.M)?)?;
            let lyy = match &c.L_yy {
                Some(v) => ctx.constant("L_yy", v)?,
                None => l,
            };
            (CoefficientModel::Constant((LCoeff::diagonal(l, lyy), m)), None)
        }
        "expression" => {
            let l = ctx.expression("L", req!("L", &c.L)?)?;
            let m = ctx.expression("M", req!("M", &c.M)?)?;
            let lyy = match &c.L_yy {
                Some(v) => ctx.expression("L_yy", v)?,
                None => l.clone(),
            };
            (
                CoefficientModel::function(move |x, y| (LCoeff::diagonal(l.eval(x, y), lyy.eval(x, y)), m.eval(x, y))),
                None,
            )
        }
        "layered" => {
            let axis = req!("axis", &c.axis)?;
            let ax = match axis.get_ref().as_str() {
                "x" => Axis::X,
                "y" => Axis::Y,
                other => return ctx.err(axis.span(), format!("axis must be \"x\" or \"y\", got \"{other}\"")),
            };
            (
                CoefficientModel::Layered {
                    axis: ax,
                    interface: *req!("interface", &c.interface)?.get_ref(),
                    lower: ctx.phase("lower", req!("lower", &c.lower)?)?,
                    upper: ctx.phase("upper", req!("upper", &c.upper)?)?,
                },
                None,
            )
        }
        "bar" => {
            let width = req!("width", &c.width)?;
            if !(*width.get_ref() > 0.0) {
                return ctx.err(width.span(), "width must be positive");
            }
            (
                CoefficientModel::Bar {
                    from: *req!("from", &c.from)?.get_ref(),
                    to: *req!("to", &c.to)?.get_ref(),
                    width: *width.get_ref(),
                    inside: ctx.phase("inside", req!("inside", &c.inside)?)?,
                    outside: ctx.phase("outside", req!("outside", &c.outside)?)?,
                },
                None,
            )
        }
        "disk" => (
            CoefficientModel::Disk {
                center: *req!("center", &c.center)?.get_ref(),
                radius: *req!("radius", &c.radius)?.get_ref(),
                inside: ctx.phase("inside", req!("inside", &c.inside)?)?,
                outside: ctx.phase("outside", req!("outside", &c.outside)?)?,
            },
            None,
        ),
        "random" => {
            let lo = *req!("lo", &c.lo)?.get_ref();
            let hi = req!("hi", &c.hi)?;
            if !(*hi.get_ref() > lo) {
                return ctx.err(hi.span(), "random range needs lo < hi");
            }
            let seed = c.seed.as_ref().map_or(0, |s| *s.get_ref());
            (CoefficientModel::Random { seed, lo, hi: *hi.get_ref() }, None)
        }
        "acoustic" => {
            let rho = ctx.constant("rho", req!("rho", &c.rho)?)?;
            let kappa = ctx.constant("kappa", req!("kappa", &c.kappa)?)?;
            let omega = c.omega.as_ref().map_or(1.0, |o| *o.get_ref());
            let p = AcousticParams { rho, kappa, omega };
            if let Err(e) = p.coefficients() {
                return ctx.err(span, e.to_string());
            }
            (CoefficientModel::Acoustic(p), Some((rho, kappa)))
        }
        _ => unreachable!(),
    })
}

fn boundary(ctx: &Ctx, raw: &Spanned<RawBoundary>) -> Result<BoundaryData, ConfigError> {
    let b = raw.get_ref();
    let kind = b.kind.get_ref().as_str();
    let (needs, forbids): (&[&str], &[&str]) = match kind {
        "dirichlet" => (&["f"], &["g", "a"]),
        "neumann" => (&["g"], &["f", "a"]),
        "robin" => (&["a", "g"], &["f"]),
        other => {
            return ctx.err(b.kind.span(), format!("unknown boundary kind '{other}'; expected dirichlet, neumann or robin"))
        }
    };
    let get = |k: &str| match k {
        "f" => b.f.as_ref(),
        "g" => b.g.as_ref(),
        _ => b.a.as_ref(),
    };
    for k in forbids {
        if let Some(v) = get(k) {
            return ctx.err(v.span(), format!("key '{k}' does not apply to {kind} boundary conditions"));
        }
    }
    for k in needs {
        if get(k).is_none() {
            return ctx.err(raw.span(), format!("{kind} boundary conditions require the key '{k}'"));
        }
    }
    Ok(match kind {
        "dirichlet" => {
            let f = ctx.expression("f", b.f.as_ref().unwrap())?;
            BoundaryData::dirichlet(move |x, y| f.eval(x, y))
        }
        "neumann" => {
            let g = ctx.expression("g", b.g.as_ref().unwrap())?;
            BoundaryData::neumann(move |x, y| g.eval(x, y))
        }
        _ => {
            let av = b.a.as_ref().unwrap();
            let a = ctx.constant("a", av)?;
            let g = ctx.expression("g", b.g.as_ref().unwrap())?;
            let bc = BoundaryData::Robin { a, g: Arc::new(move |x, y| g.eval(x, y)) };
            if let Err(e) = bc.validate() {
                return Err(ConfigError {
                    kind: ConfigErrorKind::Admissibility,
                    line: Some(ctx.line(av.span().start)),
                    msg: e.to_string(),
                });
            }
            bc
        }
    })
}

/// Parses a rotation setting: `auto`, `off`, or an angle in radians.
pub fn parse_theta(s: &str) -> Result<RotationPolicy, String> {
    match s.trim() {
        "auto" => Ok(RotationPolicy::Auto),
        "off" => Ok(RotationPolicy::Off),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite())
            .map(RotationPolicy::Explicit)
            .ok_or_else(|| format!("theta must be auto, off or an angle in radians, got '{other}'")),
    }
}

pub fn parse_mode(s: &str) -> Result<InnerMode, String> {
    match s {
        "implicit" => Ok(InnerMode::Implicit),
        "direct" => Ok(InnerMode::Direct),
        other => Err(format!("mode must be implicit or direct, got '{other}'")),
    }
}

fn solver(ctx: &Ctx, s: &RawSolver) -> Result<(SolverConfig, RotationPolicy), ConfigError> {
    let mut pcg = PcgConfig::default();
    if let Some(t) = &s.rel_tol {
        pcg = pcg.with_tol(*t.get_ref());
    }
    if let Some(t) = &s.inner_rel_tol {
        pcg.inner_rel_tol = *t.get_ref();
    }
    pcg.max_iter = s.max_iter.as_ref().map(|m| *m.get_ref());
    if let Err(e) = pcg.validate() {
        let span = s.rel_tol.as_ref().or(s.inner_rel_tol.as_ref()).map(Spanned::span);
        let sp2 = s.max_iter.as_ref().map(Spanned::span);
        return ctx.err(span.or(sp2).unwrap_or(0..0), e);
    }
    let mode = match &s.mode {
        Some(m) => parse_mode(m.get_ref()).or_else(|e| ctx.err(m.span(), e))?,
        None => InnerMode::Implicit,
    };
    let rotation = match &s.theta {
        None => RotationPolicy::Auto,
        Some(v) => match v.get_ref() {
            Value::Num(t) => RotationPolicy::Explicit(*t),
            Value::Str(t) => parse_theta(t).or_else(|e| ctx.err(v.span(), e))?,
        },
    };
    let refine_steps = s.refine_steps.as_ref().map_or(SolverConfig::default().refine_steps, |r| *r.get_ref());
    Ok((SolverConfig { pcg, mode, refine_steps }, rotation))
}

fn study(ctx: &Ctx, s: &RawStudy) -> Result<StudyConfig, ConfigError> {
    let cpw = s.cells_per_wavelength.as_ref().map_or(6.0, |c| *c.get_ref());
    if let Some(c) = &s.cells_per_wavelength {
        if !(cpw > 0.0) {
            return ctx.err(c.span(), "cells_per_wavelength must be positive");
        }
    }
    if let Some(ns) = &s.n_list {
        if ns.get_ref().iter().any(|&n| n < 2) {
            return ctx.err(ns.span(), "grid sizes need at least 2 nodes per side");
        }
    }
    if let Some(ts) = &s.tol_list {
        if ts.get_ref().iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return ctx.err(ts.span(), "tolerances must lie in (0, 1)");
        }
    }
    if let Some(ws) = &s.omega_list {
        if ws.get_ref().iter().any(|&w| !(w > 0.0)) {
            return ctx.err(ws.span(), "frequencies must be positive");
        }
    }
    let exact = match &s.exact {
        Some(e) => Some(Expr::parse(e.get_ref()).or_else(|err| ctx.err(e.span(), format!("exact: {err}")))?),
        None => None,
    };
    Ok(StudyConfig {
        n_list: s.n_list.as_ref().map(|v| v.get_ref().clone()),
        tol_list: s.tol_list.as_ref().map(|v| v.get_ref().clone()),
        theta_list: s.theta_list.as_ref().map(|v| v.get_ref().clone()),
        theta_steps: s.theta_steps.as_ref().map(|v| *v.get_ref()),
        omega_list: s.omega_list.as_ref().map(|v| v.get_ref().clone()),
        cells_per_wavelength: cpw,
        exact,
        element: s.element.as_ref().map_or(0, |e| *e.get_ref()),
    })
}

/// Parses and validates a problem file.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let ctx = Ctx { src: text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        kind: ConfigErrorKind::Syntax,
        line: e.span().map(|s| ctx.line(s.start)),
        msg: e.message().trim().to_string(),
    })?;

    let d = &raw.domain;
    let x = d.x.as_ref().map_or([0.0, 1.0], |v| *v.get_ref());
    let y = d.y.as_ref().map_or([0.0, 1.0], |v| *v.get_ref());
    if !(x[1] > x[0]) || !(y[1] > y[0]) {
        let span = d.x.as_ref().or(d.y.as_ref()).map_or(0..0, Spanned::span);
        return ctx.err(span, "domain intervals must be increasing");
    }
    if let (Some(_), Some(other)) = (&d.n, d.nx.as_ref().or(d.ny.as_ref())) {
        return ctx.err(other.span(), "give either n or nx/ny, not both");
    }
    let n = d.n.as_ref().map_or(17, |v| *v.get_ref());
    let nx = d.nx.as_ref().map_or(n, |v| *v.get_ref());
    let ny = d.ny.as_ref().map_or(n, |v| *v.get_ref());
    if nx < 2 || ny < 2 {
        let span = d.n.as_ref().or(d.nx.as_ref()).or(d.ny.as_ref()).map_or(0..0, Spanned::span);
        return ctx.err(span, "grids need at least 2 nodes per side");
    }

    let (model, acoustic) = coefficients(&ctx, &raw.coefficients)?;
    let bc = boundary(&ctx, &raw.boundary)?;
    let (solver_cfg, rotation) = solver(&ctx, &raw.solver)?;
    let study = study(&ctx, &raw.study)?;

    let mut template = ProblemTemplate::new(Rect::new(x[0], x[1], y[0], y[1]), model, bc);
    template.solver = solver_cfg;
    template.rotation = rotation;
    Ok(Config { template, nx, ny, study, acoustic })
}
