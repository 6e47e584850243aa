//! Piecewise-constant complex coefficients `L` and `M`, admissibility of their
//! imaginary parts, and rotation by `e^{iθ}`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Diagonal (possibly anisotropic) `L`; `xx == yy` for scalar `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LCoeff {
    pub xx: Complex64,
    pub yy: Complex64,
}

impl LCoeff {
    pub fn scalar(c: Complex64) -> Self {
        Self { xx: c, yy: c }
    }

    pub fn diagonal(xx: Complex64, yy: Complex64) -> Self {
        Self { xx, yy }
    }

    pub fn re(&self) -> [f64; 2] {
        [self.xx.re, self.yy.re]
    }

    pub fn im(&self) -> [f64; 2] {
        [self.xx.im, self.yy.im]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { xx: self.xx * s, yy: self.yy * s }
    }
}

impl From<Complex64> for LCoeff {
    fn from(c: Complex64) -> Self {
        Self::scalar(c)
    }
}

/// Per-element `L` and `M`, together with the rotation already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    l: Vec<LCoeff>,
    m: Vec<Complex64>,
    theta: f64,
}

/// Result of [`CoefficientField::admissibility`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub ok: bool,
    pub min_im_l: f64,
    pub min_im_m: f64,
    /// Largest absolute entry of `Z''` over all elements.
    pub gamma1: f64,
    /// Smallest eigenvalue of `Z''` over all elements.
    pub gamma2: f64,
}

impl CoefficientField {
    pub fn from_elements(l: Vec<LCoeff>, m: Vec<Complex64>) -> Result<Self> {
        if l.is_empty() || l.len() != m.len() {
            return Err(Error::InvalidParameter(format!(
                "coefficient arrays must be non-empty and of equal length ({} vs {})",
                l.len(),
                m.len()
            )));
        }
        Ok(Self { l, m, theta: 0.0 })
    }

    pub fn constant(grid: &Grid, l: impl Into<LCoeff>, m: Complex64) -> Self {
        let n = grid.num_elements();
        Self { l: vec![l.into(); n], m: vec![m; n], theta: 0.0 }
    }

    /// Samples `f` at every element centroid.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (LCoeff, Complex64)) -> Self {
        let (l, m) = (0..grid.num_elements())
            .map(|e| {
                let [x, y] = grid.element_centroid(e);
                f(x, y)
            })
            .unzip();
        Self { l, m, theta: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    pub fn l(&self, e: usize) -> LCoeff {
        self.l[e]
    }

    pub fn m(&self, e: usize) -> Complex64 {
        self.m[e]
    }

    pub fn theta_applied(&self) -> f64 {
        self.theta
    }

    /// Every complex coefficient value (`Lxx`, `Lyy`, `M` of each element).
    pub fn values(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.l.iter().zip(&self.m).flat_map(|(l, m)| [l.xx, l.yy, *m])
    }

    pub fn admissibility(&self) -> Admissibility {
        let mut min_l = f64::INFINITY;
        let mut min_m = f64::INFINITY;
        let mut gamma1 = 0.0f64;
        for (l, m) in self.l.iter().zip(&self.m) {
            let [a, b] = l.im();
            min_l = min_l.min(a).min(b);
            min_m = min_m.min(m.im);
            gamma1 = gamma1.max(a.abs()).max(b.abs()).max(m.im.abs());
        }
        Admissibility {
            ok: min_l > 0.0 && min_m > 0.0,
            min_im_l: min_l,
            min_im_m: min_m,
            gamma1,
            gamma2: min_l.min(min_m),
        }
    }

    /// Multiplies every coefficient by `e^{iθ}`.
    pub fn rotate(&self, theta: f64) -> Self {
        let s = Complex64::from_polar(1.0, theta);
        Self {
            l: self.l.iter().map(|l| l.scale(s)).collect(),
            m: self.m.iter().map(|m| m * s).collect(),
            theta: self.theta + theta,
        }
    }

    /// Rotation that centers the argument range of all coefficient values on
    /// the positive imaginary axis.
    pub fn auto_rotation_angle(&self) -> Result<f64> {
        let (lo, hi) = argument_arc(self.values())?;
        Ok(wrap_angle(0.5 * PI - 0.5 * (lo + hi)))
    }

    /// Open interval of angles `θ` for which `rotate(θ)` is admissible.
    /// The interval is returned unwrapped, so `lo` may be below `-π`.
    pub fn admissible_arc(&self) -> Result<(f64, f64)> {
        let (lo, hi) = argument_arc(self.values())?;
        let (a, b) = (-lo, PI - hi);
        let shift = TAU * (0.5 * (a + b) / TAU).round();
        Ok((a - shift, b - shift))
    }
}

/// Angular distance from the real axis of the closest value after rotating
/// by `θ`: `min_c min(arg(e^{iθ}c), π − arg(e^{iθ}c))`. Negative when some
/// rotated value lies in the lower half-plane.
pub fn rotation_margin(values: impl IntoIterator<Item = Complex64>, theta: f64) -> f64 {
    let s = Complex64::from_polar(1.0, theta);
    values
        .into_iter()
        .map(|c| {
            let a = (c * s).arg();
            a.min(PI - a)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Shortest circular arc `[lo, hi]` (with `hi - lo < π`) containing the
/// arguments of all values.
fn argument_arc(values: impl Iterator<Item = Complex64>) -> Result<(f64, f64)> {
    let mut args = Vec::new();
    for c in values {
        if c.norm() == 0.0 || !c.norm().is_finite() {
            return Err(Error::RotationInfeasible { spread: PI });
        }
        args.push(c.arg().rem_euclid(TAU));
    }
    if args.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient field".into()));
    }
    args.sort_by(|a, b| a.total_cmp(b));
    // The largest gap between consecutive arguments (circularly) is the part of
    // the circle left uncovered; the covered arc is its complement.
    let n = args.len();
    let mut best_gap = args[0] + TAU - args[n - 1];
    let mut start = 0;
    for k in 1..n {
        let gap = args[k] - args[k - 1];
        if gap > best_gap {
            best_gap = gap;
            start = k;
        }
    }
    let spread = TAU - best_gap;
    if spread >= PI {
        return Err(Error::RotationInfeasible { spread });
    }
    let lo = args[start];
    let hi = lo + spread;
    Ok((lo, hi))
}

fn wrap_angle(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(TAU) - PI;
    if t <= -PI {
        t + TAU
    } else {
        t
    }
}

/// Acoustic material data: density, bulk modulus, angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticParams {
    pub rho: Complex64,
    pub kappa: Complex64,
    pub omega: f64,
}

impl AcousticParams {
    /// `L = -1/ρ`, `M = ω²/κ`.
    pub fn coefficients(&self) -> Result<(Complex64, Complex64)> {
        if self.rho.norm() == 0.0 || self.kappa.norm() == 0.0 {
            return Err(Error::InvalidParameter("density and bulk modulus must be nonzero".into()));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("frequency must be positive, got {}", self.omega)));
        }
        Ok((-self.rho.inv(), self.omega * self.omega / self.kappa))
    }

    /// Magnitude of the complex wavenumber `sqrt(-M/L)`.
    pub fn wavenumber(&self) -> Result<f64> {
        let (l, m) = self.coefficients()?;
        Ok((m / l).norm().sqrt())
    }
}

pub fn acoustic_to_helmholtz(p: &AcousticParams, grid: &Grid) -> Result<CoefficientField> {
    let (l, m) = p.coefficients()?;
    Ok(CoefficientField::constant(grid, l, m))
}

/// Coordinate axis used by layered profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// A pair of `(L, M)` values for one material phase.
pub type Phase = (LCoeff, Complex64);

type CoeffFn = Arc<dyn Fn(f64, f64) -> Phase + Send + Sync>;

/// Grid-independent description of a coefficient field.
#[derive(Clone)]
pub enum CoefficientModel {
    Constant(Phase),
    /// Two materials split at `interface` along `axis`; centroids below the
    /// interface take `lower`.
    Layered { axis: Axis, interface: f64, lower: Phase, upper: Phase },
    /// Straight bar of given width centered on the segment `from`–`to`.
    Bar { from: [f64; 2], to: [f64; 2], width: f64, inside: Phase, outside: Phase },
    /// Disk-shaped inclusion.
    Disk { center: [f64; 2], radius: f64, inside: Phase, outside: Phase },
    /// Independent uniform draws of every real and imaginary part in `(lo, hi)`.
    Random { seed: u64, lo: f64, hi: f64 },
    Acoustic(AcousticParams),
    Function(CoeffFn),
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(p) => f.debug_tuple("Constant").field(p).finish(),
            Self::Layered { axis, interface, lower, upper } => f
                .debug_struct("Layered")
                .field("axis", axis)
                .field("interface", interface)
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            Self::Bar { from, to, width, inside, outside } => f
                .debug_struct("Bar")
                .field("from", from)
                .field("to", to)
                .field("width", width)
                .field("inside", inside)
                .field("outside", outside)
                .finish(),
            Self::Disk { center, radius, inside, outside } => f
                .debug_struct("Disk")
                .field("center", center)
                .field("radius", radius)
                .field("inside", inside)
                .field("outside", outside)
                .finish(),
            Self::Random { seed, lo, hi } => {
                f.debug_struct("Random").field("seed", seed).field("lo", lo).field("hi", hi).finish()
            }
            Self::Acoustic(p) => f.debug_tuple("Acoustic").field(p).finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl CoefficientModel {
    pub fn constant(l: Complex64, m: Complex64) -> Self {
        Self::Constant((LCoeff::scalar(l), m))
    }

    pub fn function(f: impl Fn(f64, f64) -> Phase + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn sample(&self, grid: &Grid) -> Result<CoefficientField> {
        Ok(match self {
            Self::Constant((l, m)) => CoefficientField::constant(grid, *l, *m),
            Self::Layered { axis, interface, lower, upper } => CoefficientField::from_fn(grid, |x, y| {
                let t = match axis {
                    Axis::X => x,
                    Axis::Y => y,
                };
                if t < *interface {
                    *lower
                } else {
                    *upper
                }
            }),
            Self::Bar { from, to, width, inside, outside } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter("bar width must be positive".into()));
                }
                CoefficientField::from_fn(grid, |x, y| {
                    if segment_distance([x, y], *from, *to) <= 0.5 * width {
                        *inside
                    } else {
                        *outside
                    }
                })
            }
            Self::Disk { center, radius, inside, outside } => CoefficientField::from_fn(grid, |x, y| {
                if (x - center[0]).hypot(y - center[1]) <= *radius {
                    *inside
                } else {
                    *outside
                }
            }),
            Self::Random { seed, lo, hi } => {
                if !(hi > lo) {
                    return Err(Error::InvalidParameter("random range must satisfy lo < hi".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut draw = || Complex64::new(rng.gen_range(*lo..*hi), rng.gen_range(*lo..*hi));
                let (l, m) = (0..grid.num_elements()).map(|_| (LCoeff::scalar(draw()), draw())).unzip();
                CoefficientField::from_elements(l, m)?
            }
            Self::Acoustic(p) => acoustic_to_helmholtz(p, grid)?,
            Self::Function(f) => CoefficientField::from_fn(grid, |x, y| f(x, y)),
        })
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}
