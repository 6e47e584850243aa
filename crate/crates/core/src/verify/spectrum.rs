use nalgebra::{DMatrix, SymmetricEigen};

use crate::assemble::BlockSystem;
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};

/// Largest number of free unknowns accepted by [`schur_spectrum`].
pub const SCHUR_MAX_UNKNOWNS: usize = 900;

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues, ascending, of the 6×6 matrix `[[Z'', Z'], [Z', −Z'']]` with
/// `Z = diag(L_xx, L_yy, M)` on element `e`.
pub fn constitutive_spectrum(field: &CoefficientField, e: usize) -> Vec<f64> {
    let l = field.l(e);
    let z = [l.xx, l.yy, field.m(e)];
    let mut m = DMatrix::zeros(6, 6);
    for (j, c) in z.iter().enumerate() {
        m[(j, j)] = c.im;
        m[(j + 3, j + 3)] = -c.im;
        m[(j, j + 3)] = c.re;
        m[(j + 3, j)] = c.re;
    }
    sorted_eigenvalues(m)
}

/// `±|c_j|` for the diagonal entries of `Z` on element `e`, ascending.
pub fn constitutive_moduli(field: &CoefficientField, e: usize) -> Vec<f64> {
    let l = field.l(e);
    let mut v: Vec<f64> = [l.xx, l.yy, field.m(e)].iter().flat_map(|c| [c.norm(), -c.norm()]).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Spectra of the Schur complement `S = A1 + A2ᵀA1⁻¹A2` and of `A1⁻¹S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurSpectrum {
    pub raw: Vec<f64>,
    pub preconditioned: Vec<f64>,
}

impl SchurSpectrum {
    pub fn raw_spread(&self) -> f64 {
        spread(&self.raw)
    }

    pub fn preconditioned_spread(&self) -> f64 {
        spread(&self.preconditioned)
    }
}

/// `λmax / λmin` of an ascending list of positive eigenvalues.
pub fn spread(ev: &[f64]) -> f64 {
    match (ev.first(), ev.last()) {
        (Some(lo), Some(hi)) => hi / lo,
        _ => f64::NAN,
    }
}

/// Dense spectra of the Schur complement of an assembled system.
///
/// With `A1 = LLᵀ`, `A1⁻¹S` is similar to `I + (L⁻¹A2L⁻ᵀ)²`, which is
/// symmetric; its eigenvalues are therefore real and at least 1.
pub fn schur_spectrum(sys: &BlockSystem) -> Result<SchurSpectrum> {
    let n = sys.n();
    if n > SCHUR_MAX_UNKNOWNS {
        return Err(Error::SizeLimit { what: "Schur spectrum unknowns", size: n, limit: SCHUR_MAX_UNKNOWNS });
    }
    let dense = |m: &crate::sparse::SparseSym| {
        let d = m.to_dense();
        DMatrix::from_fn(n, n, |i, j| d[i][j])
    };
    let a1 = dense(&sys.a1);
    let a2 = dense(&sys.a2);
    let chol = a1
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Inadmissible("A1 is not positive definite".into()))?;
    let s = &a1 + a2.transpose() * chol.solve(&a2);
    let s = (&s + s.transpose()) * 0.5;

    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Inadmissible("singular Cholesky factor".into()))?;
    let c = &linv * &a2 * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let pre = DMatrix::identity(n, n) + &c * &c;
    let pre = (&pre + pre.transpose()) * 0.5;

    Ok(SchurSpectrum { raw: sorted_eigenvalues(s), preconditioned: sorted_eigenvalues(pre) })
}
