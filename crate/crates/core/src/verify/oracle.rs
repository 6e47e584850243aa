//! Reference solver: the standard complex Galerkin discretization of
//! `∫ L∇u·∇w + M u w = ∫_∂Ω (L∇u·n) w`, solved directly.
//!
//! It shares nothing with the block assembly beyond the grid: element
//! matrices are closed-form tensor products, boundary data use their own edge
//! quadrature, and the complex system is solved by banded LU with partial
//! pivoting.

use num_complex::Complex64;

use crate::assemble::{BoundaryData, DirichletData, ScalarFn};
use crate::coeff::CoefficientField;
use crate::error::{Error, Result, SolverError};
use crate::grid::Grid;
use crate::quadrature::gauss_legendre;

/// Largest grid side accepted by the oracle.
pub const ORACLE_MAX_SIDE: usize = 64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// Local node k sits at (IX[k], IY[k]) in the reference square.
const IX: [usize; 4] = [0, 1, 1, 0];
const IY: [usize; 4] = [0, 0, 1, 1];
const K1: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 1.0]];
const M1: [[f64; 2]; 2] = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];

/// Complex element matrix `L_xx S_x + L_yy S_y + M Mass` of one element.
fn element_matrix(grid: &Grid, field: &CoefficientField, e: usize) -> [[Complex64; 4]; 4] {
    let (hx, hy) = (grid.hx(), grid.hy());
    let l = field.l(e);
    let m = field.m(e);
    let mut k = [[ZERO; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let sx = K1[IX[a]][IX[b]] / hx * M1[IY[a]][IY[b]] * hy;
            let sy = M1[IX[a]][IX[b]] * hx * K1[IY[a]][IY[b]] / hy;
            let mass = M1[IX[a]][IX[b]] * M1[IY[a]][IY[b]] * hx * hy;
            k[a][b] = l.xx * sx + l.yy * sy + m * mass;
        }
    }
    k
}

/// Banded complex matrix in LAPACK general-band layout, with room for the
/// fill produced by row interchanges.
struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

impl Band {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Self { n, kl, ku, ld, ab: vec![ZERO; n * ld], piv: Vec::new() }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ld + self.kl + self.ku + i - j
    }

    fn add(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i + self.ku >= j && j + self.kl >= i);
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    fn factor(&mut self) -> std::result::Result<(), SolverError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut piv = vec![0; n];
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let v = self.ab[self.idx(j + r, j)].norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 {
                return Err(SolverError::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (p, q) = (self.idx(j, c), self.idx(j + jp, c));
                    self.ab.swap(p, q);
                }
            }
            let d = self.ab[self.idx(j, j)];
            for r in 1..=km {
                let k = self.idx(j + r, j);
                self.ab[k] /= d;
            }
            for c in j + 1..=ju {
                let ujc = self.ab[self.idx(j, c)];
                if ujc == ZERO {
                    continue;
                }
                for r in 1..=km {
                    let l = self.ab[self.idx(j + r, j)];
                    let k = self.idx(j + r, c);
                    self.ab[k] -= l * ujc;
                }
            }
        }
        self.piv = piv;
        Ok(())
    }

    fn solve(&self, b: &mut [Complex64]) {
        let (n, kl) = (self.n, self.kl);
        let kv = self.kl + self.ku;
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let km = kl.min(n - 1 - j);
            for r in 1..=km {
                b[j + r] -= self.ab[self.idx(j + r, j)] * b[j];
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[self.idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(kv)..j {
                b[i] -= self.ab[self.idx(i, j)] * bj;
            }
        }
    }
}

/// Nodal solution of the complex Galerkin system with the same elements and
/// boundary treatment as the block formulation.
///
/// No admissibility is required: any nonsingular problem is accepted, which
/// makes it usable as a reference for unrotated coefficients.
pub fn galerkin_oracle(grid: &Grid, field: &CoefficientField, bc: &BoundaryData) -> Result<Vec<Complex64>> {
    let side = grid.nx().max(grid.ny());
    if side > ORACLE_MAX_SIDE {
        return Err(Error::SizeLimit { what: "oracle grid side", size: side, limit: ORACLE_MAX_SIDE });
    }
    if field.len() != grid.num_elements() {
        return Err(Error::InvalidParameter("coefficient field does not match the grid".into()));
    }
    bc.validate()?;
    let nn = grid.num_nodes();

    let mut known = vec![None; nn];
    if let BoundaryData::Dirichlet(d) = bc {
        for &node in grid.boundary_nodes() {
            let [x, y] = grid.node_coords(node);
            let v = match d {
                DirichletData::Function(f) => f(x, y),
                DirichletData::Nodal(map) => *map.get(&node).ok_or_else(|| {
                    Error::InvalidBoundary(format!("no Dirichlet value for boundary node {node}"))
                })?,
            };
            known[node] = Some(v);
        }
    }
    let mut index = vec![usize::MAX; nn];
    let mut n = 0;
    for node in 0..nn {
        if known[node].is_none() {
            index[node] = n;
            n += 1;
        }
    }
    let mut u: Vec<Complex64> = known.iter().map(|k| k.unwrap_or(ZERO)).collect();
    if n == 0 {
        return Ok(u);
    }

    // Free indices preserve node order, so the band is bounded by nx + 1.
    let bw = grid.nx() + 1;
    let mut mat = Band::new(n, bw, bw);
    let mut rhs = vec![ZERO; n];

    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        let k = element_matrix(grid, field, e);
        for a in 0..4 {
            let ia = index[nodes[a]];
            if ia == usize::MAX {
                continue;
            }
            for b in 0..4 {
                match known[nodes[b]] {
                    Some(v) => rhs[ia] -= k[a][b] * v,
                    None => mat.add(ia, index[nodes[b]], k[a][b]),
                }
            }
        }
    }

    // With v = iL∇u the Neumann datum v·n = g means L∇u·n = -ig, and the
    // Robin relation u + a v·n = g means L∇u·n = -(i/a)(g - u).
    let flux: Option<(Complex64, &ScalarFn)> = match bc {
        BoundaryData::Dirichlet(_) => None,
        BoundaryData::Neumann { g } => Some((ZERO, g)),
        BoundaryData::Robin { a, g } => Some((*a, g)),
    };
    if let Some((a, g)) = flux {
        let i = Complex64::new(0.0, 1.0);
        let (pts, wts) = gauss_legendre(2);
        for edge in grid.boundary_edges() {
            let [p, q] = [grid.node_coords(edge.nodes[0]), grid.node_coords(edge.nodes[1])];
            let [ip, iq] = [index[edge.nodes[0]], index[edge.nodes[1]]];
            let mut load = [ZERO; 2];
            for (t, w) in pts.iter().zip(wts) {
                let s = 0.5 * (1.0 + t);
                let gv = g(p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])) * (0.5 * w * edge.length);
                load[0] += gv * (1.0 - s);
                load[1] += gv * s;
            }
            if a == ZERO {
                rhs[ip] += -i * load[0];
                rhs[iq] += -i * load[1];
            } else {
                let c = -i / a;
                rhs[ip] += c * load[0];
                rhs[iq] += c * load[1];
                let (d, o) = (edge.length / 3.0, edge.length / 6.0);
                mat.add(ip, ip, c * d);
                mat.add(iq, iq, c * d);
                mat.add(ip, iq, c * o);
                mat.add(iq, ip, c * o);
            }
        }
    }

    mat.factor().map_err(|source| Error::Stage { stage: "oracle factorization", source })?;
    mat.solve(&mut rhs);
    for node in 0..nn {
        if index[node] != usize::MAX {
            u[node] = rhs[index[node]];
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rect;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, kl, ku) = (30, 4, 3);
        let mut band = Band::new(n, kl, ku);
        let mut dense = DMatrix::from_element(n, n, ZERO);
        for j in 0..n {
            for i in j.saturating_sub(ku)..(j + kl + 1).min(n) {
                // Small diagonal forces row interchanges.
                let v = if i == j { c(0.01, 0.0) } else { c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<Complex64> = (0..n).map(|k| c(k as f64, 1.0)).collect();
        let expected = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        band.factor().unwrap();
        assert!(band.piv.iter().enumerate().any(|(j, &p)| p != j));
        let mut x = b;
        band.solve(&mut x);
        for k in 0..n {
            assert!((x[k] - expected[k]).norm() < 1e-9 * expected.norm(), "{k}");
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Grid::square(Rect::unit(), 6).unwrap();
        let f = CoefficientField::constant(&g, c(3.0, 2.0), c(1.0, 4.0));
        let u = galerkin_oracle(&g, &f, &BoundaryData::dirichlet(|_, _| ZERO)).unwrap();
        assert!(u.iter().all(|v| *v == ZERO));
        let u = galerkin_oracle(&g, &f, &BoundaryData::neumann(|_, _| ZERO)).unwrap();
        assert!(u.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn single_unknown_by_hand() {
        // 3×3 grid with unit elements, L = M = i, u = 1 on the boundary.
        // The centre row of the complex matrix is i(8/3 + 4/9) on the
        // diagonal and i(-1/3 + 1/9), i(-1/3 + 1/36) for edge and corner
        // neighbours; moving the boundary values right gives u_c.
        let g = Grid::square(Rect::new(0.0, 2.0, 0.0, 2.0), 3).unwrap();
        let f = CoefficientField::constant(&g, c(0.0, 1.0), c(0.0, 1.0));
        let u = galerkin_oracle(&g, &f, &BoundaryData::dirichlet(|_, _| c(1.0, 0.0))).unwrap();
        let diag = 8.0 / 3.0 + 4.0 / 9.0;
        let off = 4.0 * (-1.0 / 3.0 + 1.0 / 9.0) + 4.0 * (-1.0 / 3.0 + 1.0 / 36.0);
        let expected = -off / diag;
        assert!((u[4] - c(expected, 0.0)).norm() < 1e-14, "{}", u[4]);
    }

    #[test]
    fn reproduces_bilinear_solution_of_laplace() {
        // u = xy is bilinear and harmonic: with M = 0 it is reproduced exactly.
        let g = Grid::square(Rect::unit(), 7).unwrap();
        let f = CoefficientField::constant(&g, c(1.0, 1.0), ZERO);
        let u = galerkin_oracle(&g, &f, &BoundaryData::dirichlet(|x, y| c(x * y, 0.0))).unwrap();
        for k in 0..g.num_nodes() {
            let [x, y] = g.node_coords(k);
            assert!((u[k] - c(x * y, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn size_limit() {
        let g = Grid::square(Rect::unit(), 65).unwrap();
        let f = CoefficientField::constant(&g, c(1.0, 1.0), c(1.0, 1.0));
        assert!(matches!(
            galerkin_oracle(&g, &f, &BoundaryData::dirichlet(|_, _| ZERO)),
            Err(Error::SizeLimit { .. })
        ));
    }
}
