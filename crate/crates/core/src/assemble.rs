//! Assembly of the real saddle-point block system
//!
//! ```text
//! [ A1   A2ᵀ ] [α' ]   [b1]
//! [ A2  -A1  ] [α'']  = [b2]
//! ```
//!
//! where `A1` collects the `Im(L)`, `Im(M)` terms and `A2` the `Re(L)`,
//! `Re(M)` terms of the bilinear form. With diagonal `L` both blocks are
//! symmetric, so `A2` is stored in the same lower-triangle format as `A1`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::{gauss_legendre, rect_rule};
use crate::sparse::SparseSym;

/// Complex-valued function of position.
pub type ScalarFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

pub fn scalar_fn(f: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> ScalarFn {
    Arc::new(f)
}

/// Local 4×4 element matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementBlocks {
    pub a1: [[f64; 4]; 4],
    pub a2: [[f64; 4]; 4],
    /// Gradient–gradient part of `a1`.
    pub p1: [[f64; 4]; 4],
}

/// Element matrices of element `e` by 2×2 Gauss quadrature, exact for
/// bilinear products against constant coefficients.
pub fn element_blocks(grid: &Grid, field: &CoefficientField, e: usize) -> ElementBlocks {
    let l = field.l(e);
    let m = field.m(e);
    let (lre, lim) = (l.re(), l.im());
    let [ox, oy] = grid.element_origin(e);
    let mut out = ElementBlocks { a1: [[0.0; 4]; 4], a2: [[0.0; 4]; 4], p1: [[0.0; 4]; 4] };
    for (x, y, w) in rect_rule(2, ox, oy, grid.hx(), grid.hy()) {
        let (v, g) = grid.local_shape(e, x, y);
        for a in 0..4 {
            for b in 0..=a {
                let gx = g[a][0] * g[b][0];
                let gy = g[a][1] * g[b][1];
                let vv = v[a] * v[b];
                let stiff_im = gx * lim[0] + gy * lim[1];
                out.p1[a][b] += w * stiff_im;
                out.a1[a][b] += w * (stiff_im + vv * m.im);
                out.a2[a][b] += w * (gx * lre[0] + gy * lre[1] + vv * m.re);
            }
        }
    }
    for mat in [&mut out.a1, &mut out.a2, &mut out.p1] {
        for a in 0..4 {
            for b in 0..a {
                mat[b][a] = mat[a][b];
            }
        }
    }
    out
}

#[derive(Clone)]
pub enum DirichletData {
    /// Boundary values sampled at the boundary nodes.
    Function(ScalarFn),
    /// Explicit values keyed by node id; must cover every boundary node.
    Nodal(BTreeMap<usize, Complex64>),
}

/// Boundary condition for `∇·L∇u = Mu`, with flux `v = iL∇u`.
#[derive(Clone)]
pub enum BoundaryData {
    /// `u = f` on the boundary.
    Dirichlet(DirichletData),
    /// `v·n = g`.
    Neumann { g: ScalarFn },
    /// `u + a v·n = g`, requiring `Re(a) < 0`.
    Robin { a: Complex64, g: ScalarFn },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Robin,
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcKind::Dirichlet => "dirichlet",
            BcKind::Neumann => "neumann",
            BcKind::Robin => "robin",
        })
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Dirichlet(DirichletData::Function(_)) => f.write_str("Dirichlet(fn)"),
            Self::Dirichlet(DirichletData::Nodal(m)) => write!(f, "Dirichlet({} nodal values)", m.len()),
            Self::Neumann { .. } => f.write_str("Neumann(fn)"),
            Self::Robin { a, .. } => write!(f, "Robin {{ a: {a} }}"),
        }
    }
}

impl BoundaryData {
    pub fn dirichlet(f: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::Dirichlet(DirichletData::Function(Arc::new(f)))
    }

    pub fn neumann(g: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::Neumann { g: Arc::new(g) }
    }

    pub fn robin(a: Complex64, g: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self::Robin { a, g: Arc::new(g) }
    }

    pub fn kind(&self) -> BcKind {
        match self {
            Self::Dirichlet(_) => BcKind::Dirichlet,
            Self::Neumann { .. } => BcKind::Neumann,
            Self::Robin { .. } => BcKind::Robin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::Robin { a, .. } = self {
            if !(a.re < 0.0) {
                return Err(Error::InvalidBoundary(format!(
                    "Robin coefficient a = {a} must have negative real part so that the boundary \
                     term keeps A1 positive definite (a' < 0)"
                )));
            }
        }
        Ok(())
    }

    /// Boundary data of the problem after multiplying `L` and `M` by `e^{iθ}`.
    ///
    /// The unknown `u` is unchanged while the flux becomes `e^{iθ}v`, so the
    /// Neumann datum becomes `e^{iθ}g` and the Robin coefficient `a e^{-iθ}`.
    /// Dirichlet data do not change.
    pub fn rotated(&self, theta: f64) -> Self {
        if theta == 0.0 {
            return self.clone();
        }
        let s = Complex64::from_polar(1.0, theta);
        match self {
            Self::Dirichlet(d) => Self::Dirichlet(d.clone()),
            Self::Neumann { g } => {
                let g = g.clone();
                Self::Neumann { g: Arc::new(move |x, y| s * g(x, y)) }
            }
            Self::Robin { a, g } => Self::Robin { a: a * s.conj(), g: g.clone() },
        }
    }
}

/// The assembled real block system for the free nodes.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a1: SparseSym,
    pub a2: SparseSym,
    pub p1: SparseSym,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    /// Grid node id of each free unknown.
    pub dofs: Vec<usize>,
    /// Free index of each grid node, `None` for Dirichlet nodes.
    pub node_dof: Vec<Option<usize>>,
    /// Nodal lifting: Dirichlet values on boundary nodes, zero elsewhere.
    pub lifting: Vec<Complex64>,
    pub kind: BcKind,
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        self.dofs.len()
    }

    /// `[[A1, A2ᵀ], [A2, -A1]] (x1, x2)`.
    pub fn block_apply(&self, x1: &[f64], x2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a1x1 = self.a1.mul(x1);
        let a1x2 = self.a1.mul(x2);
        let a2x1 = self.a2.mul(x1);
        let a2x2 = self.a2.mul(x2);
        let y1 = a1x1.iter().zip(&a2x2).map(|(a, b)| a + b).collect();
        let y2 = a2x1.iter().zip(&a1x2).map(|(a, b)| a - b).collect();
        (y1, y2)
    }

    /// Residual `(b1, b2) − K (x1, x2)` of the full block system.
    pub fn block_residual(&self, x1: &[f64], x2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (y1, y2) = self.block_apply(x1, x2);
        (
            self.b1.iter().zip(y1).map(|(b, y)| b - y).collect(),
            self.b2.iter().zip(y2).map(|(b, y)| b - y).collect(),
        )
    }

    /// `‖b − K x‖ / ‖b‖`, or the absolute residual norm when `b = 0`.
    pub fn relative_block_residual(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let (r1, r2) = self.block_residual(x1, x2);
        let rn = r1.iter().chain(&r2).map(|v| v * v).sum::<f64>().sqrt();
        let bn = self.b1.iter().chain(&self.b2).map(|v| v * v).sum::<f64>().sqrt();
        if bn > 0.0 {
            rn / bn
        } else {
            rn
        }
    }

    /// Dense `2N × 2N` block matrix, for small diagnostics.
    pub fn dense_block_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let a1 = self.a1.to_dense();
        let a2 = self.a2.to_dense();
        let mut k = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                k[i][j] = a1[i][j];
                k[i][n + j] = a2[j][i];
                k[n + i][j] = a2[i][j];
                k[n + i][n + j] = -a1[i][j];
            }
        }
        k
    }

    /// Nodal complex field from free-node coefficients plus the lifting.
    pub fn expand(&self, alpha_re: &[f64], alpha_im: &[f64]) -> Vec<Complex64> {
        let mut u = self.lifting.clone();
        for (k, &node) in self.dofs.iter().enumerate() {
            u[node] += Complex64::new(alpha_re[k], alpha_im[k]);
        }
        u
    }
}

/// Assembles the block system for `field` (already rotated if needed) and
/// boundary data `bc` (already transformed consistently).
pub fn assemble_system(grid: &Grid, field: &CoefficientField, bc: &BoundaryData) -> Result<BlockSystem> {
    if field.len() != grid.num_elements() {
        return Err(Error::InvalidParameter(format!(
            "coefficient field has {} elements, grid has {}",
            field.len(),
            grid.num_elements()
        )));
    }
    bc.validate()?;
    let nn = grid.num_nodes();
    let kind = bc.kind();

    let mut lifting = vec![Complex64::new(0.0, 0.0); nn];
    let mut node_dof = vec![None; nn];
    let mut dofs = Vec::new();
    for node in 0..nn {
        if kind == BcKind::Dirichlet && grid.is_boundary(node) {
            continue;
        }
        node_dof[node] = Some(dofs.len());
        dofs.push(node);
    }
    if let BoundaryData::Dirichlet(data) = bc {
        for &node in grid.boundary_nodes() {
            lifting[node] = match data {
                DirichletData::Function(f) => {
                    let [x, y] = grid.node_coords(node);
                    f(x, y)
                }
                DirichletData::Nodal(map) => *map.get(&node).ok_or_else(|| {
                    Error::InvalidBoundary(format!("Dirichlet data missing for boundary node {node}"))
                })?,
            };
        }
    }

    let n = dofs.len();
    let mut pattern = vec![Vec::new(); n];
    for e in 0..grid.num_elements() {
        let nodes = grid.element_nodes(e);
        for &p in &nodes {
            for &q in &nodes {
                if let (Some(dp), Some(dq)) = (node_dof[p], node_dof[q]) {
                    if dq <= dp {
                        pattern[dp].push(dq);
                    }
                }
            }
        }
    }
    let mut a1 = SparseSym::from_pattern(pattern);
    let mut a2 = a1.clone();
    let mut p1 = a1.clone();
    let mut b1 = vec![0.0; n];
    let mut b2 = vec![0.0; n];

    for e in 0..grid.num_elements() {
        let blk = element_blocks(grid, field, e);
        let nodes = grid.element_nodes(e);
        for a in 0..4 {
            let Some(da) = node_dof[nodes[a]] else { continue };
            for b in 0..4 {
                match node_dof[nodes[b]] {
                    Some(db) if db <= da => {
                        a1.add(da, db, blk.a1[a][b]);
                        a2.add(da, db, blk.a2[a][b]);
                        p1.add(da, db, blk.p1[a][b]);
                    }
                    Some(_) => {}
                    None => {
                        let f = lifting[nodes[b]];
                        b1[da] -= blk.a1[a][b] * f.re + blk.a2[a][b] * f.im;
                        b2[da] -= blk.a2[a][b] * f.re - blk.a1[a][b] * f.im;
                    }
                }
            }
        }
    }

    match bc {
        BoundaryData::Dirichlet(_) => {}
        BoundaryData::Neumann { g } => {
            for (node, phi_g) in boundary_loads(grid, g) {
                let d = node_dof[node].expect("all nodes free for Neumann");
                b1[d] -= phi_g.re;
                b2[d] += phi_g.im;
            }
        }
        BoundaryData::Robin { a, g } => {
            let a2norm = a.norm_sqr();
            let s1 = -a.re / a2norm;
            let s2 = -a.im / a2norm;
            for (p, q, v) in boundary_mass(grid) {
                let (dp, dq) = (node_dof[p].unwrap(), node_dof[q].unwrap());
                a1.add(dp, dq, s1 * v);
                a2.add(dp, dq, s2 * v);
            }
            for (node, phi_g) in boundary_loads(grid, g) {
                let d = node_dof[node].unwrap();
                b1[d] -= (phi_g.re * a.re + phi_g.im * a.im) / a2norm;
                b2[d] -= (phi_g.re * a.im - phi_g.im * a.re) / a2norm;
            }
        }
    }

    Ok(BlockSystem { a1, a2, p1, b1, b2, dofs, node_dof, lifting, kind })
}

/// `∫_edge g ψ_node dS` for every edge and end node, by 2-point Gauss.
/// Corner nodes receive one entry from each incident edge.
pub(crate) fn boundary_loads<'a>(
    grid: &'a Grid,
    g: &'a ScalarFn,
) -> impl Iterator<Item = (usize, Complex64)> + 'a {
    let (pts, wts) = gauss_legendre(2);
    grid.boundary_edges().iter().flat_map(move |edge| {
        let [p, q] = [grid.node_coords(edge.nodes[0]), grid.node_coords(edge.nodes[1])];
        let mut acc = [Complex64::new(0.0, 0.0); 2];
        for (t, w) in pts.iter().zip(wts) {
            let s = 0.5 * (t + 1.0);
            let x = p[0] + s * (q[0] - p[0]);
            let y = p[1] + s * (q[1] - p[1]);
            let gv = g(x, y) * (0.5 * w * edge.length);
            acc[0] += gv * (1.0 - s);
            acc[1] += gv * s;
        }
        [(edge.nodes[0], acc[0]), (edge.nodes[1], acc[1])]
    })
}

/// Lower-triangle entries `(p, q, ∫ψ_p ψ_q dS)` with `p >= q` of the
/// boundary mass matrix, one contribution per edge.
pub(crate) fn boundary_mass(grid: &Grid) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    grid.boundary_edges().iter().flat_map(|edge| {
        let [p, q] = edge.nodes;
        let (d, o) = (edge.length / 3.0, edge.length / 6.0);
        [(p, p, d), (q, q, d), (p.max(q), p.min(q), o)]
    })
}
