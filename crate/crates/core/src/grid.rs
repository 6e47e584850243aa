//! Tensor-product rectangular grids with bilinear nodal basis functions.
//!
//! Nodes are numbered row-major: node `(i, j)` with `0 <= i < nx`,
//! `0 <= j < ny` has id `j * nx + i`. Element `(i, j)` has its lower-left
//! corner at node `(i, j)`, id `j * (nx - 1) + i`, and lists its corners
//! counter-clockwise starting there.

use crate::error::{Error, Result};

/// Axis-aligned rectangle `(x0, x1) × (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// One edge of the boundary polygon, oriented counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct Grid {
    domain: Rect,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    boundary_nodes: Vec<usize>,
    boundary_edges: Vec<BoundaryEdge>,
}

impl Grid {
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes per side, got {nx}x{ny}"
            )));
        }
        let finite = [domain.x0, domain.x1, domain.y0, domain.y1]
            .iter()
            .all(|v| v.is_finite());
        if !finite || domain.x1 <= domain.x0 || domain.y1 <= domain.y0 {
            return Err(Error::InvalidGrid(format!("degenerate rectangle {domain:?}")));
        }
        let hx = (domain.x1 - domain.x0) / (nx - 1) as f64;
        let hy = (domain.y1 - domain.y0) / (ny - 1) as f64;

        let id = |i: usize, j: usize| j * nx + i;
        let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx - 1 {
            boundary_edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], normal: [0.0, -1.0], length: hx });
        }
        for j in 0..ny - 1 {
            boundary_edges.push(BoundaryEdge {
                nodes: [id(nx - 1, j), id(nx - 1, j + 1)],
                normal: [1.0, 0.0],
                length: hy,
            });
        }
        for i in (0..nx - 1).rev() {
            boundary_edges.push(BoundaryEdge {
                nodes: [id(i + 1, ny - 1), id(i, ny - 1)],
                normal: [0.0, 1.0],
                length: hx,
            });
        }
        for j in (0..ny - 1).rev() {
            boundary_edges.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], normal: [-1.0, 0.0], length: hy });
        }

        let boundary_nodes = (0..nx * ny)
            .filter(|&k| {
                let (i, j) = (k % nx, k / nx);
                i == 0 || j == 0 || i == nx - 1 || j == ny - 1
            })
            .collect();

        Ok(Self { domain, nx, ny, hx, hy, boundary_nodes, boundary_edges })
    }

    /// Square grid with `n` nodes per side.
    pub fn square(domain: Rect, n: usize) -> Result<Self> {
        Self::new(domain, n, n)
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn hx(&self) -> f64 {
        self.hx
    }
    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Largest spacing; equals the common spacing on square grids.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn num_nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_elements(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn node_ij(&self, id: usize) -> (usize, usize) {
        (id % self.nx, id / self.nx)
    }

    pub fn node_coords(&self, id: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(id);
        [self.domain.x0 + i as f64 * self.hx, self.domain.y0 + j as f64 * self.hy]
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        let (i, j) = self.node_ij(id);
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Corner node ids of element `e`, counter-clockwise from lower left.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = (e % (self.nx - 1), e / (self.nx - 1));
        let n0 = self.node_id(i, j);
        [n0, n0 + 1, n0 + 1 + self.nx, n0 + self.nx]
    }

    /// Lower-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> [f64; 2] {
        let (i, j) = (e % (self.nx - 1), e / (self.nx - 1));
        [self.domain.x0 + i as f64 * self.hx, self.domain.y0 + j as f64 * self.hy]
    }

    pub fn element_centroid(&self, e: usize) -> [f64; 2] {
        let [x, y] = self.element_origin(e);
        [x + 0.5 * self.hx, y + 0.5 * self.hy]
    }

    /// Element containing `(x, y)`; points on shared edges go to the element
    /// with the lowest index.
    pub fn locate(&self, x: f64, y: f64) -> Result<usize> {
        if !self.domain.contains(x, y) {
            return Err(Error::OutsideDomain { x, y });
        }
        let cell = |t: f64, n: usize| -> usize {
            let k = t.ceil() as i64 - 1;
            k.clamp(0, n as i64 - 2) as usize
        };
        let i = cell((x - self.domain.x0) / self.hx, self.nx);
        let j = cell((y - self.domain.y0) / self.hy, self.ny);
        Ok(j * (self.nx - 1) + i)
    }

    /// Values and physical gradients of the four local shape functions of
    /// element `e` at `(x, y)`. The point is not required to lie inside `e`.
    pub fn local_shape(&self, e: usize, x: f64, y: f64) -> ([f64; 4], [[f64; 2]; 4]) {
        let [ox, oy] = self.element_origin(e);
        let xi = snap((x - ox) / self.hx);
        let eta = snap((y - oy) / self.hy);
        let values = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta];
        let (ix, iy) = (1.0 / self.hx, 1.0 / self.hy);
        let grads = [
            [-(1.0 - eta) * ix, -(1.0 - xi) * iy],
            [(1.0 - eta) * ix, -xi * iy],
            [eta * ix, xi * iy],
            [-eta * ix, (1.0 - xi) * iy],
        ];
        (values, grads)
    }

    /// Value and gradient of the hat function of `node` at `(x, y)`.
    pub fn eval_basis(&self, node: usize, x: f64, y: f64) -> Result<(f64, [f64; 2])> {
        if node >= self.num_nodes() {
            return Err(Error::InvalidParameter(format!("node {node} out of range")));
        }
        let e = self.locate(x, y)?;
        match self.element_nodes(e).iter().position(|&n| n == node) {
            Some(local) => {
                let (v, g) = self.local_shape(e, x, y);
                Ok((v[local], g[local]))
            }
            None => Ok((0.0, [0.0, 0.0])),
        }
    }

    /// Elements sharing node `id` (up to four).
    pub fn node_elements(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.node_ij(id);
        let (ex, ey) = (self.nx - 1, self.ny - 1);
        [(0isize, 0isize), (-1, 0), (-1, -1), (0, -1)].into_iter().filter_map(move |(di, dj)| {
            let (ci, cj) = (i as isize + di, j as isize + dj);
            (ci >= 0 && cj >= 0 && (ci as usize) < ex && (cj as usize) < ey)
                .then(|| cj as usize * ex + ci as usize)
        })
    }
}

// Local coordinates within rounding of a vertex are made exact, so nodal
// interpolation reproduces nodal values bitwise.
fn snap(t: f64) -> f64 {
    const EPS: f64 = 1e-12;
    if t.abs() < EPS {
        0.0
    } else if (t - 1.0).abs() < EPS {
        1.0
    } else {
        t
    }
}
