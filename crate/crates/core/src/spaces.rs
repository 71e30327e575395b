//! Continuous tensor-product Lagrange spaces `Q_k` on the active mesh.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::ActiveMesh;

/// One-dimensional Lagrange basis on equispaced nodes of `[0, 1]`, stored as
/// monomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Lagrange1d {
    degree: usize,
    coeffs: Vec<[f64; 4]>,
}

impl Lagrange1d {
    pub fn new(degree: usize) -> Self {
        assert!((1..=3).contains(&degree), "degree must be 1, 2 or 3");
        let nodes: Vec<f64> = (0..=degree).map(|i| i as f64 / degree as f64).collect();
        let coeffs = (0..=degree)
            .map(|i| {
                let mut c = [0.0; 4];
                c[0] = 1.0;
                let mut len = 1;
                for (m, &xm) in nodes.iter().enumerate() {
                    if m == i {
                        continue;
                    }
                    let d = nodes[i] - xm;
                    // multiply by (t - xm) / d
                    let mut next = [0.0; 4];
                    for p in 0..len {
                        next[p + 1] += c[p] / d;
                        next[p] -= c[p] * xm / d;
                    }
                    c = next;
                    len += 1;
                }
                c
            })
            .collect();
        Lagrange1d { degree, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `deriv`-th derivative of basis `i` at `t`.
    pub fn eval(&self, i: usize, t: f64, deriv: usize) -> f64 {
        let c = &self.coeffs[i];
        let mut acc = 0.0;
        for p in (deriv..=self.degree).rev() {
            let mut f = 1.0;
            for q in 0..deriv {
                f *= (p - q) as f64;
            }
            acc = acc * t + f * c[p];
        }
        acc
    }
}

/// Values and physical gradients of the scalar cell basis at one point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
}

/// Value and gradient of a (possibly vector-valued) discrete field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldValue {
    pub value: [f64; 2],
    /// `grad[c]` is the gradient of component `c`.
    pub grad: [Point; 2],
}

/// Continuous `Q_k` space with `ncomp` components over the active cells.
///
/// Scalar nodes are numbered lexicographically (row by row) among the grid
/// nodes that touch at least one active cell. Component `c` of node `d` has
/// global index `c * n_nodes + d`.
#[derive(Clone, Debug)]
pub struct FeSpace {
    basis: Lagrange1d,
    ncomp: usize,
    lo: Point,
    h: f64,
    n: usize,
    nodes_per_axis: usize,
    dof_nodes: Vec<usize>,
    cell_nodes: Vec<usize>,
    active: Vec<usize>,
    position: Vec<usize>,
}

pub fn build_space(active: &ActiveMesh, degree: usize, ncomp: usize) -> Result<FeSpace> {
    FeSpace::new(active, degree, ncomp)
}

impl FeSpace {
    pub fn new(active: &ActiveMesh, degree: usize, ncomp: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::config(format!("degree must be in 1..=3, got {degree}")));
        }
        if !(1..=2).contains(&ncomp) {
            return Err(Error::config(format!("ncomp must be 1 or 2, got {ncomp}")));
        }
        if active.active().is_empty() {
            return Err(Error::config("cannot build a space on an empty active mesh"));
        }
        let mesh = active.mesh();
        let n = mesh.n();
        let k = degree;
        let npa = k * n + 1;
        let mut used = vec![false; npa * npa];
        for &c in active.active() {
            let (i, j) = mesh.cell_ij(c);
            for q in 0..=k {
                for p in 0..=k {
                    used[(k * j + q) * npa + k * i + p] = true;
                }
            }
        }
        let mut node_dof = vec![usize::MAX; npa * npa];
        let mut dof_nodes = Vec::new();
        for (g, _) in used.iter().enumerate().filter(|(_, u)| **u) {
            node_dof[g] = dof_nodes.len();
            dof_nodes.push(g);
        }
        let nloc = (k + 1) * (k + 1);
        let mut cell_nodes = Vec::with_capacity(active.active().len() * nloc);
        for &c in active.active() {
            let (i, j) = mesh.cell_ij(c);
            for q in 0..=k {
                for p in 0..=k {
                    cell_nodes.push(node_dof[(k * j + q) * npa + k * i + p]);
                }
            }
        }
        let mut position = vec![usize::MAX; mesh.n_cells()];
        for (pos, &c) in active.active().iter().enumerate() {
            position[c] = pos;
        }
        Ok(FeSpace {
            basis: Lagrange1d::new(k),
            ncomp,
            lo: mesh.lo(),
            h: mesh.h(),
            n,
            nodes_per_axis: npa,
            dof_nodes,
            cell_nodes,
            active: active.active().to_vec(),
            position,
        })
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of scalar nodes.
    pub fn n_nodes(&self) -> usize {
        self.dof_nodes.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.ncomp * self.n_nodes()
    }

    /// Scalar basis functions per cell.
    pub fn local_size(&self) -> usize {
        (self.degree() + 1) * (self.degree() + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.active.len()
    }

    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    pub fn position(&self, cell: usize) -> Option<usize> {
        self.position.get(cell).copied().filter(|&p| p != usize::MAX)
    }

    /// Scalar node numbers of the active cell at position `pos`.
    pub fn cell_nodes(&self, pos: usize) -> &[usize] {
        let nloc = self.local_size();
        &self.cell_nodes[pos * nloc..(pos + 1) * nloc]
    }

    pub fn dof(&self, comp: usize, node: usize) -> usize {
        comp * self.n_nodes() + node
    }

    pub fn node_coord(&self, node: usize) -> Point {
        let g = self.dof_nodes[node];
        let hn = self.h / self.degree() as f64;
        [
            self.lo[0] + (g % self.nodes_per_axis) as f64 * hn,
            self.lo[1] + (g / self.nodes_per_axis) as f64 * hn,
        ]
    }

    fn cell_lo(&self, cell: usize) -> Point {
        [
            self.lo[0] + (cell % self.n) as f64 * self.h,
            self.lo[1] + (cell / self.n) as f64 * self.h,
        ]
    }

    /// Maps a physical point to the local coordinates of `cell`. Points
    /// outside the cell map outside `[0, 1]^2`.
    pub fn to_local(&self, cell: usize, x: Point) -> Point {
        let lo = self.cell_lo(cell);
        [(x[0] - lo[0]) / self.h, (x[1] - lo[1]) / self.h]
    }

    /// Basis values and gradients with respect to local coordinates.
    pub fn eval_basis_local(&self, xi: Point, out: &mut BasisEval) {
        let k = self.degree();
        let b = &self.basis;
        let mut vx = [0.0; 4];
        let mut dx = [0.0; 4];
        let mut vy = [0.0; 4];
        let mut dy = [0.0; 4];
        for p in 0..=k {
            vx[p] = b.eval(p, xi[0], 0);
            dx[p] = b.eval(p, xi[0], 1);
            vy[p] = b.eval(p, xi[1], 0);
            dy[p] = b.eval(p, xi[1], 1);
        }
        out.values.clear();
        out.grads.clear();
        for q in 0..=k {
            for p in 0..=k {
                out.values.push(vx[p] * vy[q]);
                out.grads.push([dx[p] * vy[q], vx[p] * dy[q]]);
            }
        }
    }

    /// Basis values and physical gradients of `cell` at the physical point `x`.
    /// Extrapolates when `x` lies outside the cell.
    pub fn eval_basis(&self, cell: usize, x: Point, out: &mut BasisEval) {
        self.eval_basis_local(self.to_local(cell, x), out);
        let s = 1.0 / self.h;
        for g in &mut out.grads {
            g[0] *= s;
            g[1] *= s;
        }
    }

    pub fn basis_at(&self, cell: usize, x: Point) -> BasisEval {
        let mut out = BasisEval::default();
        self.eval_basis(cell, x, &mut out);
        out
    }

    /// Physical partial derivative `d^(ax+ay) / dx^ax dy^ay` of every scalar
    /// basis function of `cell` at `x`.
    pub fn eval_partial(&self, cell: usize, x: Point, order: (usize, usize), out: &mut Vec<f64>) {
        let xi = self.to_local(cell, x);
        let k = self.degree();
        let scale = self.h.powi(-((order.0 + order.1) as i32));
        out.clear();
        for q in 0..=k {
            let fy = self.basis.eval(q, xi[1], order.1);
            for p in 0..=k {
                out.push(self.basis.eval(p, xi[0], order.0) * fy * scale);
            }
        }
    }

    /// Nodal interpolation; `f(x, c)` is component `c` at `x`.
    pub fn interpolate(&self, f: impl Fn(Point, usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for node in 0..self.n_nodes() {
            let x = self.node_coord(node);
            for c in 0..self.ncomp {
                out[self.dof(c, node)] = f(x, c);
            }
        }
        out
    }

    /// Evaluates a discrete field given by `coeffs` in `cell` at `x`.
    pub fn evaluate(&self, coeffs: &[f64], cell: usize, x: Point, scratch: &mut BasisEval) -> FieldValue {
        let pos = self.position(cell).expect("evaluate on an inactive cell");
        self.eval_basis(cell, x, scratch);
        let mut fv = FieldValue::default();
        for (l, &node) in self.cell_nodes(pos).iter().enumerate() {
            for c in 0..self.ncomp {
                let v = coeffs[self.dof(c, node)];
                fv.value[c] += v * scratch.values[l];
                fv.grad[c][0] += v * scratch.grads[l][0];
                fv.grad[c][1] += v * scratch.grads[l][1];
            }
        }
        fv
    }
}

/// Offsets of the displacement, total-pressure and fluid-pressure blocks in
/// the global vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FieldLayout {
    /// Scalar displacement nodes; the block holds two components.
    pub n_u: usize,
    pub n_t: usize,
    pub n_f: usize,
}

impl FieldLayout {
    pub fn new(u: &FeSpace, t: &FeSpace, f: &FeSpace) -> Result<Self> {
        if u.ncomp() != 2 || t.ncomp() != 1 || f.ncomp() != 1 {
            return Err(Error::Layout(
                "expected a vector displacement space and scalar pressure spaces".into(),
            ));
        }
        Ok(FieldLayout {
            n_u: u.n_nodes(),
            n_t: t.n_nodes(),
            n_f: f.n_nodes(),
        })
    }

    pub fn u(&self) -> Range<usize> {
        0..2 * self.n_u
    }

    pub fn t(&self) -> Range<usize> {
        2 * self.n_u..2 * self.n_u + self.n_t
    }

    pub fn f(&self) -> Range<usize> {
        let s = 2 * self.n_u + self.n_t;
        s..s + self.n_f
    }

    pub fn total(&self) -> usize {
        2 * self.n_u + self.n_t + self.n_f
    }
}
