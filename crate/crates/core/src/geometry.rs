//! Implicit geometry and cut-cell quadrature.
//!
//! The physical domain is `{outer < 0} \ {hole < 0}`. Inside a cut cell each
//! level set is replaced by its piecewise-linear interpolant on a uniform
//! `2^m x 2^m` sub-triangulation; every sub-triangle is clipped against the
//! two resulting half-planes. Volume points come from a symmetric triangle
//! rule on the clipped polygons, boundary points from Gauss rules on the
//! clipping segments. Boundary normals are the normals of those segments, so
//! the discrete domain satisfies the divergence theorem to round-off.

use std::fmt::Debug;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{ActiveMesh, CellTag};
use crate::quadrature;

pub type Point = [f64; 2];

/// Largest sub-grid depth tried when a cell's sign pattern is unresolved.
pub const MAX_SUBDIVISION_DEPTH: usize = 6;

const CONFLICT_TOL: f64 = 1e-8;

/// A signed function, negative on the side it encloses.
pub trait LevelSet: Send + Sync + Debug {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> Point;
}

/// `|x - c| - r`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl LevelSet for Circle {
    fn value(&self, p: Point) -> f64 {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) - self.radius
    }

    fn gradient(&self, p: Point) -> Point {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let r = dx.hypot(dy);
        if r == 0.0 {
            [0.0, 0.0]
        } else {
            [dx / r, dy / r]
        }
    }
}

/// Polar flower `r - r0 - r1 cos(petals * theta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flower {
    pub r0: f64,
    pub r1: f64,
    pub petals: u32,
}

/// Builds the flower level set, rejecting self-intersecting shapes.
pub fn flower_levelset(r0: f64, r1: f64, petals: u32) -> Result<Flower> {
    if !(r1 > 0.0 && r0 > r1) {
        return Err(Error::config(format!(
            "invalid flower: need r0 > r1 > 0, got r0={r0}, r1={r1}"
        )));
    }
    if petals == 0 {
        return Err(Error::config("invalid flower: petals must be positive"));
    }
    Ok(Flower { r0, r1, petals })
}

impl Default for Flower {
    fn default() -> Self {
        Flower {
            r0: 0.7,
            r1: 0.18,
            petals: 5,
        }
    }
}

impl LevelSet for Flower {
    fn value(&self, p: Point) -> f64 {
        let r = p[0].hypot(p[1]);
        let theta = p[1].atan2(p[0]);
        r - self.r0 - self.r1 * (self.petals as f64 * theta).cos()
    }

    fn gradient(&self, p: Point) -> Point {
        let (x, y) = (p[0], p[1]);
        let r2 = x * x + y * y;
        if r2 == 0.0 {
            return [0.0, 0.0];
        }
        let r = r2.sqrt();
        let k = self.petals as f64;
        let s = self.r1 * k * (k * y.atan2(x)).sin();
        // d(theta)/dx = -y/r^2, d(theta)/dy = x/r^2
        [x / r - s * y / r2, y / r + s * x / r2]
    }
}

/// `normal . x - offset`, negative on the side opposite to `normal`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl LevelSet for HalfPlane {
    fn value(&self, p: Point) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset
    }

    fn gradient(&self, _p: Point) -> Point {
        self.normal
    }
}

/// Constant negative level set: everything is inside.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WholeSpace;

impl LevelSet for WholeSpace {
    fn value(&self, _p: Point) -> f64 {
        -1.0
    }

    fn gradient(&self, _p: Point) -> Point {
        [0.0, 0.0]
    }
}

/// Which part of the boundary a point belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryPart {
    /// Zero set of the outer level set (displacement and flux data).
    Dirichlet,
    /// Zero set of the hole level set (traction and fluid pressure data).
    Stress,
}

impl BoundaryPart {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryPart::Dirichlet => "dirichlet",
            BoundaryPart::Stress => "stress",
        }
    }
}

/// `Omega = {outer < 0} ∩ {hole > 0}`.
#[derive(Clone, Debug)]
pub struct LevelSetDomain {
    outer: Arc<dyn LevelSet>,
    hole: Option<Arc<dyn LevelSet>>,
}

impl LevelSetDomain {
    pub fn new(outer: Arc<dyn LevelSet>, hole: Option<Arc<dyn LevelSet>>) -> Self {
        LevelSetDomain { outer, hole }
    }

    /// The circle-minus-flower benchmark domain.
    pub fn circle_minus_flower(radius: f64, r0: f64, r1: f64, petals: u32) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::config(format!("invalid circle radius {radius}")));
        }
        let flower = flower_levelset(r0, r1, petals)?;
        if r0 + r1 >= radius {
            return Err(Error::config(format!(
                "invalid flower: petal tips (r0 + r1 = {}) reach the outer circle (radius {radius})",
                r0 + r1
            )));
        }
        Ok(LevelSetDomain::new(
            Arc::new(Circle {
                center: [0.0, 0.0],
                radius,
            }),
            Some(Arc::new(flower)),
        ))
    }

    pub fn whole_space() -> Self {
        LevelSetDomain::new(Arc::new(WholeSpace), None)
    }

    pub fn outer(&self) -> &dyn LevelSet {
        self.outer.as_ref()
    }

    pub fn hole(&self) -> Option<&dyn LevelSet> {
        self.hole.as_deref()
    }

    /// Combined level set `max(outer, -hole)`; negative exactly inside.
    pub fn value(&self, p: Point) -> f64 {
        let o = self.outer.value(p);
        match &self.hole {
            Some(h) => o.max(-h.value(p)),
            None => o,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.value(p) < 0.0
    }

    /// Level set that governs a boundary part, with the sign convention that
    /// it increases out of the domain.
    pub fn governing_value(&self, part: BoundaryPart, p: Point) -> f64 {
        match part {
            BoundaryPart::Dirichlet => self.outer.value(p),
            BoundaryPart::Stress => self.hole.as_ref().map_or(f64::NAN, |h| -h.value(p)),
        }
    }

    /// Smallest `|other level set|` over the given boundary points; measures
    /// how well the two zero sets are separated.
    pub fn separation(&self, points: &[BoundaryPoint]) -> f64 {
        let Some(hole) = &self.hole else {
            return f64::INFINITY;
        };
        points
            .iter()
            .map(|bp| match bp.part {
                BoundaryPart::Dirichlet => hole.value(bp.x).abs(),
                BoundaryPart::Stress => self.outer.value(bp.x).abs(),
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPoint {
    pub x: Point,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub x: Point,
    pub w: f64,
    /// Outward unit normal of `Omega`.
    pub normal: Point,
    pub part: BoundaryPart,
}

/// Quadrature for a single cell: volume points over `T ∩ Omega` and
/// boundary points over `T ∩ Gamma`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CellRule {
    pub volume: Vec<QuadPoint>,
    pub boundary: Vec<BoundaryPoint>,
}

impl CellRule {
    pub fn area(&self) -> f64 {
        self.volume.iter().map(|q| q.w).sum()
    }

    pub fn boundary_length(&self, part: BoundaryPart) -> f64 {
        self.boundary
            .iter()
            .filter(|b| b.part == part)
            .map(|b| b.w)
            .sum()
    }
}

/// Settings for cut-cell rule generation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutSettings {
    /// Polynomial degree integrated exactly on each affine piece.
    pub order: usize,
    /// Initial sub-grid depth `m` (the cell is split into `2^m x 2^m` squares).
    pub depth: usize,
}

impl Default for CutSettings {
    fn default() -> Self {
        CutSettings { order: 5, depth: 3 }
    }
}

/// Tensor Gauss rule on a full cell.
pub fn full_cell_rule(lo: Point, h: f64, order: usize) -> Vec<QuadPoint> {
    quadrature::square_rule(lo, h, order)
        .into_iter()
        .map(|(x, w)| QuadPoint { x, w })
        .collect()
}

/// Volume rule over `T ∩ Omega` for the square cell `[lo, lo + h]^2`.
pub fn cut_volume_rule(
    cell: usize,
    lo: Point,
    h: f64,
    dom: &LevelSetDomain,
    settings: CutSettings,
) -> Result<Vec<QuadPoint>> {
    Ok(cut_cell(cell, lo, h, dom, settings)?.volume)
}

/// Boundary rule over `T ∩ Gamma` for the square cell `[lo, lo + h]^2`.
pub fn cut_surface_rule(
    cell: usize,
    lo: Point,
    h: f64,
    dom: &LevelSetDomain,
    settings: CutSettings,
) -> Result<Vec<BoundaryPoint>> {
    Ok(cut_cell(cell, lo, h, dom, settings)?.boundary)
}

/// Volume and boundary rules for one cell. The sub-grid depth is raised up
/// to [`MAX_SUBDIVISION_DEPTH`] until every sub-square edge has a sign
/// pattern the linear interpolant can represent.
pub fn cut_cell(
    cell: usize,
    lo: Point,
    h: f64,
    dom: &LevelSetDomain,
    settings: CutSettings,
) -> Result<CellRule> {
    for depth in settings.depth..=MAX_SUBDIVISION_DEPTH.max(settings.depth) {
        let grid = SubGrid::sample(cell, lo, h, depth, dom)?;
        if grid.resolved(dom) {
            return Ok(grid.rule(settings.order));
        }
    }
    Err(Error::GeometryResolution {
        cell,
        reason: format!(
            "level-set sign pattern unresolved at sub-grid depth {}",
            MAX_SUBDIVISION_DEPTH.max(settings.depth)
        ),
    })
}

/// Level-set samples on the `(2^m + 1)^2` sub-grid vertices of one cell.
struct SubGrid {
    lo: Point,
    hs: f64,
    s: usize,
    outer: Vec<f64>,
    hole: Option<Vec<f64>>,
}

#[derive(Clone, Copy)]
struct Vertex {
    x: Point,
    // values of the piecewise-linear outer level set and of minus the hole
    // level set; both are "negative inside"
    s: [f64; 2],
}

#[derive(Clone, Copy)]
struct EdgeLabel {
    part: BoundaryPart,
    normal: Point,
}

impl SubGrid {
    fn sample(cell: usize, lo: Point, h: f64, depth: usize, dom: &LevelSetDomain) -> Result<Self> {
        let s = 1usize << depth;
        let hs = h / s as f64;
        let n = (s + 1) * (s + 1);
        let mut outer = Vec::with_capacity(n);
        let mut hole = dom.hole.as_ref().map(|_| Vec::with_capacity(n));
        for j in 0..=s {
            for i in 0..=s {
                let x = [lo[0] + i as f64 * hs, lo[1] + j as f64 * hs];
                let o = dom.outer.value(x);
                outer.push(o);
                if let (Some(hv), Some(hl)) = (hole.as_mut(), dom.hole.as_ref()) {
                    let v = hl.value(x);
                    if o.abs() < CONFLICT_TOL && v.abs() < CONFLICT_TOL {
                        return Err(Error::GeometryConflict { cell, x: x[0], y: x[1] });
                    }
                    hv.push(v);
                }
            }
        }
        Ok(SubGrid {
            lo,
            hs,
            s,
            outer,
            hole,
        })
    }

    fn vertex(&self, i: usize, j: usize) -> Vertex {
        let k = j * (self.s + 1) + i;
        Vertex {
            x: [self.lo[0] + i as f64 * self.hs, self.lo[1] + j as f64 * self.hs],
            s: [
                self.outer[k],
                self.hole.as_ref().map_or(-1.0, |h| -h[k]),
            ],
        }
    }

    /// False if some sub-grid edge has equal-signed endpoints but an
    /// opposite-signed midpoint for either level set.
    fn resolved(&self, dom: &LevelSetDomain) -> bool {
        let check = |a: f64, b: f64, mid: f64| {
            !((a > 0.0 && b > 0.0 && mid < 0.0) || (a < 0.0 && b < 0.0 && mid > 0.0))
        };
        let n = self.s + 1;
        for j in 0..=self.s {
            for i in 0..=self.s {
                let k = j * n + i;
                let x0 = [self.lo[0] + i as f64 * self.hs, self.lo[1] + j as f64 * self.hs];
                // edge to the right and edge upward
                for (di, dj) in [(1usize, 0usize), (0, 1)] {
                    if i + di > self.s || j + dj > self.s {
                        continue;
                    }
                    let k2 = (j + dj) * n + i + di;
                    let mid = [
                        x0[0] + 0.5 * di as f64 * self.hs,
                        x0[1] + 0.5 * dj as f64 * self.hs,
                    ];
                    if !check(self.outer[k], self.outer[k2], dom.outer.value(mid)) {
                        return false;
                    }
                    if let (Some(hv), Some(hl)) = (&self.hole, &dom.hole) {
                        if !check(hv[k], hv[k2], hl.value(mid)) {
                            return false;
                        }
                    }
                }
                // sub-square center against its diagonal corners
                if i < self.s && j < self.s {
                    let k2 = (j + 1) * n + i + 1;
                    let c = [x0[0] + 0.5 * self.hs, x0[1] + 0.5 * self.hs];
                    let same = |v: &[f64]| {
                        let corners = [v[k], v[k + 1], v[k + n], v[k2]];
                        corners.iter().all(|&x| x > 0.0) || corners.iter().all(|&x| x < 0.0)
                    };
                    if same(&self.outer) && !check(self.outer[k], self.outer[k2], dom.outer.value(c)) {
                        return false;
                    }
                    if let (Some(hv), Some(hl)) = (&self.hole, &dom.hole) {
                        if same(hv) && !check(hv[k], hv[k2], hl.value(c)) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn rule(&self, order: usize) -> CellRule {
        let mut rule = CellRule::default();
        for j in 0..self.s {
            for i in 0..self.s {
                let v00 = self.vertex(i, j);
                let v10 = self.vertex(i + 1, j);
                let v01 = self.vertex(i, j + 1);
                let v11 = self.vertex(i + 1, j + 1);
                let corners = [v00, v10, v01, v11];
                let all_in = corners.iter().all(|v| v.s[0] < 0.0 && v.s[1] < 0.0);
                if all_in {
                    for (x, w) in quadrature::square_rule(v00.x, self.hs, order) {
                        rule.volume.push(QuadPoint { x, w });
                    }
                    continue;
                }
                let all_out = (0..2).any(|k| corners.iter().all(|v| v.s[k] >= 0.0));
                if all_out {
                    continue;
                }
                clip_triangle([v00, v10, v11], order, &mut rule);
                clip_triangle([v00, v11, v01], order, &mut rule);
            }
        }
        rule
    }
}

/// Clips a counter-clockwise sub-triangle against both linear level sets
/// and appends the resulting volume and boundary points.
fn clip_triangle(tri: [Vertex; 3], order: usize, rule: &mut CellRule) {
    let mut poly: Vec<(Vertex, Option<EdgeLabel>)> = tri.iter().map(|v| (*v, None)).collect();
    for k in 0..2 {
        if poly.iter().all(|(v, _)| v.s[k] < 0.0) {
            continue;
        }
        let part = if k == 0 {
            BoundaryPart::Dirichlet
        } else {
            BoundaryPart::Stress
        };
        let Some(normal) = linear_gradient(&tri, k) else {
            // constant level set on this triangle, all vertices >= 0
            return;
        };
        let label = EdgeLabel { part, normal };
        poly = clip_polygon(&poly, k, label);
        if poly.len() < 3 {
            return;
        }
    }

    let scale = tri_scale(&tri);
    let p0 = poly[0].0.x;
    for w in poly[1..].windows(2) {
        let (a, b) = (w[0].0.x, w[1].0.x);
        let area2 = (a[0] - p0[0]) * (b[1] - p0[1]) - (b[0] - p0[0]) * (a[1] - p0[1]);
        if area2 <= 1e-14 * scale * scale {
            continue;
        }
        for (x, wt) in quadrature::triangle_rule(p0, a, b, order) {
            rule.volume.push(QuadPoint { x, w: wt });
        }
    }

    let n = poly.len();
    for e in 0..n {
        let (va, label) = poly[e];
        let Some(label) = label else { continue };
        let vb = poly[(e + 1) % n].0;
        let len = (vb.x[0] - va.x[0]).hypot(vb.x[1] - va.x[1]);
        if len <= 1e-14 * scale {
            continue;
        }
        for (x, w) in quadrature::segment_rule(va.x, vb.x, order) {
            rule.boundary.push(BoundaryPoint {
                x,
                w,
                normal: label.normal,
                part: label.part,
            });
        }
    }
}

fn tri_scale(tri: &[Vertex; 3]) -> f64 {
    (tri[1].x[0] - tri[0].x[0])
        .abs()
        .max((tri[2].x[1] - tri[0].x[1]).abs())
        .max((tri[1].x[1] - tri[0].x[1]).abs())
        .max((tri[2].x[0] - tri[0].x[0]).abs())
}

/// Unit gradient of the linear interpolant of `s[k]` on the triangle.
fn linear_gradient(tri: &[Vertex; 3], k: usize) -> Option<Point> {
    let [a, b, c] = tri;
    let (e1, e2) = (
        [b.x[0] - a.x[0], b.x[1] - a.x[1]],
        [c.x[0] - a.x[0], c.x[1] - a.x[1]],
    );
    let (d1, d2) = (b.s[k] - a.s[k], c.s[k] - a.s[k]);
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let gx = (d1 * e2[1] - d2 * e1[1]) / det;
    let gy = (e1[0] * d2 - e2[0] * d1) / det;
    let norm = gx.hypot(gy);
    (norm > 0.0 && norm.is_finite()).then(|| [gx / norm, gy / norm])
}

/// One Sutherland-Hodgman pass keeping `s[k] < 0`. Each vertex carries the
/// label of the edge leaving it; edges created by the cut get `label`.
fn clip_polygon(
    poly: &[(Vertex, Option<EdgeLabel>)],
    k: usize,
    label: EdgeLabel,
) -> Vec<(Vertex, Option<EdgeLabel>)> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 2);
    for e in 0..n {
        let (p, lp) = poly[e];
        let q = poly[(e + 1) % n].0;
        let p_in = p.s[k] < 0.0;
        let q_in = q.s[k] < 0.0;
        match (p_in, q_in) {
            (true, true) => out.push((p, lp)),
            (true, false) => {
                out.push((p, lp));
                out.push((intersect(p, q, k), Some(label)));
            }
            (false, true) => out.push((intersect(p, q, k), lp)),
            (false, false) => {}
        }
    }
    out
}

fn intersect(p: Vertex, q: Vertex, k: usize) -> Vertex {
    let t = p.s[k] / (p.s[k] - q.s[k]);
    let lerp = |a: f64, b: f64| a + t * (b - a);
    Vertex {
        x: [lerp(p.x[0], q.x[0]), lerp(p.x[1], q.x[1])],
        s: [lerp(p.s[0], q.s[0]), lerp(p.s[1], q.s[1])],
    }
}

/// Quadrature rules for every active cell, stored in active-cell order.
#[derive(Clone, Debug)]
pub struct CutRule {
    cells: Vec<CellRule>,
    settings: CutSettings,
}

impl CutRule {
    /// Interior cells get the tensor Gauss rule, cut cells the clipped
    /// sub-triangulation rule.
    pub fn build(active: &ActiveMesh, dom: &LevelSetDomain, settings: CutSettings) -> Result<Self> {
        let mesh = active.mesh();
        let h = mesh.h();
        let cells = active
            .active()
            .par_iter()
            .map(|&c| match active.tag(c) {
                CellTag::Cut => cut_cell(c, mesh.cell_lo(c), h, dom, settings),
                _ => Ok(CellRule {
                    volume: full_cell_rule(mesh.cell_lo(c), h, settings.order),
                    boundary: Vec::new(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CutRule { cells, settings })
    }

    pub fn settings(&self) -> CutSettings {
        self.settings
    }

    /// Rule of the active cell at position `pos` in [`ActiveMesh::active`].
    pub fn cell(&self, pos: usize) -> &CellRule {
        &self.cells[pos]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellRule] {
        &self.cells
    }

    pub fn area(&self) -> f64 {
        self.cells.iter().map(CellRule::area).sum()
    }

    pub fn boundary_length(&self, part: BoundaryPart) -> f64 {
        self.cells.iter().map(|c| c.boundary_length(part)).sum()
    }

    pub fn boundary_points(&self) -> impl Iterator<Item = &BoundaryPoint> {
        self.cells.iter().flat_map(|c| c.boundary.iter())
    }

    /// Writes boundary quadrature points as `x,y,nx,ny,w,tag`.
    pub fn write_boundary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y,nx,ny,w,tag")?;
        for b in self.boundary_points() {
            writeln!(
                out,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                b.x[0],
                b.x[1],
                b.normal[0],
                b.normal[1],
                b.w,
                b.part.as_str()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_plane() -> LevelSetDomain {
        LevelSetDomain::new(
            Arc::new(HalfPlane {
                normal: [1.0, 0.0],
                offset: 0.5,
            }),
            None,
        )
    }

    #[test]
    fn flower_values() {
        let f = Flower::default();
        assert!(f.value([0.88, 0.0]).abs() < 1e-15);
        assert!((f.value([0.0, 0.0]) + 0.88).abs() < 1e-15);
        // r = 0.8485, cos(5 pi/4) = -0.7071
        let expected = 0.6f64.hypot(0.6) - 0.7 + 0.18 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.value([0.6, 0.6]) - expected).abs() < 1e-14);
        assert!((f.value([0.6, 0.6]) - 0.2758).abs() < 1e-4);
    }

    #[test]
    fn flower_rejects_self_intersection() {
        assert!(flower_levelset(0.2, 0.3, 5).is_err());
        assert!(flower_levelset(0.3, 0.3, 5).is_err());
        assert!(flower_levelset(0.7, 0.18, 5).is_ok());
    }

    #[test]
    fn flower_gradient_matches_differences() {
        let f = Flower::default();
        let e = 1e-6;
        for p in [[0.3, 0.5], [-0.7, 0.2], [0.1, -0.8], [0.9, 0.01]] {
            let g = f.gradient(p);
            let gx = (f.value([p[0] + e, p[1]]) - f.value([p[0] - e, p[1]])) / (2.0 * e);
            let gy = (f.value([p[0], p[1] + e]) - f.value([p[0], p[1] - e])) / (2.0 * e);
            assert!((g[0] - gx).abs() < 1e-7 && (g[1] - gy).abs() < 1e-7);
        }
    }

    #[test]
    fn half_plane_cut_is_exact() {
        let rule = cut_cell(0, [0.0, 0.0], 1.0, &half_plane(), CutSettings::default()).unwrap();
        assert!((rule.area() - 0.5).abs() < 1e-14);
        assert!((rule.boundary_length(BoundaryPart::Dirichlet) - 1.0).abs() < 1e-14);
        for b in &rule.boundary {
            assert!((b.normal[0] - 1.0).abs() < 1e-14 && b.normal[1].abs() < 1e-14);
            assert!((b.x[0] - 0.5).abs() < 1e-14);
        }
        assert!(rule.volume.iter().all(|q| q.w > 0.0 && q.x[0] <= 0.5 + 1e-14));
    }

    #[test]
    fn uncut_cell_has_full_area() {
        let rule = cut_cell(
            0,
            [0.0, 0.0],
            0.25,
            &LevelSetDomain::whole_space(),
            CutSettings::default(),
        )
        .unwrap();
        assert!((rule.area() - 0.0625).abs() < 1e-15);
        assert!(rule.boundary.is_empty());
    }

    #[test]
    fn unresolved_pattern_raises_depth() {
        // a thin disk that passes between all sub-grid vertices at depth 0
        let dom = LevelSetDomain::new(
            Arc::new(Circle {
                center: [0.5, 0.5],
                radius: 0.2,
            }),
            None,
        );
        let coarse = CutSettings { order: 5, depth: 0 };
        let rule = cut_cell(0, [0.0, 0.0], 1.0, &dom, coarse).unwrap();
        assert!(rule.area() > 0.0 && !rule.boundary.is_empty());
        // the piecewise-linear boundary converges at second order in the depth
        let exact = std::f64::consts::PI * 0.04;
        let errs: Vec<f64> = (3..=5)
            .map(|depth| {
                let r = cut_cell(0, [0.0, 0.0], 1.0, &dom, CutSettings { order: 5, depth }).unwrap();
                (r.area() - exact).abs()
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
        assert!(errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn conflict_detected() {
        let dom = LevelSetDomain::new(
            Arc::new(HalfPlane {
                normal: [1.0, 0.0],
                offset: 0.5,
            }),
            Some(Arc::new(HalfPlane {
                normal: [-1.0, 0.0],
                offset: -0.5,
            })),
        );
        let err = cut_cell(7, [0.0, 0.0], 1.0, &dom, CutSettings::default()).unwrap_err();
        assert!(matches!(err, Error::GeometryConflict { cell: 7, .. }));
    }
}
