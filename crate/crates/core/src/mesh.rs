//! Uniform quadrilateral background mesh and its classification against a
//! level-set domain.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, BoundaryPart, CutSettings, LevelSetDomain, Point};

/// Cells whose inside area falls below this fraction of `h^2` are dropped.
pub const SLIVER_TOL: f64 = 1e-12;

/// Box and resolution of a background mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshConfig {
    pub box_lo: Point,
    pub box_hi: Point,
    pub n: usize,
}

impl MeshConfig {
    pub fn new(box_lo: Point, box_hi: Point, n: usize) -> Self {
        MeshConfig { box_lo, box_hi, n }
    }

    /// `[-1, 1]^2` with `n` cells per axis.
    pub fn unit_box(n: usize) -> Self {
        MeshConfig::new([-1.0, -1.0], [1.0, 1.0], n)
    }

    pub fn h(&self) -> f64 {
        (self.box_hi[0] - self.box_lo[0]) / self.n as f64
    }
}

/// Shifts the box by `delta * h` along both axes, keeping `n`.
pub fn translate_box(config: &MeshConfig, delta: f64) -> MeshConfig {
    let shift = delta * config.h();
    MeshConfig {
        box_lo: [config.box_lo[0] + shift, config.box_lo[1] + shift],
        box_hi: [config.box_hi[0] + shift, config.box_hi[1] + shift],
        n: config.n,
    }
}

/// Direction of a facet's unit normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Interior facet shared by `minus` and `plus`; the normal points from
/// `minus` into `plus`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Facet {
    pub minus: usize,
    pub plus: usize,
    pub axis: Axis,
    pub a: Point,
    pub b: Point,
}

impl Facet {
    pub fn normal(&self) -> Point {
        match self.axis {
            Axis::X => [1.0, 0.0],
            Axis::Y => [0.0, 1.0],
        }
    }
}

/// `n x n` congruent square cells, indexed row-major (`j * n + i`).
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundMesh {
    lo: Point,
    hi: Point,
    n: usize,
    h: f64,
}

pub fn build_mesh(box_lo: Point, box_hi: Point, n: usize) -> Result<BackgroundMesh> {
    BackgroundMesh::new(&MeshConfig::new(box_lo, box_hi, n))
}

impl BackgroundMesh {
    pub fn new(config: &MeshConfig) -> Result<Self> {
        let MeshConfig { box_lo, box_hi, n } = *config;
        let dx = box_hi[0] - box_lo[0];
        let dy = box_hi[1] - box_lo[1];
        if !(dx > 0.0 && dy > 0.0) || !dx.is_finite() || !dy.is_finite() {
            return Err(Error::config(format!(
                "box_hi must exceed box_lo componentwise, got {box_lo:?} .. {box_hi:?}"
            )));
        }
        if (dx - dy).abs() > 1e-12 * dx.max(dy) {
            return Err(Error::config(format!(
                "background box must be square, got side lengths {dx} and {dy}"
            )));
        }
        if n < 2 {
            return Err(Error::config(format!("need at least 2 cells per axis, got {n}")));
        }
        Ok(BackgroundMesh {
            lo: box_lo,
            hi: box_hi,
            n,
            h: dx / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn n_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.n, cell / self.n)
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn cell_lo(&self, cell: usize) -> Point {
        let (i, j) = self.cell_ij(cell);
        [self.lo[0] + i as f64 * self.h, self.lo[1] + j as f64 * self.h]
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        let lo = self.cell_lo(cell);
        [lo[0] + 0.5 * self.h, lo[1] + 0.5 * self.h]
    }

    /// Cell containing `p` (clamped to the box).
    pub fn locate(&self, p: Point) -> usize {
        let idx = |v: f64, lo: f64| (((v - lo) / self.h).floor().max(0.0) as usize).min(self.n - 1);
        self.cell_index(idx(p[0], self.lo[0]), idx(p[1], self.lo[1]))
    }

    /// Facets with two neighbors: vertical ones first, then horizontal ones.
    pub fn interior_facets(&self) -> Vec<Facet> {
        let n = self.n;
        let mut out = Vec::with_capacity(2 * n * (n - 1));
        for j in 0..n {
            for i in 1..n {
                let plus = self.cell_index(i, j);
                let lo = self.cell_lo(plus);
                out.push(Facet {
                    minus: self.cell_index(i - 1, j),
                    plus,
                    axis: Axis::X,
                    a: lo,
                    b: [lo[0], lo[1] + self.h],
                });
            }
        }
        for j in 1..n {
            for i in 0..n {
                let plus = self.cell_index(i, j);
                let lo = self.cell_lo(plus);
                out.push(Facet {
                    minus: self.cell_index(i, j - 1),
                    plus,
                    axis: Axis::Y,
                    a: lo,
                    b: [lo[0] + self.h, lo[1]],
                });
            }
        }
        out
    }

    pub fn n_boundary_facets(&self) -> usize {
        4 * self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellTag {
    Outside,
    Interior,
    Cut,
}

impl CellTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CellTag::Outside => "outside",
            CellTag::Interior => "interior",
            CellTag::Cut => "cut",
        }
    }
}

/// Background mesh together with the classification of its cells.
#[derive(Clone, Debug)]
pub struct ActiveMesh {
    mesh: BackgroundMesh,
    tags: Vec<CellTag>,
    active: Vec<usize>,
    position: Vec<usize>,
    cut: Vec<usize>,
    interior: Vec<usize>,
    cut_stress: Vec<usize>,
    ghost_facets: Vec<Facet>,
}

const NOT_ACTIVE: usize = usize::MAX;

/// Tags every cell by probing the combined level set on an
/// `(n_probe + 1)^2` grid and on the default cut sub-grid, then confirms cut
/// cells by building their cut rule.
pub fn classify(mesh: &BackgroundMesh, dom: &LevelSetDomain, n_probe: usize) -> Result<ActiveMesh> {
    if n_probe < 2 {
        return Err(Error::config(format!("n_probe must be at least 2, got {n_probe}")));
    }
    let settings = CutSettings::default();
    let sub = 1usize << settings.depth;
    let h = mesh.h();

    let tags: Vec<(CellTag, bool)> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| -> Result<(CellTag, bool)> {
            let lo = mesh.cell_lo(c);
            let mut neg = false;
            let mut pos = false;
            for res in [n_probe, sub] {
                for j in 0..=res {
                    for i in 0..=res {
                        let p = [
                            lo[0] + h * i as f64 / res as f64,
                            lo[1] + h * j as f64 / res as f64,
                        ];
                        let v = dom.value(p);
                        neg |= v < 0.0;
                        pos |= v > 0.0;
                        if v == 0.0 {
                            neg = true;
                            pos = true;
                        }
                    }
                }
            }
            Ok(match (neg, pos) {
                (true, false) => (CellTag::Interior, false),
                (false, true) => (CellTag::Outside, false),
                _ => {
                    let rule = geometry::cut_cell(c, lo, h, dom, settings)?;
                    let area = rule.area();
                    if rule.boundary.is_empty() {
                        if area < SLIVER_TOL * h * h {
                            log::warn!("cell {c}: empty cut, treated as outside");
                            (CellTag::Outside, false)
                        } else {
                            (CellTag::Interior, false)
                        }
                    } else if area < SLIVER_TOL * h * h {
                        log::warn!("cell {c}: sliver of area {area:e} treated as outside");
                        (CellTag::Outside, false)
                    } else {
                        let stress = rule.boundary.iter().any(|b| b.part == BoundaryPart::Stress);
                        (CellTag::Cut, stress)
                    }
                }
            })
        })
        .collect::<Result<_>>()?;

    let mut active = Vec::new();
    let mut cut = Vec::new();
    let mut interior = Vec::new();
    let mut cut_stress = Vec::new();
    let mut position = vec![NOT_ACTIVE; mesh.n_cells()];
    for (c, &(tag, stress)) in tags.iter().enumerate() {
        match tag {
            CellTag::Outside => continue,
            CellTag::Interior => interior.push(c),
            CellTag::Cut => {
                cut.push(c);
                if stress {
                    cut_stress.push(c);
                }
            }
        }
        position[c] = active.len();
        active.push(c);
    }
    if active.is_empty() {
        return Err(Error::config("domain does not intersect the background mesh"));
    }
    let tags: Vec<CellTag> = tags.into_iter().map(|t| t.0).collect();
    let ghost_facets = mesh
        .interior_facets()
        .into_iter()
        .filter(|f| {
            let (a, b) = (tags[f.minus], tags[f.plus]);
            a != CellTag::Outside && b != CellTag::Outside && (a == CellTag::Cut || b == CellTag::Cut)
        })
        .collect();

    Ok(ActiveMesh {
        mesh: mesh.clone(),
        tags,
        active,
        position,
        cut,
        interior,
        cut_stress,
        ghost_facets,
    })
}

impl ActiveMesh {
    pub fn mesh(&self) -> &BackgroundMesh {
        &self.mesh
    }

    pub fn tag(&self, cell: usize) -> CellTag {
        self.tags[cell]
    }

    pub fn tags(&self) -> &[CellTag] {
        &self.tags
    }

    /// Active cells (interior and cut) in increasing cell index.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Position of `cell` in [`Self::active`], if active.
    pub fn position(&self, cell: usize) -> Option<usize> {
        match self.position[cell] {
            NOT_ACTIVE => None,
            p => Some(p),
        }
    }

    pub fn cut(&self) -> &[usize] {
        &self.cut
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Cut cells that carry part of the stress boundary.
    pub fn cut_stress(&self) -> &[usize] {
        &self.cut_stress
    }

    pub fn ghost_facets(&self) -> &[Facet] {
        &self.ghost_facets
    }

    /// Writes `cell_index,tag` for every background cell.
    pub fn write_classification<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "cell_index,tag")?;
        for (c, t) in self.tags.iter().enumerate() {
            writeln!(out, "{c},{}", t.as_str())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;
    use std::sync::Arc;

    fn disk(r: f64) -> LevelSetDomain {
        LevelSetDomain::new(
            Arc::new(Circle {
                center: [0.0, 0.0],
                radius: r,
            }),
            None,
        )
    }

    #[test]
    fn mesh_sizes() {
        let m = build_mesh([-1.0, -1.0], [1.0, 1.0], 16).unwrap();
        assert_eq!(m.h(), 0.125);
        assert_eq!(m.n_cells(), 256);
        let m = build_mesh([-1.0, -1.0], [1.0, 1.0], 4).unwrap();
        assert_eq!(m.interior_facets().len(), 24);
        for n0 in 2..=6 {
            let n = 1usize << (2 + n0);
            let m = build_mesh([-1.0, -1.0], [1.0, 1.0], n).unwrap();
            assert_eq!(m.interior_facets().len(), 2 * n * (n - 1));
        }
    }

    #[test]
    fn mesh_rejects_bad_boxes() {
        assert!(build_mesh([-1.0, -1.0], [1.0, 2.0], 4).is_err());
        assert!(build_mesh([1.0, 1.0], [-1.0, -1.0], 4).is_err());
        assert!(build_mesh([-1.0, -1.0], [1.0, 1.0], 1).is_err());
    }

    #[test]
    fn facet_neighbors_are_distinct_and_adjacent() {
        let m = build_mesh([0.0, 0.0], [1.0, 1.0], 5).unwrap();
        for f in m.interior_facets() {
            assert_ne!(f.minus, f.plus);
            let (a, b) = (m.cell_center(f.minus), m.cell_center(f.plus));
            let n = f.normal();
            let d = [b[0] - a[0], b[1] - a[1]];
            assert!((d[0] * n[0] + d[1] * n[1] - m.h()).abs() < 1e-14);
        }
    }

    #[test]
    fn translation() {
        let c = MeshConfig::unit_box(60);
        assert_eq!(translate_box(&c, 0.0), c);
        let t = translate_box(&c, 5e-4);
        let s = 5e-4 * 2.0 / 60.0;
        assert!((t.box_lo[0] - (-1.0 + s)).abs() < 1e-15);
        assert!((t.box_hi[1] - (1.0 + s)).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        let m = build_mesh([-1.0, -1.0], [1.0, 1.0], 4).unwrap();
        let a = classify(&m, &disk(0.95), 8).unwrap();
        // [0.5,1]x[0.5,1]
        assert_eq!(a.tag(m.cell_index(3, 3)), CellTag::Cut);
        // [-0.25,0]x[-0.25,0] lies in cell (1,1) = [-0.5,0]^2
        assert_eq!(a.tag(m.locate([-0.1, -0.1])), CellTag::Interior);

        let full = classify(&m, &LevelSetDomain::whole_space(), 8).unwrap();
        assert!(full.tags().iter().all(|&t| t == CellTag::Interior));
        assert!(full.ghost_facets().is_empty());
        assert_eq!(full.active().len(), 16);
    }

    #[test]
    fn ghost_facets_touch_cut_and_active_cells() {
        let m = build_mesh([-1.0, -1.0], [1.0, 1.0], 16).unwrap();
        let a = classify(&m, &disk(0.7), 8).unwrap();
        assert!(!a.ghost_facets().is_empty());
        for f in a.ghost_facets() {
            assert!(a.position(f.minus).is_some() && a.position(f.plus).is_some());
            assert!(a.tag(f.minus) == CellTag::Cut || a.tag(f.plus) == CellTag::Cut);
        }
        assert_eq!(a.active().len(), a.cut().len() + a.interior().len());
    }

    #[test]
    fn classification_table() {
        let m = build_mesh([-1.0, -1.0], [1.0, 1.0], 2).unwrap();
        let a = classify(&m, &LevelSetDomain::whole_space(), 2).unwrap();
        let mut buf = Vec::new();
        a.write_classification(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "cell_index,tag\n0,interior\n1,interior\n2,interior\n3,interior\n");
    }
}
