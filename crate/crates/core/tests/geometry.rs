use std::f64::consts::PI;
use std::sync::Arc;

use cutbiot_core::geometry::{self, Circle, HalfPlane, LevelSet, WholeSpace};
use cutbiot_core::mesh::{classify, translate_box, BackgroundMesh};
use cutbiot_core::{BoundaryPart, CellTag, CutRule, CutSettings, LevelSetDomain, MeshConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: f64 = 0.95;
const R0: f64 = 0.7;
const R1: f64 = 0.18;

fn benchmark() -> LevelSetDomain {
    LevelSetDomain::circle_minus_flower(R, R0, R1, 5).unwrap()
}

fn rules(n: usize, depth: usize) -> (cutbiot_core::ActiveMesh, CutRule) {
    let mesh = BackgroundMesh::new(&MeshConfig::unit_box(n)).unwrap();
    let dom = benchmark();
    let active = classify(&mesh, &dom, 8).unwrap();
    let rule = CutRule::build(&active, &dom, CutSettings { order: 5, depth }).unwrap();
    (active, rule)
}

/// Polar area of the flower: integral of r(theta)^2 / 2.
fn flower_area() -> f64 {
    PI * (R0 * R0 + 0.5 * R1 * R1)
}

fn exact_area() -> f64 {
    PI * R * R - flower_area()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        if depth == 0 || (l + r - whole).abs() < 15.0 * tol {
            l + r + (l + r - whole) / 15.0
        } else {
            rec(f, a, m, l, 0.5 * tol, depth - 1) + rec(f, m, b, r, 0.5 * tol, depth - 1)
        }
    }
    rec(f, a, b, simpson(f, a, b), tol, 40)
}

fn flower_arclength() -> f64 {
    let f = |t: f64| {
        let r = R0 + R1 * (5.0 * t).cos();
        let dr = -5.0 * R1 * (5.0 * t).sin();
        (r * r + dr * dr).sqrt()
    };
    adaptive_simpson(&f, 0.0, 2.0 * PI, 1e-12)
}

#[test]
fn flower_levelset_examples() {
    let f = geometry::flower_levelset(R0, R1, 5).unwrap();
    assert!(f.value([0.88, 0.0]).abs() < 1e-15);
    assert!((f.value([0.0, 0.0]) + 0.88).abs() < 1e-15);
    assert!((f.value([0.6, 0.6]) - 0.2758).abs() < 1e-4);
    assert!(geometry::flower_levelset(0.2, 0.2, 5).is_err());
}

#[test]
fn area_matches_polar_oracle() {
    let exact = exact_area();
    assert!((exact - 1.2450).abs() < 1e-4);
    for n in [16, 32, 64] {
        let (_, r) = rules(n, 3);
        assert!((r.area() - exact).abs() < 1e-3, "N={n}: {}", r.area());
    }
    let (_, r) = rules(32, 3);
    assert!((r.area() - exact).abs() < 1e-4, "N=32: {}", r.area());
}

#[test]
fn area_matches_monte_carlo_oracle() {
    let dom = benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 4_000_000;
    let hits = (0..samples)
        .filter(|_| dom.contains([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
        .count();
    let mc = 4.0 * hits as f64 / samples as f64;
    // four standard deviations of the estimator
    let p = mc / 4.0;
    let sigma = 4.0 * (p * (1.0 - p) / samples as f64).sqrt();
    let (_, r) = rules(32, 3);
    assert!((r.area() - mc).abs() < 4.0 * sigma, "mc {mc} vs {}", r.area());
}

#[test]
fn area_error_decreases_with_depth() {
    let errs: Vec<f64> = (1..=4).map(|d| (rules(16, d).1.area() - exact_area()).abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn boundary_lengths() {
    let circ = 2.0 * PI * R;
    assert!((circ - 5.9690).abs() < 1e-4);
    let arc = flower_arclength();
    let (_, r) = rules(64, 3);
    assert!((r.boundary_length(BoundaryPart::Dirichlet) - circ).abs() < 1e-3);
    assert!((r.boundary_length(BoundaryPart::Stress) - arc).abs() < 1e-3);
}

#[test]
fn geometric_conservation() {
    for n in [16, 32, 64] {
        let (_, r) = rules(n, 3);
        let mut sum_n = [0.0; 2];
        let mut flux = 0.0;
        for b in r.boundary_points() {
            sum_n[0] += b.w * b.normal[0];
            sum_n[1] += b.w * b.normal[1];
            flux += b.w * 0.5 * (b.x[0] * b.normal[0] + b.x[1] * b.normal[1]);
        }
        assert!(sum_n[0].abs() < 1e-12 && sum_n[1].abs() < 1e-12, "{sum_n:?}");
        // divergence theorem for the field x/2 on the reconstructed domain
        assert!((flux - r.area()).abs() < 1e-12, "{flux} vs {}", r.area());
    }
}

#[test]
fn rule_invariants() {
    let dom = benchmark();
    for n in [16, 32] {
        let (active, r) = rules(n, 3);
        let h = active.mesh().h();
        for (pos, &cell) in active.active().iter().enumerate() {
            let cr = r.cell(pos);
            assert!(cr.volume.iter().all(|q| q.w > 0.0));
            assert!(cr.boundary.iter().all(|b| b.w > 0.0));
            match active.tag(cell) {
                CellTag::Interior => {
                    let full = geometry::full_cell_rule(active.mesh().cell_lo(cell), h, 5);
                    assert_eq!(cr.volume.len(), full.len());
                    for (a, b) in cr.volume.iter().zip(&full) {
                        assert_eq!((a.x, a.w), (b.x, b.w));
                    }
                }
                CellTag::Cut => assert!(!cr.boundary.is_empty(), "cut cell {cell} without boundary"),
                CellTag::Outside => unreachable!(),
            }
            for b in &cr.boundary {
                assert!((b.normal[0].hypot(b.normal[1]) - 1.0).abs() < 1e-12);
                // outward: the governing level set does not decrease along n
                let eps = 1e-6 * h;
                let here = dom.governing_value(b.part, b.x);
                let step = dom.governing_value(b.part, [b.x[0] + eps * b.normal[0], b.x[1] + eps * b.normal[1]]);
                assert!(step >= here, "inward normal at {:?}", b.x);
                // tags follow the connected boundary components
                let circle_dist = (b.x[0].hypot(b.x[1]) - R).abs();
                match b.part {
                    BoundaryPart::Dirichlet => assert!(circle_dist < 0.03),
                    BoundaryPart::Stress => assert!(dom.hole().unwrap().value(b.x).abs() < 0.03),
                }
            }
        }
    }
}

#[test]
fn level_set_gradients_nonvanishing_on_boundary() {
    let dom = benchmark();
    let (_, r) = rules(32, 3);
    for b in r.boundary_points() {
        let g = match b.part {
            BoundaryPart::Dirichlet => dom.outer().gradient(b.x),
            BoundaryPart::Stress => dom.hole().unwrap().gradient(b.x),
        };
        assert!(g[0].hypot(g[1]) > 1e-8);
    }
}

#[test]
fn boundaries_are_separated_on_fine_meshes() {
    for n in [32, 64, 128] {
        let (active, r) = rules(n, 3);
        let pts: Vec<_> = r.boundary_points().copied().collect();
        let sep = benchmark().separation(&pts);
        assert!(sep > active.mesh().h(), "N={n}: separation {sep}");
    }
}

#[test]
fn half_plane_cut_is_exact() {
    let dom = LevelSetDomain::new(
        Arc::new(HalfPlane {
            normal: [1.0, 0.0],
            offset: 0.5,
        }),
        None,
    );
    let rule = geometry::cut_cell(0, [0.0, 0.0], 1.0, &dom, CutSettings::default()).unwrap();
    assert!((rule.area() - 0.5).abs() < 1e-15);
    assert!((rule.boundary_length(BoundaryPart::Dirichlet) - 1.0).abs() < 1e-15);
    for b in &rule.boundary {
        assert!((b.normal[0] - 1.0).abs() < 1e-15 && b.normal[1].abs() < 1e-15);
    }
}

#[test]
fn whole_space_cells_are_full() {
    let dom = LevelSetDomain::new(Arc::new(WholeSpace), None);
    let mesh = BackgroundMesh::new(&MeshConfig::unit_box(8)).unwrap();
    let active = classify(&mesh, &dom, 8).unwrap();
    let r = CutRule::build(&active, &dom, CutSettings::default()).unwrap();
    let h2 = mesh.h() * mesh.h();
    assert!(r.cells().iter().all(|c| (c.area() - h2).abs() < 1e-15));
    assert!(active.ghost_facets().is_empty());
}

#[test]
fn cut_cells_scale_linearly() {
    let counts: Vec<(usize, usize)> = [16, 32, 64, 128]
        .iter()
        .map(|&n| (n, rules(n, 3).0.cut().len()))
        .collect();
    let c = 1.25 * counts[0].1 as f64 / counts[0].0 as f64;
    for &(n, cut) in &counts {
        assert!((cut as f64) <= c * n as f64, "N={n}: {cut} cut cells");
    }
    assert!(counts.iter().all(|&(n, _)| !rules(n, 3).0.interior().is_empty()));
}

#[test]
fn classification_is_monotone_in_probe_density() {
    let dom = benchmark();
    let mesh = BackgroundMesh::new(&translate_box(&MeshConfig::unit_box(16), 0.37)).unwrap();
    let coarse = classify(&mesh, &dom, 2).unwrap();
    let fine = classify(&mesh, &dom, 16).unwrap();
    for c in 0..mesh.n_cells() {
        let (a, b) = (coarse.tag(c), fine.tag(c));
        assert!(
            !matches!((a, b), (CellTag::Interior, CellTag::Outside) | (CellTag::Outside, CellTag::Interior)),
            "cell {c}: {a:?} -> {b:?}"
        );
    }
}

#[test]
fn circle_classification_examples() {
    let dom = LevelSetDomain::new(
        Arc::new(Circle {
            center: [0.0, 0.0],
            radius: R,
        }),
        None,
    );
    let mesh = BackgroundMesh::new(&MeshConfig::unit_box(4)).unwrap();
    let active = classify(&mesh, &dom, 8).unwrap();
    // cells [0.5, 1]^2 and [-0.5, 0]^2
    assert_eq!(active.tag(mesh.cell_index(3, 3)), CellTag::Cut);
    assert_eq!(active.tag(mesh.cell_index(1, 1)), CellTag::Interior);
}
