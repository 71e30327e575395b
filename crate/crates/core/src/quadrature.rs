//! Reference quadrature rules: Gauss-Legendre on the unit interval, tensor
//! rules on squares and symmetric rules on triangles.

use crate::geometry::Point;

/// Gauss-Legendre rule with `n` points on `[0, 1]`. Returns `(points, weights)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss rule needs at least one point");
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        pts[i] = 0.5 * (1.0 - x);
        pts[n - 1 - i] = 0.5 * (1.0 + x);
        wts[i] = 0.5 * w;
        wts[n - 1 - i] = 0.5 * w;
    }
    (pts, wts)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Number of Gauss points per axis needed to integrate polynomials of the
/// given degree exactly.
pub fn points_for_order(order: usize) -> usize {
    order / 2 + 1
}

/// Tensor Gauss rule on the axis-aligned square `[lo, lo + side]^2`.
pub fn square_rule(lo: Point, side: f64, order: usize) -> Vec<(Point, f64)> {
    let (p, w) = gauss_legendre(points_for_order(order));
    let mut out = Vec::with_capacity(p.len() * p.len());
    for (py, wy) in p.iter().zip(&w) {
        for (px, wx) in p.iter().zip(&w) {
            out.push((
                [lo[0] + side * px, lo[1] + side * py],
                wx * wy * side * side,
            ));
        }
    }
    out
}

/// Gauss rule on the segment `a -> b`; weights include the segment length.
pub fn segment_rule(a: Point, b: Point, order: usize) -> Vec<(Point, f64)> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let (p, w) = gauss_legendre(points_for_order(order));
    p.iter()
        .zip(&w)
        .map(|(t, wt)| {
            (
                [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
                wt * len,
            )
        })
        .collect()
}

/// Barycentric rule on the reference triangle; weights sum to one.
fn triangle_reference(order: usize) -> Vec<([f64; 3], f64)> {
    match order {
        0 | 1 => vec![([1.0 / 3.0; 3], 1.0)],
        2 => {
            let a = 2.0 / 3.0;
            let b = 1.0 / 6.0;
            vec![
                ([a, b, b], 1.0 / 3.0),
                ([b, a, b], 1.0 / 3.0),
                ([b, b, a], 1.0 / 3.0),
            ]
        }
        3..=5 => {
            // Radon's seven point rule, exact for degree 5.
            let s = 15f64.sqrt();
            let a1 = (6.0 - s) / 21.0;
            let b1 = (9.0 + 2.0 * s) / 21.0;
            let w1 = (155.0 - s) / 1200.0;
            let a2 = (6.0 + s) / 21.0;
            let b2 = (9.0 - 2.0 * s) / 21.0;
            let w2 = (155.0 + s) / 1200.0;
            vec![
                ([1.0 / 3.0; 3], 9.0 / 40.0),
                ([b1, a1, a1], w1),
                ([a1, b1, a1], w1),
                ([a1, a1, b1], w1),
                ([b2, a2, a2], w2),
                ([a2, b2, a2], w2),
                ([a2, a2, b2], w2),
            ]
        }
        _ => {
            // Collapsed (Duffy) tensor rule.
            let n = (order + 3) / 2;
            let (p, w) = gauss_legendre(n);
            let mut out = Vec::with_capacity(n * n);
            for (u, wu) in p.iter().zip(&w) {
                for (v, wv) in p.iter().zip(&w) {
                    let l1 = u;
                    let l2 = v * (1.0 - u);
                    out.push(([1.0 - l1 - l2, *l1, l2], 2.0 * wu * wv * (1.0 - u)));
                }
            }
            out
        }
    }
}

/// Quadrature rule on the physical triangle `(a, b, c)`.
pub fn triangle_rule(a: Point, b: Point, c: Point, order: usize) -> Vec<(Point, f64)> {
    let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
    triangle_reference(order)
        .into_iter()
        .map(|(l, w)| {
            (
                [
                    l[0] * a[0] + l[1] * b[0] + l[2] * c[0],
                    l[0] * a[1] + l[1] * b[1] + l[2] * c[1],
                ],
                w * area,
            )
        })
        .collect()
}
