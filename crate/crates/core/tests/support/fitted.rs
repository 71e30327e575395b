//! Dense fitted Q2-Q1-Q2 assembly on the full box `[-1, 1]^2` with its own
//! Lagrange basis and Gauss rule, in the library's unknown ordering.

use cutbiot_core::PhysicalParams;

fn lagrange(k: usize, i: usize, t: f64) -> (f64, f64) {
    let nodes: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
    let mut v = 1.0;
    let mut dv = 0.0;
    for (j, &tj) in nodes.iter().enumerate() {
        if j == i {
            continue;
        }
        let f = (t - tj) / (nodes[i] - tj);
        dv = dv * f + v / (nodes[i] - tj);
        v *= f;
    }
    (v, dv)
}

/// Global node ids, values and physical gradients of a `Q_k` cell basis.
fn basis(k: usize, n: usize, h: f64, ci: usize, cj: usize, xi: [f64; 2]) -> Vec<(usize, f64, [f64; 2])> {
    let per_axis = k * n + 1;
    let mut out = Vec::new();
    for q in 0..=k {
        for p in 0..=k {
            let (vx, dx) = lagrange(k, p, xi[0]);
            let (vy, dy) = lagrange(k, q, xi[1]);
            let node = (k * cj + q) * per_axis + k * ci + p;
            out.push((node, vx * vy, [dx * vy / h, vx * dy / h]));
        }
    }
    out
}

pub fn dense(n: usize, p: &PhysicalParams) -> Vec<Vec<f64>> {
    let h = 2.0 / n as f64;
    let nu = (2 * n + 1) * (2 * n + 1);
    let nt = (n + 1) * (n + 1);
    let (ot, of) = (2 * nu, 2 * nu + nt);
    let size = 2 * nu + nt + nu;
    let mut a = vec![vec![0.0; size]; size];
    let g = [0.5 - 0.15f64.sqrt(), 0.5, 0.5 + 0.15f64.sqrt()];
    let w = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    for cj in 0..n {
        for ci in 0..n {
            for (a_, &gx) in g.iter().enumerate() {
                for (b_, &gy) in g.iter().enumerate() {
                    let wt = w[a_] * w[b_] * h * h;
                    let bu = basis(2, n, h, ci, cj, [gx, gy]);
                    let bt = basis(1, n, h, ci, cj, [gx, gy]);
                    // vector basis: (node, comp, value, grad)
                    let vec_basis: Vec<(usize, usize, f64, [f64; 2])> = (0..2)
                        .flat_map(|c| bu.iter().map(move |&(nd, v, gr)| (c * nu + nd, c, v, gr)))
                        .collect();
                    let strain = |c: usize, gr: [f64; 2]| -> [f64; 3] {
                        if c == 0 {
                            [gr[0], 0.5 * gr[1], 0.0]
                        } else {
                            [0.0, 0.5 * gr[0], gr[1]]
                        }
                    };
                    for &(i, ci_, _, gi) in &vec_basis {
                        let ei = strain(ci_, gi);
                        for &(j, cj_, _, gj) in &vec_basis {
                            let ej = strain(cj_, gj);
                            a[i][j] += wt * p.mu * (ei[0] * ej[0] + 2.0 * ei[1] * ej[1] + ei[2] * ej[2]);
                        }
                        for &(tn, tv, _) in &bt {
                            let v = -wt * gi[ci_] * tv;
                            a[ot + tn][i] += v;
                            a[i][ot + tn] += v;
                        }
                    }
                    for &(ti, tvi, _) in &bt {
                        for &(tj, tvj, _) in &bt {
                            a[ot + ti][ot + tj] -= wt * tvi * tvj / p.lambda;
                        }
                        for &(fj, fvj, _) in &bu {
                            a[ot + ti][of + fj] += wt * tvi * fvj / p.lambda;
                            a[of + fj][ot + ti] += wt * tvi * fvj / p.lambda;
                        }
                    }
                    for &(fi, fvi, gi) in &bu {
                        for &(fj, fvj, gj) in &bu {
                            a[of + fi][of + fj] -= wt
                                * (p.conductivity * (gi[0] * gj[0] + gi[1] * gj[1]) + 2.0 * fvi * fvj / p.lambda);
                        }
                    }
                }
            }
        }
    }
    a
}
