//! Manufactured solutions, discretization error norms and convergence rates.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::forms::{assemble_system, BlockSystem, BoundaryData, PhysicalParams, StabilizationParams};
use crate::geometry::{BoundaryPart, CutRule, Point};
use crate::solver::{self, Factorization, SolveReport};
use crate::spaces::BasisEval;

/// Exact fields with first derivatives. `grad_u()[c]` is the gradient of
/// component `c`.
pub trait ExactSolution: Sync {
    fn u(&self, x: Point) -> [f64; 2];
    fn grad_u(&self, x: Point) -> [Point; 2];
    fn p_t(&self, x: Point) -> f64;
    fn grad_p_t(&self, x: Point) -> Point;
    fn p_f(&self, x: Point) -> f64;
    fn grad_p_f(&self, x: Point) -> Point;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    /// `u = (cos pi y, sin pi x)`, divergence free, so `p_T = p_F`.
    Solenoidal,
    /// `u = (cos pi y + x^2, sin pi x)` with `div u = 2x`, so `p_T` depends
    /// on `lambda`.
    Compressible,
}

impl CaseKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "solenoidal" => Ok(CaseKind::Solenoidal),
            "compressible" => Ok(CaseKind::Compressible),
            other => Err(Error::Config(format!(
                "unknown manufactured case '{other}' (expected 'solenoidal' or 'compressible')"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CaseKind::Solenoidal => "solenoidal",
            CaseKind::Compressible => "compressible",
        }
    }
}

/// Manufactured solution with `p_F = sin(pi x) sin(pi y)` and
/// `p_T = p_F - lambda div u`. Forcing and boundary data are derived so the
/// exact fields solve the strong equations
///
/// ```text
/// -div(mu eps(u) - p_T I) = f
///  div u + p_T/lambda - p_F/lambda = 0
///  p_T/lambda - 2 p_F/lambda + K lap p_F = g
/// ```
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub params: PhysicalParams,
}

pub fn make_case(kind: CaseKind, params: PhysicalParams) -> Result<ManufacturedCase> {
    params.validate()?;
    Ok(ManufacturedCase { kind, params })
}

impl ManufacturedCase {
    fn quad(&self) -> f64 {
        match self.kind {
            CaseKind::Solenoidal => 0.0,
            CaseKind::Compressible => 1.0,
        }
    }

    pub fn div_u(&self, x: Point) -> f64 {
        2.0 * self.quad() * x[0]
    }

    pub fn grad_div_u(&self, _x: Point) -> Point {
        [2.0 * self.quad(), 0.0]
    }

    /// Componentwise Laplacian of `u`.
    pub fn lap_u(&self, x: Point) -> [f64; 2] {
        [
            2.0 * self.quad() - PI * PI * (PI * x[1]).cos(),
            -PI * PI * (PI * x[0]).sin(),
        ]
    }

    pub fn lap_p_f(&self, x: Point) -> f64 {
        -2.0 * PI * PI * self.p_f(x)
    }

    /// `mu eps(u) - p_T I` as `[s11, s12, s22]`.
    pub fn stress(&self, x: Point) -> [f64; 3] {
        let g = self.grad_u(x);
        let mu = self.params.mu;
        let pt = self.p_t(x);
        [
            mu * g[0][0] - pt,
            0.5 * mu * (g[0][1] + g[1][0]),
            mu * g[1][1] - pt,
        ]
    }
}

impl ExactSolution for ManufacturedCase {
    fn u(&self, x: Point) -> [f64; 2] {
        [(PI * x[1]).cos() + self.quad() * x[0] * x[0], (PI * x[0]).sin()]
    }

    fn grad_u(&self, x: Point) -> [Point; 2] {
        [
            [2.0 * self.quad() * x[0], -PI * (PI * x[1]).sin()],
            [PI * (PI * x[0]).cos(), 0.0],
        ]
    }

    fn p_t(&self, x: Point) -> f64 {
        self.p_f(x) - self.params.lambda * self.div_u(x)
    }

    fn grad_p_t(&self, x: Point) -> Point {
        let g = self.grad_p_f(x);
        let d = self.grad_div_u(x);
        let l = self.params.lambda;
        [g[0] - l * d[0], g[1] - l * d[1]]
    }

    fn p_f(&self, x: Point) -> f64 {
        (PI * x[0]).sin() * (PI * x[1]).sin()
    }

    fn grad_p_f(&self, x: Point) -> Point {
        [
            PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
            PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
        ]
    }
}

impl BoundaryData for ManufacturedCase {
    fn body_force(&self, x: Point) -> [f64; 2] {
        let mu = self.params.mu;
        let lap = self.lap_u(x);
        let gd = self.grad_div_u(x);
        let gp = self.grad_p_t(x);
        [
            -0.5 * mu * (lap[0] + gd[0]) + gp[0],
            -0.5 * mu * (lap[1] + gd[1]) + gp[1],
        ]
    }

    fn source(&self, x: Point) -> f64 {
        let p = &self.params;
        self.p_t(x) / p.lambda - 2.0 * self.p_f(x) / p.lambda + p.conductivity * self.lap_p_f(x)
    }

    fn displacement(&self, x: Point) -> [f64; 2] {
        self.u(x)
    }

    fn normal_flux(&self, x: Point, n: Point) -> f64 {
        let g = self.grad_p_f(x);
        self.params.conductivity * (g[0] * n[0] + g[1] * n[1])
    }

    fn traction(&self, x: Point, n: Point) -> [f64; 2] {
        let s = self.stress(x);
        [s[0] * n[0] + s[1] * n[1], s[1] * n[0] + s[2] * n[1]]
    }

    fn fluid_pressure(&self, x: Point) -> f64 {
        self.p_f(x)
    }
}

/// Errors in the discrete energy norms, their starred extensions and `L2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorReport {
    pub h: f64,
    pub u_energy: f64,
    pub u_star: f64,
    pub u_l2: f64,
    /// The total-pressure energy norm is the `L2` norm.
    pub pt_l2: f64,
    pub pt_star: f64,
    pub pf_energy: f64,
    pub pf_star: f64,
    pub pf_l2: f64,
}

/// Interpolates the exact fields into the global vector layout.
pub fn interpolate_exact(disc: &Discretization, exact: &dyn ExactSolution) -> Vec<f64> {
    let mut x = vec![0.0; disc.layout.total()];
    let u = disc.u.interpolate(|p, c| exact.u(p)[c]);
    let t = disc.t.interpolate(|p, _| exact.p_t(p));
    let f = disc.f.interpolate(|p, _| exact.p_f(p));
    x[disc.layout.u()].copy_from_slice(&u);
    x[disc.layout.t()].copy_from_slice(&t);
    x[disc.layout.f()].copy_from_slice(&f);
    x
}

const N_SUMS: usize = 11;

/// Error norms of the discrete solution `x` measured with `rules`, which
/// must live on the active cells of `disc`.
pub fn error_norms(
    disc: &Discretization,
    rules: &CutRule,
    x: &[f64],
    exact: &dyn ExactSolution,
    params: &PhysicalParams,
    stab: &StabilizationParams,
) -> Result<ErrorReport> {
    if rules.len() != disc.active.active().len() {
        return Err(Error::Layout(format!(
            "error quadrature covers {} cells, the discretization has {}",
            rules.len(),
            disc.active.active().len()
        )));
    }
    if x.len() != disc.layout.total() {
        return Err(Error::Layout(format!(
            "solution of length {} for {} unknowns",
            x.len(),
            disc.layout.total()
        )));
    }
    let (xu, xt, xf) = (&x[disc.layout.u()], &x[disc.layout.t()], &x[disc.layout.f()]);
    let cells = disc.active.active();
    let sums = (0..cells.len())
        .into_par_iter()
        .map_init(BasisEval::default, |s, pos| {
            let cell = cells[pos];
            let rule = rules.cell(pos);
            let mut acc = [0.0; N_SUMS];
            for q in &rule.volume {
                let uh = disc.u.evaluate(xu, cell, q.x, s);
                let th = disc.t.evaluate(xt, cell, q.x, s);
                let fh = disc.f.evaluate(xf, cell, q.x, s);
                let (ue, gu) = (exact.u(q.x), exact.grad_u(q.x));
                let g = sub2(gu, uh.grad);
                let e12 = 0.5 * (g[0][1] + g[1][0]);
                acc[0] += q.w * (g[0][0].powi(2) + 2.0 * e12 * e12 + g[1][1].powi(2));
                acc[1] += q.w * ((ue[0] - uh.value[0]).powi(2) + (ue[1] - uh.value[1]).powi(2));
                acc[2] += q.w * (exact.p_t(q.x) - th.value[0]).powi(2);
                let gf = exact.grad_p_f(q.x);
                acc[3] += q.w * ((gf[0] - fh.grad[0][0]).powi(2) + (gf[1] - fh.grad[0][1]).powi(2));
                acc[4] += q.w * (exact.p_f(q.x) - fh.value[0]).powi(2);
            }
            for b in &rule.boundary {
                let n = b.normal;
                match b.part {
                    BoundaryPart::Dirichlet => {
                        let uh = disc.u.evaluate(xu, cell, b.x, s);
                        let th = disc.t.evaluate(xt, cell, b.x, s);
                        let ue = exact.u(b.x);
                        let g = sub2(exact.grad_u(b.x), uh.grad);
                        acc[5] += b.w * ((ue[0] - uh.value[0]).powi(2) + (ue[1] - uh.value[1]).powi(2));
                        acc[6] += b.w * (dot(g[0], n).powi(2) + dot(g[1], n).powi(2));
                        acc[7] += b.w * (exact.p_t(b.x) - th.value[0]).powi(2);
                    }
                    BoundaryPart::Stress => {
                        let fh = disc.f.evaluate(xf, cell, b.x, s);
                        let gf = exact.grad_p_f(b.x);
                        acc[8] += b.w * (exact.p_f(b.x) - fh.value[0]).powi(2);
                        acc[9] += b.w * ((gf[0] - fh.grad[0][0]) * n[0] + (gf[1] - fh.grad[0][1]) * n[1]).powi(2);
                    }
                }
            }
            acc
        })
        .collect::<Vec<_>>();
    let mut t = [0.0; N_SUMS];
    for a in &sums {
        for (ti, ai) in t.iter_mut().zip(a) {
            *ti += ai;
        }
    }
    let h = disc.h();
    let (mu, k, lambda) = (params.mu, params.conductivity, params.lambda);
    let u_energy2 = mu * t[0] + stab.gamma_u * mu / h * t[5];
    let pf_energy2 = k * t[3] + stab.gamma_p * k / h * t[8] + t[4] / lambda;
    Ok(ErrorReport {
        h,
        u_energy: u_energy2.sqrt(),
        u_star: (u_energy2 + mu * h * t[6]).sqrt(),
        u_l2: t[1].sqrt(),
        pt_l2: t[2].sqrt(),
        pt_star: (t[2] + h * t[7]).sqrt(),
        pf_energy: pf_energy2.sqrt(),
        pf_star: (pf_energy2 + k * h * t[9]).sqrt(),
        pf_l2: t[4].sqrt(),
    })
}

fn sub2(a: [Point; 2], b: [Point; 2]) -> [Point; 2] {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Experimental orders of convergence between consecutive `(h, error)`
/// levels. `None` marks a saturated step where an error is zero.
pub fn eoc(levels: &[(f64, f64)]) -> Result<Vec<Option<f64>>> {
    if levels.len() < 2 {
        return Err(Error::config("at least two levels are needed for a convergence rate"));
    }
    if levels.windows(2).any(|w| !(w[1].0 < w[0].0) || w[1].0 <= 0.0) {
        return Err(Error::config("mesh sizes must be positive and strictly decreasing"));
    }
    Ok(levels
        .windows(2)
        .map(|w| {
            let ((h1, e1), (h2, e2)) = (w[0], w[1]);
            if e1 > 0.0 && e2 > 0.0 {
                Some((e1 / e2).ln() / (h1 / h2).ln())
            } else {
                None
            }
        })
        .collect())
}

/// `max |A x - b| / max |b|` (zero for a zero right-hand side and exact `x`).
pub fn galerkin_residual(system: &BlockSystem, x: &[f64]) -> f64 {
    let r = system.residual_max(x);
    let b = system.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if b == 0.0 {
        r
    } else {
        r / b
    }
}

/// Solution and diagnostics of one manufactured-solution run.
#[derive(Debug)]
pub struct CaseRun {
    pub solution: Vec<f64>,
    pub report: SolveReport,
    pub errors: ErrorReport,
    pub residual: f64,
    pub kappa: Option<f64>,
}

/// Assembles, solves and measures errors of `case` on `disc`. When
/// `condition_iters` is set, the spectral condition number is estimated too.
pub fn solve_manufactured(
    disc: &Discretization,
    case: &ManufacturedCase,
    stab: &StabilizationParams,
    condition_iters: Option<usize>,
) -> Result<CaseRun> {
    let system = assemble_system(disc, &case.params, stab, case)?;
    let fact = Factorization::new(&system.matrix)?;
    let (solution, report) = solver::solve_factored(&system.matrix, &fact, &system.rhs)?;
    let kappa = condition_iters.map(|it| solver::estimate_condition(&system.matrix, &fact, it));
    let rules = disc.error_rules()?;
    let errors = error_norms(disc, &rules, &solution, case, &case.params, stab)?;
    let residual = galerkin_residual(&system, &solution);
    Ok(CaseRun {
        solution,
        report,
        errors,
        residual,
        kappa,
    })
}
