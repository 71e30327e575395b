//! Bilinear and linear forms of the three-field total-pressure formulation
//! with Nitsche boundary terms and facet ghost penalties.
//!
//! Blocks are assembled separately so individual terms can be inspected.
//! The saddle-point system has the block structure
//!
//! ```text
//! [ A1 + G1      B1^T           0                 ] [u  ]
//! [ B1         -(A2 + G2)       B2                ] [p_T]
//! [ 0            B2^T     -(A3^1 + A3^2 + G3)     ] [p_F]
//! ```

use rayon::prelude::*;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPart, CutRule, Point};
use crate::mesh::ActiveMesh;
use crate::quadrature;
use crate::sparse::{SparseMatrix, Triplet};
use crate::spaces::{BasisEval, FeSpace, FieldLayout};

/// Material parameters. The Biot-Willis coefficient is 1, the storage
/// coefficient `1 / lambda` and the time step 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalParams {
    pub mu: f64,
    pub lambda: f64,
    /// Hydraulic conductivity `K`.
    pub conductivity: f64,
}

impl PhysicalParams {
    pub fn new(mu: f64, lambda: f64, conductivity: f64) -> Result<Self> {
        let p = PhysicalParams {
            mu,
            lambda,
            conductivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Parameter(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.conductivity >= 0.0 && self.conductivity.is_finite()) {
            return Err(Error::Parameter(format!(
                "conductivity must be non-negative, got {}",
                self.conductivity
            )));
        }
        Ok(())
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            mu: 1.0,
            lambda: 1.0,
            conductivity: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizationParams {
    /// Nitsche penalty for the displacement on the Dirichlet boundary.
    pub gamma_u: f64,
    /// Nitsche penalty for the fluid pressure on the stress boundary.
    pub gamma_p: f64,
    /// Ghost-penalty factor for the displacement and fluid-pressure penalties.
    pub gamma_ghost: f64,
    /// Ghost-penalty factor for the total-pressure penalty.
    pub gamma_ghost_pressure: f64,
    /// Highest normal-derivative order in the facet penalty. Each field uses
    /// `min(ghost_order, degree)`.
    pub ghost_order: usize,
    pub enabled: bool,
}

impl Default for StabilizationParams {
    fn default() -> Self {
        StabilizationParams {
            gamma_u: 40.0,
            gamma_p: 40.0,
            gamma_ghost: 0.1,
            gamma_ghost_pressure: 0.01,
            ghost_order: 2,
            enabled: true,
        }
    }
}

/// Volume and boundary data of the problem. Boundary callbacks receive the
/// outward unit normal.
pub trait BoundaryData: Sync {
    fn body_force(&self, x: Point) -> [f64; 2];
    fn source(&self, x: Point) -> f64;
    /// `u_D` on the Dirichlet boundary.
    fn displacement(&self, x: Point) -> [f64; 2];
    /// `g_N = K dp_F/dn` on the Dirichlet boundary.
    fn normal_flux(&self, x: Point, n: Point) -> f64;
    /// `sigma_N` on the stress boundary.
    fn traction(&self, x: Point, n: Point) -> [f64; 2];
    /// `p_F,D` on the stress boundary.
    fn fluid_pressure(&self, x: Point) -> f64;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroData;

impl BoundaryData for ZeroData {
    fn body_force(&self, _x: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn source(&self, _x: Point) -> f64 {
        0.0
    }
    fn displacement(&self, _x: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn normal_flux(&self, _x: Point, _n: Point) -> f64 {
        0.0
    }
    fn traction(&self, _x: Point, _n: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn fluid_pressure(&self, _x: Point) -> f64 {
        0.0
    }
}

#[derive(Default)]
struct Scratch {
    a: BasisEval,
    b: BasisEval,
    da: Vec<f64>,
    db: Vec<f64>,
}

fn check_rules(space: &FeSpace, rules: &CutRule) -> Result<()> {
    if space.n_cells() != rules.len() {
        return Err(Error::Layout(format!(
            "space has {} cells but the quadrature covers {}",
            space.n_cells(),
            rules.len()
        )));
    }
    Ok(())
}

fn check_pair(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if a.active_cells() != b.active_cells() {
        return Err(Error::Layout("spaces live on different active meshes".into()));
    }
    Ok(())
}

/// Runs `local` for every active cell in parallel and merges the triplets in
/// cell order.
fn assemble_cells<F>(n_cells: usize, nrows: usize, ncols: usize, local: F) -> Result<SparseMatrix>
where
    F: Fn(usize, &mut Scratch, &mut Vec<Triplet>) -> Result<()> + Sync,
{
    let parts = (0..n_cells)
        .into_par_iter()
        .map_init(Scratch::default, |s, pos| {
            let mut out = Vec::new();
            local(pos, s, &mut out).map(|_| out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix::from_triplets(nrows, ncols, parts.concat()))
}

fn push_dense(out: &mut Vec<Triplet>, rows: &[usize], cols: &[usize], m: &[f64]) {
    let nc = cols.len();
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out.push(Triplet::new(r, c, m[i * nc + j]));
        }
    }
}

fn vector_dofs(space: &FeSpace, pos: usize) -> Vec<usize> {
    let nodes = space.cell_nodes(pos);
    (0..2)
        .flat_map(|c| nodes.iter().map(move |&n| space.dof(c, n)))
        .collect()
}

/// Symmetric strain `[e11, e12, e22]` of the vector basis function with
/// scalar gradient `g` in component `comp`.
fn strain(g: Point, comp: usize) -> [f64; 3] {
    if comp == 0 {
        [g[0], 0.5 * g[1], 0.0]
    } else {
        [0.0, 0.5 * g[0], g[1]]
    }
}

fn strain_dot_normal(e: [f64; 3], n: Point) -> [f64; 2] {
    [e[0] * n[0] + e[1] * n[1], e[1] * n[0] + e[2] * n[1]]
}

fn check_normal(n: Point) -> Result<()> {
    if n[0].is_finite() && n[1].is_finite() && (n[0].hypot(n[1]) - 1.0).abs() < 1e-8 {
        Ok(())
    } else {
        Err(Error::Assembly(format!("boundary point with invalid normal {n:?}")))
    }
}

/// `(mu eps(u), eps(v))_Omega` plus the symmetric Nitsche terms on the
/// Dirichlet boundary.
pub fn assemble_a1(
    u: &FeSpace,
    rules: &CutRule,
    params: &PhysicalParams,
    stab: &StabilizationParams,
) -> Result<SparseMatrix> {
    check_rules(u, rules)?;
    let mu = params.mu;
    let pen = stab.gamma_u / u.h() * mu;
    let nloc = u.local_size();
    let nl = 2 * nloc;
    assemble_cells(u.n_cells(), u.n_dofs(), u.n_dofs(), |pos, s, out| {
        let cell = u.active_cells()[pos];
        let rule = rules.cell(pos);
        let mut m = vec![0.0; nl * nl];
        let mut eps = vec![[0.0; 3]; nl];
        for q in &rule.volume {
            u.eval_basis(cell, q.x, &mut s.a);
            for c in 0..2 {
                for a in 0..nloc {
                    eps[c * nloc + a] = strain(s.a.grads[a], c);
                }
            }
            for i in 0..nl {
                let ei = eps[i];
                for j in 0..nl {
                    let ej = eps[j];
                    m[i * nl + j] += q.w * mu * (ei[0] * ej[0] + 2.0 * ei[1] * ej[1] + ei[2] * ej[2]);
                }
            }
        }
        for b in rule.boundary.iter().filter(|b| b.part == BoundaryPart::Dirichlet) {
            check_normal(b.normal)?;
            u.eval_basis(cell, b.x, &mut s.a);
            // traction eps(phi) n and value of each vector basis function
            let mut tr = vec![[0.0; 2]; nl];
            let mut val = vec![[0.0; 2]; nl];
            for c in 0..2 {
                for a in 0..nloc {
                    tr[c * nloc + a] = strain_dot_normal(strain(s.a.grads[a], c), b.normal);
                    val[c * nloc + a][c] = s.a.values[a];
                }
            }
            for i in 0..nl {
                for j in 0..nl {
                    let vi_tj = val[i][0] * tr[j][0] + val[i][1] * tr[j][1];
                    let vj_ti = val[j][0] * tr[i][0] + val[j][1] * tr[i][1];
                    let vi_vj = val[i][0] * val[j][0] + val[i][1] * val[j][1];
                    m[i * nl + j] += b.w * (-mu * vi_tj - mu * vj_ti + pen * vi_vj);
                }
            }
        }
        let dofs = vector_dofs(u, pos);
        push_dense(out, &dofs, &dofs, &m);
        Ok(())
    })
}

/// `b1(v, q) = -(div v, q)_Omega + (v.n, q)_Gamma_d`, rows `q`, columns `v`.
pub fn assemble_b1(u: &FeSpace, t: &FeSpace, rules: &CutRule) -> Result<SparseMatrix> {
    check_rules(u, rules)?;
    check_pair(u, t)?;
    let nu = u.local_size();
    let nt = t.local_size();
    let nl = 2 * nu;
    assemble_cells(u.n_cells(), t.n_dofs(), u.n_dofs(), |pos, s, out| {
        let cell = u.active_cells()[pos];
        let rule = rules.cell(pos);
        let mut m = vec![0.0; nt * nl];
        for q in &rule.volume {
            u.eval_basis(cell, q.x, &mut s.a);
            t.eval_basis(cell, q.x, &mut s.b);
            for i in 0..nt {
                let qi = s.b.values[i] * q.w;
                for c in 0..2 {
                    for a in 0..nu {
                        m[i * nl + c * nu + a] -= qi * s.a.grads[a][c];
                    }
                }
            }
        }
        for b in rule.boundary.iter().filter(|b| b.part == BoundaryPart::Dirichlet) {
            check_normal(b.normal)?;
            u.eval_basis(cell, b.x, &mut s.a);
            t.eval_basis(cell, b.x, &mut s.b);
            for i in 0..nt {
                let qi = s.b.values[i] * b.w;
                for c in 0..2 {
                    for a in 0..nu {
                        m[i * nl + c * nu + a] += qi * s.a.values[a] * b.normal[c];
                    }
                }
            }
        }
        push_dense(out, t.cell_nodes(pos), &vector_dofs(u, pos), &m);
        Ok(())
    })
}

/// `scale * (trial, test)_Omega`, rows from `test`, columns from `trial`.
fn mass(test: &FeSpace, trial: &FeSpace, rules: &CutRule, scale: f64) -> Result<SparseMatrix> {
    check_rules(test, rules)?;
    check_pair(test, trial)?;
    let nr = test.local_size();
    let nc = trial.local_size();
    assemble_cells(test.n_cells(), test.n_dofs(), trial.n_dofs(), |pos, s, out| {
        let cell = test.active_cells()[pos];
        let mut m = vec![0.0; nr * nc];
        for q in &rules.cell(pos).volume {
            test.eval_basis(cell, q.x, &mut s.a);
            trial.eval_basis(cell, q.x, &mut s.b);
            for i in 0..nr {
                let vi = s.a.values[i] * q.w * scale;
                for j in 0..nc {
                    m[i * nc + j] += vi * s.b.values[j];
                }
            }
        }
        push_dense(out, test.cell_nodes(pos), trial.cell_nodes(pos), &m);
        Ok(())
    })
}

/// `1/lambda (p_T, q_T)_Omega`
pub fn assemble_a2(t: &FeSpace, rules: &CutRule, params: &PhysicalParams) -> Result<SparseMatrix> {
    mass(t, t, rules, 1.0 / params.lambda)
}

/// `1/lambda (p_F, q_T)_Omega`, rows `q_T`, columns `p_F`.
pub fn assemble_b2(
    f: &FeSpace,
    t: &FeSpace,
    rules: &CutRule,
    params: &PhysicalParams,
) -> Result<SparseMatrix> {
    mass(t, f, rules, 1.0 / params.lambda)
}

/// The two parts of the fluid-pressure form.
#[derive(Clone, Debug)]
pub struct FluidBlocks {
    /// Diffusion with Nitsche terms on the stress boundary.
    pub diffusion: SparseMatrix,
    /// `2/lambda (p_F, q_F)_Omega`
    pub storage: SparseMatrix,
}

pub fn assemble_a3(
    f: &FeSpace,
    rules: &CutRule,
    params: &PhysicalParams,
    stab: &StabilizationParams,
) -> Result<FluidBlocks> {
    params.validate()?;
    check_rules(f, rules)?;
    let k = params.conductivity;
    let pen = stab.gamma_p / f.h() * k;
    let nl = f.local_size();
    let diffusion = assemble_cells(f.n_cells(), f.n_dofs(), f.n_dofs(), |pos, s, out| {
        let cell = f.active_cells()[pos];
        let rule = rules.cell(pos);
        let mut m = vec![0.0; nl * nl];
        for q in &rule.volume {
            f.eval_basis(cell, q.x, &mut s.a);
            for i in 0..nl {
                let gi = s.a.grads[i];
                for j in 0..nl {
                    let gj = s.a.grads[j];
                    m[i * nl + j] += q.w * k * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
            }
        }
        for b in rule.boundary.iter().filter(|b| b.part == BoundaryPart::Stress) {
            check_normal(b.normal)?;
            f.eval_basis(cell, b.x, &mut s.a);
            let n = b.normal;
            for i in 0..nl {
                let vi = s.a.values[i];
                let dni = s.a.grads[i][0] * n[0] + s.a.grads[i][1] * n[1];
                for j in 0..nl {
                    let vj = s.a.values[j];
                    let dnj = s.a.grads[j][0] * n[0] + s.a.grads[j][1] * n[1];
                    m[i * nl + j] += b.w * (-k * dnj * vi - k * vj * dni + pen * vi * vj);
                }
            }
        }
        push_dense(out, f.cell_nodes(pos), f.cell_nodes(pos), &m);
        Ok(())
    })?;
    let storage = mass(f, f, rules, 2.0 / params.lambda)?;
    Ok(FluidBlocks { diffusion, storage })
}

/// Facet ghost penalty
/// `scaling * sum_F sum_{j=1..order} gamma h^(2j-1) ([d_n^j v], [d_n^j w])_F`
/// over the ghost facets, applied componentwise for vector spaces. The
/// normal derivative uses the multinomial form `sum_|a|=j D^a v n^a / a!`.
pub fn assemble_ghost(
    space: &FeSpace,
    active: &ActiveMesh,
    scaling: f64,
    ghost_order: usize,
    gamma: f64,
) -> Result<SparseMatrix> {
    if ghost_order > space.degree() {
        return Err(Error::config(format!(
            "ghost order {ghost_order} exceeds the polynomial degree {} (higher jumps vanish)",
            space.degree()
        )));
    }
    let h = space.h();
    let nloc = space.local_size();
    let facets = active.ghost_facets();
    let facet_order = 2 * space.degree();
    let parts = facets
        .par_iter()
        .map_init(Scratch::default, |s, f| -> Result<Vec<Triplet>> {
            let (Some(pm), Some(pp)) = (space.position(f.minus), space.position(f.plus)) else {
                return Err(Error::Assembly("ghost facet with an inactive neighbor".into()));
            };
            let n = f.normal();
            let mut m = vec![0.0; 4 * nloc * nloc];
            let mut jump = vec![0.0; 2 * nloc];
            for (x, w) in quadrature::segment_rule(f.a, f.b, facet_order) {
                for j in 1..=ghost_order {
                    jump.iter_mut().for_each(|v| *v = 0.0);
                    for ax in 0..=j {
                        let ay = j - ax;
                        let coef = n[0].powi(ax as i32) * n[1].powi(ay as i32)
                            / (factorial(ax) * factorial(ay));
                        if coef == 0.0 {
                            continue;
                        }
                        space.eval_partial(f.minus, x, (ax, ay), &mut s.da);
                        space.eval_partial(f.plus, x, (ax, ay), &mut s.db);
                        for l in 0..nloc {
                            jump[l] -= coef * s.da[l];
                            jump[nloc + l] += coef * s.db[l];
                        }
                    }
                    let c = scaling * gamma * h.powi(2 * j as i32 - 1) * w;
                    for a in 0..2 * nloc {
                        for b in 0..2 * nloc {
                            m[a * 2 * nloc + b] += c * jump[a] * jump[b];
                        }
                    }
                }
            }
            let nodes: Vec<usize> = space
                .cell_nodes(pm)
                .iter()
                .chain(space.cell_nodes(pp))
                .copied()
                .collect();
            let mut out = Vec::with_capacity(space.ncomp() * m.len());
            for c in 0..space.ncomp() {
                let dofs: Vec<usize> = nodes.iter().map(|&nd| space.dof(c, nd)).collect();
                push_dense(&mut out, &dofs, &dofs, &m);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix::from_triplets(
        space.n_dofs(),
        space.n_dofs(),
        parts.concat(),
    ))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Right-hand sides `L1`, `L2`, `L3`, stacked per the field layout.
pub fn assemble_rhs(
    disc: &Discretization,
    params: &PhysicalParams,
    stab: &StabilizationParams,
    data: &dyn BoundaryData,
) -> Result<Vec<f64>> {
    let (u, t, f, rules) = (&disc.u, &disc.t, &disc.f, &disc.rules);
    check_rules(u, rules)?;
    check_pair(u, t)?;
    check_pair(u, f)?;
    let layout = disc.layout;
    let mu = params.mu;
    let k = params.conductivity;
    let pen_u = stab.gamma_u / u.h() * mu;
    let pen_p = stab.gamma_p / f.h() * k;
    let (nu, nt, nf) = (u.local_size(), t.local_size(), f.local_size());

    let locals = (0..u.n_cells())
        .into_par_iter()
        .map_init(
            || (BasisEval::default(), BasisEval::default(), BasisEval::default()),
            |(bu, bt, bf), pos| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
                let cell = u.active_cells()[pos];
                let rule = rules.cell(pos);
                let mut l1 = vec![0.0; 2 * nu];
                let mut l2 = vec![0.0; nt];
                let mut l3 = vec![0.0; nf];
                for q in &rule.volume {
                    u.eval_basis(cell, q.x, bu);
                    f.eval_basis(cell, q.x, bf);
                    let fx = data.body_force(q.x);
                    let g = data.source(q.x);
                    for a in 0..nu {
                        l1[a] += q.w * fx[0] * bu.values[a];
                        l1[nu + a] += q.w * fx[1] * bu.values[a];
                    }
                    for i in 0..nf {
                        l3[i] += q.w * g * bf.values[i];
                    }
                }
                for b in &rule.boundary {
                    check_normal(b.normal)?;
                    let n = b.normal;
                    u.eval_basis(cell, b.x, bu);
                    t.eval_basis(cell, b.x, bt);
                    f.eval_basis(cell, b.x, bf);
                    match b.part {
                        BoundaryPart::Dirichlet => {
                            let ud = data.displacement(b.x);
                            let gn = data.normal_flux(b.x, n);
                            for c in 0..2 {
                                for a in 0..nu {
                                    let tr = strain_dot_normal(strain(bu.grads[a], c), n);
                                    let val = bu.values[a];
                                    l1[c * nu + a] += b.w
                                        * (-mu * (ud[0] * tr[0] + ud[1] * tr[1]) + pen_u * ud[c] * val);
                                }
                            }
                            let udn = ud[0] * n[0] + ud[1] * n[1];
                            for i in 0..nt {
                                l2[i] += b.w * udn * bt.values[i];
                            }
                            for i in 0..nf {
                                l3[i] -= b.w * gn * bf.values[i];
                            }
                        }
                        BoundaryPart::Stress => {
                            let sn = data.traction(b.x, n);
                            let pd = data.fluid_pressure(b.x);
                            for c in 0..2 {
                                for a in 0..nu {
                                    l1[c * nu + a] += b.w * sn[c] * bu.values[a];
                                }
                            }
                            for i in 0..nf {
                                let dn = bf.grads[i][0] * n[0] + bf.grads[i][1] * n[1];
                                l3[i] += b.w * (pd * k * dn - pen_p * pd * bf.values[i]);
                            }
                        }
                    }
                }
                Ok((l1, l2, l3))
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let mut rhs = vec![0.0; layout.total()];
    let (ou, ot, of) = (layout.u().start, layout.t().start, layout.f().start);
    for (pos, (l1, l2, l3)) in locals.iter().enumerate() {
        for (i, d) in vector_dofs(u, pos).into_iter().enumerate() {
            rhs[ou + d] += l1[i];
        }
        for (i, &d) in t.cell_nodes(pos).iter().enumerate() {
            rhs[ot + d] += l2[i];
        }
        for (i, &d) in f.cell_nodes(pos).iter().enumerate() {
            rhs[of + d] += l3[i];
        }
    }
    Ok(rhs)
}

/// Every assembled form, kept separately.
#[derive(Clone, Debug)]
pub struct FormBlocks {
    pub a1: SparseMatrix,
    /// Rows total pressure, columns displacement.
    pub b1: SparseMatrix,
    pub a2: SparseMatrix,
    /// Rows total pressure, columns fluid pressure.
    pub b2: SparseMatrix,
    pub a3_1: SparseMatrix,
    pub a3_2: SparseMatrix,
    pub g1: SparseMatrix,
    pub g2: SparseMatrix,
    pub g3_1: SparseMatrix,
    pub g3_2: SparseMatrix,
}

impl FormBlocks {
    pub fn assemble(
        disc: &Discretization,
        params: &PhysicalParams,
        stab: &StabilizationParams,
    ) -> Result<Self> {
        params.validate()?;
        let (u, t, f, rules) = (&disc.u, &disc.t, &disc.f, &disc.rules);
        let a1 = assemble_a1(u, rules, params, stab)?;
        let b1 = assemble_b1(u, t, rules)?;
        let a2 = assemble_a2(t, rules, params)?;
        let b2 = assemble_b2(f, t, rules, params)?;
        let FluidBlocks { diffusion, storage } = assemble_a3(f, rules, params, stab)?;
        let (g1, g2, g3_1, g3_2) = if stab.enabled {
            let h = u.h();
            let order = |s: &FeSpace| stab.ghost_order.min(s.degree());
            let g1 = assemble_ghost(u, &disc.active, params.mu, order(u), stab.gamma_ghost)?;
            let g2 = assemble_ghost(t, &disc.active, h * h, order(t), stab.gamma_ghost_pressure)?;
            let gf = assemble_ghost(f, &disc.active, 1.0, order(f), stab.gamma_ghost)?;
            (
                g1,
                g2,
                gf.scaled(params.conductivity),
                gf.scaled(1.0 / params.lambda),
            )
        } else {
            (
                SparseMatrix::zeros(u.n_dofs(), u.n_dofs()),
                SparseMatrix::zeros(t.n_dofs(), t.n_dofs()),
                SparseMatrix::zeros(f.n_dofs(), f.n_dofs()),
                SparseMatrix::zeros(f.n_dofs(), f.n_dofs()),
            )
        };
        Ok(FormBlocks {
            a1,
            b1,
            a2,
            b2,
            a3_1: diffusion,
            a3_2: storage,
            g1,
            g2,
            g3_1,
            g3_2,
        })
    }

    /// Combines the blocks into the symmetric saddle-point matrix.
    pub fn system_matrix(&self, layout: &FieldLayout) -> Result<SparseMatrix> {
        let (ou, ot, of) = (layout.u().start, layout.t().start, layout.f().start);
        let nu = layout.u().len();
        let (nt, nf) = (layout.n_t, layout.n_f);
        let expect = |m: &SparseMatrix, r: usize, c: usize, name: &str| {
            if m.nrows() != r || m.ncols() != c {
                Err(Error::Layout(format!(
                    "block {name} is {}x{}, expected {r}x{c}",
                    m.nrows(),
                    m.ncols()
                )))
            } else {
                Ok(())
            }
        };
        expect(&self.a1, nu, nu, "a1")?;
        expect(&self.g1, nu, nu, "g1")?;
        expect(&self.b1, nt, nu, "b1")?;
        expect(&self.a2, nt, nt, "a2")?;
        expect(&self.g2, nt, nt, "g2")?;
        expect(&self.b2, nt, nf, "b2")?;
        for (m, name) in [
            (&self.a3_1, "a3_1"),
            (&self.a3_2, "a3_2"),
            (&self.g3_1, "g3_1"),
            (&self.g3_2, "g3_2"),
        ] {
            expect(m, nf, nf, name)?;
        }

        let mut trips = Vec::new();
        let mut put = |m: &SparseMatrix, r0: usize, c0: usize, s: f64, transpose: bool| {
            for t in m.iter() {
                let (r, c) = if transpose { (t.col, t.row) } else { (t.row, t.col) };
                trips.push(Triplet::new(r0 + r, c0 + c, s * t.val));
            }
        };
        put(&self.a1, ou, ou, 1.0, false);
        put(&self.g1, ou, ou, 1.0, false);
        put(&self.b1, ou, ot, 1.0, true);
        put(&self.b1, ot, ou, 1.0, false);
        put(&self.a2, ot, ot, -1.0, false);
        put(&self.g2, ot, ot, -1.0, false);
        put(&self.b2, ot, of, 1.0, false);
        put(&self.b2, of, ot, 1.0, true);
        for m in [&self.a3_1, &self.a3_2, &self.g3_1, &self.g3_2] {
            put(m, of, of, -1.0, false);
        }
        Ok(SparseMatrix::from_triplets(layout.total(), layout.total(), trips))
    }
}

/// Assembled saddle-point system.
#[derive(Clone, Debug)]
pub struct BlockSystem {
    pub layout: FieldLayout,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub blocks: FormBlocks,
}

pub fn assemble_system(
    disc: &Discretization,
    params: &PhysicalParams,
    stab: &StabilizationParams,
    data: &dyn BoundaryData,
) -> Result<BlockSystem> {
    let blocks = FormBlocks::assemble(disc, params, stab)?;
    let matrix = blocks.system_matrix(&disc.layout)?;
    let rhs = assemble_rhs(disc, params, stab, data)?;
    Ok(BlockSystem {
        layout: disc.layout,
        matrix,
        rhs,
        blocks,
    })
}

impl BlockSystem {
    /// `max |A x - b|`
    pub fn residual_max(&self, x: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x);
        ax.iter()
            .zip(&self.rhs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        (
            &x[self.layout.u()],
            &x[self.layout.t()],
            &x[self.layout.f()],
        )
    }
}
