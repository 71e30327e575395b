//! The `solve`, `convergence` and `sweep` pipelines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cutbiot_core::forms::assemble_system;
use cutbiot_core::solver::{self, Factorization};
use cutbiot_core::verification::{self, CaseRun};
use cutbiot_core::{
    eoc, error_norms, galerkin_residual, make_case, Discretization, Error, ErrorReport,
    ExactSolution, PhysicalParams, Point, StabilizationParams,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Options shared by every command.
#[derive(Clone, Debug)]
pub struct CommonOpts {
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub no_stab: bool,
    pub allow_fine: bool,
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.6e}")
}

fn fmt_rate(r: Option<Option<f64>>) -> String {
    match r {
        None => String::new(),
        Some(None) => "saturated".into(),
        Some(Some(v)) => fmt_f(v),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("summary serializes");
    s.push('\n');
    s
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--workers must be positive".into()).into()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Zero fields; error norms against it are norms of the discrete solution.
struct Zero;

impl ExactSolution for Zero {
    fn u(&self, _x: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn grad_u(&self, _x: Point) -> [Point; 2] {
        [[0.0; 2]; 2]
    }
    fn p_t(&self, _x: Point) -> f64 {
        0.0
    }
    fn grad_p_t(&self, _x: Point) -> Point {
        [0.0; 2]
    }
    fn p_f(&self, _x: Point) -> f64 {
        0.0
    }
    fn grad_p_f(&self, _x: Point) -> Point {
        [0.0; 2]
    }
}

#[derive(Debug, Serialize)]
pub struct ParamsOut {
    pub mu: f64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub conductivity: f64,
}

impl From<&PhysicalParams> for ParamsOut {
    fn from(p: &PhysicalParams) -> Self {
        ParamsOut {
            mu: p.mu,
            lambda: p.lambda,
            conductivity: p.conductivity,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CellCounts {
    pub active: usize,
    pub cut: usize,
    pub interior: usize,
}

#[derive(Debug, Serialize)]
pub struct DofCounts {
    pub u: usize,
    pub p_t: usize,
    pub p_f: usize,
    pub total: usize,
}

#[derive(Debug, Serialize)]
pub struct SolutionNorms {
    pub u_l2: f64,
    pub p_t_l2: f64,
    pub p_f_l2: f64,
}

#[derive(Debug, Serialize)]
pub struct ErrorsOut {
    pub u_energy: f64,
    pub u_star: f64,
    pub u_l2: f64,
    pub p_t_l2: f64,
    pub p_t_star: f64,
    pub p_f_energy: f64,
    pub p_f_star: f64,
    pub p_f_l2: f64,
}

impl From<&ErrorReport> for ErrorsOut {
    fn from(e: &ErrorReport) -> Self {
        ErrorsOut {
            u_energy: e.u_energy,
            u_star: e.u_star,
            u_l2: e.u_l2,
            p_t_l2: e.pt_l2,
            p_t_star: e.pt_star,
            p_f_energy: e.pf_energy,
            p_f_star: e.pf_star,
            p_f_l2: e.pf_l2,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub status: &'static str,
    pub n: usize,
    pub h: f64,
    pub case: String,
    pub params: ParamsOut,
    pub stabilized: bool,
    pub cells: CellCounts,
    pub dofs: DofCounts,
    pub nnz: usize,
    pub backward_error: f64,
    pub galerkin_residual: f64,
    pub kappa: Option<f64>,
    pub solution_norms: SolutionNorms,
    pub errors: ErrorsOut,
}

pub fn cmd_solve(cfg: &RunConfig, opts: &CommonOpts) -> Result<SolveSummary, CliError> {
    solver::set_deterministic();
    let params = cfg.physical()?;
    let case = make_case(cfg.case_kind()?, params)?;
    let stab = cfg.stabilization(opts.no_stab);
    let mesh = cfg.mesh_config(cfg.mesh.n, cfg.mesh.shift, opts.allow_fine)?;
    let domain = cfg.domain()?;
    let out = &opts.out;

    let (summary, points) = with_pool(opts.workers, || -> Result<_, CliError> {
        let disc = Discretization::new(&mesh, domain, cfg.options())?;
        let system = assemble_system(&disc, &params, &stab, &case)?;
        if cfg.solve.matrix {
            fs::create_dir_all(out)?;
            let file = std::io::BufWriter::new(fs::File::create(out.join("matrix.mtx"))?);
            system.matrix.write_matrix_market(file)?;
        }
        let fact = Factorization::new(&system.matrix)?;
        let (x, report) = solver::solve_factored(&system.matrix, &fact, &system.rhs)?;
        let kappa = cfg
            .solve
            .condition
            .then(|| solver::estimate_condition(&system.matrix, &fact, cfg.sweep.condition_iters));
        let rules = disc.error_rules()?;
        let errors = error_norms(&disc, &rules, &x, &case, &params, &stab)?;
        let norms = error_norms(&disc, &rules, &x, &Zero, &params, &stab)?;

        if cfg.solve.boundary {
            let mut buf = Vec::new();
            disc.rules.write_boundary_csv(&mut buf)?;
            write_file(out, "boundary.csv", &String::from_utf8_lossy(&buf))?;
        }
        if cfg.solve.classification {
            let mut buf = Vec::new();
            disc.active.write_classification(&mut buf)?;
            write_file(out, "cells.csv", &String::from_utf8_lossy(&buf))?;
        }
        let points = cfg.solve.points.then(|| point_cloud(&disc, &x));
        let summary = SolveSummary {
            status: "ok",
            n: disc.mesh.n(),
            h: disc.h(),
            case: case.kind.as_str().to_string(),
            params: (&params).into(),
            stabilized: stab.enabled,
            cells: CellCounts {
                active: disc.active.active().len(),
                cut: disc.active.cut().len(),
                interior: disc.active.interior().len(),
            },
            dofs: DofCounts {
                u: disc.layout.u().len(),
                p_t: disc.layout.n_t,
                p_f: disc.layout.n_f,
                total: disc.layout.total(),
            },
            nnz: system.matrix.nnz(),
            backward_error: report.backward_error,
            galerkin_residual: galerkin_residual(&system, &x),
            kappa,
            solution_norms: SolutionNorms {
                u_l2: norms.u_l2,
                p_t_l2: norms.pt_l2,
                p_f_l2: norms.pf_l2,
            },
            errors: (&errors).into(),
        };
        Ok((summary, points))
    })??;

    if let Some(p) = points {
        write_file(out, "points.csv", &p)?;
    }
    write_file(out, "summary.json", &to_json(&summary))?;
    Ok(summary)
}

/// `x,y,ux,uy,pT,pF` at the centers of active cells whose center lies in
/// the domain, in cell order.
fn point_cloud(disc: &Discretization, x: &[f64]) -> String {
    let (xu, xt, xf) = (&x[disc.layout.u()], &x[disc.layout.t()], &x[disc.layout.f()]);
    let mut s = String::from("x,y,ux,uy,pT,pF\n");
    let mut scratch = Default::default();
    for &cell in disc.active.active() {
        let c = disc.mesh.cell_center(cell);
        if !disc.domain.contains(c) {
            continue;
        }
        let u = disc.u.evaluate(xu, cell, c, &mut scratch);
        let t = disc.t.evaluate(xt, cell, c, &mut scratch);
        let f = disc.f.evaluate(xf, cell, c, &mut scratch);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f(c[0]),
            fmt_f(c[1]),
            fmt_f(u.value[0]),
            fmt_f(u.value[1]),
            fmt_f(t.value[0]),
            fmt_f(f.value[0])
        );
    }
    s
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub lambda: f64,
    pub conductivity: f64,
    pub errors: ErrorReport,
}

pub const CONVERGENCE_HEADER: &str = "N,h,lambda,K,err_u_star,err_u_L2,err_pT_star,err_pF_star,err_pF_L2,eoc_u_star,eoc_u_L2,eoc_pT_star,eoc_pF_star,eoc_pF_L2";

/// The five error measures reported per level, in CSV order.
pub fn convergence_measures(e: &ErrorReport) -> [f64; 5] {
    [e.u_star, e.u_l2, e.pt_star, e.pf_star, e.pf_l2]
}

#[derive(Debug, Serialize)]
pub struct ComboRates {
    pub lambda: f64,
    #[serde(rename = "K")]
    pub conductivity: f64,
    /// Final-step rates in the order u_star, u_L2, pT_star, pF_star, pF_L2.
    pub final_eoc: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceSummary {
    pub status: &'static str,
    pub ladder: Vec<usize>,
    pub case: String,
    pub stabilized: bool,
    pub combinations: Vec<ComboRates>,
}

pub fn cmd_convergence(
    cfg: &RunConfig,
    opts: &CommonOpts,
) -> Result<(Vec<ConvergenceRow>, ConvergenceSummary), CliError> {
    solver::set_deterministic();
    let ladder = cfg.mesh.ladder.clone();
    if ladder.len() < 3 {
        return Err(Error::Config(format!(
            "the convergence ladder needs at least 3 levels, got {}",
            ladder.len()
        ))
        .into());
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("the convergence ladder must be strictly increasing".into()).into());
    }
    if cfg.convergence.combinations.is_empty() {
        return Err(Error::Config("no (lambda, K) combinations given".into()).into());
    }
    let kind = cfg.case_kind()?;
    let stab = cfg.stabilization(opts.no_stab);
    let meshes = ladder
        .iter()
        .map(|&n| cfg.mesh_config(n, cfg.mesh.shift, opts.allow_fine))
        .collect::<Result<Vec<_>, _>>()?;
    let domain = cfg.domain()?;
    let mut jobs = Vec::new();
    for &[lambda, k] in &cfg.convergence.combinations {
        let case = make_case(kind, PhysicalParams::new(cfg.params.mu, lambda, k)?)?;
        for mesh in &meshes {
            jobs.push((case, *mesh));
        }
    }

    let results = with_pool(opts.workers, || {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|(case, mesh)| -> Result<ConvergenceRow, Error> {
                let disc = Discretization::new(mesh, domain.clone(), cfg.options())?;
                let run = verification::solve_manufactured(&disc, case, &stab, None)?;
                log::info!(
                    "N={} lambda={:e} K={:e}: u*={:.3e}",
                    mesh.n,
                    case.params.lambda,
                    case.params.conductivity,
                    run.errors.u_star
                );
                Ok(ConvergenceRow {
                    n: mesh.n,
                    h: disc.h(),
                    lambda: case.params.lambda,
                    conductivity: case.params.conductivity,
                    errors: run.errors,
                })
            })
            .collect::<Vec<_>>()
    })?;
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.conductivity.total_cmp(&b.conductivity))
            .then(a.n.cmp(&b.n))
    });

    let mut csv = String::from(CONVERGENCE_HEADER);
    csv.push('\n');
    let mut combos = Vec::new();
    for group in rows.chunk_by(|a, b| a.lambda == b.lambda && a.conductivity == b.conductivity) {
        let rates: Vec<Vec<Option<f64>>> = (0..5)
            .map(|m| {
                let levels: Vec<(f64, f64)> = group
                    .iter()
                    .map(|r| (r.h, convergence_measures(&r.errors)[m]))
                    .collect();
                eoc(&levels)
            })
            .collect::<Result<_, _>>()?;
        for (i, r) in group.iter().enumerate() {
            let mut fields = vec![
                r.n.to_string(),
                fmt_f(r.h),
                fmt_f(r.lambda),
                fmt_f(r.conductivity),
            ];
            fields.extend(convergence_measures(&r.errors).iter().map(|&v| fmt_f(v)));
            fields.extend((0..5).map(|m| fmt_rate(i.checked_sub(1).map(|j| rates[m][j]))));
            csv.push_str(&fields.join(","));
            csv.push('\n');
        }
        combos.push(ComboRates {
            lambda: group[0].lambda,
            conductivity: group[0].conductivity,
            final_eoc: rates.iter().map(|r| *r.last().unwrap()).collect(),
        });
    }
    let summary = ConvergenceSummary {
        status: "ok",
        ladder,
        case: kind.as_str().to_string(),
        stabilized: stab.enabled,
        combinations: combos,
    };
    write_file(&opts.out, "convergence.csv", &csv)?;
    write_file(&opts.out, "convergence.json", &to_json(&summary))?;
    Ok((rows, summary))
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub delta: f64,
    pub stabilized: bool,
    /// `None` when the discretization or the solve failed.
    pub run: Option<SweepRun>,
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepRun {
    pub errors: ErrorReport,
    pub kappa: f64,
}

pub const SWEEP_HEADER: &str =
    "delta,stabilized,err_u_star,err_pT_star,err_pF_star,err_u_L2,kappa,solver_status";

#[derive(Debug, Serialize)]
pub struct ArmSummary {
    pub stabilized: bool,
    pub runs: usize,
    pub failures: usize,
    /// max/min over successful runs for u_star, pT_star, pF_star.
    pub error_ratios: [f64; 3],
    pub kappa_ratio: f64,
    pub median_errors: [f64; 3],
    pub median_kappa: f64,
    pub max_errors: [f64; 3],
    pub max_kappa: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub status: &'static str,
    pub n: usize,
    pub params: ParamsOut,
    pub arms: Vec<ArmSummary>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn ratio(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

pub fn cmd_sweep(cfg: &RunConfig, opts: &CommonOpts) -> Result<(Vec<SweepRow>, SweepSummary), CliError> {
    solver::set_deterministic();
    let deltas = cfg.sweep.delta_values();
    if deltas.is_empty() {
        return Err(Error::Config("the sweep has no shifts".into()).into());
    }
    let params = cfg.physical()?;
    let case = make_case(cfg.case_kind()?, params)?;
    let base = cfg.mesh_config(cfg.sweep.n, 0.0, opts.allow_fine)?;
    let domain = cfg.domain()?;
    let arms: Vec<bool> = if opts.no_stab || !cfg.stabilization.enabled {
        vec![false]
    } else {
        vec![true, false]
    };
    let jobs: Vec<(f64, bool)> = deltas
        .iter()
        .flat_map(|&d| arms.iter().map(move |&s| (d, s)))
        .collect();
    let iters = cfg.sweep.condition_iters;

    let mut rows = with_pool(opts.workers, || {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|&(delta, stabilized)| -> Result<SweepRow, Error> {
                let stab = StabilizationParams {
                    enabled: stabilized,
                    ..cfg.stabilization(false)
                };
                let mesh = cutbiot_core::mesh::translate_box(&base, delta);
                let outcome = Discretization::new(&mesh, domain.clone(), cfg.options())
                    .and_then(|disc| verification::solve_manufactured(&disc, &case, &stab, Some(iters)));
                match outcome {
                    Ok(CaseRun { errors, kappa, .. }) => Ok(SweepRow {
                        delta,
                        stabilized,
                        run: Some(SweepRun {
                            errors,
                            kappa: kappa.unwrap_or(f64::NAN),
                        }),
                        failure: None,
                    }),
                    Err(e @ (Error::Solver { .. } | Error::GeometryResolution { .. } | Error::GeometryConflict { .. })) => {
                        log::warn!("delta={delta:e} stabilized={stabilized}: {e}");
                        Ok(SweepRow {
                            delta,
                            stabilized,
                            run: None,
                            failure: Some(e.to_string()),
                        })
                    }
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    rows.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(b.stabilized.cmp(&a.stabilized)));

    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for r in &rows {
        let fields = match &r.run {
            Some(run) => {
                let e = &run.errors;
                [
                    fmt_f(e.u_star),
                    fmt_f(e.pt_star),
                    fmt_f(e.pf_star),
                    fmt_f(e.u_l2),
                    fmt_f(run.kappa),
                    "ok".to_string(),
                ]
                .join(",")
            }
            None => ",,,,,failed".to_string(),
        };
        let _ = writeln!(csv, "{},{},{}", fmt_f(r.delta), r.stabilized, fields);
    }

    let arm_summaries = arms
        .iter()
        .map(|&stabilized| {
            let runs: Vec<&SweepRun> = rows
                .iter()
                .filter(|r| r.stabilized == stabilized)
                .filter_map(|r| r.run.as_ref())
                .collect();
            let total = rows.iter().filter(|r| r.stabilized == stabilized).count();
            let series = |f: fn(&ErrorReport) -> f64| runs.iter().map(|r| f(&r.errors)).collect::<Vec<_>>();
            let errs = [series(|e| e.u_star), series(|e| e.pt_star), series(|e| e.pf_star)];
            let kappas: Vec<f64> = runs.iter().map(|r| r.kappa).collect();
            let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ArmSummary {
                stabilized,
                runs: total,
                failures: total - runs.len(),
                error_ratios: [ratio(&errs[0]), ratio(&errs[1]), ratio(&errs[2])],
                kappa_ratio: ratio(&kappas),
                median_errors: [
                    median(errs[0].clone()),
                    median(errs[1].clone()),
                    median(errs[2].clone()),
                ],
                median_kappa: median(kappas.clone()),
                max_errors: [max(&errs[0]), max(&errs[1]), max(&errs[2])],
                max_kappa: max(&kappas),
            }
        })
        .collect();
    let summary = SweepSummary {
        status: "ok",
        n: cfg.sweep.n,
        params: (&params).into(),
        arms: arm_summaries,
    };
    write_file(&opts.out, "sweep.csv", &csv)?;
    write_file(&opts.out, "sweep.json", &to_json(&summary))?;
    Ok((rows, summary))
}
