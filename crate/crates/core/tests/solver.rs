mod common;

use common::shifted;
use cutbiot_core::solver::{self, Factorization, BACKWARD_ERROR_TOL};
use cutbiot_core::{assemble_system, make_case, CaseKind, PhysicalParams, StabilizationParams};

#[test]
fn manufactured_solve_meets_backward_error() {
    let d = shifted(16, 0.0);
    let case = make_case(CaseKind::Compressible, PhysicalParams::new(1.0, 1e8, 1e-8).unwrap()).unwrap();
    let sys = assemble_system(&d, &case.params, &StabilizationParams::default(), &case).unwrap();
    let (x, report) = solver::solve(&sys.matrix, &sys.rhs).unwrap();
    assert!(report.backward_error <= BACKWARD_ERROR_TOL);
    assert_eq!((report.n, report.nnz), (sys.matrix.nrows(), sys.matrix.nnz()));
    let scale = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(sys.residual_max(&x) <= 1e-9 * scale);
}

#[test]
fn stabilized_condition_is_stable_under_translation() {
    let case = make_case(CaseKind::Solenoidal, PhysicalParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
    let stab = StabilizationParams::default();
    let kappas: Vec<f64> = (0..16)
        .map(|i| {
            let d = shifted(32, 0.75 * i as f64 / 16.0);
            let sys = assemble_system(&d, &case.params, &stab, &case).unwrap();
            let fact = Factorization::new(&sys.matrix).unwrap();
            solver::estimate_condition(&sys.matrix, &fact, 100)
        })
        .collect();
    let max = kappas.iter().cloned().fold(0.0, f64::max);
    let min = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max / min <= 10.0, "{kappas:?}");
}
