use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use cutbiot_bench::{case, discretization, domain};
use cutbiot_core::mesh::{classify, BackgroundMesh};
use cutbiot_core::solver::{self, Factorization};
use cutbiot_core::{assemble_system, CutRule, CutSettings, MeshConfig, StabilizationParams};

fn cut_rules(c: &mut Criterion) {
    let mut g = c.benchmark_group("cut_rules");
    for n in [32, 64] {
        let mesh = BackgroundMesh::new(&MeshConfig::unit_box(n)).unwrap();
        let dom = domain();
        let active = classify(&mesh, &dom, 8).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| CutRule::build(black_box(&active), &dom, CutSettings::default()).unwrap())
        });
    }
    g.finish();
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    let case = case();
    let stab = StabilizationParams::default();
    for n in [32, 64] {
        let disc = discretization(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| assemble_system(black_box(&disc), &case.params, &stab, &case).unwrap())
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    solver::set_deterministic();
    let mut g = c.benchmark_group("factor_and_solve");
    g.sample_size(10);
    let case = case();
    for n in [32, 64] {
        let disc = discretization(n);
        let sys = assemble_system(&disc, &case.params, &StabilizationParams::default(), &case).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let fact = Factorization::new(black_box(&sys.matrix)).unwrap();
                solver::solve_factored(&sys.matrix, &fact, &sys.rhs).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, cut_rules, assembly, solve);
criterion_main!(benches);
