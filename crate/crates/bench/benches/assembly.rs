use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fvem::assembly::CoefficientField;
use fvem::{CgOptions, Discretization};
use fvem_bench::{almost_symmetric, phi11, stripes, symmetric, LEVELS};

fn mesh_generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate");
    for n in LEVELS {
        group.bench_with_input(BenchmarkId::new("symmetric", n), &n, |b, &n| b.iter(|| symmetric(black_box(n))));
        group.bench_with_input(BenchmarkId::new("almost-symmetric", n), &n, |b, &n| {
            b.iter(|| almost_symmetric(black_box(n)))
        });
        group.bench_with_input(BenchmarkId::new("stripes", n), &n, |b, &n| b.iter(|| stripes(black_box(n))));
    }
    group.finish();
}

fn discretization(c: &mut Criterion) {
    let mut group = c.benchmark_group("discretize");
    for n in LEVELS {
        let mesh = symmetric(n);
        group.bench_with_input(BenchmarkId::new("laplacian", n), &mesh, |b, mesh| {
            b.iter(|| Discretization::laplacian(mesh).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("smooth-coefficients", n), &mesh, |b, mesh| {
            b.iter(|| Discretization::general(mesh, CoefficientField::smooth_variable()).unwrap())
        });
    }
    group.finish();
}

fn stiffness_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("qh-apply");
    for n in LEVELS {
        let mesh = symmetric(n);
        let disc = Discretization::laplacian(&mesh).unwrap().with_cg(CgOptions::default());
        let v = phi11(&disc);
        group.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| b.iter(|| disc.qh_apply(v).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, mesh_generation, discretization, stiffness_solve);
criterion_main!(benches);
