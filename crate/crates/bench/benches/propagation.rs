use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fvem::timestepping::{backward_euler, crank_nicolson};
use fvem::{Discretization, PropagationMethod, Propagator, PropagatorOptions, Storage, TimeGrid};
use fvem_bench::{phi11, symmetric};

const T: f64 = 0.1;

fn exact_propagation(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate");
    group.sample_size(10);
    for n in [16, 32] {
        let mesh = symmetric(n);
        let disc = Discretization::laplacian(&mesh).unwrap();
        let v = phi11(&disc);
        for method in [PropagationMethod::Eigen, PropagationMethod::Krylov, PropagationMethod::Substep] {
            let name = format!("{method:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(name, n), &v, |b, v| {
                b.iter(|| Propagator::new(&disc, PropagatorOptions::with_method(method)).propagate(v, T).unwrap())
            });
        }
    }
    group.finish();
}

fn time_stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    let mesh = symmetric(32);
    let disc = Discretization::laplacian(&mesh).unwrap();
    let v = phi11(&disc);
    for steps in [10, 40] {
        let grid = TimeGrid::new(T, steps).unwrap();
        group.bench_with_input(BenchmarkId::new("backward-euler", steps), &grid, |b, g| {
            b.iter(|| backward_euler(&disc, &v, g, Storage::FinalOnly).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("crank-nicolson", steps), &grid, |b, g| {
            b.iter(|| crank_nicolson(&disc, &v, g, 0, Storage::FinalOnly).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exact_propagation, time_stepping);
criterion_main!(benches);
