use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qtomo_bench::Fixture;
use qtomo_core::{rgd, PauliLabel};

fn bench_pauli_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("pauli_apply");
    for k in [6usize, 10, 14] {
        let label: PauliLabel = "XYZ".repeat(k).chars().take(k).collect::<String>().parse().unwrap();
        let p = label.compile();
        let v = nalgebra::DVector::from_element(1 << k, qtomo_core::C64::new(1.0, 0.5));
        group.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, _| b.iter(|| p.apply(black_box(&v)).unwrap()));
    }
    group.finish();
}

fn bench_sensing(c: &mut Criterion) {
    let mut group = c.benchmark_group("sensing");
    for (k, m) in [(6usize, 819usize), (8, 1638)] {
        let f = Fixture::ghz(k, m, 8192, 1).unwrap();
        group.bench_function(BenchmarkId::new("forward", k), |b| {
            b.iter(|| f.ensemble.forward(black_box(&f.x0)).unwrap())
        });
        group.bench_function(BenchmarkId::new("adjoint", k), |b| {
            b.iter(|| f.ensemble.adjoint(black_box(&f.y)).unwrap())
        });
    }
    group.finish();
}

fn bench_rgd(c: &mut Criterion) {
    let mut group = c.benchmark_group("rgd");
    for (k, m) in [(6usize, 819usize), (8, 1638)] {
        let f = Fixture::ghz(k, m, 8192, 2).unwrap();
        let ptg = f.tangent().unwrap();
        group.bench_function(BenchmarkId::new("retract", k), |b| {
            b.iter(|| rgd::retract(black_box(&f.x0), &ptg, 0.9, 1).unwrap())
        });
        group.bench_function(BenchmarkId::new("iteration", k), |b| b.iter(|| f.step().unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_pauli_apply, bench_sensing, bench_rgd);
criterion_main!(benches);
