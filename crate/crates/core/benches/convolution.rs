use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use heatlab_core::convolve::{direct, fft, kernel_taps};
use heatlab_core::grid::{make_grid, sample, Diffusivity};
use heatlab_core::par::{current_threads, with_thread_cap};
use heatlab_core::Solver;
use std::hint::black_box;

fn bump(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (-r2).exp()
}

fn direct_vs_fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("convolve_1d");
    for n in [256usize, 1024, 4096] {
        let g = make_grid(1, 20.0, n).unwrap();
        let u = sample(&g, bump, 0.0, Diffusivity::Unit).unwrap();
        let taps = kernel_taps(&g, 1.0, Diffusivity::Unit);
        group.bench_with_input(BenchmarkId::new("direct", n), &n, |b, _| {
            b.iter(|| direct(&g, black_box(u.values()), &taps))
        });
        group.bench_with_input(BenchmarkId::new("fft", n), &n, |b, _| {
            b.iter(|| fft(&g, black_box(u.values()), &taps))
        });
    }
    group.finish();
}

fn parallel_vs_sequential(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve_2d");
    group.sample_size(20);
    let g = make_grid(2, 20.0, 512).unwrap();
    let u = sample(&g, bump, 0.0, Diffusivity::Unit).unwrap();
    let solver = Solver::new(g);
    // at least two workers so the parallel path is exercised on small hosts
    let many = current_threads().max(2);
    for threads in [1, many] {
        group.bench_with_input(BenchmarkId::new("threads", threads), &threads, |b, &k| {
            b.iter(|| with_thread_cap(k, || solver.evolve_field(black_box(&u), 1.0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, direct_vs_fft, parallel_vs_sequential);
criterion_main!(benches);
