use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vqlab_core::functional_wiener::{build_product_quantizer, wiener_quadrature};
use vqlab_core::quantizer1d::{distortion1d, lloyd1d, LloydConfig};
use vqlab_core::quantizer_nd::{brute_nearest, train_nd, Method, TrainConfig};
use vqlab_core::Density;

fn lloyd(c: &mut Criterion) {
    let g = Density::std_normal();
    let mut group = c.benchmark_group("lloyd1d-normal");
    group.sample_size(10);
    for n in [16usize, 64, 256] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| lloyd1d(&g, n, 2.0, &LloydConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn distortion(c: &mut Criterion) {
    let g = Density::std_normal();
    let cb = lloyd1d(&g, 200, 2.0, &LloydConfig::default()).unwrap();
    c.bench_function("distortion1d-normal-200-s2.5", |b| b.iter(|| distortion1d(black_box(&cb), &g, 2.5).unwrap()));
}

fn nearest(c: &mut Criterion) {
    let g = Density::normal_nd(2, 1.0, 0.0).unwrap();
    let cfg = TrainConfig { seed: 1, budget: 64_000, ..TrainConfig::default() };
    let cb = train_nd(&g, 256, 2.0, Method::LloydMc, &cfg).unwrap();
    let xs = g.sample(2, 4096).unwrap();
    let mut group = c.benchmark_group("nearest-2d-256");
    group.bench_function("codebook", |b| {
        b.iter(|| xs.chunks_exact(2).map(|x| cb.nearest(x).unwrap().0).sum::<usize>())
    });
    group.bench_function("brute", |b| {
        b.iter(|| xs.chunks_exact(2).map(|x| brute_nearest(cb.points(), 2, x, cb.norm).0).sum::<usize>())
    });
    group.finish();
}

fn wiener(c: &mut Criterion) {
    let pq = build_product_quantizer(1.0, 1000, 0).unwrap();
    c.bench_function("wiener-quadrature-exp-integral-1000", |b| {
        b.iter(|| wiener_quadrature(black_box(&pq), 0, |p| p.integral().exp()).unwrap())
    });
}

criterion_group!(benches, lloyd, distortion, nearest, wiener);
criterion_main!(benches);
