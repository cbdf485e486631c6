use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lgifs::{corpus, Parametrization, Point, PseudoNorm};

fn psi(c: &mut Criterion) {
    let mut group = c.benchmark_group("psi");
    for name in corpus::EXAMPLES {
        let p = Parametrization::new(corpus::load(name)).unwrap();
        group.bench_function(name, |b| {
            let mut t = 0.0f64;
            b.iter(|| {
                t = (t + 0.618_033_988_749_895) % 1.0;
                black_box(p.psi(0, t, 1e-10).unwrap())
            })
        });
    }
    group.finish();
}

fn curve(c: &mut Criterion) {
    let p = Parametrization::new(corpus::load("dekking")).unwrap();
    c.bench_function("curve/dekking depth 4", |b| {
        b.iter(|| black_box(p.curve(0, 4).unwrap()))
    });
}

fn pseudo_norm(c: &mut Criterion) {
    let g = corpus::load("square");
    let norm = PseudoNorm::new(&g).unwrap();
    let x = Point::from_vec(vec![0.123, -4.56]);
    c.bench_function("pseudo_norm/square", |b| {
        b.iter(|| black_box(norm.eval(black_box(&x)).unwrap()))
    });
}

fn setup(c: &mut Criterion) {
    c.bench_function("setup/mcmullen", |b| {
        b.iter(|| black_box(Parametrization::new(corpus::load("mcmullen")).unwrap()))
    });
}

criterion_group!(benches, psi, curve, pseudo_norm, setup);
criterion_main!(benches);
