use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use polychain::{discriminant, grid, laurent, polyfit, roots, ChainSpec, Circle, Form, RadiusProfile};

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bench_laurent(c: &mut Criterion) {
    let f = |z: Complex64| z.conj() * z.conj() + z.exp();
    let circle = Circle::new(cx(0.2, -0.1), 0.7, 0.5);
    c.bench_function("analyze_circle n=1024 K=256", |b| {
        b.iter(|| laurent::analyze_circle(&f, black_box(&circle), 1024, 256).unwrap())
    });
}

fn bench_aberth(c: &mut Criterion) {
    // Degree-40 polynomial with a cluster near the unit circle.
    let p: Vec<Complex64> = (0..=40).map(|k| cx(((k * 7) % 11) as f64 - 5.0, ((k * 3) % 5) as f64 - 2.0)).collect();
    c.bench_function("aberth deg 40", |b| b.iter(|| roots::aberth(black_box(&p))));
}

fn bench_discriminant(c: &mut Criterion) {
    let chain = ChainSpec::hyperbolic(cx(0.3, 0.0), cx(-0.4, 0.2), RadiusProfile::Default).unwrap();
    let ts = grid::interior(2048);
    c.bench_function("discriminant_set 2048", |b| b.iter(|| discriminant::discriminant_set(&chain, black_box(&ts))));
}

fn bench_fit(c: &mut Criterion) {
    let f = |z: Complex64| z.conj() * z.sin() + z * z;
    let samples = polyfit::sample_annulus(&f, 2000, 0.2, 0.9);
    c.bench_function("fit nu=2 deg=12", |b| b.iter(|| polyfit::fit(black_box(&samples), 2, 12, Form::Euclidean).unwrap()));
}

criterion_group!(benches, bench_laurent, bench_aberth, bench_discriminant, bench_fit);
criterion_main!(benches);
