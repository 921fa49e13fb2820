use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use kobalab::geodesics::construct_tangential_geodesic;
use kobalab::goldilocks::{classify_point, face_witness, improper_integral_verdict};
use kobalab::metric::{kappa_bounds, segment_upper};
use kobalab::{CPoint, CVector, Complex64, DistanceGrid, GridSpec, Slice};
use kobalab_bench::{above, exp_power, mollified};

fn metric(c: &mut Criterion) {
    let oracle = exp_power(1.0);
    let z = above(&oracle, 0.2, 1e-3);
    let v = CVector::new(0.6, 0.3, -0.2, 0.7);
    c.bench_function("directional_distance", |b| {
        b.iter(|| oracle.directional_distance(black_box(&z), black_box(&v)))
    });
    c.bench_function("kappa_bounds", |b| {
        b.iter(|| kappa_bounds(&oracle, black_box(&z), black_box(&v)))
    });
    let w = above(&oracle, 0.25, 1e-6);
    c.bench_function("segment_upper", |b| {
        b.iter(|| segment_upper(&oracle, black_box(&z), black_box(&w)))
    });
    let spec = GridSpec::with_spacing(
        Slice::TangentialNormal { re1: 0.0, im2: 0.0 },
        (-0.5, 1.5),
        (1e-10, 4.0),
        0.2,
    );
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    group.bench_function("build_spacing_0.2", |b| {
        b.iter(|| DistanceGrid::build(&oracle, spec))
    });
    group.finish();
}

fn geodesics(c: &mut Criterion) {
    let oracle = exp_power(1.0);
    let dir = CVector::new(1.0, 0.0, 0.0, 0.0).mul(Complex64::i());
    let mut group = c.benchmark_group("geodesics");
    group.sample_size(10);
    group.bench_function("tangential_f0_1e-6", |b| {
        b.iter(|| construct_tangential_geodesic(&oracle, 1.0, black_box(1e-6), &dir, 1.0))
    });
    group.finish();
}

fn goldilocks(c: &mut Criterion) {
    c.bench_function("integral_verdict_log_square", |b| {
        b.iter(|| improper_integral_verdict(|x| Ok(1.0 / (x * x.ln().powi(2))), black_box(0.1)))
    });
    let deep = mollified(22);
    let x = 0.75 * 2f64.powi(-20);
    let p = CPoint::real(x, deep.profile().eval(x));
    let face = CVector::new(1.0, 0.0, 0.0, 0.0);
    c.bench_function("face_witness_chord_20", |b| {
        b.iter(|| face_witness(&deep, black_box(&p), &face))
    });
    let oracle = exp_power(0.5);
    let mut group = c.benchmark_group("classify");
    group.sample_size(10);
    group.bench_function("classify_sqrt_origin", |b| {
        b.iter(|| classify_point(&oracle, black_box(&CPoint::real(0.0, 0.0))))
    });
    group.finish();
}

criterion_group!(benches, metric, geodesics, goldilocks);
criterion_main!(benches);
