use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sympidx::geodesics::{shoot_geodesics, ShootingOptions};
use sympidx::indexform::{assemble_index_form, verify_index_theorem, IndexOptions};
use sympidx::maslov::{maslov_index, MaslovOptions};
use sympidx::sds::{integrate_fundamental, InitialData};
use sympidx_bench::{lorentz_case, sphere_case};

fn fundamental(c: &mut Criterion) {
    let (x, _) = lorentz_case();
    c.bench_function("integrate_fundamental/2000", |b| {
        b.iter(|| integrate_fundamental(black_box(&x), 2000, 1e-8).unwrap())
    });
}

fn maslov(c: &mut Criterion) {
    let (x, _) = lorentz_case();
    let l0 = InitialData::l0(2);
    let opts = MaslovOptions::default();
    c.bench_function("maslov_index/lorentz", |b| b.iter(|| maslov_index(black_box(&x), &l0, &opts).unwrap()));
}

fn index_form(c: &mut Criterion) {
    let (x, frame) = lorentz_case();
    let l0 = InitialData::l0(2);
    let mut g = c.benchmark_group("index_form");
    for n in [100, 200, 400] {
        g.bench_function(format!("assemble/{n}"), |b| b.iter(|| assemble_index_form(black_box(&x), &l0, n, 3).unwrap()));
    }
    g.sample_size(10);
    g.bench_function("verify/100-200-400", |b| {
        b.iter(|| verify_index_theorem(black_box(&x), &l0, &frame, &[100, 200, 400], &IndexOptions::default()).unwrap())
    });
    g.finish();
}

fn shooting(c: &mut Criterion) {
    let case = sphere_case();
    let opts = ShootingOptions { grid: vec![16, 3, 1], bound: 4.0 * PI, ..Default::default() };
    let mut g = c.benchmark_group("shooting");
    g.sample_size(10);
    g.bench_function("stationary_sphere", |b| {
        b.iter(|| shoot_geodesics(case.manifold.clone(), &case.p, &case.q, (0.0, 1.0), &case.fields, &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, fundamental, maslov, index_form, shooting);
criterion_main!(benches);
