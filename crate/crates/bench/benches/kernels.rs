use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use bandnodal::field::{build_mesh, evaluate_field, min_level, nodal_length, sample_field, POINTS_PER_WAVELENGTH};
use bandnodal::kacrice::{conditional_covariance, k_twopoint, norm_product_quadrature};
use bandnodal::kernel::{gamma_cd, gamma_exact};
use bandnodal::specfun::legendre_p;
use bandnodal::{BandWindow, KMethod};

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("gamma");
    for n in [100u32, 1000, 10000] {
        let win = BandWindow::new(n, 0.1).unwrap();
        let theta = 0.3;
        g.bench_with_input(BenchmarkId::new("exact_sum", n), &win, |b, w| b.iter(|| gamma_exact(w, black_box(theta)).unwrap()));
        g.bench_with_input(BenchmarkId::new("cd_form", n), &win, |b, w| b.iter(|| gamma_cd(w, black_box(theta)).unwrap()));
    }
    g.finish();
    c.bench_function("legendre_p/l=5000", |b| b.iter(|| legendre_p(5000, black_box(0.37)).unwrap()));
}

fn kacrice(c: &mut Criterion) {
    let win = BandWindow::new(500, 0.05).unwrap();
    let m = conditional_covariance(&win, win.theta_of(7.0)).unwrap().moments();
    c.bench_function("norm_product_quadrature", |b| b.iter(|| norm_product_quadrature(black_box(&m)).unwrap()));
    c.bench_function("k_twopoint/series", |b| b.iter(|| k_twopoint(&win, black_box(7.0), KMethod::Series).unwrap()));
    c.bench_function("k_twopoint/oracle", |b| b.iter(|| k_twopoint(&win, black_box(7.0), KMethod::Oracle).unwrap()));
}

fn field(c: &mut Criterion) {
    let win = BandWindow::new(24, 0.3).unwrap();
    let mesh = build_mesh(&win, min_level(24, POINTS_PER_WAVELENGTH)).unwrap();
    let sample = sample_field(&win, 1);
    let vals = evaluate_field(&sample, mesh.vertices()).unwrap();
    let mut g = c.benchmark_group("field");
    g.sample_size(20);
    g.bench_function("evaluate/n=24", |b| b.iter(|| evaluate_field(black_box(&sample), mesh.vertices()).unwrap()));
    g.bench_function("nodal_length/n=24", |b| b.iter(|| nodal_length(black_box(&vals), &mesh).unwrap()));
    g.finish();
}

criterion_group!(benches, kernel, kacrice, field);
criterion_main!(benches);
