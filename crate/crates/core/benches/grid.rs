//! Rayon pool vs the calling thread for the two data-parallel workloads:
//! curvatures and Cartan residuals on a grid, and a batch of integrations.
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jetflow::dynamics::{integrate_batch, integrate_batch_seq};
use jetflow::expr::Params;
use jetflow::geometry::{cartan_residuals, sectional_curvatures, JetPoint, DEFAULT_FD_STEP};
use jetflow::par;
use jetflow::registry::{instantiate, Instance, Sources};

fn damped() -> Instance {
    instantiate("damped", &Params::new(), &Sources::default()).unwrap()
}

fn curvature_grid(c: &mut Criterion) {
    let inst = damped();
    let mut group = c.benchmark_group("curvature_grid");
    for n in [20usize, 60] {
        let mut region = inst.region;
        region.n_u = n;
        region.n_u1 = n;
        let pts = region.jet_points(inst.ode.eps_u1()).unwrap();
        let job = |p: &JetPoint| {
            let r = sectional_curvatures(&inst.ode, p).unwrap();
            let k = cartan_residuals(&inst.ode, p, DEFAULT_FD_STEP).unwrap();
            r.r1212 + k.curvature
        };
        group.bench_with_input(BenchmarkId::new("par", n * n), &pts, |b, pts| {
            b.iter(|| black_box(par::map(pts, job)))
        });
        group.bench_with_input(BenchmarkId::new("seq", n * n), &pts, |b, pts| {
            b.iter(|| black_box(par::map_seq(pts, job)))
        });
    }
    group.finish();
}

fn solution_batch(c: &mut Criterion) {
    let inst = damped();
    let mut group = c.benchmark_group("solution_batch");
    for n in [16usize, 128] {
        let inits = inst.initial_conditions(n);
        group.bench_with_input(BenchmarkId::new("par", n), &inits, |b, inits| {
            b.iter(|| black_box(integrate_batch(&inst.ode, inits, inst.horizon, 1e-10)))
        });
        group.bench_with_input(BenchmarkId::new("seq", n), &inits, |b, inits| {
            b.iter(|| black_box(integrate_batch_seq(&inst.ode, inits, inst.horizon, 1e-10)))
        });
    }
    group.finish();
}

criterion_group!(benches, curvature_grid, solution_batch);
criterion_main!(benches);
