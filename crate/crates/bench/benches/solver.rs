use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use twr_bench::{fixture, SCENARIOS};
use twr_core::conic::{solve, SolverSettings};
use twr_core::sca::program::{fd_subproblem, tf_subproblem, Goal, TimeShare};
use twr_core::sca::{init_fd, init_tf};

fn subproblems(c: &mut Criterion) {
    let mut group = c.benchmark_group("first_subproblem");
    group.sample_size(20);
    let settings = SolverSettings::default();
    for (k, m, n_r) in SCENARIOS {
        let fx = fixture(k, m, n_r, 1);
        let label = format!("{k}-{m}-{n_r}");
        let fd = init_fd(&fx.fd, &fx.cfg, 1).unwrap();
        let prog = fd_subproblem(&fd, &fx.fd, &fx.cfg, &Goal::Maximin).unwrap().program;
        group.bench_with_input(BenchmarkId::new("fd_maximin", &label), &prog, |b, p| b.iter(|| solve(p, &settings)));
        let tf = init_tf(&fx.tf, &fx.cfg, 1).unwrap();
        let prog = tf_subproblem(&tf, &fx.tf, &fx.cfg, &Goal::Maximin, TimeShare::Free).unwrap().program;
        group.bench_with_input(BenchmarkId::new("tf_maximin", &label), &prog, |b, p| b.iter(|| solve(p, &settings)));
    }
    group.finish();
}

fn build(c: &mut Criterion) {
    let fx = fixture(2, 2, 4, 1);
    let fd = init_fd(&fx.fd, &fx.cfg, 1).unwrap();
    c.bench_function("build_fd_subproblem/2-2-4", |b| b.iter(|| fd_subproblem(&fd, &fx.fd, &fx.cfg, &Goal::Maximin)));
}

criterion_group!(benches, subproblems, build);
criterion_main!(benches);
