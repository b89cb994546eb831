use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use twr_bench::{fixture, SCENARIOS};
use twr_core::harness::derive_qos_thresholds;
use twr_core::sca::{run_fd_ee, run_fd_maximin, run_tf_ee, run_tf_maximin};

fn drivers(c: &mut Criterion) {
    let mut group = c.benchmark_group("driver");
    group.sample_size(10);
    for (k, m, n_r) in SCENARIOS {
        let fx = fixture(k, m, n_r, 3);
        let label = format!("{k}-{m}-{n_r}");
        let qos = derive_qos_thresholds(&fx.tf, &fx.cfg).unwrap();
        group.bench_function(BenchmarkId::new("fd_maximin", &label), |b| b.iter(|| run_fd_maximin(&fx.fd, &fx.cfg)));
        group.bench_function(BenchmarkId::new("tf_maximin", &label), |b| b.iter(|| run_tf_maximin(&fx.tf, &fx.cfg)));
        group.bench_function(BenchmarkId::new("fd_ee", &label), |b| b.iter(|| run_fd_ee(&fx.fd, &fx.cfg, &qos)));
        group.bench_function(BenchmarkId::new("tf_ee", &label), |b| b.iter(|| run_tf_ee(&fx.tf, &fx.cfg, &qos)));
    }
    group.finish();
}

criterion_group!(benches, drivers);
criterion_main!(benches);
