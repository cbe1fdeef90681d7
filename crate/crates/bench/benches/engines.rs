use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tailsens_bench::{pair_with, prior, small};
use tailsens_core::engine::{cdf_compound, cf_severity, cf_severity_quadrature, sample_compound};
use tailsens_core::{analyze, var, EngineConfig, EngineKind};

fn characteristic_function(c: &mut Criterion) {
    let cfg = EngineConfig::default();
    let d = prior().severity;
    let mut g = c.benchmark_group("severity_cf");
    for t in [1e-9, 1e-6, 1e-3] {
        g.bench_with_input(BenchmarkId::new("special", t), &t, |b, &t| b.iter(|| cf_severity(black_box(t), &d, &cfg)));
        g.bench_with_input(BenchmarkId::new("quadrature", t), &t, |b, &t| {
            b.iter(|| cf_severity_quadrature(black_box(t), &d, &cfg))
        });
    }
    g.finish();
}

fn inversion(c: &mut Criterion) {
    let cfg = EngineConfig::default();
    c.bench_function("cdf_prior_at_5e11", |b| b.iter(|| cdf_compound(black_box(5e11), &[prior()], &cfg)));
    c.bench_function("var_prior_0.999", |b| b.iter(|| var(black_box(0.999), &[prior()], &cfg)));
}

fn cross_engines(c: &mut Criterion) {
    let mut g = c.benchmark_group("var_small_0.9");
    g.sample_size(10);
    for kind in [EngineKind::CfInversion, EngineKind::Panjer, EngineKind::MonteCarlo] {
        let cfg = EngineConfig {
            mc_samples: 100_000,
            ..EngineConfig::with_kind(kind)
        };
        g.bench_function(kind.as_str(), |b| b.iter(|| var(black_box(0.9), &[small()], &cfg)));
    }
    g.finish();
    c.bench_function("sample_small_1e5", |b| b.iter(|| sample_compound(&small(), 100_000, black_box(7))));
}

fn sensitivity(c: &mut Criterion) {
    let cfg = EngineConfig::default();
    let mut g = c.benchmark_group("analyze");
    g.sample_size(10);
    for (name, xi_s, sigma_s) in [("power_diff", 1.2, 1e4), ("equal_tails", 2.0, 1e4), ("mirror", 4.0, 100.0)] {
        let pair = pair_with(xi_s, sigma_s);
        g.bench_function(name, |b| b.iter(|| analyze(&pair, black_box(0.999), &cfg)));
    }
    g.finish();
}

criterion_group!(benches, characteristic_function, inversion, cross_engines, sensitivity);
criterion_main!(benches);
