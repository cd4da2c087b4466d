use criterion::{BenchmarkId, Criterion, criterion_group, criterion_main};
use dricci_bench::{SIZES, workload};
use dricci_core::HeatOperator;
use dricci_core::heat::mw_limit;
use dricci_core::report::analyze;
use dricci_core::{AnalysisConfig, fixtures};

fn heat(c: &mut Criterion) {
    let mut group = c.benchmark_group("heat");
    for n in SIZES {
        let (_, p) = workload(n);
        let f: Vec<f64> = (0..n).map(|i| p.d.df(0, i)).collect();
        group.bench_with_input(BenchmarkId::new("eigendecomposition", n), &n, |b, _| {
            b.iter(|| HeatOperator::new(&p.md).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("apply_spectral", n), &n, |b, _| {
            b.iter(|| p.heat.apply(0.5, &f).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("apply_uniformized", n), &n, |b, _| {
            b.iter(|| p.heat.apply_uniformized(0.5, &f).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mw_limit", n), &n, |b, _| {
            b.iter(|| mw_limit(&p.heat, &p.d, 0, 1, &[1e-2, 1e-3, 1e-4]).unwrap())
        });
    }
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    let cfg = AnalysisConfig::default();
    let c3 = fixtures::cycle3();
    group.bench_function("cycle3", |b| b.iter(|| analyze(&c3, &cfg).unwrap()));
    let (g, _) = workload(8);
    group.bench_function("random8", |b| b.iter(|| analyze(&g, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, heat, pipeline);
criterion_main!(benches);
