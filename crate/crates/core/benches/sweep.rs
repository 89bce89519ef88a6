use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use critnls::classifier::{sweep, DichotomyConfig, InitialShape, SweepCell};
use critnls::evolution::EvolutionConfig;
use critnls::exec::Execution;
use critnls::grid::RadialGrid;
use critnls::potentials::YukawaPotential;

fn cells() -> Vec<SweepCell> {
    let potentials = [YukawaPotential::zero(3), YukawaPotential::new(-0.4, 1.0, 1.0, 3).unwrap()];
    potentials
        .iter()
        .flat_map(|&potential| {
            [0.05, 0.2, 0.5, 1.0].map(|amplitude| SweepCell { potential, amplitude, shape: InitialShape::Gaussian { width: 1.0 } })
        })
        .collect()
}

fn bench_sweep(c: &mut Criterion) {
    let grid = RadialGrid::new(3, 20.0, 511).unwrap();
    let cfg = DichotomyConfig {
        evolution: EvolutionConfig { dt: 2e-3, t_end: 0.4, record_stride: 10, ..Default::default() },
        residual_samples: 5,
    };
    let cells = cells();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| sweep(black_box(&cells), grid, &cfg, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);
