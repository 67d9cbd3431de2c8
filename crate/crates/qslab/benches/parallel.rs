//! Throughput comparison of the data-parallel kernels against their
//! sequential fallbacks. With `--no-default-features` the `Auto` rows
//! degenerate to a second sequential measurement.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use qslab::exact::{MuTable, PmfTable, Scaling};
use qslab::metrics::{pairwise_d2_squared, DiscreteDistribution};
use qslab::simulate::{sample_path_lengths, SampleBudget};
use qslab::toll::b_n_rows;
use qslab::Parallelism;

fn bench_pmf_table(c: &mut Criterion) {
    // extend a prebuilt table across 65..=72, where the mixture steps are
    // past the parallel grain threshold
    let mut base = PmfTable::with_options(72, Parallelism::Sequential, None);
    base.ensure(64).unwrap();
    let mut group = c.benchmark_group("pmf-extend-64-to-72");
    group.sample_size(10);
    for (name, mode) in [
        ("sequential", Parallelism::Sequential),
        ("auto", Parallelism::Auto),
    ] {
        group.bench_function(name, |b| {
            b.iter_batched(
                || {
                    let mut table = base.clone();
                    table.set_mode(mode);
                    table
                },
                |mut table| {
                    table.ensure(72).unwrap();
                    black_box(table.built())
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("bst-sampling-n2000-r2000");
    group.sample_size(10);
    for (name, mode) in [
        ("sequential", Parallelism::Sequential),
        ("auto", Parallelism::Auto),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let batch =
                    sample_path_lengths(2000, 2000, 7, SampleBudget::default(), mode).unwrap();
                black_box(batch.counts.len())
            })
        });
    }
    group.finish();
}

fn bench_distance_matrix(c: &mut Criterion) {
    let mut table = PmfTable::new(24);
    let laws: Vec<DiscreteDistribution> = (2..=24)
        .map(|n| {
            DiscreteDistribution::from_normalized(&table.normalized(n, Scaling::Y).unwrap())
        })
        .collect();
    let mut group = c.benchmark_group("d2sq-matrix-n24");
    group.sample_size(10);
    for (name, mode) in [
        ("sequential", Parallelism::Sequential),
        ("auto", Parallelism::Auto),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| black_box(pairwise_d2_squared(&laws, mode).unwrap().len()))
        });
    }
    group.finish();
}

fn bench_toll_rows(c: &mut Criterion) {
    let mu = MuTable::new(400);
    let mut group = c.benchmark_group("toll-rows-n400");
    group.sample_size(10);
    for (name, mode) in [
        ("sequential", Parallelism::Sequential),
        ("auto", Parallelism::Auto),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| black_box(b_n_rows(&mu, 400, mode).unwrap().len()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_pmf_table,
    bench_sampling,
    bench_distance_matrix,
    bench_toll_rows
);
criterion_main!(benches);
