use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use sortbench_core::gen_data;
use sortbench_core::kernels::{bubble_sort, merge_sort_block, quick_sort, SortStats};

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for n in [1_000usize, 4_000] {
        let data = gen_data(n, 42);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("bubble", n), &data, |b, data| {
            b.iter_batched_ref(
                || data.clone(),
                |block| bubble_sort(block, &mut SortStats::default()),
                BatchSize::SmallInput,
            )
        });
    }
    for n in [10_000usize, 100_000] {
        let data = gen_data(n, 42);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("merge", n), &data, |b, data| {
            let mut scratch = vec![0; n];
            b.iter_batched_ref(
                || data.clone(),
                |block| merge_sort_block(block, &mut scratch, &mut SortStats::default()),
                BatchSize::LargeInput,
            )
        });
        group.bench_with_input(BenchmarkId::new("quick", n), &data, |b, data| {
            b.iter_batched_ref(
                || data.clone(),
                |block| quick_sort(block, 0, n, &mut SortStats::default()),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
