use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use hairstyle_core::model::{backward, init_params, predict_batch, Dropout, Example, HeadConfig};
use hairstyle_core::par::Execution;
use hairstyle_core::synth::cluster_task;
use hairstyle_core::taxonomy::Taxonomy;

fn strategies() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

const FEATURE_DIM: usize = 512;
const HIDDEN_DIM: usize = 256;

fn bench_backward(c: &mut Criterion) {
    let tax = Taxonomy::canonical();
    let mut group = c.benchmark_group("backward");
    for batch_size in [64usize, 512] {
        let task = cluster_task(&tax, FEATURE_DIM, batch_size, 0, 5.0, 0.5, 1);
        let cfg = HeadConfig::for_taxonomy(&tax, FEATURE_DIM, HIDDEN_DIM, task.library.len());
        let params = init_params::<f32>(&cfg, 0).unwrap();
        let batch: Vec<Example<'_, f32>> = (0..task.train.len()).map(|i| task.train.example(i)).collect();
        group.throughput(Throughput::Elements(batch_size as u64));
        for (name, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, batch_size), &batch, |b, batch| {
                b.iter(|| backward(&params, &cfg, batch, Dropout::Seeded(3), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let tax = Taxonomy::canonical();
    let mut group = c.benchmark_group("predict_batch");
    let n = 1024;
    let task = cluster_task(&tax, FEATURE_DIM, n, 0, 5.0, 0.5, 2);
    let cfg = HeadConfig::for_taxonomy(&tax, FEATURE_DIM, HIDDEN_DIM, task.library.len());
    let params = init_params::<f32>(&cfg, 0).unwrap();
    group.throughput(Throughput::Elements(n as u64));
    for (name, exec) in strategies() {
        group.bench_function(name, |b| {
            b.iter(|| predict_batch(&params, &cfg, &task.train.features, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_backward, bench_predict);
criterion_main!(benches);
