use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use kmismatch::rle_ham::RleEngine;
use kmismatch::{run, RunConfig, Variant};
use kmismatch_bench::{aperiodic, drive_rle, periodic, runny, Workload};
use std::hint::black_box;

const N: usize = 4096;

fn workloads() -> Vec<(&'static str, Workload)> {
    vec![
        ("aperiodic_m64_k2", aperiodic(1, 64, N, 2, 4)),
        ("aperiodic_m256_k4", aperiodic(2, 256, N, 4, 26)),
        ("periodic_p3_m96_k3", periodic(3, 3, 96, N, 3, 4)),
    ]
}

fn bench_variants(c: &mut Criterion) {
    for variant in [Variant::Oracle, Variant::Offline, Variant::Online, Variant::Streaming, Variant::Approx] {
        let mut group = c.benchmark_group(variant.name());
        group.throughput(Throughput::Elements(N as u64));
        group.sample_size(10);
        for (name, w) in workloads() {
            let config = RunConfig::new(variant, w.k).with_seed(7);
            group.bench_with_input(BenchmarkId::from_parameter(name), &w, |b, w| {
                b.iter(|| run(&config, black_box(&w.pattern), black_box(&w.text)).unwrap())
            });
        }
        group.finish();
    }
}

fn bench_rle(c: &mut Criterion) {
    let mut group = c.benchmark_group("rle_engine");
    for (pattern_runs, max_run) in [(8, 4), (32, 4), (32, 32)] {
        let engine = RleEngine::new(&runny(11, pattern_runs, max_run, 3)).unwrap();
        let text = runny(12, 2000, max_run, 3);
        group.throughput(Throughput::Elements(text.len() as u64));
        let id = format!("runs{pattern_runs}_len{max_run}");
        group.bench_with_input(BenchmarkId::from_parameter(id), &text, |b, text| {
            b.iter(|| drive_rle(&engine, black_box(text)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_variants, bench_rle);
criterion_main!(benches);
