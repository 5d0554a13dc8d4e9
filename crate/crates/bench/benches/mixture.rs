use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use strlap::mixture::{e_step, fit};
use strlap::{DistanceKind, FitConfig, MixtureParams, SphereEngine};
use strlap_bench::{homopolymer, mixture_corpus};

fn bench_mixture(c: &mut Criterion) {
    let metric = DistanceKind::ExtHamming;
    let engine = SphereEngine::new(4);
    let centers = [homopolymer(0, 8), homopolymer(2, 8)];
    let strings = mixture_corpus(&engine, &centers, 1.0, 300, metric, 1);
    let params = MixtureParams::new(vec![0.5, 0.5], centers.to_vec(), vec![1.0, 1.0]).unwrap();

    c.bench_function("e_step_n600_k2", |b| {
        b.iter(|| e_step(&engine, black_box(&strings), &params, metric).unwrap())
    });

    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    let config = FitConfig { epsilon: 0.1, seed: 3, ..FitConfig::new(2, metric) };
    group.bench_function("ext_hamming_n600_k2_8restarts", |b| {
        b.iter(|| fit(&engine, black_box(&strings), &config).unwrap())
    });
    let lev_engine = SphereEngine::new(2);
    let lev_strings = mixture_corpus(&lev_engine, &[homopolymer(0, 5), homopolymer(1, 5)], 0.4, 40, DistanceKind::Levenshtein, 2);
    let lev_config = FitConfig { restarts: 2, seed: 3, ..FitConfig::new(2, DistanceKind::Levenshtein) };
    group.bench_function("levenshtein_n80_k2_2restarts", |b| {
        b.iter(|| fit(&lev_engine, black_box(&lev_strings), &lev_config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_mixture);
criterion_main!(benches);
