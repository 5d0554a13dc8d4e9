use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use strlap::spheres::{ext_hamming_sphere_size, levenshtein_sphere_profile};
use strlap::SphereCaps;
use strlap_bench::homopolymer;

fn ext_hamming(c: &mut Criterion) {
    let mut group = c.benchmark_group("ext_hamming_sphere_size");
    for r in [4usize, 16, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(r), &r, |b, &r| {
            b.iter(|| ext_hamming_sphere_size(black_box(32), r, 4))
        });
    }
    group.finish();
}

fn levenshtein(c: &mut Criterion) {
    let caps = SphereCaps::default();
    let mut group = c.benchmark_group("levenshtein_sphere_profile");
    group.sample_size(20);
    for (len, r) in [(8usize, 3usize), (16, 4), (32, 4)] {
        let center = homopolymer(0, len);
        group.bench_with_input(BenchmarkId::from_parameter(format!("len{len}_r{r}")), &r, |b, &r| {
            b.iter(|| levenshtein_sphere_profile(black_box(center.symbols()), 4, r, &caps).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ext_hamming, levenshtein);
criterion_main!(benches);
