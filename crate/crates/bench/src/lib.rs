//! Synthetic inputs shared by the benchmarks.

use strlap::laplace::sample;
use strlap::{DistanceKind, LaplaceParams, SphereEngine, Str};

/// Equal-sized draws from LA(`centers[g]`, `rho`), concatenated in component order.
pub fn mixture_corpus(engine: &SphereEngine, centers: &[Str], rho: f64, per_component: usize, metric: DistanceKind, seed: u64) -> Vec<Str> {
    centers
        .iter()
        .enumerate()
        .flat_map(|(g, c)| {
            let params = LaplaceParams::new(c.clone(), rho).expect("valid benchmark parameters");
            sample(engine, &params, metric, seed + g as u64, per_component).expect("benchmark sample")
        })
        .collect()
}

/// `len` copies of letter `h`.
pub fn homopolymer(h: u8, len: usize) -> Str {
    Str::new(vec![h; len])
}
