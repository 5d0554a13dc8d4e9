//! The Laplace-like distribution `LA(λ, ρ)` on strings.
//!
//! `q(s) = (ρ/(ρ+1))^d / ((ρ+1) |∂U(λ, d)|)` with `d = d(s, λ)`: the radius
//! `d` is geometric with success probability `1/(ρ+1)` and, given the
//! radius, the string is uniform on the sphere. The sampler follows that
//! decomposition directly.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;

use crate::error::{Error, Result};
use crate::spheres::{ext_hamming_strata, ln_biguint, SphereEngine, SphereQuery, Stratum};
use crate::string_space::{DistanceKind, Str};

/// Location string and dispersion of one Laplace-like component.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceParams {
    pub lambda: Str,
    pub rho: f64,
}

impl LaplaceParams {
    pub fn new(lambda: Str, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("dispersion must be positive and finite, got {rho}")));
        }
        Ok(LaplaceParams { lambda, rho })
    }

    /// `ρ / (ρ + 1)`, the per-unit-distance decay.
    pub fn decay(&self) -> f64 {
        self.rho / (self.rho + 1.0)
    }
}

/// Probability that a draw lands at distance exactly `r` from the location.
pub fn radius_pmf(r: usize, rho: f64) -> f64 {
    (rho / (rho + 1.0)).powi(r as i32) / (rho + 1.0)
}

/// Log-density at a string known to be at distance `d` from `lambda`.
pub fn log_pmf_at_distance(engine: &SphereEngine, lambda: &Str, rho: f64, d: usize, metric: DistanceKind) -> Result<f64> {
    let log_size = engine.log_sphere_size(metric, lambda, d)?;
    let decay_term = if d == 0 { 0.0 } else { d as f64 * (rho / (rho + 1.0)).ln() };
    Ok(-(rho + 1.0).ln() - log_size + decay_term)
}

pub fn log_pmf(engine: &SphereEngine, s: &Str, params: &LaplaceParams, metric: DistanceKind) -> Result<f64> {
    let d = metric.distance(s, &params.lambda);
    log_pmf_at_distance(engine, &params.lambda, params.rho, d, metric)
}

pub fn pmf(engine: &SphereEngine, s: &Str, params: &LaplaceParams, metric: DistanceKind) -> Result<f64> {
    log_pmf(engine, s, params, metric).map(f64::exp)
}

/// Smallest radius cap whose geometric tail mass `(ρ/(ρ+1))^(cap+1)` is below `tail`.
pub fn default_radius_cap(rho: f64, tail: f64) -> usize {
    let decay = rho / (rho + 1.0);
    let mut cap = 0usize;
    let mut mass = decay;
    while mass >= tail {
        cap += 1;
        mass *= decay;
    }
    cap
}

/// Draws `n` strings with a ChaCha stream seeded from `seed`.
pub fn sample(engine: &SphereEngine, params: &LaplaceParams, metric: DistanceKind, seed: u64, n: usize) -> Result<Vec<Str>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(engine, params, metric, &mut rng, n)
}

pub fn sample_with_rng<R: Rng + ?Sized>(
    engine: &SphereEngine,
    params: &LaplaceParams,
    metric: DistanceKind,
    rng: &mut R,
    n: usize,
) -> Result<Vec<Str>> {
    let mut sampler = ShellSampler::new(engine, params, metric)?;
    (0..n).map(|_| sampler.draw(rng)).collect()
}

/// Reusable exact sampler; caches per-radius strata or enumerated spheres.
pub struct ShellSampler<'a> {
    engine: &'a SphereEngine,
    params: LaplaceParams,
    metric: DistanceKind,
    radius: Geometric,
    strata: HashMap<usize, (Vec<Stratum>, WeightedIndex<f64>)>,
    spheres: HashMap<usize, Vec<Str>>,
}

impl<'a> ShellSampler<'a> {
    pub fn new(engine: &'a SphereEngine, params: &LaplaceParams, metric: DistanceKind) -> Result<Self> {
        let radius = Geometric::new(1.0 / (params.rho + 1.0))
            .map_err(|e| Error::InvalidParameter(format!("dispersion {}: {e}", params.rho)))?;
        Ok(ShellSampler {
            engine,
            params: params.clone(),
            metric,
            radius,
            strata: HashMap::new(),
            spheres: HashMap::new(),
        })
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Str> {
        let r = self.radius.sample(rng) as usize;
        match self.metric {
            DistanceKind::ExtHamming => Ok(self.draw_ext_hamming(r, rng)),
            DistanceKind::Levenshtein => {
                if !self.spheres.contains_key(&r) {
                    let q = SphereQuery::new(self.params.lambda.clone(), r, DistanceKind::Levenshtein);
                    let items: Vec<Str> = self.engine.enumerate_sphere(&q)?.collect();
                    self.spheres.insert(r, items);
                }
                let items = &self.spheres[&r];
                Ok(items[rng.random_range(0..items.len())].clone())
            }
        }
    }

    fn draw_ext_hamming<R: Rng + ?Sized>(&mut self, r: usize, rng: &mut R) -> Str {
        let center = &self.params.lambda;
        let a = self.engine.alphabet_size();
        let (strata, index) = self.strata.entry(r).or_insert_with(|| {
            let strata = ext_hamming_strata(center.len(), r, a);
            let logs: Vec<f64> = strata.iter().map(|s| ln_biguint(&s.count)).collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
            let index = WeightedIndex::new(weights).expect("every sphere has a nonempty stratum");
            (strata, index)
        });
        let st = &strata[index.sample(rng)];
        let prefix = st.length.min(center.len());
        let mut v: Vec<u8> = center.symbols()[..prefix].to_vec();
        for p in rand::seq::index::sample(rng, prefix, st.substitutions) {
            let orig = v[p] as usize;
            let d = rng.random_range(0..a - 1);
            v[p] = if d < orig { d as u8 } else { (d + 1) as u8 };
        }
        for _ in prefix..st.length {
            v.push(rng.random_range(0..a) as u8);
        }
        Str::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    /// `-Σ q ln q` over all strings within `radius_cap` of the location.
    pub entropy: f64,
    /// Probability mass beyond the cap.
    pub tail_mass: f64,
    pub radius_cap: usize,
}

/// Entropy (nats) of `LA(λ, ρ)` truncated at `radius_cap`.
///
/// Strings of one shell share a probability, so each shell contributes
/// `-P(r) ln(P(r) / |∂U(λ, r)|)`. The cap defaults to a tail below 1e-12
/// and must leave a tail below 1e-9.
pub fn truncated_entropy(
    engine: &SphereEngine,
    params: &LaplaceParams,
    metric: DistanceKind,
    radius_cap: Option<usize>,
) -> Result<EntropyReport> {
    let cap = radius_cap.unwrap_or_else(|| default_radius_cap(params.rho, 1e-12));
    let tail_mass = params.decay().powi(cap as i32 + 1);
    if tail_mass >= 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "radius cap {cap} leaves tail mass {tail_mass:e}, which is not below 1e-9"
        )));
    }
    let mut entropy = 0.0;
    for r in 0..=cap {
        let p = radius_pmf(r, params.rho);
        if p == 0.0 {
            break;
        }
        let log_size = engine.log_sphere_size(metric, &params.lambda, r)?;
        entropy -= p * (p.ln() - log_size);
    }
    Ok(EntropyReport { entropy, tail_mass, radius_cap: cap })
}

/// Exact sphere size as a float; convenience for tests and reports.
pub fn sphere_size_f64(engine: &SphereEngine, center: &Str, r: usize, metric: DistanceKind) -> Result<f64> {
    let size: BigUint = engine.sphere_size(&SphereQuery::new(center.clone(), r, metric))?;
    Ok(ln_biguint(&size).exp())
}
