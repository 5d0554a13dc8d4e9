//! Brute-force reference computations over truncated string spaces.
//!
//! Everything here enumerates candidates exhaustively and is only meant for
//! small alphabets and short strings: tests, `selftest`, and acceptance runs.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{j_star, objective_f, weighted_site_frequencies};
use crate::laplace::{pmf, LaplaceParams};
use crate::spheres::{SphereEngine, SphereQuery};
use crate::string_space::{DistanceKind, Str};

/// Largest number of strings [`enumerate_strings`] will produce.
pub const ENUMERATION_CAP: usize = 1 << 20;
/// Extra candidate length searched beyond the longest support string.
pub const CANDIDATE_SLACK: usize = 2;
const REL_TIE: f64 = 1e-12;

/// Probability function with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    support: Vec<Str>,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(support: Vec<Str>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidParameter("support and probabilities must be nonempty and aligned".into()));
        }
        if probs.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
        }
        let mut sorted = support.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("support entries must be distinct".into()));
        }
        Ok(FiniteDistribution { support, probs })
    }

    /// LA(λ, ρ) restricted to strings of length ≤ `max_len` and renormalized.
    /// Also returns the mass that was kept before renormalizing.
    pub fn truncated_laplace(
        engine: &SphereEngine,
        params: &LaplaceParams,
        metric: DistanceKind,
        max_len: usize,
    ) -> Result<(Self, f64)> {
        let support = enumerate_strings(engine.alphabet_size(), max_len)?;
        let probs = support
            .iter()
            .map(|s| pmf(engine, s, params, metric))
            .collect::<Result<Vec<f64>>>()?;
        let kept: f64 = probs.iter().sum();
        let probs = probs.into_iter().map(|p| p / kept).collect();
        Ok((FiniteDistribution { support, probs }, kept))
    }

    pub fn support(&self) -> &[Str] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, s: &Str) -> f64 {
        self.support.iter().position(|t| t == s).map_or(0.0, |i| self.probs[i])
    }

    pub fn max_len(&self) -> usize {
        self.support.iter().map(Str::len).max().unwrap_or(0)
    }

    /// `Σ_s d(s, center) q(s)`.
    pub fn expected_distance(&self, center: &Str, metric: DistanceKind) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| metric.distance(s, center) as f64 * p)
            .sum()
    }

    /// `Σ_s φ(d(s, m), |m|) q(s)`.
    pub fn expected_phi(&self, engine: &SphereEngine, center: &Str, phi: Phi, metric: DistanceKind) -> Result<f64> {
        let mut total = 0.0;
        for (s, p) in self.support.iter().zip(&self.probs) {
            if *p == 0.0 {
                continue;
            }
            let q = SphereQuery::new(center.clone(), metric.distance(s, center), metric);
            let size = match phi {
                Phi::BallSize => engine.ball_size(&q)?,
                Phi::SphereSize => engine.sphere_size(&q)?,
            };
            total += crate::spheres::ln_biguint(&size).exp() * p;
        }
        Ok(total)
    }
}

/// Two-letter distribution with mass 0.2 on the empty string, 0.15 on each
/// single letter and 0.125 on each two-letter string.
pub fn symmetric_binary_example() -> FiniteDistribution {
    let support = enumerate_strings(2, 2).expect("seven strings");
    let probs = support
        .iter()
        .map(|s| match s.len() {
            0 => 0.2,
            1 => 0.15,
            _ => 0.125,
        })
        .collect();
    FiniteDistribution { support, probs }
}

/// All strings of length ≤ `max_len` over `alphabet_size` letters, in shortlex order.
pub fn enumerate_strings(alphabet_size: usize, max_len: usize) -> Result<Vec<Str>> {
    let mut count = 0usize;
    let mut layer = 1usize;
    for _ in 0..=max_len {
        count = count.saturating_add(layer);
        layer = layer.saturating_mul(alphabet_size);
    }
    if count > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "{count} strings of length <= {max_len} exceed the oracle cap {ENUMERATION_CAP}"
        )));
    }
    let mut out = Vec::with_capacity(count);
    out.push(Str::empty());
    let mut frontier = vec![Str::empty()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * alphabet_size);
        for s in &frontier {
            for h in 0..alphabet_size {
                let mut v = s.symbols().to_vec();
                v.push(h as u8);
                next.push(Str::new(v));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    Ok(out)
}

fn candidates_for(dist: &FiniteDistribution, alphabet_size: usize) -> Result<Vec<Str>> {
    enumerate_strings(alphabet_size, dist.max_len() + CANDIDATE_SLACK)
}

/// All indices whose value is within a relative tie tolerance of the best.
fn arg_best(values: &[f64], maximize: bool) -> Vec<usize> {
    let best = if maximize {
        values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let tol = REL_TIE * best.abs().max(1.0);
    (0..values.len()).filter(|&i| (values[i] - best).abs() <= tol).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationSummary {
    /// Every string attaining the largest probability.
    pub modes: Vec<Str>,
    /// Every candidate minimizing the expected distance.
    pub medians: Vec<Str>,
    pub median_value: f64,
    pub consensus: Str,
    /// Whether the best expected distance at the longest candidate length
    /// exceeds the one a length below, i.e. the truncation did not bind.
    pub boundary_increasing: bool,
}

pub fn mode_median_consensus(dist: &FiniteDistribution, alphabet_size: usize, metric: DistanceKind) -> Result<LocationSummary> {
    let modes = arg_best(dist.probs(), true).into_iter().map(|i| dist.support[i].clone()).collect();

    let candidates = candidates_for(dist, alphabet_size)?;
    let values: Vec<f64> = candidates.par_iter().map(|c| dist.expected_distance(c, metric)).collect();
    let best = arg_best(&values, false);
    let median_value = values[best[0]];
    let medians = best.into_iter().map(|i| candidates[i].clone()).collect();

    let top = dist.max_len() + CANDIDATE_SLACK;
    let best_at = |len: usize| {
        candidates
            .iter()
            .zip(&values)
            .filter(|(c, _)| c.len() == len)
            .map(|(_, v)| *v)
            .fold(f64::INFINITY, f64::min)
    };
    let boundary_increasing = best_at(top) > best_at(top - 1);

    let f = weighted_site_frequencies(dist.support(), dist.probs(), alphabet_size)?;
    let consensus = Str::new((1..=j_star(&f)).map(|j| f.mode_letter(j) as u8).collect());
    Ok(LocationSummary { modes, medians, median_value, consensus, boundary_increasing })
}

/// Size function used by [`modified_median`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phi {
    BallSize,
    SphereSize,
}

/// Candidate minimizing `Σ φ(d(s, m), |m|) q(s)`; ties go to the shortlex-first candidate.
pub fn modified_median(engine: &SphereEngine, dist: &FiniteDistribution, phi: Phi, metric: DistanceKind) -> Result<(Str, f64)> {
    let candidates = candidates_for(dist, engine.alphabet_size())?;
    let values = candidates
        .par_iter()
        .map(|c| dist.expected_phi(engine, c, phi, metric))
        .collect::<Result<Vec<f64>>>()?;
    let i = arg_best(&values, false)[0];
    Ok((candidates[i].clone(), values[i]))
}

/// Full log-likelihood at `λ` with `ρ` set to the mean distance (which may be zero).
pub fn profile_loglik(engine: &SphereEngine, strings: &[Str], lambda: &Str, metric: DistanceKind) -> Result<(f64, f64)> {
    let n = strings.len() as f64;
    let rho = strings.iter().map(|s| metric.distance(s, lambda)).sum::<usize>() as f64 / n;
    let ll = objective_f(engine, strings, lambda, rho, metric)? - n * (rho + 1.0).ln();
    Ok((ll, rho))
}

/// Exhaustive maximum-likelihood location over candidates of length ≤ `candidate_max_len`.
pub fn exhaustive_mle(engine: &SphereEngine, strings: &[Str], metric: DistanceKind, candidate_max_len: usize) -> Result<(Str, f64)> {
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let candidates = enumerate_strings(engine.alphabet_size(), candidate_max_len)?;
    let scored = candidates
        .par_iter()
        .map(|c| profile_loglik(engine, strings, c, metric))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let lls: Vec<f64> = scored.iter().map(|(ll, _)| *ll).collect();
    let i = arg_best(&lls, true)[0];
    Ok((candidates[i].clone(), scored[i].1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_laplace;
    use crate::laplace::sample;
    use crate::string_space::Alphabet;

    fn s(v: &[u8]) -> Str {
        Str::new(v.to_vec())
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_strings(2, 1).unwrap(), vec![s(&[]), s(&[0]), s(&[1])]);
        assert_eq!(enumerate_strings(2, 2).unwrap().len(), 7);
        assert_eq!(enumerate_strings(3, 2).unwrap().len(), 13);
        let all = enumerate_strings(3, 3).unwrap();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(enumerate_strings(4, 12).unwrap_err().is_resource_cap());
    }

    #[test]
    fn distribution_validation() {
        assert!(FiniteDistribution::new(vec![s(&[0]), s(&[0])], vec![0.5, 0.5]).is_err());
        assert!(FiniteDistribution::new(vec![s(&[0]), s(&[1])], vec![0.5, 0.6]).is_err());
        assert!(FiniteDistribution::new(vec![s(&[0])], vec![1.0]).is_ok());
    }

    #[test]
    fn example_expected_distances() {
        let d = symmetric_binary_example();
        let lev = DistanceKind::Levenshtein;
        assert!((d.expected_distance(&s(&[]), lev) - 1.3).abs() < 1e-12);
        assert!((d.expected_distance(&s(&[0]), lev) - 0.975).abs() < 1e-12);
        assert!((d.expected_distance(&s(&[0, 0]), lev) - 1.35).abs() < 1e-12);
        let summary = mode_median_consensus(&d, 2, lev).unwrap();
        assert_eq!(summary.modes, vec![s(&[])]);
        assert!(!summary.medians.contains(&s(&[])));
        assert!(summary.median_value <= 0.975 + 1e-12);
        assert!(summary.boundary_increasing);
    }

    #[test]
    fn example_expected_sphere_sizes() {
        let e = SphereEngine::new(2);
        let d = symmetric_binary_example();
        let lev = DistanceKind::Levenshtein;
        let at = |c: &[u8]| d.expected_phi(&e, &s(c), Phi::SphereSize, lev).unwrap();
        assert!((at(&[]) - 2.8).abs() < 1e-12);
        assert!((at(&[0]) - 4.775).abs() < 1e-12);
        assert!((at(&[0, 0]) - 11.0).abs() < 1e-12);
        let (m, v) = modified_median(&e, &d, Phi::SphereSize, lev).unwrap();
        assert_eq!(m, s(&[]));
        assert!((v - 2.8).abs() < 1e-12);
        // Balls around o: radii 0, 1, 2 hold 1, 3, 7 strings.
        let (m, v) = modified_median(&e, &d, Phi::BallSize, lev).unwrap();
        assert_eq!(m, s(&[]));
        assert!((v - (0.2 + 0.3 * 3.0 + 0.5 * 7.0)).abs() < 1e-12);
    }

    #[test]
    fn point_mass_medians() {
        let e = SphereEngine::new(2);
        let m = s(&[1, 0]);
        let d = FiniteDistribution::new(vec![m.clone()], vec![1.0]).unwrap();
        for kind in [DistanceKind::ExtHamming, DistanceKind::Levenshtein] {
            assert_eq!(modified_median(&e, &d, Phi::SphereSize, kind).unwrap().0, m);
            assert_eq!(modified_median(&e, &d, Phi::BallSize, kind).unwrap().0, m);
        }
    }

    #[test]
    fn laplace_mode_and_consensus() {
        let e = SphereEngine::new(2);
        let m = s(&[0, 1]);
        let params = LaplaceParams::new(m.clone(), 0.5).unwrap();
        let (d, kept) = FiniteDistribution::truncated_laplace(&e, &params, DistanceKind::ExtHamming, 8).unwrap();
        assert!(kept > 0.99);
        let summary = mode_median_consensus(&d, 2, DistanceKind::ExtHamming).unwrap();
        assert_eq!(summary.modes, vec![m.clone()]);
        assert_eq!(&summary.consensus.symbols()[..2], m.symbols());
        assert!(summary.medians.contains(&summary.consensus));
        let mad = d.expected_distance(&m, DistanceKind::ExtHamming);
        assert!((mad - 0.5).abs() < 5e-3);
    }

    #[test]
    fn mle_examples() {
        let e = SphereEngine::new(2);
        let x = s(&[1, 1, 0]);
        let (l, r) = exhaustive_mle(&e, &vec![x.clone(); 4], DistanceKind::ExtHamming, 4).unwrap();
        assert_eq!((l, r), (x, 0.0));

        let a = Alphabet::from_letters("01").unwrap();
        let xs: Vec<Str> = ["00", "00", "01"].iter().map(|t| a.parse(t).unwrap()).collect();
        let (l, r) = exhaustive_mle(&e, &xs, DistanceKind::ExtHamming, 3).unwrap();
        let fit = fit_laplace(&e, &xs, DistanceKind::ExtHamming, 0.01).unwrap();
        assert_eq!(l, fit.lambda_hat);
        assert!((r - fit.rho_hat).abs() < 1e-12);
    }

    #[test]
    fn mle_agrees_with_consensus_on_random_instances() {
        let e = SphereEngine::new(2);
        let mut agree = 0;
        for seed in 0..40u64 {
            let lambda = Str::new((0..(seed % 3 + 1)).map(|j| ((seed >> j) & 1) as u8).collect());
            let xs = sample(&e, &LaplaceParams::new(lambda, 0.3).unwrap(), DistanceKind::ExtHamming, seed, 6).unwrap();
            let (l, _) = exhaustive_mle(&e, &xs, DistanceKind::ExtHamming, 5).unwrap();
            let fit = fit_laplace(&e, &xs, DistanceKind::ExtHamming, 0.01).unwrap();
            agree += usize::from(l == fit.lambda_hat);
        }
        assert!(agree >= 36, "agreement {agree}/40");
    }
}
