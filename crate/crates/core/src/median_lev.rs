//! Location estimation under the Levenshtein metric.
//!
//! Start from an approximate median string (the input minimizing the summed
//! distance, refined by greedy single edits), then hill-climb the location
//! objective `F` over radius-1 Levenshtein neighborhoods until no neighbor
//! strictly improves it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::weighted_objective;
use crate::spheres::{levenshtein_unit_sphere, SphereEngine};
use crate::string_space::{levenshtein, DistanceKind, Str};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub lambda: Str,
    pub rho: f64,
    pub objective: f64,
}

/// Iterates of the hill climb; `iterations[0]` is the starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianTrace {
    pub initial: Str,
    pub iterations: Vec<TraceStep>,
    /// Number of accepted moves.
    pub converged_step: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianFit {
    pub lambda: Str,
    pub rho: f64,
    pub trace: MedianTrace,
}

/// How the dispersion entering `F` is chosen for each candidate location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoPolicy {
    /// Weighted mean distance to the candidate itself.
    PerCandidate,
    /// A dispersion held fixed across candidates.
    Fixed(f64),
}

fn resolve_weights(strings: &[Str], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    match weights {
        None => Ok(vec![1.0; strings.len()]),
        Some(w) => {
            if w.len() != strings.len() {
                return Err(Error::InvalidParameter(format!("{} weights for {} strings", w.len(), strings.len())));
            }
            if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidParameter("weights are all zero".into()));
            }
            Ok(w.to_vec())
        }
    }
}

fn weighted_distance_sum(strings: &[Str], weights: &[f64], candidate: &Str) -> f64 {
    strings
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| w * levenshtein(s.symbols(), candidate.symbols()) as f64)
        .sum()
}

fn improves(new: f64, old: f64) -> bool {
    new < old - 1e-12 * (1.0 + old.abs())
}

/// Approximate minimizer of the weighted Levenshtein distance sum.
pub fn approx_set_median(strings: &[Str], weights: Option<&[f64]>, alphabet_size: usize) -> Result<Str> {
    let w = resolve_weights(strings, weights)?;
    let mut best: Option<(f64, &Str)> = None;
    for (s, &ws) in strings.iter().zip(&w) {
        if ws == 0.0 {
            continue;
        }
        let cost = weighted_distance_sum(strings, &w, s);
        best = match best {
            Some((c, b)) if !(improves(cost, c) || (cost <= c && s < b)) => Some((c, b)),
            _ => Some((cost, s)),
        };
    }
    let (mut cost, start) = best.expect("positive total weight implies a weighted input");
    let mut current = start.clone();
    loop {
        let scored: Vec<(f64, Str)> = levenshtein_unit_sphere(&current, alphabet_size)
            .into_par_iter()
            .map(|c| (weighted_distance_sum(strings, &w, &c), c))
            .collect();
        let mut next: Option<(f64, Str)> = None;
        for (c, cand) in scored {
            let better = match &next {
                None => improves(c, cost),
                Some((nc, _)) => improves(c, *nc),
            };
            if better {
                next = Some((c, cand));
            }
        }
        match next {
            Some((c, cand)) => {
                cost = c;
                current = cand;
            }
            None => return Ok(current),
        }
    }
}

/// Radius-1 hill climb on `F` from `start`.
pub fn hill_climb(
    engine: &SphereEngine,
    strings: &[Str],
    weights: Option<&[f64]>,
    start: Str,
    policy: RhoPolicy,
) -> Result<MedianFit> {
    let w = resolve_weights(strings, weights)?;
    let total: f64 = w.iter().sum();
    let norm: Vec<f64> = w.iter().map(|x| x / total).collect();
    // Unweighted fits report F on the plain-sum scale.
    let scale = if weights.is_none() { total } else { 1.0 };
    let evaluate = |cand: &Str| -> Result<(f64, f64)> {
        let rho = match policy {
            RhoPolicy::PerCandidate => weighted_distance_sum(strings, &norm, cand),
            RhoPolicy::Fixed(r) => r,
        };
        let f = score(engine, strings, &norm, cand, rho)? * scale;
        Ok((rho, f))
    };

    let (rho0, f0) = evaluate(&start)?;
    let mut trace = MedianTrace {
        initial: start.clone(),
        iterations: vec![TraceStep { lambda: start.clone(), rho: rho0, objective: f0 }],
        converged_step: 0,
    };
    let (mut current, mut rho, mut f) = (start, rho0, f0);
    loop {
        let neighbors = levenshtein_unit_sphere(&current, engine.alphabet_size());
        let scored: Vec<Result<(f64, f64)>> = neighbors.par_iter().map(&evaluate).collect();
        let mut best: Option<(usize, f64, f64)> = None;
        for (i, r) in scored.into_iter().enumerate() {
            let (cand_rho, cand_f) = r?;
            let threshold = best.map_or(f, |(_, _, bf)| bf);
            if cand_f > threshold + 1e-12 * (1.0 + threshold.abs()) {
                best = Some((i, cand_rho, cand_f));
            }
        }
        let Some((i, new_rho, new_f)) = best else { break };
        current = neighbors[i].clone();
        rho = new_rho;
        f = new_f;
        trace.converged_step += 1;
        trace.iterations.push(TraceStep { lambda: current.clone(), rho, objective: f });
    }
    Ok(MedianFit { lambda: current, rho, trace })
}

fn score(engine: &SphereEngine, strings: &[Str], norm: &[f64], cand: &Str, rho: f64) -> Result<f64> {
    weighted_objective(engine, strings, Some(norm), cand, rho, DistanceKind::Levenshtein)
}

/// Median initializer followed by the hill climb with per-candidate dispersion.
pub fn fit(engine: &SphereEngine, strings: &[Str], weights: Option<&[f64]>) -> Result<MedianFit> {
    let start = approx_set_median(strings, weights, engine.alphabet_size())?;
    hill_climb(engine, strings, weights, start, RhoPolicy::PerCandidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::objective_f;
    use crate::string_space::Alphabet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_binary_upto(max_len: usize) -> Vec<Str> {
        let mut out = vec![Str::empty()];
        let mut layer = vec![Str::empty()];
        for _ in 0..max_len {
            let next: Vec<Str> = layer
                .iter()
                .flat_map(|s| (0..2u8).map(move |x| s.concat(&Str::new(vec![x]))))
                .collect();
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    fn bin(xs: &[&str]) -> Vec<Str> {
        let a = Alphabet::from_letters("01").unwrap();
        xs.iter().map(|x| a.parse(x).unwrap()).collect()
    }

    #[test]
    fn set_median_examples() {
        let xs = bin(&["00", "00", "01"]);
        let m = approx_set_median(&xs, None, 2).unwrap();
        assert_eq!(m, Str::new(vec![0, 0]));
        // Exhaustive check over all candidates of length <= 3.
        let best = all_binary_upto(3)
            .into_iter()
            .map(|c| xs.iter().map(|s| levenshtein(s.symbols(), c.symbols())).sum::<usize>())
            .min()
            .unwrap();
        assert_eq!(xs.iter().map(|s| levenshtein(s.symbols(), m.symbols())).sum::<usize>(), best);

        let one = bin(&["0110"]);
        assert_eq!(approx_set_median(&one, None, 2).unwrap(), one[0]);

        let a = Alphabet::from_letters("abz").unwrap();
        let ys: Vec<Str> = ["ab", "zz", "zz"].iter().map(|x| a.parse(x).unwrap()).collect();
        assert_eq!(approx_set_median(&ys, Some(&[1.0, 0.0, 0.0]), 3).unwrap(), ys[0]);
        assert!(approx_set_median(&ys, Some(&[0.0, 0.0, 0.0]), 3).is_err());
        assert!(approx_set_median(&[], None, 3).is_err());
    }

    #[test]
    fn identical_strings_stop_immediately() {
        let e = SphereEngine::new(2);
        let xs = bin(&["0101", "0101", "0101"]);
        let fit = fit(&e, &xs, None).unwrap();
        assert_eq!(fit.lambda, xs[0]);
        assert_eq!(fit.rho, 0.0);
        assert_eq!(fit.trace.converged_step, 0);
        assert_eq!(fit.trace.iterations.len(), 1);
    }

    #[test]
    fn small_instance_against_exhaustive_objective() {
        let e = SphereEngine::new(2);
        let xs = bin(&["00", "00", "01"]);
        let fit = fit(&e, &xs, None).unwrap();
        for w in fit.trace.iterations.windows(2) {
            assert!(w[1].objective > w[0].objective);
        }
        let init = Str::new(vec![0, 0]);
        let rho0 = 1.0 / 3.0;
        let f_init = objective_f(&e, &xs, &init, rho0, DistanceKind::Levenshtein).unwrap();
        let f_final = objective_f(&e, &xs, &fit.lambda, fit.rho, DistanceKind::Levenshtein).unwrap();
        assert!(f_final >= f_init);
        assert!((f_final - fit.trace.iterations.last().unwrap().objective).abs() < 1e-12);
        let best = all_binary_upto(3)
            .iter()
            .map(|c| {
                let v = xs.iter().map(|s| levenshtein(s.symbols(), c.symbols())).sum::<usize>() as f64 / 3.0;
                objective_f(&e, &xs, c, v, DistanceKind::Levenshtein).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(f_final <= best + 1e-12);
    }

    #[test]
    fn ties_resolve_to_shortlex_smallest() {
        // From "" the neighbours "0" and "1" score identically against {"0", "1"}.
        let e = SphereEngine::new(2);
        let xs = bin(&["0", "1"]);
        let fit = hill_climb(&e, &xs, None, Str::empty(), RhoPolicy::Fixed(1.0)).unwrap();
        let f0 = fit.trace.iterations[0].objective;
        let neighbors = levenshtein_unit_sphere(&Str::empty(), 2);
        let f_zero = weighted_objective(&e, &xs, None, &neighbors[0], 1.0, DistanceKind::Levenshtein).unwrap();
        let f_one = weighted_objective(&e, &xs, None, &neighbors[1], 1.0, DistanceKind::Levenshtein).unwrap();
        assert_eq!(f_zero, f_one);
        if f_zero > f0 {
            assert_eq!(fit.trace.iterations[1].lambda, Str::new(vec![0]));
        } else {
            assert_eq!(fit.lambda, Str::empty());
        }
    }

    #[test]
    fn terminal_point_is_local_maximum() {
        let e = SphereEngine::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = rng.random_range(2..6);
            let xs: Vec<Str> = (0..n)
                .map(|_| Str::new((0..rng.random_range(0..5)).map(|_| rng.random_range(0..2)).collect()))
                .collect();
            let fit = fit(&e, &xs, None).unwrap();
            let f_final = fit.trace.iterations.last().unwrap().objective;
            for nb in levenshtein_unit_sphere(&fit.lambda, 2) {
                let v = xs.iter().map(|s| levenshtein(s.symbols(), nb.symbols())).sum::<usize>() as f64 / n as f64;
                let f = objective_f(&e, &xs, &nb, v, DistanceKind::Levenshtein).unwrap();
                assert!(f <= f_final + 1e-9);
            }
        }
    }

    #[test]
    fn weighted_fit_ignores_zero_weight_strings() {
        let e = SphereEngine::new(2);
        let xs = bin(&["0011", "0011", "1111111"]);
        let a = fit(&e, &xs[..2], None).unwrap();
        let b = fit(&e, &xs, Some(&[0.5, 0.5, 0.0])).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.rho, b.rho);
    }
}
