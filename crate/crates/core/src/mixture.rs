//! EM-style fitting of a k-component Laplace-like mixture and MAP clustering.
//!
//! One iteration computes posterior responsibilities (E-step), then mixing
//! weights as responsibility column means, locations, and dispersions as
//! responsibility-weighted mean distances. Under the extended Hamming metric
//! the location update is the responsibility-weighted truncated consensus;
//! under Levenshtein it is the weighted median hill climb with the previous
//! dispersion held fixed.
//!
//! Several chains are started from distance-spread seeds and the one with
//! the best weighted log-likelihood at the selection iteration `tau` wins.

use std::fmt;

use log::warn;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{consensus_from_frequencies, weighted_site_frequencies, DEFAULT_EPSILON};
use crate::laplace::{log_pmf_at_distance, LaplaceParams};
use crate::median_lev::{approx_set_median, hill_climb, RhoPolicy};
use crate::spheres::SphereEngine;
use crate::string_space::{DistanceKind, Str};

/// Smallest dispersion a mixture component may take.
pub const RHO_FLOOR: f64 = 1e-6;
/// Responsibility mass below which a component counts as vanished.
pub const DEGENERATE_MASS: f64 = 1e-12;
/// Allowed decrease of the weighted log-likelihood between iterations.
pub const MONOTONE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub pi: Vec<f64>,
    pub lambda: Vec<Str>,
    pub rho: Vec<f64>,
}

impl MixtureParams {
    pub fn new(pi: Vec<f64>, lambda: Vec<Str>, rho: Vec<f64>) -> Result<Self> {
        let p = MixtureParams { pi, lambda, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.pi.len();
        if k == 0 || self.lambda.len() != k || self.rho.len() != k {
            return Err(Error::InvalidParameter(format!(
                "mixture needs k >= 1 matching entries (pi {}, lambda {}, rho {})",
                self.pi.len(),
                self.lambda.len(),
                self.rho.len()
            )));
        }
        let sum: f64 = self.pi.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixing weights sum to {sum}")));
        }
        for (g, (&p, &r)) in self.pi.iter().zip(&self.rho).enumerate() {
            let p_ok = if k == 1 { p > 0.0 && p <= 1.0 } else { p > 0.0 && p < 1.0 };
            if !p_ok {
                return Err(Error::InvalidParameter(format!("mixing weight {g} is {p}")));
            }
            if !(r >= RHO_FLOOR && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("dispersion {g} is {r}, below {RHO_FLOOR}")));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn component(&self, g: usize) -> LaplaceParams {
        LaplaceParams { lambda: self.lambda[g].clone(), rho: self.rho[g] }
    }
}

/// Row-stochastic n x k matrix of posterior membership weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    n: usize,
    k: usize,
    data: Vec<f64>,
}

impl Responsibilities {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if n == 0 || k == 0 || rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter("responsibilities need n >= 1 rows of equal length k >= 1".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-10 || r.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidParameter(format!("responsibility row {i} is not stochastic")));
            }
        }
        Ok(Responsibilities { n, k, data: rows.into_iter().flatten().collect() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, g: usize) -> f64 {
        self.data[i * self.k + g]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    pub fn column(&self, g: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, g)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.k];
        for i in 0..self.n {
            for (g, s) in sums.iter_mut().enumerate() {
                *s += self.get(i, g);
            }
        }
        sums
    }

    fn check_columns(&self) -> Result<Vec<f64>> {
        let sums = self.column_sums();
        if let Some((g, &mass)) = sums.iter().enumerate().find(|(_, &m)| m < DEGENERATE_MASS) {
            return Err(Error::DegenerateComponent { component: g, mass });
        }
        Ok(sums)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub k: usize,
    pub metric: DistanceKind,
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol_pi: f64,
    pub tol_rho: f64,
    /// Require identical locations between iterations to declare convergence.
    pub tol_lambda_exact: bool,
    pub restarts: usize,
    /// Iteration at which chains are scored; `None` scores at the end.
    pub tau: Option<usize>,
    pub seed: u64,
}

impl FitConfig {
    pub fn new(k: usize, metric: DistanceKind) -> Self {
        FitConfig {
            k,
            metric,
            epsilon: DEFAULT_EPSILON,
            max_iters: 200,
            tol_pi: 1e-8,
            tol_rho: 1e-8,
            tol_lambda_exact: true,
            restarts: 8,
            tau: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if [self.epsilon, self.tol_pi, self.tol_rho].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return bad("epsilon and tolerances must be positive".into());
        }
        if self.restarts == 0 || self.max_iters == 0 {
            return bad("restarts and max_iters must be at least 1".into());
        }
        if self.tau.is_some_and(|t| t == 0 || t > self.max_iters) {
            return bad(format!("tau must lie in 1..={}", self.max_iters));
        }
        Ok(())
    }

    fn selection_iteration(&self) -> usize {
        self.tau.unwrap_or(self.max_iters)
    }
}

/// A within-chain decrease of the weighted log-likelihood beyond [`MONOTONE_SLACK`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub iteration: usize,
    pub previous: f64,
    pub current: f64,
    pub params: MixtureParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub restart: usize,
    /// Input indices used as initial locations.
    pub seed_indices: Vec<usize>,
    /// Weighted log-likelihood after each iteration (index 0 = iteration 1).
    pub loglik_trace: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    pub score: Option<f64>,
    pub violations: Vec<MonotonicityViolation>,
    /// Set when the chain was discarded.
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub params: MixtureParams,
    /// Posterior responsibilities under the final parameters.
    pub responsibilities: Responsibilities,
    pub weighted_loglik: f64,
    pub iters_used: usize,
    pub restart_index_chosen: usize,
    pub converged: bool,
    pub chains: Vec<ChainReport>,
}

/// Posterior component probabilities for each string.
pub fn e_step(engine: &SphereEngine, strings: &[Str], params: &MixtureParams, metric: DistanceKind) -> Result<Responsibilities> {
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let k = params.k();
    let log_pi: Vec<f64> = params.pi.iter().map(|p| p.ln()).collect();
    let rows: Vec<Result<Vec<f64>>> = strings
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut logs = Vec::with_capacity(k);
            for (g, lpi) in log_pi.iter().enumerate() {
                let d = metric.distance(s, &params.lambda[g]);
                let lp = log_pmf_at_distance(engine, &params.lambda[g], params.rho[g], d, metric)? + lpi;
                if !lp.is_finite() {
                    return Err(Error::NonFiniteDensity { index: i, component: g });
                }
                logs.push(lp);
            }
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logs.iter().map(|l| (l - top).exp()).sum();
            let lse = top + total.ln();
            Ok(logs.into_iter().map(|l| (l - lse).exp()).collect())
        })
        .collect();
    let data = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    Ok(Responsibilities { n: strings.len(), k, data })
}

/// Column means of the responsibilities.
pub fn m_step_pi(zeta: &Responsibilities) -> Vec<f64> {
    let sums = zeta.column_sums();
    let total: f64 = sums.iter().sum();
    sums.into_iter().map(|s| s / total).collect()
}

/// Per-component location update.
pub fn m_step_lambda(
    engine: &SphereEngine,
    strings: &[Str],
    zeta: &Responsibilities,
    metric: DistanceKind,
    epsilon: f64,
    rho_prev: &[f64],
) -> Result<Vec<Str>> {
    zeta.check_columns()?;
    (0..zeta.k())
        .map(|g| {
            let w = zeta.column(g);
            match metric {
                DistanceKind::ExtHamming => {
                    let f = weighted_site_frequencies(strings, &w, engine.alphabet_size())?;
                    consensus_from_frequencies(&f, epsilon).map(|(s, _, _)| s)
                }
                DistanceKind::Levenshtein => {
                    let start = approx_set_median(strings, Some(&w), engine.alphabet_size())?;
                    hill_climb(engine, strings, Some(&w), start, RhoPolicy::Fixed(rho_prev[g])).map(|f| f.lambda)
                }
            }
        })
        .collect()
}

/// Responsibility-weighted mean distances, floored at [`RHO_FLOOR`].
pub fn m_step_rho(strings: &[Str], zeta: &Responsibilities, lambdas: &[Str], metric: DistanceKind) -> Result<Vec<f64>> {
    let sums = zeta.check_columns()?;
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(g, lambda)| {
            let weighted: f64 = strings
                .iter()
                .enumerate()
                .map(|(i, s)| zeta.get(i, g) * metric.distance(s, lambda) as f64)
                .sum();
            (weighted / sums[g]).max(RHO_FLOOR)
        })
        .collect())
}

/// `(1/n) Σ_i Σ_g ζ_ig ln q(s_i; λ_g, ρ_g)`.
pub fn weighted_loglik(
    engine: &SphereEngine,
    strings: &[Str],
    zeta: &Responsibilities,
    params: &MixtureParams,
    metric: DistanceKind,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, s) in strings.iter().enumerate() {
        for g in 0..params.k() {
            let z = zeta.get(i, g);
            if z == 0.0 {
                continue;
            }
            let d = metric.distance(s, &params.lambda[g]);
            total += z * log_pmf_at_distance(engine, &params.lambda[g], params.rho[g], d, metric)?;
        }
    }
    Ok(total / strings.len() as f64)
}

/// SplitMix64 finalizer over `master + stream * golden`, for independent sub-streams.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Picks `k` distinct seed strings: the first uniformly, each next one with
/// probability proportional to its squared distance from the nearest seed.
fn spread_seeds(strings: &[Str], k: usize, metric: DistanceKind, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let n = strings.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<usize> = strings.iter().map(|s| metric.distance(s, &strings[chosen[0]])).collect();
    while chosen.len() < k {
        let weights: Vec<f64> = nearest.iter().map(|&d| (d * d) as f64).collect();
        let Ok(pick) = WeightedIndex::new(&weights).map(|w| w.sample(rng)) else {
            return Err(Error::InvalidParameter(format!("fewer than {k} distinct strings to seed components")));
        };
        chosen.push(pick);
        for (i, s) in strings.iter().enumerate() {
            nearest[i] = nearest[i].min(metric.distance(s, &strings[pick]));
        }
    }
    Ok(chosen)
}

struct ChainOutcome {
    report: ChainReport,
    params: Option<MixtureParams>,
}

fn run_chain(engine: &SphereEngine, strings: &[Str], config: &FitConfig, restart: usize) -> ChainOutcome {
    let mut report = ChainReport {
        restart,
        seed_indices: Vec::new(),
        loglik_trace: Vec::new(),
        iters: 0,
        converged: false,
        score: None,
        violations: Vec::new(),
        failure: None,
    };
    match chain_body(engine, strings, config, &mut report) {
        Ok(params) => ChainOutcome { report, params: Some(params) },
        Err(e) => {
            warn!("restart chain {restart} discarded: {e}");
            report.failure = Some(e);
            ChainOutcome { report, params: None }
        }
    }
}

fn chain_body(engine: &SphereEngine, strings: &[Str], config: &FitConfig, report: &mut ChainReport) -> Result<MixtureParams> {
    let metric = config.metric;
    let k = config.k;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, report.restart as u64));
    let seeds = spread_seeds(strings, k, metric, &mut rng)?;
    let lambda: Vec<Str> = seeds.iter().map(|&i| strings[i].clone()).collect();
    let spread: f64 = strings
        .iter()
        .map(|s| lambda.iter().map(|l| metric.distance(s, l)).min().unwrap_or(0) as f64)
        .sum::<f64>()
        / strings.len() as f64;
    report.seed_indices = seeds;
    let mut params = MixtureParams {
        pi: vec![1.0 / k as f64; k],
        lambda,
        rho: vec![spread.max(RHO_FLOOR); k],
    };
    let select_at = config.selection_iteration();

    for t in 1..=config.max_iters {
        let zeta = e_step(engine, strings, &params, metric)?;
        let pi = m_step_pi(&zeta);
        let lambda = m_step_lambda(engine, strings, &zeta, metric, config.epsilon, &params.rho)?;
        let rho = m_step_rho(strings, &zeta, &lambda, metric)?;
        let next = MixtureParams { pi, lambda, rho };
        let ll = weighted_loglik(engine, strings, &zeta, &next, metric)?;

        if let Some(&prev) = report.loglik_trace.last() {
            if ll < prev - MONOTONE_SLACK {
                warn!(
                    "restart {} iteration {t}: weighted log-likelihood fell from {prev} to {ll} (pi {:?}, rho {:?}, lambda {:?})",
                    report.restart, next.pi, next.rho, next.lambda
                );
                report.violations.push(MonotonicityViolation {
                    iteration: t,
                    previous: prev,
                    current: ll,
                    params: next.clone(),
                });
            }
        }
        report.loglik_trace.push(ll);
        report.iters = t;

        let max_dpi = next.pi.iter().zip(&params.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let max_drho = next.rho.iter().zip(&params.rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let same_lambda = !config.tol_lambda_exact || next.lambda == params.lambda;
        let converged = max_dpi < config.tol_pi && max_drho < config.tol_rho && same_lambda;
        params = next;

        if t == select_at || (converged && report.score.is_none()) {
            report.score.get_or_insert(ll);
        }
        if converged {
            report.converged = true;
            break;
        }
    }
    if report.score.is_none() {
        report.score = report.loglik_trace.last().copied();
    }
    // Column means of a row-stochastic matrix sum to one only up to rounding.
    let total: f64 = params.pi.iter().sum();
    params.pi.iter_mut().for_each(|p| *p /= total);
    params.validate()?;
    Ok(params)
}

/// Runs `config.restarts` independent chains and keeps the best-scoring one.
pub fn fit(engine: &SphereEngine, strings: &[Str], config: &FitConfig) -> Result<MixtureFit> {
    config.validate()?;
    if strings.len() < config.k {
        return Err(Error::InvalidParameter(format!(
            "{} strings cannot support {} components",
            strings.len(),
            config.k
        )));
    }
    let outcomes: Vec<ChainOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_chain(engine, strings, config, r))
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let (Some(_), Some(score)) = (&o.params, o.report.score) {
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
    }
    let Some((chosen, _)) = best else {
        return Err(Error::AllChainsDegenerate { chains: config.restarts });
    };
    let params = outcomes[chosen].params.clone().expect("chosen chain succeeded");
    let responsibilities = e_step(engine, strings, &params, config.metric)?;
    let weighted_loglik = weighted_loglik(engine, strings, &responsibilities, &params, config.metric)?;
    let chain = &outcomes[chosen].report;
    Ok(MixtureFit {
        iters_used: chain.iters,
        converged: chain.converged,
        restart_index_chosen: chosen,
        params,
        responsibilities,
        weighted_loglik,
        chains: outcomes.into_iter().map(|o| o.report).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub component: usize,
    pub posterior: Vec<f64>,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.component)?;
        for p in &self.posterior {
            write!(f, ",{p}")?;
        }
        Ok(())
    }
}

/// Assigns each string to its maximum-posterior component (ties to the lowest index).
pub fn map_cluster(engine: &SphereEngine, strings: &[Str], params: &MixtureParams, metric: DistanceKind) -> Result<Vec<Assignment>> {
    let zeta = e_step(engine, strings, params, metric)?;
    Ok((0..zeta.n())
        .map(|i| {
            let row = zeta.row(i);
            let mut component = 0;
            for g in 1..row.len() {
                if row[g] > row[component] {
                    component = g;
                }
            }
            Assignment { component, posterior: row.to_vec() }
        })
        .collect())
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings must cover the same items");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let pairs = |c: u64| (c * c.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(n as u64);
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
