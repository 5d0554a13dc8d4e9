//! Location and dispersion estimators for a single Laplace-like distribution.
//!
//! The location estimate under the extended Hamming metric is the truncated
//! consensus sequence: the per-site most frequent letter, cut at the first
//! site where the empty letter is (jointly) most frequent, and cut earlier
//! when a trailing run of sites has near-uniform nonempty-letter frequencies.

use crate::error::{Error, Result};
use crate::median_lev;
use crate::spheres::SphereEngine;
use crate::string_space::{DistanceKind, Str};

/// Default uniformity threshold for the truncated consensus.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Frequencies are compared with this slack when deciding ties.
const TIE_EPS: f64 = 1e-12;

/// Relative letter frequencies per site.
///
/// `rows[j - 1][h]` is the frequency of letter `h` at the 1-based site `j`;
/// the last column (`h = alphabet_size`) is the empty letter. There are
/// `max length + 1` rows, so the final row is always all-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteFrequencies {
    rows: Vec<Vec<f64>>,
    alphabet_size: usize,
}

impl SiteFrequencies {
    pub fn sites(&self) -> usize {
        self.rows.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Frequency at 1-based site `j` of letter `h` (`h == alphabet_size` is empty).
    pub fn get(&self, j: usize, h: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match self.rows.get(j - 1) {
            Some(row) => row[h],
            None => f64::from(u8::from(h == self.alphabet_size)),
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j - 1]
    }

    fn empty_index(&self) -> usize {
        self.alphabet_size
    }

    /// Most frequent letter at site `j` over the extended alphabet, ties to the smallest index.
    pub fn mode_letter(&self, j: usize) -> usize {
        let row = self.row(j);
        let mut best = 0;
        for h in 1..row.len() {
            if row[h] > row[best] + TIE_EPS {
                best = h;
            }
        }
        best
    }

    /// Spread `max - min` of the nonempty-letter frequencies at site `j`.
    pub fn nonempty_spread(&self, j: usize) -> f64 {
        let letters = &self.row(j)[..self.alphabet_size];
        let max = letters.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = letters.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }
}

pub fn site_frequencies(strings: &[Str], alphabet_size: usize) -> Result<SiteFrequencies> {
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sites = strings.iter().map(Str::len).max().unwrap_or(0) + 1;
    let mut counts = vec![vec![0usize; alphabet_size + 1]; sites];
    for s in strings {
        for (j, row) in counts.iter_mut().enumerate() {
            let h = s.get(j).map_or(alphabet_size, usize::from);
            if h > alphabet_size {
                return Err(Error::AlphabetMismatch { index: h, size: alphabet_size });
            }
            row[h] += 1;
        }
    }
    let n = strings.len() as f64;
    let rows = counts.into_iter().map(|r| r.into_iter().map(|c| c as f64 / n).collect()).collect();
    Ok(SiteFrequencies { rows, alphabet_size })
}

/// Frequencies where string `i` counts with weight `weights[i]`.
pub fn weighted_site_frequencies(strings: &[Str], weights: &[f64], alphabet_size: usize) -> Result<SiteFrequencies> {
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    if weights.len() != strings.len() {
        return Err(Error::InvalidParameter(format!(
            "{} weights for {} strings",
            weights.len(),
            strings.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 || weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::InvalidParameter("weights must be nonnegative with a positive sum".into()));
    }
    let sites = strings.iter().map(Str::len).max().unwrap_or(0) + 1;
    let mut sums = vec![vec![0.0f64; alphabet_size + 1]; sites];
    for (s, &w) in strings.iter().zip(weights) {
        for (j, row) in sums.iter_mut().enumerate() {
            let h = s.get(j).map_or(alphabet_size, usize::from);
            if h > alphabet_size {
                return Err(Error::AlphabetMismatch { index: h, size: alphabet_size });
            }
            row[h] += w;
        }
    }
    let rows = sums.into_iter().map(|r| r.into_iter().map(|c| c / total).collect()).collect();
    Ok(SiteFrequencies { rows, alphabet_size })
}

/// Number of leading sites whose most frequent letter is guaranteed nonempty.
///
/// A tie between the empty letter and a nonempty letter counts as the empty
/// letter attaining the maximum.
pub fn j_star(f: &SiteFrequencies) -> usize {
    let e = f.empty_index();
    (1..=f.sites())
        .find(|&j| {
            let row = f.row(j);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row[e] >= max - TIE_EPS
        })
        .map_or(f.sites(), |j| j - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Uniformity {
    pub held: bool,
    /// One less than the first site of the maximal trailing uniform run.
    pub j_eps: Option<usize>,
}

/// Evaluates the uniformity condition over sites `1..=j_star`.
///
/// It holds when some trailing run of sites ending at `j_star` has every
/// nonempty-letter spread below `epsilon`; the minimum includes letters that
/// never occur at the site.
pub fn condition_u_and_j_eps(f: &SiteFrequencies, j_star: usize, epsilon: f64) -> Result<Uniformity> {
    if j_star == 0 {
        return Err(Error::NoConsensusSite);
    }
    check_epsilon(epsilon)?;
    let mut start = None;
    for j in (1..=j_star).rev() {
        if f.nonempty_spread(j) < epsilon {
            start = Some(j);
        } else {
            break;
        }
    }
    Ok(Uniformity { held: start.is_some(), j_eps: start.map(|j| j - 1) })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// Truncated consensus computed from (possibly weighted) site frequencies.
pub fn consensus_from_frequencies(f: &SiteFrequencies, epsilon: f64) -> Result<(Str, usize, Option<Uniformity>)> {
    check_epsilon(epsilon)?;
    let js = j_star(f);
    if js == 0 {
        return Ok((Str::empty(), 0, None));
    }
    let u = condition_u_and_j_eps(f, js, epsilon)?;
    let len = if u.held { u.j_eps.unwrap_or(0) } else { js };
    let symbols = (1..=len).map(|j| f.mode_letter(j) as u8).collect();
    Ok((Str::new(symbols), js, Some(u)))
}

pub fn truncated_consensus(strings: &[Str], alphabet_size: usize, epsilon: f64) -> Result<Str> {
    let f = site_frequencies(strings, alphabet_size)?;
    consensus_from_frequencies(&f, epsilon).map(|(s, _, _)| s)
}

/// Mean distance of `strings` to `center`.
pub fn mad_around(strings: &[Str], center: &Str, metric: DistanceKind) -> Result<f64> {
    if strings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: usize = strings.iter().map(|s| metric.distance(s, center)).sum();
    Ok(total as f64 / strings.len() as f64)
}

/// `d · ln(ρ/(ρ+1))`, taking `0 · ln 0 = 0`.
pub(crate) fn decay_term(total_distance: f64, rho: f64) -> f64 {
    if total_distance == 0.0 {
        0.0
    } else {
        total_distance * (rho / (rho + 1.0)).ln()
    }
}

/// Location objective `F(λ, ρ) = -Σ ln|∂U(λ, d_i)| + ln(ρ/(ρ+1)) Σ d_i`.
pub fn objective_f(engine: &SphereEngine, strings: &[Str], lambda: &Str, rho: f64, metric: DistanceKind) -> Result<f64> {
    weighted_objective(engine, strings, None, lambda, rho, metric)
}

/// `F` with each string's terms scaled by its weight (unit weights when `None`).
pub fn weighted_objective(
    engine: &SphereEngine,
    strings: &[Str],
    weights: Option<&[f64]>,
    lambda: &Str,
    rho: f64,
    metric: DistanceKind,
) -> Result<f64> {
    let mut log_sizes = 0.0;
    let mut distance = 0.0;
    for (i, s) in strings.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        if w == 0.0 {
            continue;
        }
        let d = metric.distance(s, lambda);
        log_sizes += w * engine.log_sphere_size(metric, lambda, d)?;
        distance += w * d as f64;
    }
    Ok(-log_sizes + decay_term(distance, rho))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub lambda_hat: Str,
    pub rho_hat: f64,
    /// `F(lambda_hat, rho_hat)`.
    pub objective: f64,
    pub j_star: usize,
    pub j_epsilon: Option<usize>,
    pub u_condition_held: bool,
}

/// Fits one Laplace-like distribution.
///
/// Extended Hamming: truncated consensus and the mean distance around it.
/// Levenshtein: the median-then-hill-climb procedure in [`median_lev::fit`].
pub fn fit_laplace(engine: &SphereEngine, strings: &[Str], metric: DistanceKind, epsilon: f64) -> Result<FitReport> {
    let f = site_frequencies(strings, engine.alphabet_size())?;
    let (consensus, js, u) = consensus_from_frequencies(&f, epsilon)?;
    let (lambda_hat, rho_hat) = match metric {
        DistanceKind::ExtHamming => {
            let rho = mad_around(strings, &consensus, metric)?;
            (consensus, rho)
        }
        DistanceKind::Levenshtein => {
            let fit = median_lev::fit(engine, strings, None)?;
            (fit.lambda, fit.rho)
        }
    };
    let objective = objective_f(engine, strings, &lambda_hat, rho_hat, metric)?;
    Ok(FitReport {
        lambda_hat,
        rho_hat,
        objective,
        j_star: js,
        j_epsilon: u.and_then(|u| u.j_eps),
        u_condition_held: u.is_some_and(|u| u.held),
    })
}
