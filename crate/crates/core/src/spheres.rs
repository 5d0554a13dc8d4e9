//! Exact sizes and enumeration of metric spheres `{t : d(center, t) = r}`.
//!
//! Under the extended Hamming metric the sphere size depends on the center
//! only through its length. Splitting the sphere by target length `m`:
//!
//! * `m >= L`: `k` substitutions inside the center plus `m - L` appended
//!   letters, `k + (m - L) = r`, giving `C(L, k) (a-1)^k a^(m-L)` strings;
//! * `m <  L`: truncation by `L - m` plus `k` substitutions in the kept prefix,
//!   `k + (L - m) = r`, giving `C(m, k) (a-1)^k` strings.
//!
//! Levenshtein spheres are counted by walking the deterministic Levenshtein
//! automaton of the center (DP rows clamped at `r + 1`) over all strings,
//! tallying the number of words reaching each final distance.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::string_space::{DistanceKind, Str};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereCaps {
    /// Largest radius counted with the Levenshtein automaton.
    pub max_lev_radius: usize,
    /// Largest `|center| + radius` for Levenshtein work.
    pub max_lev_length: usize,
    /// Largest number of live automaton states per string length.
    pub max_lev_states: usize,
    /// Largest sphere materialized by enumeration (Levenshtein only).
    pub max_enumeration: u64,
}

impl Default for SphereCaps {
    fn default() -> Self {
        SphereCaps {
            max_lev_radius: 32,
            max_lev_length: 256,
            max_lev_states: 2_000_000,
            max_enumeration: 1 << 22,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SphereQuery {
    pub center: Str,
    pub radius: usize,
    pub metric: DistanceKind,
}

impl SphereQuery {
    pub fn new(center: Str, radius: usize, metric: DistanceKind) -> Self {
        SphereQuery { center, radius, metric }
    }
}

/// One target-length stratum of an extended-Hamming sphere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratum {
    /// Length of the strings in this stratum.
    pub length: usize,
    /// Substitutions inside the shared prefix `min(length, L)`.
    pub substitutions: usize,
    pub count: BigUint,
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Strata of the sphere of radius `radius` around any center of length `center_len`.
pub fn ext_hamming_strata(center_len: usize, radius: usize, alphabet_size: usize) -> Vec<Stratum> {
    let a = alphabet_size;
    let lo = center_len.saturating_sub(radius);
    let mut out = Vec::new();
    for m in lo..=center_len + radius {
        let (prefix, k) = if m >= center_len {
            let tail = m - center_len;
            (center_len, radius - tail)
        } else {
            (m, radius - (center_len - m))
        };
        if k > prefix {
            continue;
        }
        let tail = m.saturating_sub(center_len);
        let count = binomial(prefix, k) * BigUint::from(a - 1).pow(k as u32) * BigUint::from(a).pow(tail as u32);
        if !count.is_zero() {
            out.push(Stratum { length: m, substitutions: k, count });
        }
    }
    out
}

/// Exact `|∂U(center, radius)|` under the extended Hamming metric.
pub fn ext_hamming_sphere_size(center_len: usize, radius: usize, alphabet_size: usize) -> BigUint {
    ext_hamming_strata(center_len, radius, alphabet_size).into_iter().map(|s| s.count).sum()
}

/// Natural log of a (possibly huge) positive integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn lev_step(center: &[u8], row: &[u8], x: u8, clamp: u8, out: &mut Vec<u8>) {
    out.clear();
    out.push(row[0].saturating_add(1).min(clamp));
    for i in 1..row.len() {
        let sub = row[i - 1] + u8::from(center[i - 1] != x);
        let v = sub.min(row[i] + 1).min(out[i - 1] + 1).min(clamp);
        out.push(v);
    }
}

fn lev_initial_row(center_len: usize, clamp: u8) -> Vec<u8> {
    (0..=center_len).map(|i| (i.min(clamp as usize)) as u8).collect()
}

fn check_lev_caps(center_len: usize, radius: usize, caps: &SphereCaps) -> Result<()> {
    if radius > caps.max_lev_radius || radius > 250 {
        return Err(Error::CapExceeded(format!(
            "Levenshtein radius {radius} exceeds cap {}",
            caps.max_lev_radius
        )));
    }
    if center_len + radius > caps.max_lev_length {
        return Err(Error::CapExceeded(format!(
            "Levenshtein center length {center_len} + radius {radius} exceeds cap {}",
            caps.max_lev_length
        )));
    }
    Ok(())
}

/// Sphere sizes `|∂U_L(center, r)|` for `r = 0..=max_radius`.
///
/// Each sphere size is taken as the difference of consecutive ball counts,
/// where a ball count is the number of accepted words of length at most
/// `|center| + r` in the clamped automaton.
pub fn levenshtein_sphere_profile(
    center: &[u8],
    alphabet_size: usize,
    max_radius: usize,
    caps: &SphereCaps,
) -> Result<Vec<BigUint>> {
    check_lev_caps(center.len(), max_radius, caps)?;
    let clamp = (max_radius + 1) as u8;
    let last = center.len();
    // balls[r] accumulates strings with distance <= r.
    let mut exact = vec![BigUint::zero(); max_radius + 1];
    let mut states: HashMap<Vec<u8>, BigUint> = HashMap::new();
    states.insert(lev_initial_row(center.len(), clamp), BigUint::one());
    let mut scratch = Vec::with_capacity(center.len() + 1);
    while !states.is_empty() {
        for (row, count) in &states {
            let d = row[last] as usize;
            if d <= max_radius {
                exact[d] += count;
            }
        }
        let mut next: HashMap<Vec<u8>, BigUint> = HashMap::with_capacity(states.len() * 2);
        for (row, count) in &states {
            for x in 0..alphabet_size as u8 {
                lev_step(center, row, x, clamp, &mut scratch);
                if scratch.iter().all(|&v| v > max_radius as u8) {
                    continue;
                }
                match next.get_mut(scratch.as_slice()) {
                    Some(c) => *c += count,
                    None => {
                        next.insert(scratch.clone(), count.clone());
                    }
                }
            }
        }
        if next.len() > caps.max_lev_states {
            return Err(Error::CapExceeded(format!(
                "Levenshtein automaton exceeded {} live states",
                caps.max_lev_states
            )));
        }
        states = next;
    }
    let mut balls = Vec::with_capacity(exact.len());
    let mut acc = BigUint::zero();
    for e in &exact {
        acc += e;
        balls.push(acc.clone());
    }
    let mut spheres = Vec::with_capacity(balls.len());
    for r in 0..balls.len() {
        let below = if r == 0 { BigUint::zero() } else { balls[r - 1].clone() };
        spheres.push(&balls[r] - below);
    }
    Ok(spheres)
}

/// Exact `|∂U_L(center, radius)|` via the automaton.
pub fn levenshtein_sphere_size(center: &[u8], radius: usize, alphabet_size: usize, caps: &SphereCaps) -> Result<BigUint> {
    let mut profile = levenshtein_sphere_profile(center, alphabet_size, radius, caps)?;
    Ok(profile.pop().unwrap_or_default())
}

/// All strings at Levenshtein distance exactly 1 from `center`, in shortlex order.
pub fn levenshtein_unit_sphere(center: &Str, alphabet_size: usize) -> Vec<Str> {
    let c = center.symbols();
    let mut out: Vec<Str> = Vec::with_capacity((2 * c.len() + 1) * alphabet_size);
    for i in 0..c.len() {
        let mut v = c.to_vec();
        v.remove(i);
        out.push(Str::new(v));
        for x in 0..alphabet_size as u8 {
            if x != c[i] {
                let mut v = c.to_vec();
                v[i] = x;
                out.push(Str::new(v));
            }
        }
    }
    for i in 0..=c.len() {
        for x in 0..alphabet_size as u8 {
            let mut v = c.to_vec();
            v.insert(i, x);
            out.push(Str::new(v));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Mixed-radix counter over `bases`; yields one empty vector when `bases` is empty.
fn odometer(bases: Vec<usize>) -> impl Iterator<Item = Vec<usize>> + Send {
    let start = if bases.iter().all(|&b| b > 0) { Some(vec![0; bases.len()]) } else { None };
    std::iter::successors(start, move |cur| {
        let mut next = cur.clone();
        for i in (0..bases.len()).rev() {
            next[i] += 1;
            if next[i] < bases[i] {
                return Some(next);
            }
            next[i] = 0;
        }
        None
    })
}

fn ext_hamming_sphere_iter(center: Str, radius: usize, alphabet_size: usize) -> impl Iterator<Item = Str> + Send {
    let strata = ext_hamming_strata(center.len(), radius, alphabet_size);
    let center_len = center.len();
    strata.into_iter().flat_map(move |st| {
        let center = center.clone();
        let prefix = st.length.min(center_len);
        let tail = st.length.saturating_sub(center_len);
        let k = st.substitutions;
        (0..prefix).combinations(k).flat_map(move |positions| {
            let center = center.clone();
            let mut bases = vec![alphabet_size - 1; k];
            bases.extend(std::iter::repeat_n(alphabet_size, tail));
            odometer(bases).map(move |digits| {
                let mut v: Vec<u8> = center.symbols()[..prefix].to_vec();
                for (&p, &d) in positions.iter().zip(&digits) {
                    let orig = v[p] as usize;
                    v[p] = if d < orig { d as u8 } else { (d + 1) as u8 };
                }
                v.extend(digits[k..].iter().map(|&d| d as u8));
                Str::new(v)
            })
        })
    })
}

fn levenshtein_sphere_collect(center: &Str, radius: usize, alphabet_size: usize) -> Vec<Str> {
    let c = center.symbols();
    let clamp = (radius + 1) as u8;
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<u8>, Vec<u8>)> = vec![(Vec::new(), lev_initial_row(c.len(), clamp))];
    let mut scratch = Vec::with_capacity(c.len() + 1);
    while let Some((prefix, row)) = stack.pop() {
        if row[c.len()] as usize == radius {
            out.push(Str::new(prefix.clone()));
        }
        for x in (0..alphabet_size as u8).rev() {
            lev_step(c, &row, x, clamp, &mut scratch);
            if scratch.iter().all(|&v| v > radius as u8) {
                continue;
            }
            let mut p = prefix.clone();
            p.push(x);
            stack.push((p, scratch.clone()));
        }
    }
    out.sort();
    out
}

struct LevProfile {
    sizes: Vec<BigUint>,
    logs: Vec<f64>,
}

/// Sphere-size engine for a fixed alphabet size, memoizing counts across radii.
///
/// Safe to share between threads; caches use interior read/write locks.
pub struct SphereEngine {
    alphabet_size: usize,
    caps: SphereCaps,
    hamming: RwLock<HashMap<(usize, usize), f64>>,
    levenshtein: RwLock<HashMap<Str, Arc<LevProfile>>>,
}

impl std::fmt::Debug for SphereEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphereEngine")
            .field("alphabet_size", &self.alphabet_size)
            .field("caps", &self.caps)
            .finish_non_exhaustive()
    }
}

impl SphereEngine {
    pub fn new(alphabet_size: usize) -> Self {
        Self::with_caps(alphabet_size, SphereCaps::default())
    }

    pub fn with_caps(alphabet_size: usize, caps: SphereCaps) -> Self {
        assert!(alphabet_size >= 1, "alphabet must have at least one letter");
        SphereEngine {
            alphabet_size,
            caps,
            hamming: RwLock::new(HashMap::new()),
            levenshtein: RwLock::new(HashMap::new()),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn caps(&self) -> &SphereCaps {
        &self.caps
    }

    fn lev_profile(&self, center: &Str, radius: usize) -> Result<Arc<LevProfile>> {
        if let Some(p) = self.levenshtein.read().unwrap().get(center) {
            if p.sizes.len() > radius {
                return Ok(Arc::clone(p));
            }
        }
        // Grow geometrically so repeated requests for slowly increasing radii stay cheap.
        let cached = self.levenshtein.read().unwrap().get(center).map_or(0, |p| p.sizes.len());
        let limit = self.caps.max_lev_radius.min(self.caps.max_lev_length.saturating_sub(center.len()));
        let target = if radius <= limit { radius.max((2 * cached).min(limit)) } else { radius };
        let sizes = levenshtein_sphere_profile(center.symbols(), self.alphabet_size, target, &self.caps)?;
        let logs = sizes.iter().map(ln_biguint).collect();
        let profile = Arc::new(LevProfile { sizes, logs });
        self.levenshtein.write().unwrap().insert(center.clone(), Arc::clone(&profile));
        Ok(profile)
    }

    pub fn sphere_size(&self, query: &SphereQuery) -> Result<BigUint> {
        match query.metric {
            DistanceKind::ExtHamming => Ok(ext_hamming_sphere_size(query.center.len(), query.radius, self.alphabet_size)),
            DistanceKind::Levenshtein => Ok(self.lev_profile(&query.center, query.radius)?.sizes[query.radius].clone()),
        }
    }

    pub fn ball_size(&self, query: &SphereQuery) -> Result<BigUint> {
        match query.metric {
            DistanceKind::ExtHamming => Ok((0..=query.radius)
                .map(|r| ext_hamming_sphere_size(query.center.len(), r, self.alphabet_size))
                .sum()),
            DistanceKind::Levenshtein => {
                let p = self.lev_profile(&query.center, query.radius)?;
                Ok(p.sizes[..=query.radius].iter().sum())
            }
        }
    }

    /// `ln |∂U(center, radius)|`, memoized.
    pub fn log_sphere_size(&self, metric: DistanceKind, center: &Str, radius: usize) -> Result<f64> {
        match metric {
            DistanceKind::ExtHamming => {
                let key = (center.len(), radius);
                if let Some(&v) = self.hamming.read().unwrap().get(&key) {
                    return Ok(v);
                }
                let v = ln_biguint(&ext_hamming_sphere_size(center.len(), radius, self.alphabet_size));
                self.hamming.write().unwrap().insert(key, v);
                Ok(v)
            }
            DistanceKind::Levenshtein => Ok(self.lev_profile(center, radius)?.logs[radius]),
        }
    }

    /// Yields every string at exactly the queried distance, once.
    ///
    /// Extended-Hamming spheres are generated constructively and lazily.
    /// Levenshtein spheres are materialized (shortlex order) and must fit
    /// within `max_enumeration`.
    pub fn enumerate_sphere(&self, query: &SphereQuery) -> Result<Box<dyn Iterator<Item = Str> + Send>> {
        match query.metric {
            DistanceKind::ExtHamming => Ok(Box::new(ext_hamming_sphere_iter(
                query.center.clone(),
                query.radius,
                self.alphabet_size,
            ))),
            DistanceKind::Levenshtein => {
                let size = self.sphere_size(query)?;
                if size > BigUint::from(self.caps.max_enumeration) {
                    return Err(Error::CapExceeded(format!(
                        "Levenshtein sphere of {size} strings exceeds enumeration cap {}",
                        self.caps.max_enumeration
                    )));
                }
                let items = if query.radius == 1 {
                    levenshtein_unit_sphere(&query.center, self.alphabet_size)
                } else {
                    levenshtein_sphere_collect(&query.center, query.radius, self.alphabet_size)
                };
                Ok(Box::new(items.into_iter()))
            }
        }
    }
}
