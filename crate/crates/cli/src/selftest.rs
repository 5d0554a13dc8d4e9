//! Oracle-backed consistency checks reported by `strlap selftest`.

use strlap::oracle::{enumerate_strings, symmetric_binary_example, Phi};
use strlap::spheres::{ext_hamming_sphere_size, levenshtein_sphere_size};
use strlap::{Alphabet, DistanceKind, LaplaceParams, SphereCaps, SphereEngine, SphereQuery, Str};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub detail: String,
    pub passed: bool,
}

fn value_check(name: &str, got: f64, want: f64) -> Check {
    Check {
        name: name.to_string(),
        detail: format!("{got} (expected {want})"),
        passed: (got - want).abs() <= 1e-12,
    }
}

pub fn run_checks() -> Vec<Check> {
    let mut out = Vec::new();
    let binary = Alphabet::from_letters("01").expect("binary alphabet");
    let engine = SphereEngine::new(2);
    let lev = DistanceKind::Levenshtein;
    let center = |t: &str| binary.parse(t).expect("binary text");

    for (r, want) in [(0, 1u32), (1, 7), (2, 17)] {
        let got = engine
            .sphere_size(&SphereQuery::new(center("00"), r, lev))
            .map(|n| n.to_string())
            .unwrap_or_else(|e| e.to_string());
        out.push(Check {
            name: format!("levenshtein sphere |dU(00, {r})|"),
            passed: got == want.to_string(),
            detail: format!("{got} (expected {want})"),
        });
    }

    let dist = symmetric_binary_example();
    for (c, want) in [("", 1.3), ("0", 0.975), ("00", 1.35)] {
        let got = dist.expected_distance(&center(c), lev);
        out.push(value_check(&format!("expected levenshtein distance around '{c}'"), got, want));
    }
    for (c, want) in [("", 2.8), ("0", 4.775), ("00", 11.0)] {
        let got = dist.expected_phi(&engine, &center(c), Phi::SphereSize, lev).unwrap_or(f64::NAN);
        out.push(value_check(&format!("expected sphere size around '{c}'"), got, want));
    }
    if let Ok((m, v)) = strlap::oracle::modified_median(&engine, &dist, Phi::SphereSize, lev) {
        out.push(Check {
            name: "sphere-size median of the example".into(),
            detail: format!("'{}' with value {v}", binary.render(&m)),
            passed: m.is_empty(),
        });
    }

    out.push(closed_form_check());
    out.push(automaton_check());
    out.push(normalization_check(&engine));
    out
}

fn brute_force_sphere(center: &Str, r: usize, a: usize, metric: DistanceKind) -> usize {
    enumerate_strings(a, center.len() + r)
        .expect("small space")
        .iter()
        .filter(|s| metric.distance(s, center) == r)
        .count()
}

fn closed_form_check() -> Check {
    let mut cases = 0;
    let mut mismatches = 0;
    for a in 1..=3 {
        for center in enumerate_strings(a, 3).expect("small space") {
            for r in 0..=4 {
                cases += 1;
                let want = brute_force_sphere(&center, r, a, DistanceKind::ExtHamming);
                if ext_hamming_sphere_size(center.len(), r, a) != want.into() {
                    mismatches += 1;
                }
            }
        }
    }
    Check {
        name: "ext-hamming closed form vs enumeration".into(),
        detail: format!("{} of {cases} cases agree", cases - mismatches),
        passed: mismatches == 0,
    }
}

fn automaton_check() -> Check {
    let caps = SphereCaps::default();
    let mut cases = 0;
    let mut mismatches = 0;
    for center in enumerate_strings(2, 3).expect("small space") {
        for r in 0..=2 {
            cases += 1;
            let want = brute_force_sphere(&center, r, 2, DistanceKind::Levenshtein);
            if levenshtein_sphere_size(center.symbols(), r, 2, &caps).ok() != Some(want.into()) {
                mismatches += 1;
            }
        }
    }
    Check {
        name: "levenshtein automaton vs enumeration".into(),
        detail: format!("{} of {cases} cases agree", cases - mismatches),
        passed: mismatches == 0,
    }
}

fn normalization_check(engine: &SphereEngine) -> Check {
    let params = LaplaceParams { lambda: Str::new(vec![0, 1]), rho: 0.5 };
    let metric = DistanceKind::ExtHamming;
    let radius_cap = 12;
    let mut mass = 0.0;
    for r in 0..=radius_cap {
        let q = SphereQuery::new(params.lambda.clone(), r, metric);
        let shell: f64 = engine
            .enumerate_sphere(&q)
            .map(|it| it.map(|s| strlap::laplace::pmf(engine, &s, &params, metric).unwrap_or(f64::NAN)).sum())
            .unwrap_or(f64::NAN);
        mass += shell;
    }
    let tail = (params.rho / (params.rho + 1.0)).powi(radius_cap as i32 + 1);
    Check {
        name: "pmf mass by sphere enumeration".into(),
        detail: format!("{mass} + tail {tail:e}"),
        passed: (mass + tail - 1.0).abs() <= 1e-10,
    }
}
