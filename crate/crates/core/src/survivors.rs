//! Survivor analysis for certificate candidates drawn uniformly without
//! replacement from a finite population `Q`.
//!
//! A hypothesis with `E` error points in `Q` survives `m` draws with
//! probability `C(Q-E, m) / C(Q, m)`.
//!
//! # Error-profile files
//!
//! ```text
//! population 1024
//! domain addition n=3
//! # id count [points]
//! g0 120 5,9,13
//! g1 4
//! ```
//!
//! Point lists are optional; when present their length must equal the count.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::boolfn::disagreement_set;
use crate::circuit::truth_table;
use crate::deceiver::{addition_deceiver, addition_error_count, addition_operands, addition_recognizer, DeceiverError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurvivorError {
    #[error("sample size {m} exceeds population {population}")]
    SampleTooLarge { m: u128, population: u128 },
    #[error("hypothesis `{id}` has {count} errors in a population of {population}")]
    CountTooLarge { id: String, count: u128, population: u128 },
    #[error("hypothesis `{id}` lists {listed} points but declares {count}")]
    CountMismatch { id: String, listed: usize, count: u128 },
    #[error("hypothesis `{id}` lists point {point} outside the population or twice")]
    BadPoint { id: String, point: u64 },
    #[error("exact evaluation would need {0} factors; use the floating-point path")]
    ExactTooLarge(u128),
    #[error("profile has no explicit error sets")]
    NoExplicitSets,
    #[error("subset of size {subset} is larger than the population {population}")]
    BadSubset { subset: u128, population: u128 },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Deceiver(#[from] DeceiverError),
}

fn check(q: u128, m: u128) -> Result<(), SurvivorError> {
    if m > q {
        return Err(SurvivorError::SampleTooLarge { m, population: q });
    }
    Ok(())
}

/// Default cap on the number of factors in exact evaluation.
pub const EXACT_FACTOR_LIMIT: u128 = 1 << 16;

/// Exact survival probability as a reduced fraction.
///
/// Uses `C(Q-E,m)/C(Q,m) = Π_{i<k} (Q-L-i)/(Q-i)` with `k = min(m,E)` and
/// `L = max(m,E)`.
pub fn survival_probability_exact(q: u128, e: u128, m: u128) -> Result<BigRational, SurvivorError> {
    check(q, m)?;
    let e = e.min(q);
    let (k, l) = (m.min(e), m.max(e));
    if q - e < m {
        return Ok(BigRational::zero());
    }
    if k > EXACT_FACTOR_LIMIT {
        return Err(SurvivorError::ExactTooLarge(k));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(q - l - i);
        den *= BigInt::from(q - i);
    }
    Ok(BigRational::new(num, den))
}

/// Terms summed directly before switching to Euler–Maclaurin.
const DIRECT_TERMS: u128 = 1 << 24;

fn kahan_sum(iter: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in iter {
        let y = v - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

fn ln_survival_with(q: u128, e: u128, m: u128, direct: u128) -> f64 {
    let e = e.min(q);
    let (k, l) = (m.min(e), m.max(e));
    if k == 0 {
        return 0.0;
    }
    if q - e < m {
        return f64::NEG_INFINITY;
    }
    let (qf, lf) = (q as f64, l as f64);
    if k <= direct {
        return kahan_sum((0..k).map(|i| (-lf / (q - i) as f64).ln_1p()));
    }
    // Σ_{i=0}^{K} g(i), g(s) = ln(1 - L/(Q-s)), by Euler–Maclaurin.
    let kf = (k - 1) as f64;
    let g = |s: f64| (-lf / (qf - s)).ln_1p();
    let g1 = |s: f64| -lf / ((qf - s) * (qf - s - lf));
    let g3 = |s: f64| -2.0 / (qf - s - lf).powi(3) + 2.0 / (qf - s).powi(3);
    let rest = qf - kf;
    let ratio = lf / rest;
    let integral = if ratio <= 0.5 {
        // -Σ_j L^j/j ∫_{Q-K}^{Q} u^{-j} du, a geometric-rate series.
        let lk = (-kf / qf).ln_1p();
        let mut total = -lf * -lk;
        let mut j = 2i32;
        loop {
            let ij = rest.powi(1 - j) * -((j - 1) as f64 * lk).exp_m1() / (j - 1) as f64;
            let term = lf.powi(j) / j as f64 * ij;
            total -= term;
            if term.abs() <= 1e-18 * total.abs() || j > 400 {
                break;
            }
            j += 1;
        }
        total
    } else {
        let f = |u: f64| (u - lf) * (u - lf).ln() - u * u.ln();
        f(qf) - f(rest)
    };
    integral + (g(0.0) + g(kf)) / 2.0 + (g1(kf) - g1(0.0)) / 12.0 - (g3(kf) - g3(0.0)) / 720.0
}

/// Natural log of the survival probability (`-inf` when it is 0).
pub fn ln_survival_probability(q: u128, e: u128, m: u128) -> Result<f64, SurvivorError> {
    check(q, m)?;
    Ok(ln_survival_with(q, e, m, DIRECT_TERMS))
}

/// Survival probability in floating point, computed in log space.
pub fn survival_probability(q: u128, e: u128, m: u128) -> Result<f64, SurvivorError> {
    Ok(ln_survival_probability(q, e, m)?.exp())
}

/// Pairwise (tree) sum in index order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        len => {
            let (a, b) = v.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub id: String,
    pub count: u128,
    /// Sorted error points, when known.
    pub points: Option<Vec<u64>>,
}

/// Error counts (and optionally error points) of candidate hypotheses over
/// a finite population.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorProfile {
    pub population: u128,
    pub domain: String,
    pub entries: Vec<ProfileEntry>,
}

impl ErrorProfile {
    pub fn new(population: u128, domain: impl Into<String>, entries: Vec<ProfileEntry>) -> Result<Self, SurvivorError> {
        let mut entries = entries;
        for e in &mut entries {
            if e.count > population {
                return Err(SurvivorError::CountTooLarge {
                    id: e.id.clone(),
                    count: e.count,
                    population,
                });
            }
            if let Some(pts) = &mut e.points {
                pts.sort_unstable();
                if pts.len() as u128 != e.count {
                    return Err(SurvivorError::CountMismatch {
                        id: e.id.clone(),
                        listed: pts.len(),
                        count: e.count,
                    });
                }
                let bad = pts
                    .windows(2)
                    .find(|w| w[0] == w[1])
                    .map(|w| w[0])
                    .or_else(|| pts.last().copied().filter(|&p| p as u128 >= population));
                if let Some(point) = bad {
                    return Err(SurvivorError::BadPoint {
                        id: e.id.clone(),
                        point,
                    });
                }
            }
        }
        Ok(ErrorProfile {
            population,
            domain: domain.into(),
            entries,
        })
    }

    /// A profile of counts only.
    pub fn from_counts(population: u128, domain: impl Into<String>, counts: &[u128]) -> Result<Self, SurvivorError> {
        let entries = counts
            .iter()
            .enumerate()
            .map(|(i, &count)| ProfileEntry {
                id: format!("h{i}"),
                count,
                points: None,
            })
            .collect();
        Self::new(population, domain, entries)
    }

    pub fn has_explicit_sets(&self) -> bool {
        self.entries.iter().all(|e| e.points.is_some())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self, SurvivorError> {
        let perr = |line: usize, msg: String| SurvivorError::Parse { line, msg };
        let mut population = None;
        let mut domain = String::new();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or("");
            match head {
                "population" => {
                    let v = toks.next().ok_or_else(|| perr(ln, "missing population size".into()))?;
                    population = Some(parse_size(v).ok_or_else(|| perr(ln, format!("bad population `{v}`")))?);
                }
                "domain" => domain = toks.collect::<Vec<_>>().join(" "),
                id => {
                    let c = toks
                        .next()
                        .ok_or_else(|| perr(ln, format!("missing count for `{id}`")))?;
                    let count: u128 = c.parse().map_err(|_| perr(ln, format!("bad count `{c}`")))?;
                    let points = toks
                        .next()
                        .map(|p| {
                            p.trim_matches(|c| c == '[' || c == ']')
                                .split(',')
                                .filter(|s| !s.is_empty())
                                .map(|s| s.parse::<u64>().map_err(|_| perr(ln, format!("bad point `{s}`"))))
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .transpose()?;
                    entries.push(ProfileEntry {
                        id: id.to_string(),
                        count,
                        points,
                    });
                }
            }
        }
        let population = population.ok_or_else(|| perr(0, "missing `population` line".into()))?;
        Self::new(population, domain, entries)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("population {}\n", self.population);
        if !self.domain.is_empty() {
            let _ = writeln!(s, "domain {}", self.domain);
        }
        for e in &self.entries {
            let _ = write!(s, "{} {}", e.id, e.count);
            if let Some(p) = &e.points {
                let list: Vec<String> = p.iter().map(u64::to_string).collect();
                let _ = write!(s, " {}", list.join(","));
            }
            s.push('\n');
        }
        s
    }
}

/// Accepts decimal or `2^k`.
fn parse_size(s: &str) -> Option<u128> {
    match s.strip_prefix("2^") {
        Some(k) => k.parse::<u32>().ok().filter(|&k| k < 128).map(|k| 1u128 << k),
        None => s.parse().ok(),
    }
}

/// `Σ_h p_h(m)`; terms in parallel, combined by a pairwise sum in profile
/// order so the result does not depend on scheduling.
pub fn expected_survivors(profile: &ErrorProfile, m: u128) -> Result<f64, SurvivorError> {
    check(profile.population, m)?;
    let q = profile.population;
    let terms: Vec<f64> = profile
        .entries
        .par_iter()
        .map(|e| ln_survival_with(q, e.count, m, DIRECT_TERMS).exp())
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Exact `Σ_h p_h(m)`.
pub fn expected_survivors_exact(profile: &ErrorProfile, m: u128) -> Result<BigRational, SurvivorError> {
    let mut total = BigRational::zero();
    for e in &profile.entries {
        total += survival_probability_exact(profile.population, e.count, m)?;
    }
    Ok(total)
}

/// Exact value rendered as `f64`.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Survivors left after `m` well-chosen labels when the constructed family
/// has pairwise-disjoint error sets: `max(2^n - m, 0)`.
pub fn optimal_elimination_curve(n: u32, m: u128) -> u128 {
    (1u128 << n).saturating_sub(m)
}

/// Size exponents used for the heatmap columns.
pub const HEATMAP_FRACTIONS: [f64; 7] = [0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.0];

/// `m = floor(2^(f n))`.
pub fn sample_size(f: f64, n: u32) -> u128 {
    (f * n as f64).exp2().floor() as u128
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatCell {
    pub n: u32,
    pub fraction: f64,
    pub m: u128,
    pub optimal_remaining: u128,
    /// Expected surviving constructed addition deceivers under uniform
    /// sampling from the full domain.
    pub uniform_expected: f64,
}

/// Heatmap over operand lengths and size exponents for the constructed
/// addition family.
pub fn elimination_heatmap(ns: &[u32], fractions: &[f64]) -> Result<Vec<HeatCell>, SurvivorError> {
    let mut out = Vec::new();
    for &n in ns {
        if n == 0 || 3 * n + 1 > 127 {
            return Err(DeceiverError::BadOperandLength(n).into());
        }
        let q = 1u128 << (3 * n + 1);
        let e = addition_error_count(n);
        for &f in fractions {
            let m = sample_size(f, n);
            let p = survival_probability(q, e, m)?;
            out.push(HeatCell {
                n,
                fraction: f,
                m,
                optimal_remaining: optimal_elimination_curve(n, m),
                uniform_expected: (1u128 << n) as f64 * p,
            });
        }
    }
    Ok(out)
}

/// Count-only profile of the `2^n` constructed addition deceivers over the
/// full domain of size `2^(3n+1)`.
pub fn constructed_addition_profile(n: u32) -> Result<ErrorProfile, SurvivorError> {
    if n == 0 || 3 * n + 1 > 127 || n > 24 {
        return Err(DeceiverError::BadOperandLength(n).into());
    }
    let counts = vec![addition_error_count(n); 1 << n];
    ErrorProfile::from_counts(1u128 << (3 * n + 1), format!("addition n={n}"), &counts)
}

/// Profile with explicit error sets, computed by evaluating every
/// constructed deceiver against the recognizer.
pub fn constructed_addition_profile_explicit(n: u32) -> Result<ErrorProfile, SurvivorError> {
    let f = truth_table(&addition_recognizer(n)?).map_err(DeceiverError::from)?;
    let entries = (0..1u64 << n)
        .into_par_iter()
        .map(|p| {
            let g = truth_table(&addition_deceiver(n, p)?).map_err(DeceiverError::from)?;
            let e = disagreement_set(&g, &f).map_err(DeceiverError::from)?;
            Ok(ProfileEntry {
                id: format!("pi{p}"),
                count: e.len() as u128,
                points: Some(e.points().to_vec()),
            })
        })
        .collect::<Result<Vec<_>, SurvivorError>>()?;
    ErrorProfile::new(1u128 << (3 * n + 1), format!("addition n={n}"), entries)
}

/// Unique error locations and total error mass inside a subset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    pub unique_inside: u64,
    pub unique_total: u64,
    pub mass_inside: u128,
    pub mass_total: u128,
}

impl Coverage {
    pub fn unique_fraction(&self) -> f64 {
        if self.unique_total == 0 {
            1.0
        } else {
            self.unique_inside as f64 / self.unique_total as f64
        }
    }

    pub fn mass_fraction(&self) -> f64 {
        if self.mass_total == 0 {
            1.0
        } else {
            self.mass_inside as f64 / self.mass_total as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestrictedProfile {
    pub profile: ErrorProfile,
    /// Hypotheses with no error inside the subset; they survive every sample
    /// drawn from it.
    pub unkillable: Vec<bool>,
    pub coverage: Coverage,
}

/// Restricts explicit error sets to a subset of the population given by its
/// size and a membership predicate.
pub fn restrict_to_subset<F>(
    profile: &ErrorProfile,
    subset_size: u128,
    contains: F,
) -> Result<RestrictedProfile, SurvivorError>
where
    F: Fn(u64) -> bool + Sync,
{
    if !profile.has_explicit_sets() {
        return Err(SurvivorError::NoExplicitSets);
    }
    if subset_size > profile.population {
        return Err(SurvivorError::BadSubset {
            subset: subset_size,
            population: profile.population,
        });
    }
    let entries: Vec<ProfileEntry> = profile
        .entries
        .par_iter()
        .map(|e| {
            let pts: Vec<u64> = e
                .points
                .as_ref()
                .expect("checked above")
                .iter()
                .copied()
                .filter(|&p| contains(p))
                .collect();
            ProfileEntry {
                id: e.id.clone(),
                count: pts.len() as u128,
                points: Some(pts),
            }
        })
        .collect();
    let mut all = FxHashSet::default();
    let mut inside = FxHashSet::default();
    let (mut mass_total, mut mass_inside) = (0u128, 0u128);
    for (orig, new) in profile.entries.iter().zip(&entries) {
        all.extend(orig.points.as_ref().expect("checked above").iter().copied());
        inside.extend(
            new.points
                .as_ref()
                .expect("restricted sets are explicit")
                .iter()
                .copied(),
        );
        mass_total += orig.count;
        mass_inside += new.count;
    }
    let unkillable = entries.iter().map(|e| e.count == 0).collect();
    // Points keep their original labels, so they are not range-checked
    // against the subset size.
    let restricted = ErrorProfile {
        population: subset_size,
        domain: format!("{} restricted", profile.domain),
        entries,
    };
    Ok(RestrictedProfile {
        profile: restricted,
        unkillable,
        coverage: Coverage {
            unique_inside: inside.len() as u64,
            unique_total: all.len() as u64,
            mass_inside,
            mass_total,
        },
    })
}

/// Restriction to an explicit point list.
pub fn restrict_to_points(profile: &ErrorProfile, points: &[u64]) -> Result<RestrictedProfile, SurvivorError> {
    let set: FxHashSet<u64> = points.iter().copied().collect();
    restrict_to_subset(profile, set.len() as u128, |p| set.contains(&p))
}

/// Bit positions of the sum flipped by the targeted preset at `n = 10`.
pub const TARGETED_FLIP_BITS: [u32; 3] = [8, 9, 10];

/// Targeted subset for the addition task: all positives `z = a + b` plus
/// the negatives obtained by flipping one listed bit of the true sum.
/// Returns the subset size and its membership predicate.
pub fn addition_targeted_subset(n: u32, flip_bits: &[u32]) -> (u128, impl Fn(u64) -> bool + Sync + Clone) {
    let bits: Vec<u32> = flip_bits.iter().copied().filter(|&b| b <= n).collect();
    let size = (1u128 << (2 * n)) * (1 + bits.len() as u128);
    let pred = move |x: u64| {
        let (a, b, z) = addition_operands(n, x);
        let s = a + b;
        z == s || bits.iter().any(|&j| z == s ^ (1 << j))
    };
    (size, pred)
}
