//! Version spaces, exact and approximate certificates, the halving strategy
//! and the disjoint-block lower bound.

use std::fmt;

use rayon::prelude::*;
use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::boolfn::{iter_set_bits, BoolFnError, TruthTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertifyError {
    #[error(transparent)]
    BoolFn(#[from] BoolFnError),
    #[error("hypothesis class is empty")]
    EmptyClass,
    #[error("search budget of {budget} nodes exhausted; no certificate of size <= {refuted} exists")]
    Budget { budget: u64, refuted: i64 },
    #[error("deceiver {0} agrees with the target everywhere")]
    EmptyDisagreement(usize),
    #[error("deceivers {first} and {second} both err at point {point}")]
    Overlap { first: usize, second: usize, point: u64 },
    #[error("tolerance must be finite and non-negative, got {0}")]
    BadTolerance(String),
}

/// A semantic class: distinct truth tables of one arity, in insertion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypothesisClass {
    arity: u32,
    members: Vec<TruthTable>,
}

impl HypothesisClass {
    /// Deduplicates `members`, keeping first occurrences.
    pub fn new<I: IntoIterator<Item = TruthTable>>(arity: u32, members: I) -> Result<Self, CertifyError> {
        let mut seen = FxHashSet::default();
        let mut out = Vec::new();
        for m in members {
            if m.arity() != arity {
                return Err(BoolFnError::ArityMismatch {
                    left: arity,
                    right: m.arity(),
                }
                .into());
            }
            if seen.insert(m.clone()) {
                out.push(m);
            }
        }
        Ok(HypothesisClass { arity, members: out })
    }

    /// Wraps tables that are already distinct.
    pub(crate) fn from_distinct(arity: u32, members: Vec<TruthTable>) -> Self {
        HypothesisClass { arity, members }
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn members(&self) -> &[TruthTable] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, f: &TruthTable) -> bool {
        self.members.iter().any(|m| m == f)
    }

    pub fn position(&self, f: &TruthTable) -> Option<usize> {
        self.members.iter().position(|m| m == f)
    }

    pub fn into_members(self) -> Vec<TruthTable> {
        self.members
    }
}

/// A set of domain points; labels come from the target.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LabeledSample {
    points: Vec<u64>,
}

impl LabeledSample {
    pub fn new<I: IntoIterator<Item = u64>>(points: I) -> Self {
        let mut points: Vec<u64> = points.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        LabeledSample { points }
    }

    pub fn empty() -> Self {
        LabeledSample::default()
    }

    pub fn full(n: u32) -> Self {
        LabeledSample::new(0..1u64 << n)
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn without(&self, x: u64) -> Self {
        LabeledSample {
            points: self.points.iter().copied().filter(|&p| p != x).collect(),
        }
    }

    fn check(&self, n: u32) -> Result<(), CertifyError> {
        match self.points.last() {
            Some(&p) if p >> n != 0 => Err(BoolFnError::PointOutOfRange { point: p, arity: n }.into()),
            _ => Ok(()),
        }
    }
}

fn check_target(h: &HypothesisClass, f: &TruthTable) -> Result<(), CertifyError> {
    if h.arity != f.arity() {
        return Err(BoolFnError::ArityMismatch {
            left: h.arity,
            right: f.arity(),
        }
        .into());
    }
    Ok(())
}

fn agrees_on(h: &TruthTable, f: &TruthTable, s: &LabeledSample) -> bool {
    s.points.iter().all(|&x| h.get(x) == f.get(x))
}

/// Members of `h` that agree with `f` on every point of `s`.
pub fn version_space(h: &HypothesisClass, f: &TruthTable, s: &LabeledSample) -> Result<HypothesisClass, CertifyError> {
    check_target(h, f)?;
    s.check(h.arity)?;
    let members: Vec<TruthTable> = h.members.par_iter().filter(|m| agrees_on(m, f, s)).cloned().collect();
    Ok(HypothesisClass::from_distinct(h.arity, members))
}

/// Whether every member consistent with `s` equals `f`.
pub fn is_certificate(h: &HypothesisClass, f: &TruthTable, s: &LabeledSample) -> Result<bool, CertifyError> {
    check_target(h, f)?;
    s.check(h.arity)?;
    Ok(h.members.par_iter().all(|m| m == f || !agrees_on(m, f, s)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMode {
    /// `Δ(h) = |{x : h(x) != f(x)}|`.
    Absolute,
    /// `err(h) = Δ(h) / 2^n`.
    Normalized,
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMode::Absolute => "absolute",
            ErrorMode::Normalized => "normalized",
        })
    }
}

fn rho(delta: u64, n: u32, mode: ErrorMode) -> f64 {
    match mode {
        ErrorMode::Absolute => delta as f64,
        ErrorMode::Normalized => delta as f64 / (1u64 << n) as f64,
    }
}

/// Largest error (in `mode`) over the version space of `s`.
pub fn worst_remaining_error(
    h: &HypothesisClass,
    f: &TruthTable,
    s: &LabeledSample,
    mode: ErrorMode,
) -> Result<f64, CertifyError> {
    check_target(h, f)?;
    s.check(h.arity)?;
    let worst = h
        .members
        .par_iter()
        .filter(|m| agrees_on(m, f, s))
        .map(|m| m.distance(f).unwrap_or(0))
        .max()
        .unwrap_or(0);
    Ok(rho(worst, h.arity, mode))
}

/// Result of an exact certificate search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub size: usize,
    pub witness: LabeledSample,
}

/// Node limit for the exact searches.
pub const DEFAULT_SEARCH_BUDGET: u64 = 200_000_000;

/// Exact minimum certificate, lexicographically smallest witness.
///
/// A sample certifies `f` iff it hits the disagreement set of every other
/// member, so this is a minimum hitting set over those sets, searched by
/// increasing size with points restricted to their union.
pub fn min_certificate(h: &HypothesisClass, f: &TruthTable, budget: u64) -> Result<Certificate, CertifyError> {
    check_target(h, f)?;
    let sets: Vec<&TruthTable> = h.members.iter().filter(|m| *m != f).collect();
    min_hitting_set(f, &sets, budget)
}

/// Exact minimum sample after which every survivor has error at most
/// `tolerance` in `mode`. Tolerance 0 gives [`min_certificate`].
pub fn approx_min_certificate(
    h: &HypothesisClass,
    f: &TruthTable,
    tolerance: f64,
    mode: ErrorMode,
    budget: u64,
) -> Result<Certificate, CertifyError> {
    check_target(h, f)?;
    if !tolerance.is_finite() || tolerance < 0.0 {
        return Err(CertifyError::BadTolerance(tolerance.to_string()));
    }
    let n = h.arity;
    let sets: Vec<&TruthTable> = h
        .members
        .iter()
        .filter(|m| rho(m.distance(f).unwrap_or(0), n, mode) > tolerance)
        .collect();
    min_hitting_set(f, &sets, budget)
}

struct Search {
    /// Each set as a bitset over candidate indices.
    sets: Vec<Vec<u64>>,
    max_idx: Vec<usize>,
    words: usize,
    nodes: u64,
    budget: u64,
}

impl Search {
    #[inline]
    fn has(&self, s: usize, c: usize) -> bool {
        (self.sets[s][c >> 6] >> (c & 63)) & 1 == 1
    }

    /// Greedy packing of unhit sets restricted to indices `> after`;
    /// a lower bound on the picks still needed.
    fn packing_bound(&self, unhit: &[usize], after: Option<usize>, cap: usize) -> usize {
        let mut used = vec![0u64; self.words];
        let lo = after.map_or(0, |a| a + 1);
        let mut count = 0;
        for &s in unhit {
            let set = &self.sets[s];
            let clash = (0..self.words).any(|w| {
                let mut m = set[w] & used[w];
                if w == lo >> 6 {
                    m &= !((1u64 << (lo & 63)) - 1);
                } else if w < lo >> 6 {
                    m = 0;
                }
                m != 0
            });
            if !clash {
                for w in 0..self.words {
                    used[w] |= set[w];
                }
                count += 1;
                if count > cap {
                    break;
                }
            }
        }
        count
    }

    /// Depth-first search for `k` more picks after index `after`.
    fn dfs(&mut self, unhit: &[usize], after: Option<usize>, k: usize, chosen: &mut Vec<usize>) -> Result<bool, ()> {
        if unhit.is_empty() {
            return Ok(true);
        }
        if k == 0 {
            return Ok(false);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(());
        }
        // The next pick cannot exceed the largest element of any unhit set.
        let hi = unhit.iter().map(|&s| self.max_idx[s]).min().unwrap_or(0);
        let lo = after.map_or(0, |a| a + 1);
        if hi < lo || self.packing_bound(unhit, after, k) > k {
            return Ok(false);
        }
        for c in lo..=hi {
            let next: Vec<usize> = unhit.iter().copied().filter(|&s| !self.has(s, c)).collect();
            if next.len() == unhit.len() {
                continue;
            }
            chosen.push(c);
            if self.dfs(&next, Some(c), k - 1, chosen)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
}

fn min_hitting_set(f: &TruthTable, members: &[&TruthTable], budget: u64) -> Result<Certificate, CertifyError> {
    if members.is_empty() {
        return Ok(Certificate {
            size: 0,
            witness: LabeledSample::empty(),
        });
    }
    let diffs: Vec<Vec<u64>> = members
        .par_iter()
        .map(|m| m.words().iter().zip(f.words()).map(|(a, b)| a ^ b).collect())
        .collect();
    let mut union = vec![0u64; f.words().len()];
    for d in &diffs {
        for (u, w) in union.iter_mut().zip(d) {
            *u |= w;
        }
    }
    let candidates: Vec<u64> = iter_set_bits(&union).collect();
    let words = candidates.len().div_ceil(64).max(1);
    let index_of: rustc_hash::FxHashMap<u64, usize> = candidates.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut sets: Vec<Vec<u64>> = diffs
        .par_iter()
        .map(|d| {
            let mut s = vec![0u64; words];
            for p in iter_set_bits(d) {
                let i = index_of[&p];
                s[i >> 6] |= 1 << (i & 63);
            }
            s
        })
        .collect();
    // Small sets first: better packing bounds and earlier pruning.
    sets.sort_by_key(|s| (s.iter().map(|w| w.count_ones()).sum::<u32>(), s.clone()));
    sets.dedup();
    let max_idx = sets
        .iter()
        .map(|s| {
            let w = s.iter().rposition(|&w| w != 0).expect("nonempty set");
            w * 64 + 63 - s[w].leading_zeros() as usize
        })
        .collect();
    let mut search = Search {
        sets,
        max_idx,
        words,
        nodes: 0,
        budget,
    };
    let all: Vec<usize> = (0..search.sets.len()).collect();
    for k in 1..=candidates.len() {
        let mut chosen = Vec::with_capacity(k);
        match search.dfs(&all, None, k, &mut chosen) {
            Ok(true) => {
                return Ok(Certificate {
                    size: chosen.len(),
                    witness: LabeledSample::new(chosen.iter().map(|&i| candidates[i])),
                })
            }
            Ok(false) => {}
            Err(()) => {
                return Err(CertifyError::Budget {
                    budget,
                    refuted: k as i64 - 1,
                })
            }
        }
    }
    unreachable!("the full candidate set hits every disagreement set")
}

/// One query of the halving strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalvingStep {
    pub point: u64,
    pub size0: usize,
    pub size1: usize,
    pub kept: bool,
    pub remaining: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HalvingResult {
    pub selected: TruthTable,
    pub sample: LabeledSample,
    pub trace: Vec<HalvingStep>,
}

impl HalvingResult {
    /// CSV with columns `step,point,size0,size1,kept,remaining`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("step,point,size0,size1,kept,remaining\n");
        for (i, t) in self.trace.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i + 1,
                t.point,
                t.size0,
                t.size1,
                t.kept as u8,
                t.remaining
            ));
        }
        s
    }
}

/// Deterministic halving: query the smallest point (in integer order) on
/// which the survivors disagree, keep the smaller label side (label 0 on a
/// tie), repeat until one hypothesis is left.
pub fn halving_certificate(h: &HypothesisClass) -> Result<HalvingResult, CertifyError> {
    if h.is_empty() {
        return Err(CertifyError::EmptyClass);
    }
    let words = h.members[0].words().len();
    let mut alive: Vec<usize> = (0..h.len()).collect();
    let mut trace = Vec::new();
    while alive.len() > 1 {
        let (and, or) = alive
            .par_iter()
            .fold(
                || (vec![u64::MAX; words], vec![0u64; words]),
                |(mut a, mut o), &i| {
                    for (w, &v) in h.members[i].words().iter().enumerate() {
                        a[w] &= v;
                        o[w] |= v;
                    }
                    (a, o)
                },
            )
            .reduce(
                || (vec![u64::MAX; words], vec![0u64; words]),
                |(mut a, mut o), (b, p)| {
                    for w in 0..words {
                        a[w] &= b[w];
                        o[w] |= p[w];
                    }
                    (a, o)
                },
            );
        let (w, diff) = and
            .iter()
            .zip(&or)
            .map(|(a, o)| o & !a)
            .enumerate()
            .find(|&(_, d)| d != 0)
            .expect("distinct members disagree somewhere");
        let point = (w as u64) * 64 + diff.trailing_zeros() as u64;
        let ones: Vec<usize> = alive.iter().copied().filter(|&i| h.members[i].get(point)).collect();
        let size1 = ones.len();
        let size0 = alive.len() - size1;
        let kept = size1 < size0;
        alive = if kept {
            ones
        } else {
            alive.into_iter().filter(|&i| !h.members[i].get(point)).collect()
        };
        trace.push(HalvingStep {
            point,
            size0,
            size1,
            kept,
            remaining: alive.len(),
        });
    }
    Ok(HalvingResult {
        selected: h.members[alive[0]].clone(),
        sample: LabeledSample::new(trace.iter().map(|t| t.point)),
        trace,
    })
}

/// Number of deceivers after checking that their disagreement sets with
/// `f` are nonempty and pairwise disjoint.
pub fn disjoint_block_lower_bound(f: &TruthTable, deceivers: &[TruthTable]) -> Result<usize, CertifyError> {
    let domain = f.domain_size() as usize;
    let mut owner: Vec<u32> = vec![u32::MAX; domain];
    for (i, g) in deceivers.iter().enumerate() {
        if g.arity() != f.arity() {
            return Err(BoolFnError::ArityMismatch {
                left: f.arity(),
                right: g.arity(),
            }
            .into());
        }
        let diff: Vec<u64> = g.words().iter().zip(f.words()).map(|(a, b)| a ^ b).collect();
        let mut empty = true;
        for x in iter_set_bits(&diff) {
            empty = false;
            let o = &mut owner[x as usize];
            if *o != u32::MAX {
                return Err(CertifyError::Overlap {
                    first: *o as usize,
                    second: i,
                    point: x,
                });
            }
            *o = i as u32;
        }
        if empty {
            return Err(CertifyError::EmptyDisagreement(i));
        }
    }
    Ok(deceivers.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn or2() -> TruthTable {
        TruthTable::or_n(2).unwrap()
    }

    #[test]
    fn version_space_examples() {
        let one = TruthTable::constant(2, true).unwrap();
        let h = HypothesisClass::new(2, [or2(), one.clone(), or2()]).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(version_space(&h, &or2(), &LabeledSample::empty()).unwrap(), h);
        let vs = version_space(&h, &or2(), &LabeledSample::new([0])).unwrap();
        assert_eq!(vs.members(), &[or2()]);
        let vs = version_space(&h, &or2(), &LabeledSample::full(2)).unwrap();
        assert_eq!(vs.members(), &[or2()]);
        assert!(version_space(&h, &or2(), &LabeledSample::new([4])).is_err());
    }

    #[test]
    fn singleton_class_needs_nothing() {
        let h = HypothesisClass::new(2, [or2()]).unwrap();
        let c = min_certificate(&h, &or2(), 1000).unwrap();
        assert_eq!(c.size, 0);
        let r = halving_certificate(&h).unwrap();
        assert_eq!(r.selected, or2());
        assert!(r.sample.is_empty());
    }

    #[test]
    fn all_functions_of_two_bits() {
        // Full class: every point must be labelled.
        let h = HypothesisClass::new(2, (0..16u64).map(|w| TruthTable::from_words(2, &[w]).unwrap())).unwrap();
        let c = min_certificate(&h, &or2(), 10_000).unwrap();
        assert_eq!(c.size, 4);
        assert_eq!(c.witness, LabeledSample::full(2));
        let r = halving_certificate(&h).unwrap();
        assert_eq!(r.sample.len(), 4);
        // first query is point 0, split 8/8, tie keeps label 0
        assert_eq!(
            r.trace[0],
            HalvingStep {
                point: 0,
                size0: 8,
                size1: 8,
                kept: false,
                remaining: 8
            }
        );
        assert_eq!(r.selected, TruthTable::zeros(2).unwrap());
    }

    #[test]
    fn budget_error_reports_refuted_size() {
        let h = HypothesisClass::new(3, (0..256u64).map(|w| TruthTable::from_words(3, &[w]).unwrap())).unwrap();
        let f = TruthTable::or_n(3).unwrap();
        match min_certificate(&h, &f, 3) {
            Err(CertifyError::Budget { refuted, .. }) => assert!(refuted >= 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lower_bound_errors() {
        let f = or2();
        let g1 = f.with_bit(0, true);
        let g2 = f.with_bit(0, true).with_bit(1, false);
        assert_eq!(disjoint_block_lower_bound(&f, std::slice::from_ref(&g1)).unwrap(), 1);
        assert_eq!(
            disjoint_block_lower_bound(&f, &[g1.clone(), g2]),
            Err(CertifyError::Overlap {
                first: 0,
                second: 1,
                point: 0
            })
        );
        assert_eq!(
            disjoint_block_lower_bound(&f, &[g1, f.clone()]),
            Err(CertifyError::EmptyDisagreement(1))
        );
    }

    #[test]
    fn worst_error_modes() {
        let f = TruthTable::zeros(3).unwrap();
        let g = TruthTable::from_fn(3, |x| x < 4).unwrap();
        let h = HypothesisClass::new(3, [f.clone(), g]).unwrap();
        let s = LabeledSample::new([5]);
        assert_eq!(worst_remaining_error(&h, &f, &s, ErrorMode::Absolute).unwrap(), 4.0);
        assert_eq!(worst_remaining_error(&h, &f, &s, ErrorMode::Normalized).unwrap(), 0.5);
        let s = LabeledSample::full(3);
        assert_eq!(worst_remaining_error(&h, &f, &s, ErrorMode::Absolute).unwrap(), 0.0);
        let c = approx_min_certificate(&h, &f, 4.0, ErrorMode::Absolute, 1000).unwrap();
        assert_eq!(c.size, 0);
        let c = approx_min_certificate(&h, &f, 3.0, ErrorMode::Absolute, 1000).unwrap();
        assert_eq!(c.witness.points(), &[0]);
        assert!(approx_min_certificate(&h, &f, -1.0, ErrorMode::Absolute, 1000).is_err());
    }

    fn brute_force_min(h: &HypothesisClass, f: &TruthTable) -> (usize, Vec<u64>) {
        let n = h.arity();
        let domain = 1u64 << n;
        let mut best: Option<(usize, Vec<u64>)> = None;
        for mask in 0..1u64 << domain {
            let pts: Vec<u64> = (0..domain).filter(|&x| mask >> x & 1 == 1).collect();
            let s = LabeledSample::new(pts.clone());
            if is_certificate(h, f, &s).unwrap() {
                let cand = (pts.len(), pts);
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        best.unwrap()
    }

    fn table3() -> impl Strategy<Value = TruthTable> {
        any::<u8>().prop_map(|w| TruthTable::from_words(3, &[w as u64]).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_search_matches_brute_force(members in prop::collection::vec(table3(), 1..12), pick in any::<prop::sample::Index>()) {
            let h = HypothesisClass::new(3, members).unwrap();
            let f = h.members()[pick.index(h.len())].clone();
            let c = min_certificate(&h, &f, 1_000_000).unwrap();
            let (size, pts) = brute_force_min(&h, &f);
            prop_assert_eq!(c.size, size);
            prop_assert_eq!(c.witness.points(), &pts[..]);
            let a = approx_min_certificate(&h, &f, 0.0, ErrorMode::Normalized, 1_000_000).unwrap();
            prop_assert_eq!(a, c);
        }

        #[test]
        fn halving_bound_and_consistency(members in prop::collection::vec(table3(), 1..40)) {
            let h = HypothesisClass::new(3, members).unwrap();
            let r = halving_certificate(&h).unwrap();
            let bound = (h.len() as f64).log2().ceil() as usize;
            prop_assert!(r.sample.len() <= bound);
            prop_assert!(is_certificate(&h, &r.selected, &r.sample).unwrap());
        }

        #[test]
        fn version_space_is_monotone(members in prop::collection::vec(table3(), 1..20), a in 0u8..255, b in 0u8..255) {
            let h = HypothesisClass::new(3, members).unwrap();
            let f = h.members()[0].clone();
            let s = LabeledSample::new((0..8).filter(|x| a >> x & 1 == 1));
            let big = LabeledSample::new(s.points().iter().copied().chain((0..8).filter(|x| b >> x & 1 == 1)));
            let vs = version_space(&h, &f, &s).unwrap();
            let vb = version_space(&h, &f, &big).unwrap();
            prop_assert!(vb.members().iter().all(|m| vs.contains(m)));
            let cert = is_certificate(&h, &f, &s).unwrap();
            let worst = worst_remaining_error(&h, &f, &s, ErrorMode::Absolute).unwrap();
            prop_assert_eq!(cert, worst == 0.0);
        }
    }
}
