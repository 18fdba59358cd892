//! Exhaustive semantic enumeration of the depth-2 size-2 base classes and
//! their overparametrized extensions.
//!
//! # Parameter grids
//!
//! Restricted threshold: hidden gate `z = 1[c·x >= τ]` with
//! `c ∈ {-1,0,1}^n`, `τ ∈ [-n, n]`, output gate `1[a·x + b z >= θ]` with
//! `a ∈ {-1,0,1}^n`, `b ∈ {-1,0,1}`, `θ ∈ [-(n+1), n+1]`. Grid index
//! `hidden * OUT + out` where `hidden = c_idx (2n+1) + (τ+n)`,
//! `out = (a_idx * 3 + (b+1)) (2n+3) + (θ+n+1)` and `c_idx`, `a_idx` read
//! the weights as base-3 digits `w_i + 1` (digit `i` for coordinate `x_{i+1}`).
//!
//! AC0: literal masks use bit `2i` for `x_{i+1}` and bit `2i+1` for its
//! negation. Single gates (index `< S = 2(4^n - 1)`): `type * (4^n-1) +
//! (mask-1)` over nonempty masks, where a mask holding both polarities of a
//! variable yields a constant. Two-gate circuits: `S + lower * 2·4^n +
//! type * 4^n + mask`, where the lower gate is a single gate over literals
//! and the upper gate reads its literal mask (possibly empty) plus the lower
//! gate. Type 0 is AND, type 1 is OR.
//!
//! Each distinct truth table keeps the circuit with the smallest grid index.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::boolfn::{TriggerSpec, TruthTable};
use crate::certify::HypothesisClass;
use crate::circuit::{
    truth_table, Ac0Circuit, Ac0Gate, Ac0Input, AnyCircuit, GateKind, Signal, ThresholdCircuit, ThresholdGate,
};
use crate::deceiver::{ac0_override, restricted_tc0_override, DeceiverError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumError {
    #[error("{dialect} enumeration at n = {n} needs the long-run flag")]
    NeedsLongRun { dialect: Dialect, n: u32 },
    #[error("arity {0} is outside the supported range for this class")]
    UnsupportedArity(u32),
    #[error("grid budget of {budget} exceeded after scanning {scanned} circuits")]
    Budget { budget: u128, scanned: u128 },
    #[error("grid index {0} is out of range")]
    BadIndex(u128),
    #[error(transparent)]
    Deceiver(#[from] DeceiverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dialect {
    RestrictedThreshold,
    Ac0Depth2,
}

impl std::fmt::Display for Dialect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Dialect::RestrictedThreshold => "tc0",
            Dialect::Ac0Depth2 => "ac0",
        })
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tc0" | "threshold" | "restricted-threshold" => Ok(Dialect::RestrictedThreshold),
            "ac0" | "ac0-depth2" => Ok(Dialect::Ac0Depth2),
            other => Err(format!("unknown dialect `{other}` (expected tc0 or ac0)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Base,
    Overparametrized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassSpec {
    pub dialect: Dialect,
    pub n: u32,
    pub variant: Variant,
}

impl ClassSpec {
    pub fn base(dialect: Dialect, n: u32) -> Self {
        ClassSpec {
            dialect,
            n,
            variant: Variant::Base,
        }
    }

    pub fn overparametrized(dialect: Dialect, n: u32) -> Self {
        ClassSpec {
            dialect,
            n,
            variant: Variant::Overparametrized,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnumOptions {
    /// Largest number of grid circuits to scan.
    pub budget: u128,
    /// Allows threshold n >= 7, AC0 n >= 9 and overparametrized n >= 5.
    pub long_run: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            budget: u128::MAX,
            long_run: false,
        }
    }
}

/// How a class member was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Representative {
    Grid(u128),
    /// Singleton-block override of the base member at grid index `base`.
    Override {
        base: u128,
        point: u64,
        label: bool,
    },
}

#[derive(Clone, Debug)]
pub struct EnumeratedClass {
    pub spec: ClassSpec,
    pub class: HypothesisClass,
    /// One entry per member, same order.
    pub representatives: Vec<Representative>,
    /// Grid circuits scanned.
    pub scanned: u128,
}

impl EnumeratedClass {
    pub fn len(&self) -> usize {
        self.class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class.is_empty()
    }

    /// Rebuilds the representative circuit of member `i`.
    pub fn circuit(&self, i: usize) -> Result<AnyCircuit, EnumError> {
        let (d, n) = (self.spec.dialect, self.spec.n);
        match self.representatives[i] {
            Representative::Grid(idx) => circuit_at(d, n, idx),
            Representative::Override { base, point, label } => override_circuit(d, n, base, point, label),
        }
    }
}

/// `ceil(log2 m)` for `m >= 1`.
pub fn ceil_log2(m: u128) -> u32 {
    if m <= 1 {
        0
    } else {
        128 - (m - 1).leading_zeros()
    }
}

fn pow3(n: u32) -> u128 {
    3u128.pow(n)
}

fn tc0_dims(n: u32) -> (u128, u128) {
    let n128 = n as u128;
    (pow3(n) * (2 * n128 + 1), pow3(n) * 3 * (2 * n128 + 3))
}

fn ac0_dims(n: u32) -> (u128, u128) {
    let q = 1u128 << (2 * n);
    (2 * (q - 1), 2 * q)
}

/// Number of syntactic circuits in the base grid.
pub fn grid_size(dialect: Dialect, n: u32) -> u128 {
    match dialect {
        Dialect::RestrictedThreshold => {
            let (h, o) = tc0_dims(n);
            h * o
        }
        Dialect::Ac0Depth2 => {
            let (s, u) = ac0_dims(n);
            s + s * u
        }
    }
}

fn base3_weights(mut idx: u128, n: u32) -> Vec<i64> {
    (0..n)
        .map(|_| {
            let d = (idx % 3) as i64 - 1;
            idx /= 3;
            d
        })
        .collect()
}

fn mask_literals(mask: u128, n: u32) -> Vec<Ac0Input> {
    (0..2 * n)
        .filter(|b| (mask >> b) & 1 == 1)
        .map(|b| Ac0Input::Literal {
            var: b / 2,
            negated: b % 2 == 1,
        })
        .collect()
}

fn kind_of(t: u128) -> GateKind {
    if t == 0 {
        GateKind::And
    } else {
        GateKind::Or
    }
}

fn check_n(n: u32) -> Result<(), EnumError> {
    if n == 0 || n > 20 {
        return Err(EnumError::UnsupportedArity(n));
    }
    Ok(())
}

/// The syntactic circuit at position `idx` of the base grid.
pub fn circuit_at(dialect: Dialect, n: u32, idx: u128) -> Result<AnyCircuit, EnumError> {
    check_n(n)?;
    if idx >= grid_size(dialect, n) {
        return Err(EnumError::BadIndex(idx));
    }
    let ni = n as i64;
    let c: AnyCircuit = match dialect {
        Dialect::RestrictedThreshold => {
            let (_, out_count) = tc0_dims(n);
            let (hidden, out) = (idx / out_count, idx % out_count);
            let t = 2 * n as u128 + 1;
            let c = base3_weights(hidden / t, n);
            let tau = (hidden % t) as i64 - ni;
            let th = 2 * n as u128 + 3;
            let theta = (out % th) as i64 - ni - 1;
            let ab = out / th;
            let b = (ab % 3) as i64 - 1;
            let a = base3_weights(ab / 3, n);
            let hidden_gate = ThresholdGate::new(
                c.into_iter()
                    .enumerate()
                    .map(|(i, w)| (Signal::Input(i as u32), w))
                    .collect(),
                tau,
            );
            let mut inputs: Vec<(Signal, i64)> = a
                .into_iter()
                .enumerate()
                .map(|(i, w)| (Signal::Input(i as u32), w))
                .collect();
            inputs.push((Signal::Gate(0), b));
            ThresholdCircuit::new(n, vec![hidden_gate, ThresholdGate::new(inputs, theta)], 1)
                .expect("grid circuits are well formed")
                .into()
        }
        Dialect::Ac0Depth2 => {
            let (s, u) = ac0_dims(n);
            let q = 1u128 << (2 * n);
            let single = |i: u128| Ac0Gate::new(kind_of(i / (q - 1)), mask_literals(i % (q - 1) + 1, n));
            if idx < s {
                Ac0Circuit::new(n, vec![single(idx)], 0)
            } else {
                let (lower, upper) = ((idx - s) / u, (idx - s) % u);
                let mut inputs = mask_literals(upper % q, n);
                inputs.push(Ac0Input::Gate(0));
                Ac0Circuit::new(n, vec![single(lower), Ac0Gate::new(kind_of(upper / q), inputs)], 1)
            }
            .expect("grid circuits are well formed")
            .into()
        }
    };
    Ok(c)
}

/// Every circuit of the base grid, in index order.
pub fn grid_iterator(dialect: Dialect, n: u32) -> Result<impl Iterator<Item = AnyCircuit>, EnumError> {
    check_n(n)?;
    Ok((0..grid_size(dialect, n)).map(move |i| circuit_at(dialect, n, i).expect("index in range")))
}

fn override_circuit(dialect: Dialect, n: u32, base: u128, point: u64, label: bool) -> Result<AnyCircuit, EnumError> {
    let trig = TriggerSpec::from_point((0..n).collect(), point, label).map_err(DeceiverError::from)?;
    Ok(match circuit_at(dialect, n, base)? {
        AnyCircuit::Threshold(c) => restricted_tc0_override(&c, &trig)?.into(),
        AnyCircuit::Ac0(c) => ac0_override(&c, &trig)?.into(),
        AnyCircuit::FanIn2(_) => unreachable!("grids hold no fan-in-2 circuits"),
    })
}

// ---------------------------------------------------------------------------
// Fast semantic enumeration over fixed-width keys

type Key<const W: usize> = [u64; W];
type Shard<const W: usize> = FxHashMap<Key<W>, u128>;

fn full_key<const W: usize>(n: u32) -> Key<W> {
    std::array::from_fn(|w| {
        if n >= 6 {
            if w < 1 << (n - 6) {
                u64::MAX
            } else {
                0
            }
        } else if w == 0 {
            (1u64 << (1u32 << n)) - 1
        } else {
            0
        }
    })
}

fn key_from_fn<const W: usize>(n: u32, mut f: impl FnMut(u64) -> bool) -> Key<W> {
    let mut k = [0u64; W];
    for x in 0..1u64 << n {
        if f(x) {
            k[(x >> 6) as usize] |= 1 << (x & 63);
        }
    }
    k
}

#[inline]
fn insert<const W: usize>(map: &mut Shard<W>, key: Key<W>, idx: u128) {
    map.entry(key).and_modify(|v| *v = (*v).min(idx)).or_insert(idx);
}

fn merge<const W: usize>(mut a: Shard<W>, mut b: Shard<W>) -> Shard<W> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (k, v) in b {
        insert(&mut a, k, v);
    }
    a
}

/// Integer sums `w·x` for every point.
fn dot_table(w: &[i64], n: u32) -> Vec<i64> {
    (0..1u64 << n)
        .map(|x| {
            w.iter()
                .enumerate()
                .map(|(i, &wi)| if (x >> i) & 1 == 1 { wi } else { 0 })
                .sum()
        })
        .collect()
}

/// `levels[v - lo] = {x : sum(x) >= v}` for `v` in `lo..=hi`.
fn level_sets<const W: usize>(sums: &[i64], lo: i64, hi: i64) -> Vec<Key<W>> {
    let len = (hi - lo + 1) as usize;
    let mut exact = vec![[0u64; W]; len + 1];
    for (x, &s) in sums.iter().enumerate() {
        let v = (s.clamp(lo, hi + 1) - lo) as usize;
        exact[v][x >> 6] |= 1 << (x & 63);
    }
    let mut out = vec![[0u64; W]; len];
    let mut acc = exact[len];
    for v in (0..len).rev() {
        for w in 0..W {
            acc[w] |= exact[v][w];
        }
        out[v] = acc;
    }
    out
}

struct Progress {
    scanned: AtomicU64,
    budget: u128,
    stop: AtomicBool,
}

impl Progress {
    fn new(budget: u128) -> Self {
        Progress {
            scanned: AtomicU64::new(0),
            budget,
            stop: AtomicBool::new(false),
        }
    }

    /// Records `amount` scanned circuits; false once the budget is spent.
    fn advance(&self, amount: u128) -> bool {
        if self.stop.load(Ordering::Relaxed) {
            return false;
        }
        let before = self.scanned.fetch_add(amount as u64, Ordering::Relaxed) as u128;
        if before + amount > self.budget {
            self.stop.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    fn scanned(&self) -> u128 {
        self.scanned.load(Ordering::Relaxed) as u128
    }
}

fn tc0_semantic<const W: usize>(n: u32, progress: &Progress) -> Option<Shard<W>> {
    let ni = n as i64;
    let (_, out_count) = tc0_dims(n);
    let th = 2 * n as u128 + 3;
    let t = 2 * n as u128 + 1;
    let weights: Vec<Vec<i64>> = (0..pow3(n)).map(|i| base3_weights(i, n)).collect();

    // Distinct hidden functions, each with its smallest hidden index.
    let mut hidden: FxHashMap<Key<W>, u128> = FxHashMap::default();
    for (ci, c) in weights.iter().enumerate() {
        let levels = level_sets::<W>(&dot_table(c, n), -ni, ni);
        for (k, z) in levels.into_iter().enumerate() {
            insert(&mut hidden, z, ci as u128 * t + k as u128);
        }
    }
    let mut hidden: Vec<(Key<W>, u128)> = hidden.into_iter().collect();
    hidden.sort_by_key(|h| h.1);

    let full = full_key::<W>(n);
    let per_a = (2 * ni as u128 + 1) * pow3(n) * 3 * th;

    (0..weights.len())
        .into_par_iter()
        .try_fold(Shard::<W>::default, |mut map, ai| {
            if !progress.advance(per_a) {
                return None;
            }
            // levels[v + n + 2] = {x : a·x >= v}, v in -(n+2)..=n+2
            let levels = level_sets::<W>(&dot_table(&weights[ai], n), -ni - 2, ni + 2);
            let ai = ai as u128;
            for th_i in 0..th as i64 {
                let theta = th_i - ni - 1;
                let at = levels[(theta + ni + 2) as usize];
                insert(&mut map, at, (ai * 3 + 1) * th + th_i as u128);
                for b in [-1i64, 1] {
                    let shifted = levels[(theta - b + ni + 2) as usize];
                    let out_idx = (ai * 3 + (b + 1) as u128) * th + th_i as u128;
                    for &(z, hi) in &hidden {
                        let key: Key<W> = std::array::from_fn(|w| (z[w] & shifted[w]) | (!z[w] & at[w] & full[w]));
                        insert(&mut map, key, hi * out_count + out_idx);
                    }
                }
            }
            Some(map)
        })
        .try_reduce(Shard::<W>::default, |a, b| Some(merge(a, b)))
}

fn ternary_masks(n: u32) -> Vec<u128> {
    (0..pow3(n))
        .map(|mut t| {
            let mut mask = 0u128;
            for i in 0..n {
                match t % 3 {
                    1 => mask |= 1 << (2 * i),
                    2 => mask |= 1 << (2 * i + 1),
                    _ => {}
                }
                t /= 3;
            }
            mask
        })
        .collect()
}

fn ac0_semantic<const W: usize>(n: u32, progress: &Progress) -> Option<Shard<W>> {
    let (s, u) = ac0_dims(n);
    let q = 1u128 << (2 * n);
    let full = full_key::<W>(n);
    let lits: Vec<Key<W>> = (0..2 * n)
        .map(|b| {
            let (var, neg) = (b / 2, b % 2 == 1);
            key_from_fn::<W>(n, |x| ((x >> var) & 1 == 1) != neg)
        })
        .collect();
    // Non-contradictory masks with their AND and OR tables.
    let terms: Vec<(u128, Key<W>, Key<W>)> = ternary_masks(n)
        .into_iter()
        .map(|mask| {
            let mut and = full;
            let mut or = [0u64; W];
            for b in 0..2 * n {
                if (mask >> b) & 1 == 1 {
                    for w in 0..W {
                        and[w] &= lits[b as usize][w];
                        or[w] |= lits[b as usize][w];
                    }
                }
            }
            (mask, and, or)
        })
        .collect();

    let mut singles = Shard::<W>::default();
    // AND(x1, ~x1) and OR(x1, ~x1) are the first constant gates.
    insert(&mut singles, [0u64; W], 2);
    insert(&mut singles, full, (q - 1) + 2);
    let mut lowers = Vec::new();
    for &(mask, and, or) in &terms {
        if mask == 0 {
            continue;
        }
        let and_idx = mask - 1;
        let or_idx = (q - 1) + mask - 1;
        insert(&mut singles, and, and_idx);
        insert(&mut singles, or, or_idx);
        lowers.push((and_idx, and));
        lowers.push((or_idx, or));
    }
    if !progress.advance(s) {
        return None;
    }

    lowers
        .into_par_iter()
        .try_fold(Shard::<W>::default, |mut map, (li, low)| {
            if !progress.advance(u) {
                return None;
            }
            let base = s + li * u;
            for &(mask, and, or) in &terms {
                if mask == 0 {
                    continue;
                }
                let and_key: Key<W> = std::array::from_fn(|w| and[w] & low[w]);
                insert(&mut map, and_key, base + mask);
                let or_key: Key<W> = std::array::from_fn(|w| or[w] | low[w]);
                insert(&mut map, or_key, base + q + mask);
            }
            Some(map)
        })
        .try_reduce(|| singles.clone(), |a, b| Some(merge(a, b)))
}

fn collect_class<const W: usize>(n: u32, map: Shard<W>) -> (Vec<TruthTable>, Vec<Representative>) {
    let mut entries: Vec<(u128, Key<W>)> = map.into_iter().map(|(k, v)| (v, k)).collect();
    entries.sort_unstable_by_key(|e| e.0);
    let words = if n <= 6 { 1 } else { 1usize << (n - 6) };
    entries
        .into_iter()
        .map(|(idx, k)| {
            (
                TruthTable::from_words(n, &k[..words]).expect("key width matches arity"),
                Representative::Grid(idx),
            )
        })
        .unzip()
}

fn run_semantic<const W: usize>(
    dialect: Dialect,
    n: u32,
    progress: &Progress,
) -> Option<(Vec<TruthTable>, Vec<Representative>)> {
    let map = match dialect {
        Dialect::RestrictedThreshold => tc0_semantic::<W>(n, progress),
        Dialect::Ac0Depth2 => ac0_semantic::<W>(n, progress),
    }?;
    Some(collect_class(n, map))
}

fn base_limit(dialect: Dialect) -> u32 {
    match dialect {
        Dialect::RestrictedThreshold => 6,
        Dialect::Ac0Depth2 => 8,
    }
}

/// Distinct truth tables of the class with a representative circuit each,
/// ordered by representative grid index.
pub fn enumerate_semantic_class(spec: ClassSpec, opts: &EnumOptions) -> Result<EnumeratedClass, EnumError> {
    match spec.variant {
        Variant::Base => enumerate_base(spec.dialect, spec.n, opts),
        Variant::Overparametrized => enumerate_overparametrized(spec.dialect, spec.n, opts),
    }
}

fn enumerate_base(dialect: Dialect, n: u32, opts: &EnumOptions) -> Result<EnumeratedClass, EnumError> {
    if n == 0 || n > 10 {
        return Err(EnumError::UnsupportedArity(n));
    }
    if n > base_limit(dialect) && !opts.long_run {
        return Err(EnumError::NeedsLongRun { dialect, n });
    }
    let progress = Progress::new(opts.budget);
    let out = match n {
        1..=6 => run_semantic::<1>(dialect, n, &progress),
        7 => run_semantic::<2>(dialect, n, &progress),
        8 => run_semantic::<4>(dialect, n, &progress),
        9 => run_semantic::<8>(dialect, n, &progress),
        _ => run_semantic::<16>(dialect, n, &progress),
    };
    let (members, representatives) = out.ok_or(EnumError::Budget {
        budget: opts.budget,
        scanned: progress.scanned(),
    })?;
    Ok(EnumeratedClass {
        spec: ClassSpec::base(dialect, n),
        class: HypothesisClass::from_distinct(n, members),
        representatives,
        scanned: progress.scanned().min(grid_size(dialect, n)),
    })
}

/// Base class plus both singleton-block overrides of every base member.
pub fn enumerate_overparametrized(dialect: Dialect, n: u32, opts: &EnumOptions) -> Result<EnumeratedClass, EnumError> {
    if n > 4 && !opts.long_run {
        return Err(EnumError::NeedsLongRun { dialect, n });
    }
    let base = enumerate_base(dialect, n, opts)?;
    let coords: Vec<u32> = (0..n).collect();
    let jobs: Vec<(usize, u64, bool)> = (0..base.len())
        .flat_map(|i| (0..1u64 << n).flat_map(move |x| [(i, x, false), (i, x, true)]))
        .collect();
    let built: Vec<(TruthTable, Representative)> = jobs
        .into_par_iter()
        .map(|(i, x, label)| {
            let Representative::Grid(b) = base.representatives[i] else {
                unreachable!("base members come from the grid")
            };
            let trig = TriggerSpec::from_point(coords.clone(), x, label).map_err(DeceiverError::from)?;
            let table = match base.circuit(i)? {
                AnyCircuit::Threshold(c) => truth_table(&restricted_tc0_override(&c, &trig)?),
                AnyCircuit::Ac0(c) => truth_table(&ac0_override(&c, &trig)?),
                AnyCircuit::FanIn2(_) => unreachable!("grids hold no fan-in-2 circuits"),
            }
            .map_err(DeceiverError::from)?;
            Ok((
                table,
                Representative::Override {
                    base: b,
                    point: x,
                    label,
                },
            ))
        })
        .collect::<Result<_, EnumError>>()?;
    let mut seen: FxHashMap<TruthTable, ()> = base.class.members().iter().map(|t| (t.clone(), ())).collect();
    let mut members = base.class.members().to_vec();
    let mut reps = base.representatives.clone();
    for (t, r) in built {
        if seen.insert(t.clone(), ()).is_none() {
            members.push(t);
            reps.push(r);
        }
    }
    Ok(EnumeratedClass {
        spec: ClassSpec::overparametrized(dialect, n),
        class: HypothesisClass::from_distinct(n, members),
        representatives: reps,
        scanned: base.scanned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    fn base(d: Dialect, n: u32) -> EnumeratedClass {
        enumerate_semantic_class(ClassSpec::base(d, n), &EnumOptions::default()).unwrap()
    }

    /// Independent oracle: evaluate every grid circuit and keep the first
    /// index per table.
    fn syntactic(d: Dialect, n: u32) -> Vec<(u128, TruthTable)> {
        let mut seen: FxHashMap<TruthTable, u128> = FxHashMap::default();
        for (i, c) in grid_iterator(d, n).unwrap().enumerate() {
            seen.entry(truth_table(&c).unwrap()).or_insert(i as u128);
        }
        let mut v: Vec<(u128, TruthTable)> = seen.into_iter().map(|(t, i)| (i, t)).collect();
        v.sort_by_key(|e| e.0);
        v
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid_size(Dialect::RestrictedThreshold, 2), 45 * 189);
        assert_eq!(grid_size(Dialect::RestrictedThreshold, 2), 8505);
        assert_eq!(grid_size(Dialect::Ac0Depth2, 2), 30 + 30 * 32);
    }

    #[test]
    fn fast_enumeration_matches_syntactic_dedup() {
        for d in [Dialect::RestrictedThreshold, Dialect::Ac0Depth2] {
            for n in 1..=3 {
                let fast = base(d, n);
                let slow = syntactic(d, n);
                assert_eq!(fast.len(), slow.len(), "{d} n={n}");
                for (k, (idx, t)) in slow.iter().enumerate() {
                    assert_eq!(&fast.class.members()[k], t);
                    assert_eq!(fast.representatives[k], Representative::Grid(*idx));
                }
            }
        }
    }

    #[test]
    fn small_counts() {
        assert_eq!(base(Dialect::RestrictedThreshold, 2).len(), 14);
        assert_eq!(base(Dialect::RestrictedThreshold, 3).len(), 104);
        assert_eq!(base(Dialect::Ac0Depth2, 2).len(), 14);
        assert_eq!(base(Dialect::Ac0Depth2, 3).len(), 96);
    }

    #[test]
    fn grid_is_well_formed_and_replayable() {
        let a: Vec<AnyCircuit> = grid_iterator(Dialect::Ac0Depth2, 2).unwrap().collect();
        let b: Vec<AnyCircuit> = grid_iterator(Dialect::Ac0Depth2, 2).unwrap().collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|c| c.size() <= 2 && c.depth() <= 2));
        assert!(circuit_at(Dialect::Ac0Depth2, 2, 990).is_err());
    }

    #[test]
    fn representatives_reproduce_tables() {
        let e = base(Dialect::RestrictedThreshold, 4);
        for i in (0..e.len()).step_by(37) {
            assert_eq!(truth_table(&e.circuit(i).unwrap()).unwrap(), e.class.members()[i]);
        }
    }

    #[test]
    fn budget_and_long_run_gates() {
        let opts = EnumOptions {
            budget: 1000,
            long_run: false,
        };
        match enumerate_semantic_class(ClassSpec::base(Dialect::RestrictedThreshold, 3), &opts) {
            Err(EnumError::Budget { scanned, .. }) => assert!(scanned > 0),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            enumerate_semantic_class(
                ClassSpec::base(Dialect::RestrictedThreshold, 7),
                &EnumOptions::default()
            ),
            Err(EnumError::NeedsLongRun { n: 7, .. })
        ));
    }

    #[test]
    fn overparametrized_contains_base_and_overrides() {
        for d in [Dialect::RestrictedThreshold, Dialect::Ac0Depth2] {
            let b = base(d, 2);
            let o = enumerate_overparametrized(d, 2, &EnumOptions::default()).unwrap();
            assert!(b.class.members().iter().all(|m| o.class.contains(m)));
            for f in b.class.members() {
                for x in 0..4 {
                    for v in [false, true] {
                        assert!(o.class.contains(&f.with_bit(x, v)));
                    }
                }
            }
            for i in (0..o.len()).step_by(7) {
                assert_eq!(truth_table(&o.circuit(i).unwrap()).unwrap(), o.class.members()[i]);
            }
        }
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(14), 4);
        assert_eq!(ceil_log2(666), 10);
        assert_eq!(ceil_log2(1024), 10);
    }
}
