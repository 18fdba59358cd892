//! Boolean functions on `{0,1}^n`, trigger blocks and disagreement sets.
//!
//! Bit convention, used by every module in the crate: a domain point is the
//! integer whose bit `i` holds input coordinate `i + 1`. Coordinate 1 is the
//! least significant bit. Trigger coordinates are stored as zero-based bit
//! positions; the text formats and the CLI use one-based `x1..xn` names.

use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;
use thiserror::Error;

/// Largest arity for which a dense table is materialized (2^26 bits = 8 MiB).
pub const MAX_TABLE_ARITY: u32 = 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoolFnError {
    #[error("arity {0} is outside the supported range 1..={MAX_TABLE_ARITY}")]
    UnsupportedArity(u32),
    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: u32, right: u32 },
    #[error("point {point} is outside the domain of arity {arity}")]
    PointOutOfRange { point: u64, arity: u32 },
    #[error("invalid trigger: {0}")]
    InvalidTrigger(String),
    #[error("malformed truth table text: {0}")]
    Parse(String),
}

fn check_arity(n: u32) -> Result<(), BoolFnError> {
    if n == 0 || n > MAX_TABLE_ARITY {
        return Err(BoolFnError::UnsupportedArity(n));
    }
    Ok(())
}

fn word_count(n: u32) -> usize {
    if n <= 6 {
        1
    } else {
        1usize << (n - 6)
    }
}

fn last_word_mask(n: u32) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << n)) - 1
    }
}

/// Full behaviour of a Boolean function as a dense `2^n`-bit vector.
///
/// Equality is semantic: same arity and same bits.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruthTable {
    arity: u32,
    words: SmallVec<[u64; 4]>,
}

impl TruthTable {
    pub fn zeros(n: u32) -> Result<Self, BoolFnError> {
        check_arity(n)?;
        Ok(TruthTable {
            arity: n,
            words: SmallVec::from_elem(0, word_count(n)),
        })
    }

    pub fn constant(n: u32, value: bool) -> Result<Self, BoolFnError> {
        let mut t = Self::zeros(n)?;
        if value {
            for w in t.words.iter_mut() {
                *w = u64::MAX;
            }
            t.trim();
        }
        Ok(t)
    }

    pub fn from_fn<F: FnMut(u64) -> bool>(n: u32, mut f: F) -> Result<Self, BoolFnError> {
        let mut t = Self::zeros(n)?;
        for x in 0..t.domain_size() {
            if f(x) {
                t.words[(x >> 6) as usize] |= 1 << (x & 63);
            }
        }
        Ok(t)
    }

    /// Builds a table from packed words; bits beyond `2^n` must be clear.
    pub fn from_words(n: u32, words: &[u64]) -> Result<Self, BoolFnError> {
        check_arity(n)?;
        if words.len() != word_count(n) {
            return Err(BoolFnError::Parse(format!(
                "expected {} words for arity {n}, got {}",
                word_count(n),
                words.len()
            )));
        }
        if words[words.len() - 1] & !last_word_mask(n) != 0 {
            return Err(BoolFnError::Parse("bits set beyond the domain".into()));
        }
        Ok(TruthTable {
            arity: n,
            words: SmallVec::from_slice(words),
        })
    }

    /// `OR_n(x) = 1[x_1 + ... + x_n >= 1]`.
    pub fn or_n(n: u32) -> Result<Self, BoolFnError> {
        Self::from_fn(n, |x| x != 0)
    }

    fn trim(&mut self) {
        let mask = last_word_mask(self.arity);
        if let Some(last) = self.words.last_mut() {
            *last &= mask;
        }
    }

    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn domain_size(&self) -> u64 {
        1u64 << self.arity
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, x: u64) -> bool {
        debug_assert!(x < self.domain_size());
        (self.words[(x >> 6) as usize] >> (x & 63)) & 1 == 1
    }

    pub fn try_get(&self, x: u64) -> Result<bool, BoolFnError> {
        if x >= self.domain_size() {
            return Err(BoolFnError::PointOutOfRange {
                point: x,
                arity: self.arity,
            });
        }
        Ok(self.get(x))
    }

    /// Copy with bit `x` set to `value`.
    pub fn with_bit(&self, x: u64, value: bool) -> Self {
        let mut t = self.clone();
        let w = &mut t.words[(x >> 6) as usize];
        if value {
            *w |= 1 << (x & 63);
        } else {
            *w &= !(1 << (x & 63));
        }
        t
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Number of points where the two tables differ.
    pub fn distance(&self, other: &TruthTable) -> Result<u64, BoolFnError> {
        self.same_arity(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum())
    }

    fn same_arity(&self, other: &TruthTable) -> Result<(), BoolFnError> {
        if self.arity != other.arity {
            return Err(BoolFnError::ArityMismatch {
                left: self.arity,
                right: other.arity,
            });
        }
        Ok(())
    }

    /// Points where the function is 1, in increasing order.
    pub fn ones(&self) -> impl Iterator<Item = u64> + '_ {
        iter_set_bits(&self.words)
    }

    /// Hexadecimal form: `<n>:<digits>`, first digit covering inputs 0..=3,
    /// bit `j` of digit `k` holding input `4k + j`.
    pub fn to_hex(&self) -> String {
        let nibbles = self.domain_size().div_ceil(4) as usize;
        let mut s = String::with_capacity(nibbles + 4);
        s.push_str(&self.arity.to_string());
        s.push(':');
        for k in 0..nibbles {
            let bit = 4 * k as u64;
            let nib = (self.words[(bit >> 6) as usize] >> (bit & 63)) & 0xf;
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(text: &str) -> Result<Self, BoolFnError> {
        let (head, digits) = text
            .trim()
            .split_once(':')
            .ok_or_else(|| BoolFnError::Parse("missing `<arity>:` header".into()))?;
        let n: u32 = head
            .trim()
            .parse()
            .map_err(|_| BoolFnError::Parse(format!("bad arity `{head}`")))?;
        let mut t = Self::zeros(n)?;
        let nibbles = t.domain_size().div_ceil(4) as usize;
        let digits = digits.trim();
        if digits.len() != nibbles {
            return Err(BoolFnError::Parse(format!(
                "expected {nibbles} hex digits for arity {n}, got {}",
                digits.len()
            )));
        }
        for (k, c) in digits.chars().enumerate() {
            let nib = c
                .to_digit(16)
                .ok_or_else(|| BoolFnError::Parse(format!("bad hex digit `{c}`")))? as u64;
            let bit = 4 * k as u64;
            t.words[(bit >> 6) as usize] |= nib << (bit & 63);
        }
        if t.words[t.words.len() - 1] & !last_word_mask(n) != 0 {
            return Err(BoolFnError::Parse("bits set beyond the domain".into()));
        }
        Ok(t)
    }
}

impl fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruthTable({})", self.to_hex())
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for TruthTable {
    type Err = BoolFnError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_hex(s)
    }
}

pub(crate) fn iter_set_bits(words: &[u64]) -> impl Iterator<Item = u64> + '_ {
    words.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                return None;
            }
            let b = w.trailing_zeros() as u64;
            w &= w - 1;
            Some(((i as u64) << 6) | b)
        })
    })
}

/// A trigger block `B = {x : x_I = pattern}` together with the label the
/// deceiver outputs on it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TriggerSpec {
    coords: Vec<u32>,
    pattern: Vec<bool>,
    override_label: bool,
}

impl TriggerSpec {
    /// `coords` are zero-based bit positions. They are stored in increasing
    /// order with the pattern permuted alongside.
    pub fn new(coords: Vec<u32>, pattern: Vec<bool>, override_label: bool) -> Result<Self, BoolFnError> {
        if coords.is_empty() {
            return Err(BoolFnError::InvalidTrigger("empty coordinate set".into()));
        }
        if coords.len() != pattern.len() {
            return Err(BoolFnError::InvalidTrigger(format!(
                "{} coordinates but {} pattern bits",
                coords.len(),
                pattern.len()
            )));
        }
        if coords.iter().any(|&c| c >= 64) {
            return Err(BoolFnError::InvalidTrigger("coordinate beyond bit 63".into()));
        }
        let mut pairs: Vec<(u32, bool)> = coords.into_iter().zip(pattern).collect();
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(BoolFnError::InvalidTrigger("duplicate coordinate".into()));
        }
        let (coords, pattern) = pairs.into_iter().unzip();
        Ok(TriggerSpec {
            coords,
            pattern,
            override_label,
        })
    }

    /// Trigger on `coords` whose pattern is read off the point `x`.
    pub fn from_point(coords: Vec<u32>, x: u64, override_label: bool) -> Result<Self, BoolFnError> {
        let pattern = coords.iter().map(|&c| c < 64 && (x >> c) & 1 == 1).collect();
        Self::new(coords, pattern, override_label)
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn pattern(&self) -> &[bool] {
        &self.pattern
    }

    pub fn override_label(&self) -> bool {
        self.override_label
    }

    pub fn with_label(&self, label: bool) -> Self {
        TriggerSpec {
            override_label: label,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn validate_for(&self, n: u32) -> Result<(), BoolFnError> {
        if let Some(&c) = self.coords.iter().find(|&&c| c >= n) {
            return Err(BoolFnError::InvalidTrigger(format!(
                "coordinate x{} outside [1, {n}]",
                c + 1
            )));
        }
        Ok(())
    }

    pub fn mask(&self) -> u64 {
        self.coords.iter().fold(0, |m, &c| m | (1 << c))
    }

    pub fn value(&self) -> u64 {
        self.coords
            .iter()
            .zip(&self.pattern)
            .fold(0, |v, (&c, &p)| if p { v | (1 << c) } else { v })
    }

    #[inline]
    pub fn contains(&self, x: u64) -> bool {
        x & self.mask() == self.value()
    }

    /// Points of the block inside `{0,1}^n`, in increasing order.
    pub fn block_points(&self, n: u32) -> impl Iterator<Item = u64> {
        let full = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
        let free = full & !self.mask();
        let value = self.value();
        let mut sub = 0u64;
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let x = sub | value;
            sub = sub.wrapping_sub(free) & free;
            done = sub == 0;
            Some(x)
        })
    }

    pub fn block_size(&self, n: u32) -> u64 {
        1u64 << (n - self.coords.len() as u32)
    }

    /// All `2^t` triggers on the same coordinates, patterns in increasing
    /// integer order (pattern bit `k` belongs to the `k`-th smallest coordinate).
    pub fn all_patterns(coords: &[u32], label: bool) -> Result<Vec<TriggerSpec>, BoolFnError> {
        let t = coords.len();
        if t >= 32 {
            return Err(BoolFnError::InvalidTrigger("too many trigger coordinates".into()));
        }
        let mut sorted = coords.to_vec();
        sorted.sort_unstable();
        (0..1u64 << t)
            .map(|p| {
                let pattern = (0..t).map(|k| (p >> k) & 1 == 1).collect();
                TriggerSpec::new(sorted.clone(), pattern, label)
            })
            .collect()
    }
}

/// `x ∈ B_π` for the trigger, checked against arity `n`.
pub fn block_membership(x: u64, trig: &TriggerSpec, n: u32) -> Result<bool, BoolFnError> {
    trig.validate_for(n)?;
    if n < 64 && x >> n != 0 {
        return Err(BoolFnError::PointOutOfRange { point: x, arity: n });
    }
    Ok(trig.contains(x))
}

/// Sorted set of domain points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct DisagreementSet {
    points: Vec<u64>,
}

impl DisagreementSet {
    pub fn from_sorted(points: Vec<u64>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        DisagreementSet { points }
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

    pub fn contains(&self, x: u64) -> bool {
        self.points.binary_search(&x).is_ok()
    }

    /// First point shared with `other`, if any.
    pub fn first_common(&self, other: &DisagreementSet) -> Option<u64> {
        let (mut i, mut j) = (0, 0);
        while i < self.points.len() && j < other.points.len() {
            match self.points[i].cmp(&other.points[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return Some(self.points[i]),
            }
        }
        None
    }

    pub fn is_disjoint(&self, other: &DisagreementSet) -> bool {
        self.first_common(other).is_none()
    }
}

/// `E = {x : h(x) != f(x)}`.
pub fn disagreement_set(h: &TruthTable, f: &TruthTable) -> Result<DisagreementSet, BoolFnError> {
    h.same_arity(f)?;
    let diff: Vec<u64> = h.words.iter().zip(&f.words).map(|(a, b)| a ^ b).collect();
    Ok(DisagreementSet::from_sorted(iter_set_bits(&diff).collect()))
}

/// Label that disagrees with `f` on at least half of the block; ties go to 0.
pub fn majority_override_label(f: &TruthTable, trig: &TriggerSpec) -> Result<bool, BoolFnError> {
    trig.validate_for(f.arity())?;
    let n = f.arity();
    let ones = trig.block_points(n).filter(|&x| f.get(x)).count() as u64;
    let zeros = trig.block_size(n) - ones;
    Ok(zeros > ones)
}
