//! Fixed-precision averaging-hard-attention (AHAT) Transformer classifier
//! and the trigger-block override construction.
//!
//! # Number format
//!
//! A [`Precision`] is a binary floating format with one sign bit, `e`
//! exponent bits and `m` mantissa bits (bias `2^(e-1) - 1`). Every exponent
//! code is finite: there are no infinities or NaNs. Exponent code 0 holds
//! subnormals. Rounding `τ` is round-to-nearest, ties to even, and any
//! overflow saturates to `±F_max`. Zero is always `+0`.
//!
//! Internally a value is an integer multiple of the smallest subnormal, so
//! sums and products are exact before the single rounding step; quotients
//! and square roots are rounded from exact integer comparisons.
//!
//! # Evaluation order
//!
//! * dot products accumulate left to right: `acc = τ(acc + τ(w_j x_j))`;
//!   an affine map adds its bias last: `τ(dot + b)`;
//! * layer norm: sum left to right, `mean = τ(sum / r)`, centered
//!   coordinates `τ(x_i - mean)`, squared norm accumulated left to right,
//!   `τ(sqrt)`, then `τ(c_i / norm)`; a zero norm gives the zero vector;
//! * attention: scores `τ(scale · τ(q·k))`, maximizers by exact equality,
//!   numerator summed in position order, one division by the count;
//! * residual update per layer: head contributions `W_o out` accumulated
//!   head by head, then `h = τ(h + u)`; then the feed-forward block
//!   `h = τ(h + W2 ReLU(W1 v + b1) + b2)` with `v` the normalized
//!   feed-forward view of the updated state;
//! * readout at the last position: `λ = τ(a·h + b)`, then each extra term in
//!   order: `L = τ(L + τ(c · h_k))`; the output is `1[L >= 0]`.

use std::cmp::Ordering;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::boolfn::{BoolFnError, TriggerSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AhatError {
    #[error("precision with {exp_bits} exponent and {man_bits} mantissa bits is not supported")]
    BadPrecision { exp_bits: u32, man_bits: u32 },
    #[error("precision of {0} bits is below the minimum of {MIN_OVERRIDE_BITS}")]
    PrecisionTooLow(u32),
    #[error("value {0} is not representable at this precision")]
    NotRepresentable(String),
    #[error("layer norm does not fix the code vectors at this precision")]
    CodeNotFixed,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("bit pattern {code:#x} does not fit in {bits} bits")]
    BadCode { code: u16, bits: u32 },
    #[error(transparent)]
    Trigger(#[from] BoolFnError),
    #[error("model file: {0}")]
    Json(String),
}

/// Smallest total width for the override construction.
pub const MIN_OVERRIDE_BITS: u32 = 8;

/// A `p`-bit value as its raw bit pattern `sign | exponent | mantissa`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Fp(pub u16);

impl Serialize for Fp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:04x}", self.0))
    }
}

impl<'de> Deserialize<'de> for Fp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u16::from_str_radix(s.trim_start_matches("0x"), 16)
            .map(Fp)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    pub exp_bits: u32,
    pub man_bits: u32,
}

fn bitlen(x: u128) -> u32 {
    128 - x.leading_zeros()
}

impl Precision {
    /// 8 bits: 4 exponent, 3 mantissa.
    pub const P8: Precision = Precision {
        exp_bits: 4,
        man_bits: 3,
    };

    pub fn new(exp_bits: u32, man_bits: u32) -> Result<Self, AhatError> {
        if !(2..=5).contains(&exp_bits) || !(1..=10).contains(&man_bits) {
            return Err(AhatError::BadPrecision { exp_bits, man_bits });
        }
        Ok(Precision { exp_bits, man_bits })
    }

    pub fn bits(&self) -> u32 {
        1 + self.exp_bits + self.man_bits
    }

    fn bias(&self) -> i32 {
        (1 << (self.exp_bits - 1)) - 1
    }

    /// `-log2` of the smallest subnormal.
    fn frac_bits(&self) -> u32 {
        (self.bias() + self.man_bits as i32 - 1) as u32
    }

    fn max_units(&self) -> u128 {
        let emax = (1u32 << self.exp_bits) - 1;
        ((1u128 << (self.man_bits + 1)) - 1) << (emax - 1)
    }

    fn sign_bit(&self) -> u16 {
        1 << (self.exp_bits + self.man_bits)
    }

    pub fn zero(&self) -> Fp {
        Fp(0)
    }

    /// `F_max`.
    pub fn max_value(&self) -> Fp {
        self.encode(false, self.max_units())
    }

    pub fn min_value(&self) -> Fp {
        self.encode(true, self.max_units())
    }

    fn encode(&self, neg: bool, units: u128) -> Fp {
        if units == 0 {
            return Fp(0);
        }
        let m = self.man_bits;
        let (exp, man) = if units < 1 << m {
            (0u128, units)
        } else {
            let j = bitlen(units) - (m + 1);
            (j as u128 + 1, (units >> j) - (1 << m))
        };
        let code = ((exp << m) | man) as u16;
        Fp(if neg { code | self.sign_bit() } else { code })
    }

    /// Signed value in units of the smallest subnormal.
    pub fn units(&self, x: Fp) -> i64 {
        let m = self.man_bits;
        let body = x.0 & (self.sign_bit() - 1);
        let exp = (body >> m) as u32;
        let man = (body & ((1 << m) - 1)) as i64;
        let mag = if exp == 0 { man } else { (man + (1 << m)) << (exp - 1) };
        if x.0 & self.sign_bit() != 0 {
            -mag
        } else {
            mag
        }
    }

    /// `τ` applied to `±num/den` units.
    fn round(&self, neg: bool, num: u128, den: u128) -> Fp {
        if num == 0 {
            return Fp(0);
        }
        let int = num / den;
        let j = bitlen(int).saturating_sub(self.man_bits + 1);
        let step = den << j;
        let mut k = num / step;
        let rem = num % step;
        match (2 * rem).cmp(&step) {
            Ordering::Greater => k += 1,
            Ordering::Equal if k & 1 == 1 => k += 1,
            _ => {}
        }
        let units = (k << j).min(self.max_units());
        self.encode(neg, units)
    }

    fn round_units(&self, u: i128) -> Fp {
        self.round(u < 0, u.unsigned_abs(), 1)
    }

    pub fn add(&self, a: Fp, b: Fp) -> Fp {
        self.round_units(self.units(a) as i128 + self.units(b) as i128)
    }

    pub fn sub(&self, a: Fp, b: Fp) -> Fp {
        self.round_units(self.units(a) as i128 - self.units(b) as i128)
    }

    pub fn mul(&self, a: Fp, b: Fp) -> Fp {
        let p = self.units(a) as i128 * self.units(b) as i128;
        self.round(p < 0, p.unsigned_abs(), 1 << self.frac_bits())
    }

    /// `a / b`; division by zero saturates by the sign of `a` (and `0/0 = 0`).
    pub fn div(&self, a: Fp, b: Fp) -> Fp {
        let (ua, ub) = (self.units(a), self.units(b));
        if ub == 0 {
            return match ua.cmp(&0) {
                Ordering::Greater => self.max_value(),
                Ordering::Less => self.min_value(),
                Ordering::Equal => Fp(0),
            };
        }
        let neg = (ua < 0) != (ub < 0);
        self.round(
            neg,
            (ua.unsigned_abs() as u128) << self.frac_bits(),
            ub.unsigned_abs() as u128,
        )
    }

    /// Correctly rounded square root; negative inputs give 0.
    pub fn sqrt(&self, a: Fp) -> Fp {
        let u = self.units(a);
        if u <= 0 {
            return Fp(0);
        }
        // result units = sqrt(u * 2^frac_bits)
        let s = (u as u128) << self.frac_bits();
        let r0 = s.isqrt();
        let j = bitlen(r0).saturating_sub(self.man_bits + 1);
        let lo = (s >> (2 * j)).isqrt() << j;
        // round up iff sqrt(s) > lo + 2^(j-1), ties to even
        let mid2 = 2 * lo + (1u128 << j);
        let k = lo >> j;
        let up = match (4 * s).cmp(&(mid2 * mid2)) {
            Ordering::Greater => true,
            Ordering::Equal => k & 1 == 1,
            Ordering::Less => false,
        };
        let units = if up { lo + (1 << j) } else { lo };
        self.encode(false, units.min(self.max_units()))
    }

    pub fn relu(&self, a: Fp) -> Fp {
        if self.units(a) > 0 {
            a
        } else {
            Fp(0)
        }
    }

    pub fn cmp(&self, a: Fp, b: Fp) -> Ordering {
        self.units(a).cmp(&self.units(b))
    }

    pub fn is_nonneg(&self, a: Fp) -> bool {
        self.units(a) >= 0
    }

    /// Exact value as a float.
    pub fn to_f64(&self, a: Fp) -> f64 {
        self.units(a) as f64 / (1u64 << self.frac_bits()) as f64
    }

    /// `τ(v)` for a finite float.
    pub fn from_f64(&self, v: f64) -> Fp {
        let scaled = v * (1u64 << self.frac_bits()) as f64;
        // floats are dyadic: scale to an exact integer ratio
        let (neg, mag) = (scaled < 0.0, scaled.abs());
        if mag >= 2f64.powi(100) {
            return if neg { self.min_value() } else { self.max_value() };
        }
        let den_bits = 40u32;
        let num = (mag * 2f64.powi(den_bits as i32)).round() as u128;
        self.round(neg, num, 1 << den_bits)
    }

    /// The exact value `num / 2^log2_den`, or an error if `τ` would change it.
    pub fn exact(&self, num: i64, log2_den: u32) -> Result<Fp, AhatError> {
        let v = num as f64 / 2f64.powi(log2_den as i32);
        let x = self.from_f64(v);
        if self.to_f64(x) != v {
            return Err(AhatError::NotRepresentable(v.to_string()));
        }
        Ok(x)
    }

    pub fn one(&self) -> Fp {
        self.from_f64(1.0)
    }

    /// Checks that `0, ±1/2, ±1, 2` are exact.
    pub fn represents_small_dyadics(&self) -> bool {
        [0.0, 0.5, -0.5, 1.0, -1.0, 2.0]
            .iter()
            .all(|&v| self.to_f64(self.from_f64(v)) == v)
    }

    fn check_code(&self, x: Fp) -> Result<(), AhatError> {
        if u32::from(x.0) >> self.bits() != 0 {
            return Err(AhatError::BadCode {
                code: x.0,
                bits: self.bits(),
            });
        }
        Ok(())
    }

    /// `τ(Σ τ(w_j x_j))` accumulated left to right.
    pub fn dot(&self, w: &[Fp], x: &[Fp]) -> Fp {
        w.iter()
            .zip(x)
            .fold(Fp(0), |acc, (&a, &b)| self.add(acc, self.mul(a, b)))
    }

    /// `τ(W x + b)` row by row.
    pub fn affine(&self, w: &[Vec<Fp>], b: &[Fp], x: &[Fp]) -> Vec<Fp> {
        w.iter()
            .zip(b)
            .map(|(row, &bi)| self.add(self.dot(row, x), bi))
            .collect()
    }

    pub fn matvec(&self, w: &[Vec<Fp>], x: &[Fp]) -> Vec<Fp> {
        w.iter().map(|row| self.dot(row, x)).collect()
    }

    /// `(x - mean) / ||x - mean||_2`; the zero vector when the norm is 0.
    pub fn layer_norm(&self, x: &[Fp]) -> Vec<Fp> {
        if x.is_empty() {
            return Vec::new();
        }
        let sum = x.iter().fold(Fp(0), |acc, &v| self.add(acc, v));
        let count = self.from_f64(x.len() as f64);
        let mean = self.div(sum, count);
        let centered: Vec<Fp> = x.iter().map(|&v| self.sub(v, mean)).collect();
        let sq = centered.iter().fold(Fp(0), |acc, &c| self.add(acc, self.mul(c, c)));
        let norm = self.sqrt(sq);
        if self.units(norm) == 0 {
            return vec![Fp(0); x.len()];
        }
        centered.iter().map(|&c| self.div(c, norm)).collect()
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{} (e={}, m={})", self.bits(), self.exp_bits, self.man_bits)
    }
}

type Matrix = Vec<Vec<Fp>>;

/// One attention head reading `layer_norm(proj · h)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Head {
    pub proj: Matrix,
    pub wq: Matrix,
    pub bq: Vec<Fp>,
    pub wk: Matrix,
    pub bk: Vec<Fp>,
    pub wv: Matrix,
    pub bv: Vec<Fp>,
    /// Positive score scale.
    pub scale: Fp,
    /// Output map into the residual stream, `dim × value_dim`.
    pub wo: Matrix,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedForward {
    pub proj: Matrix,
    pub w1: Matrix,
    pub b1: Vec<Fp>,
    pub w2: Matrix,
    pub b2: Vec<Fp>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layer {
    pub heads: Vec<Head>,
    pub ff: Option<FeedForward>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Readout {
    pub a: Vec<Fp>,
    pub b: Fp,
    /// Terms `(coordinate, coefficient)` added after the logit, in order.
    #[serde(default)]
    pub post: Vec<(usize, Fp)>,
}

/// Binary classifier on `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AhatModel {
    pub precision: Precision,
    pub n: u32,
    pub dim: usize,
    /// `embedding[i][a]` for position `i` and token `a`.
    pub embedding: Vec<[Vec<Fp>; 2]>,
    pub layers: Vec<Layer>,
    pub readout: Readout,
}

fn shape(cond: bool, what: impl FnOnce() -> String) -> Result<(), AhatError> {
    if cond {
        Ok(())
    } else {
        Err(AhatError::Shape(what()))
    }
}

fn check_matrix(m: &Matrix, rows: usize, cols: usize, name: &str) -> Result<(), AhatError> {
    shape(m.len() == rows && m.iter().all(|r| r.len() == cols), || {
        format!("{name} should be {rows}x{cols}")
    })
}

/// Hidden states and raw attention scores of one forward pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    /// `hidden[0]` is the embedding; `hidden[l]` the state after layer `l`.
    pub hidden: Vec<Vec<Vec<Fp>>>,
    /// `scores[l][k][i][j]`: unscaled `q_i · k_j` of head `k` in layer `l`.
    pub scores: Vec<Vec<Vec<Vec<Fp>>>>,
    /// `scaled[l][k][i][j]`: the scores compared by the head.
    pub scaled: Vec<Vec<Vec<Vec<Fp>>>>,
    /// `head_out[l][k][i]`: head output at position `i`.
    pub head_out: Vec<Vec<Vec<Vec<Fp>>>>,
    pub logit: Fp,
    pub output: bool,
}

impl AhatModel {
    pub fn validate(&self) -> Result<(), AhatError> {
        let p = self.precision;
        Precision::new(p.exp_bits, p.man_bits)?;
        let d = self.dim;
        shape(self.n >= 1 && self.n <= 24, || {
            format!("input length {} out of range", self.n)
        })?;
        shape(self.embedding.len() == self.n as usize, || {
            "one embedding row per position".into()
        })?;
        for row in &self.embedding {
            for v in row {
                shape(v.len() == d, || format!("embedding vectors must have length {d}"))?;
                v.iter().try_for_each(|&x| p.check_code(x))?;
            }
        }
        for (l, layer) in self.layers.iter().enumerate() {
            for (k, h) in layer.heads.iter().enumerate() {
                let name = |s: &str| format!("layer {l} head {k} {s}");
                let r = h.proj.len();
                check_matrix(&h.proj, r, d, &name("proj"))?;
                let qk = h.wq.len();
                check_matrix(&h.wq, qk, r, &name("wq"))?;
                check_matrix(&h.wk, qk, r, &name("wk"))?;
                shape(h.bq.len() == qk && h.bk.len() == qk, || name("query/key bias"))?;
                let dv = h.wv.len();
                check_matrix(&h.wv, dv, r, &name("wv"))?;
                shape(h.bv.len() == dv, || name("value bias"))?;
                check_matrix(&h.wo, d, dv, &name("wo"))?;
                shape(p.units(h.scale) > 0, || name("scale must be positive"))?;
            }
            if let Some(ff) = &layer.ff {
                let r = ff.proj.len();
                check_matrix(&ff.proj, r, d, &format!("layer {l} ff proj"))?;
                let hid = ff.w1.len();
                check_matrix(&ff.w1, hid, r, &format!("layer {l} w1"))?;
                shape(ff.b1.len() == hid, || format!("layer {l} b1"))?;
                check_matrix(&ff.w2, d, hid, &format!("layer {l} w2"))?;
                shape(ff.b2.len() == d, || format!("layer {l} b2"))?;
            }
        }
        shape(self.readout.a.len() == d, || "readout weights".into())?;
        shape(self.readout.post.iter().all(|&(i, _)| i < d), || {
            "readout term index".into()
        })?;
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AhatError> {
        let m: AhatModel = serde_json::from_str(text).map_err(|e| AhatError::Json(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn forward(&self, x: u64) -> bool {
        self.run(x, false).output
    }

    pub fn forward_trace(&self, x: u64) -> Trace {
        self.run(x, true)
    }

    fn run(&self, x: u64, record: bool) -> Trace {
        let p = &self.precision;
        let n = self.n as usize;
        let mut h: Vec<Vec<Fp>> = (0..n)
            .map(|i| self.embedding[i][((x >> i) & 1) as usize].clone())
            .collect();
        let mut trace = Trace {
            hidden: Vec::new(),
            scores: Vec::new(),
            scaled: Vec::new(),
            head_out: Vec::new(),
            logit: Fp(0),
            output: false,
        };
        if record {
            trace.hidden.push(h.clone());
        }
        for layer in &self.layers {
            let mut layer_scores = Vec::new();
            let mut layer_scaled = Vec::new();
            let mut layer_out = Vec::new();
            let mut update = vec![vec![Fp(0); self.dim]; n];
            for head in &layer.heads {
                let views: Vec<Vec<Fp>> = h.iter().map(|hi| p.layer_norm(&p.matvec(&head.proj, hi))).collect();
                let keys: Vec<Vec<Fp>> = views.iter().map(|v| p.affine(&head.wk, &head.bk, v)).collect();
                let vals: Vec<Vec<Fp>> = views.iter().map(|v| p.affine(&head.wv, &head.bv, v)).collect();
                let mut raw_rows = Vec::new();
                let mut scaled_rows = Vec::new();
                let mut outs = Vec::new();
                for i in 0..n {
                    let q = p.affine(&head.wq, &head.bq, &views[i]);
                    let raw: Vec<Fp> = keys.iter().map(|k| p.dot(&q, k)).collect();
                    let scaled: Vec<Fp> = raw.iter().map(|&s| p.mul(head.scale, s)).collect();
                    let best = scaled.iter().map(|&s| p.units(s)).max().expect("n >= 1");
                    let winners: Vec<usize> = (0..n).filter(|&j| p.units(scaled[j]) == best).collect();
                    let count = p.from_f64(winners.len() as f64);
                    let out: Vec<Fp> = (0..head.wv.len())
                        .map(|c| {
                            let num = winners.iter().fold(Fp(0), |acc, &j| p.add(acc, vals[j][c]));
                            p.div(num, count)
                        })
                        .collect();
                    for (r, u) in update[i].iter_mut().enumerate() {
                        *u = head.wo[r]
                            .iter()
                            .zip(&out)
                            .fold(*u, |acc, (&w, &o)| p.add(acc, p.mul(w, o)));
                    }
                    if record {
                        raw_rows.push(raw);
                        scaled_rows.push(scaled);
                        outs.push(out);
                    }
                }
                if record {
                    layer_scores.push(raw_rows);
                    layer_scaled.push(scaled_rows);
                    layer_out.push(outs);
                }
            }
            for (hi, ui) in h.iter_mut().zip(&update) {
                for (a, &b) in hi.iter_mut().zip(ui) {
                    *a = p.add(*a, b);
                }
            }
            if let Some(ff) = &layer.ff {
                for hi in h.iter_mut() {
                    let v = p.layer_norm(&p.matvec(&ff.proj, hi));
                    let hidden: Vec<Fp> = p.affine(&ff.w1, &ff.b1, &v).into_iter().map(|z| p.relu(z)).collect();
                    let delta = p.affine(&ff.w2, &ff.b2, &hidden);
                    for (a, d) in hi.iter_mut().zip(delta) {
                        *a = p.add(*a, d);
                    }
                }
            }
            if record {
                trace.hidden.push(h.clone());
                trace.scores.push(layer_scores);
                trace.scaled.push(layer_scaled);
                trace.head_out.push(layer_out);
            }
        }
        let last = &h[n - 1];
        let mut logit = p.add(p.dot(&self.readout.a, last), self.readout.b);
        for &(idx, c) in &self.readout.post {
            logit = p.add(logit, p.mul(c, last[idx]));
        }
        trace.logit = logit;
        trace.output = p.is_nonneg(logit);
        trace
    }

    /// Outputs on all `2^n` inputs.
    pub fn truth_table(&self) -> Result<crate::boolfn::TruthTable, AhatError> {
        use rayon::prelude::*;
        let outs: Vec<bool> = (0..1u64 << self.n).into_par_iter().map(|x| self.forward(x)).collect();
        Ok(crate::boolfn::TruthTable::from_fn(self.n, |x| outs[x as usize])?)
    }
}

/// Code vectors `α, β, γ` (off-trigger, mismatched, matched).
pub fn code_vectors(p: &Precision) -> [[Fp; 4]; 3] {
    let h = p.from_f64(0.5);
    let m = p.from_f64(-0.5);
    [[h, h, m, m], [h, m, h, m], [h, m, m, h]]
}

/// Constant query of the trigger head.
pub fn trigger_query(p: &Precision) -> [Fp; 4] {
    [p.from_f64(2.0), p.from_f64(-1.0), p.from_f64(1.0), Fp(0)]
}

/// Checks that layer norm fixes `α, β, γ` exactly.
pub fn verify_layer_norm_fixed_points(p: &Precision) -> Result<(), AhatError> {
    if !p.represents_small_dyadics() {
        return Err(AhatError::PrecisionTooLow(p.bits()));
    }
    for c in code_vectors(p) {
        if p.layer_norm(&c) != c {
            return Err(AhatError::CodeNotFixed);
        }
    }
    Ok(())
}

fn pad_cols(m: &Matrix, extra: usize) -> Matrix {
    m.iter()
        .map(|r| r.iter().copied().chain(std::iter::repeat_n(Fp(0), extra)).collect())
        .collect()
}

fn pad_rows(m: &Matrix, extra: usize) -> Matrix {
    let cols = m.first().map_or(0, Vec::len);
    m.iter()
        .cloned()
        .chain(std::iter::repeat_n(vec![Fp(0); cols], extra))
        .collect()
}

/// Index of the first added coordinate in an overridden model.
pub fn code_offset(base: &AhatModel) -> usize {
    base.dim
}

/// Adds the trigger head, six residual coordinates and the two-step
/// saturating readout so that the result outputs the trigger label on the
/// block and copies `base` elsewhere.
pub fn block_override(base: &AhatModel, trig: &TriggerSpec) -> Result<AhatModel, AhatError> {
    base.validate()?;
    let p = base.precision;
    if p.bits() < MIN_OVERRIDE_BITS {
        return Err(AhatError::PrecisionTooLow(p.bits()));
    }
    verify_layer_norm_fixed_points(&p)?;
    trig.validate_for(base.n)?;
    shape(!base.layers.is_empty(), || "override needs at least one layer".into())?;
    let m = base.dim;
    let dim = m + 6;
    let [alpha, beta, gamma] = code_vectors(&p);

    let embedding = (0..base.n as usize)
        .map(|i| {
            let row = |a: usize| {
                let code = match trig.coords().iter().position(|&c| c as usize == i) {
                    None => alpha,
                    Some(k) if trig.pattern()[k] == (a == 1) => gamma,
                    Some(_) => beta,
                };
                base.embedding[i][a]
                    .iter()
                    .copied()
                    .chain(code)
                    .chain([Fp(0), Fp(0)])
                    .collect()
            };
            [row(0), row(1)]
        })
        .collect();

    let mut layers: Vec<Layer> = base
        .layers
        .iter()
        .map(|l| Layer {
            heads: l
                .heads
                .iter()
                .map(|h| Head {
                    proj: pad_cols(&h.proj, 6),
                    wo: pad_rows(&h.wo, 6),
                    ..h.clone()
                })
                .collect(),
            ff: l.ff.as_ref().map(|f| FeedForward {
                proj: pad_cols(&f.proj, 6),
                w2: pad_rows(&f.w2, 6),
                b2: f.b2.iter().copied().chain([Fp(0); 6]).collect(),
                ..f.clone()
            }),
        })
        .collect();

    let one = p.one();
    let mut proj = vec![vec![Fp(0); dim]; 4];
    let mut wk = vec![vec![Fp(0); 4]; 4];
    for k in 0..4 {
        proj[k][m + k] = one;
        wk[k][k] = one;
    }
    let neg = p.from_f64(-1.0);
    let mut wo = vec![vec![Fp(0)]; dim];
    wo[m + 4][0] = one;
    wo[m + 5][0] = one;
    layers.last_mut().expect("nonempty").heads.push(Head {
        proj,
        wq: vec![vec![Fp(0); 4]; 4],
        bq: trigger_query(&p).to_vec(),
        wk,
        bk: vec![Fp(0); 4],
        wv: vec![vec![Fp(0), neg, neg, Fp(0)]],
        bv: vec![Fp(0)],
        scale: p.from_f64(0.5),
        wo,
    });

    let f = if trig.override_label() {
        p.max_value()
    } else {
        p.min_value()
    };
    let mut post = base.readout.post.clone();
    post.push((m + 4, f));
    post.push((m + 5, f));
    let model = AhatModel {
        precision: p,
        n: base.n,
        dim,
        embedding,
        layers,
        readout: Readout {
            a: base.readout.a.iter().copied().chain([Fp(0); 6]).collect(),
            b: base.readout.b,
            post,
        },
    };
    model.validate()?;
    Ok(model)
}

/// Shape limits for random base models.
#[derive(Clone, Copy, Debug)]
pub struct RandomModelConfig {
    pub max_depth: usize,
    pub max_dim: usize,
    pub max_heads: usize,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        RandomModelConfig {
            max_depth: 3,
            max_dim: 8,
            max_heads: 2,
        }
    }
}

/// Parameter values drawn by [`random_model`].
pub const DYADICS: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

/// Random model whose parameters are all exact small dyadics.
pub fn random_model<R: Rng>(rng: &mut R, p: Precision, n: u32, cfg: RandomModelConfig) -> AhatModel {
    let val = |rng: &mut R| p.from_f64(*DYADICS.choose(rng).expect("nonempty"));
    let mat =
        |rng: &mut R, r: usize, c: usize| -> Matrix { (0..r).map(|_| (0..c).map(|_| val(rng)).collect()).collect() };
    let dim = rng.gen_range(2..=cfg.max_dim.max(2));
    let depth = rng.gen_range(1..=cfg.max_depth.max(1));
    let embedding = (0..n)
        .map(|_| [mat(rng, 1, dim).remove(0), mat(rng, 1, dim).remove(0)])
        .collect();
    let layers = (0..depth)
        .map(|_| {
            let heads = (0..rng.gen_range(1..=cfg.max_heads.max(1)))
                .map(|_| {
                    let r = rng.gen_range(2..=dim);
                    let qk = rng.gen_range(1..=3);
                    let dv = rng.gen_range(1..=2);
                    let scale = p.from_f64(if rng.gen_bool(0.5) { 1.0 } else { 0.5 });
                    Head {
                        proj: mat(rng, r, dim),
                        wq: mat(rng, qk, r),
                        bq: mat(rng, 1, qk).remove(0),
                        wk: mat(rng, qk, r),
                        bk: mat(rng, 1, qk).remove(0),
                        wv: mat(rng, dv, r),
                        bv: mat(rng, 1, dv).remove(0),
                        scale,
                        wo: mat(rng, dim, dv),
                    }
                })
                .collect();
            let ff = rng.gen_bool(0.7).then(|| {
                let r = rng.gen_range(2..=dim);
                let hid = rng.gen_range(1..=3);
                FeedForward {
                    proj: mat(rng, r, dim),
                    w1: mat(rng, hid, r),
                    b1: mat(rng, 1, hid).remove(0),
                    w2: mat(rng, dim, hid),
                    b2: mat(rng, 1, dim).remove(0),
                }
            });
            Layer { heads, ff }
        })
        .collect();
    let readout = Readout {
        a: mat(rng, 1, dim).remove(0),
        b: val(rng),
        post: Vec::new(),
    };
    AhatModel {
        precision: p,
        n,
        dim,
        embedding,
        layers,
        readout,
    }
}
