//! Gate-level circuits in three dialects and their evaluators.
//!
//! Gates are kept in topological order: a gate may read external inputs and
//! strictly earlier gates only. Construction rejects anything else, so
//! evaluation never fails. Input nodes have depth 0 and a gate has depth
//! `1 + max(fan-in depth)`; circuit depth is the depth of the output gate.
//!
//! # Text format
//!
//! ```text
//! # comment
//! threshold 3            <- dialect (threshold | ac0 | fanin2) and arity
//! thr 1 x1:1 x2:1 x3:1   <- threshold gate: theta, then signal:weight pairs
//! out g0                 <- output gate
//! ```
//!
//! Signals are `x1..xn` (one-based inputs) and `g0, g1, ...` (gates in file
//! order). AC0 gates are `and ...` / `or ...` over `xi`, `~xi` and `gk`; an
//! empty fan-in is allowed (`and` = 1, `or` = 0). Fan-in-2 gates are
//! `and a b`, `or a b` and `not a`.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::boolfn::{BoolFnError, TruthTable, MAX_TABLE_ARITY};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("gate {gate} reads {signal}, which is not available at that point")]
    BadReference { gate: usize, signal: String },
    #[error("output gate {0} does not exist")]
    BadOutput(usize),
    #[error("circuit has no gates")]
    Empty,
    #[error("arity {0} is not supported")]
    BadArity(u32),
    #[error("weights of gate {0} overflow 64-bit arithmetic")]
    WeightOverflow(usize),
    #[error("truth table of arity {0} exceeds the configured limit")]
    TooLarge(u32),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An input coordinate (zero-based bit position) or an earlier gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signal {
    Input(u32),
    Gate(usize),
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Input(i) => write!(f, "x{}", i + 1),
            Signal::Gate(g) => write!(f, "g{g}"),
        }
    }
}

fn check_signal(gate: usize, arity: u32, s: Signal) -> Result<(), CircuitError> {
    let ok = match s {
        Signal::Input(i) => i < arity,
        Signal::Gate(g) => g < gate,
    };
    if ok {
        Ok(())
    } else {
        Err(CircuitError::BadReference {
            gate,
            signal: s.to_string(),
        })
    }
}

fn check_arity(n: u32) -> Result<(), CircuitError> {
    if n == 0 || n > 63 {
        return Err(CircuitError::BadArity(n));
    }
    Ok(())
}

#[inline]
fn read(values: &[bool], x: u64, s: Signal) -> bool {
    match s {
        Signal::Input(i) => (x >> i) & 1 == 1,
        Signal::Gate(g) => values[g],
    }
}

#[inline]
fn signal_depth(depths: &[usize], s: Signal) -> usize {
    match s {
        Signal::Input(_) => 0,
        Signal::Gate(g) => depths[g],
    }
}

/// Common interface of the three dialects.
pub trait Circuit: Sync {
    fn arity(&self) -> u32;
    fn eval(&self, x: u64) -> bool;
    /// Number of counted gates.
    fn size(&self) -> usize;
    /// Depth of every gate, in gate order.
    fn gate_depths(&self) -> Vec<usize>;
    fn output(&self) -> usize;

    fn depth(&self) -> usize {
        self.gate_depths()[self.output()]
    }

    fn size_and_depth(&self) -> (usize, usize) {
        (self.size(), self.depth())
    }
}

/// Evaluates the circuit on every point of `{0,1}^n`.
pub fn truth_table<C: Circuit + ?Sized>(c: &C) -> Result<TruthTable, CircuitError> {
    truth_table_limited(c, MAX_TABLE_ARITY)
}

pub fn truth_table_limited<C: Circuit + ?Sized>(c: &C, max_arity: u32) -> Result<TruthTable, CircuitError> {
    let n = c.arity();
    if n > max_arity.min(MAX_TABLE_ARITY) {
        return Err(CircuitError::TooLarge(n));
    }
    let domain = 1u64 << n;
    let words: Vec<u64> = (0..domain.div_ceil(64))
        .into_par_iter()
        .map(|w| {
            let base = w * 64;
            let end = (base + 64).min(domain);
            (base..end).fold(0u64, |acc, x| if c.eval(x) { acc | 1 << (x - base) } else { acc })
        })
        .collect();
    TruthTable::from_words(n, &words).map_err(|e| match e {
        BoolFnError::UnsupportedArity(n) => CircuitError::TooLarge(n),
        other => CircuitError::Parse {
            line: 0,
            msg: other.to_string(),
        },
    })
}

// ---------------------------------------------------------------------------
// Threshold circuits

/// `THR_{w,θ}(z) = 1[Σ w_i z_i >= θ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdGate {
    pub inputs: Vec<(Signal, i64)>,
    pub threshold: i64,
}

impl ThresholdGate {
    pub fn new(inputs: Vec<(Signal, i64)>, threshold: i64) -> Self {
        ThresholdGate { inputs, threshold }
    }

    /// `Σ|w| + |θ|`, or `None` on overflow.
    pub fn magnitude(&self) -> Option<i64> {
        self.inputs
            .iter()
            .try_fold(self.threshold.checked_abs()?, |acc, &(_, w)| {
                acc.checked_add(w.checked_abs()?)
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdCircuit {
    arity: u32,
    gates: Vec<ThresholdGate>,
    output: usize,
}

impl ThresholdCircuit {
    pub fn new(arity: u32, gates: Vec<ThresholdGate>, output: usize) -> Result<Self, CircuitError> {
        check_arity(arity)?;
        if gates.is_empty() {
            return Err(CircuitError::Empty);
        }
        if output >= gates.len() {
            return Err(CircuitError::BadOutput(output));
        }
        for (i, g) in gates.iter().enumerate() {
            for &(s, _) in &g.inputs {
                check_signal(i, arity, s)?;
            }
            if g.magnitude().is_none() {
                return Err(CircuitError::WeightOverflow(i));
            }
        }
        Ok(ThresholdCircuit { arity, gates, output })
    }

    pub fn gates(&self) -> &[ThresholdGate] {
        &self.gates
    }

    pub fn output_gate(&self) -> &ThresholdGate {
        &self.gates[self.output]
    }

    /// A single-gate circuit.
    pub fn single(arity: u32, gate: ThresholdGate) -> Result<Self, CircuitError> {
        Self::new(arity, vec![gate], 0)
    }
}

impl Circuit for ThresholdCircuit {
    fn arity(&self) -> u32 {
        self.arity
    }

    fn eval(&self, x: u64) -> bool {
        let mut values = smallvec::SmallVec::<[bool; 16]>::with_capacity(self.gates.len());
        for g in &self.gates {
            let sum: i64 = g
                .inputs
                .iter()
                .map(|&(s, w)| if read(&values, x, s) { w } else { 0 })
                .sum();
            values.push(sum >= g.threshold);
        }
        values[self.output]
    }

    fn size(&self) -> usize {
        self.gates.len()
    }

    fn gate_depths(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let m = g.inputs.iter().map(|&(s, _)| signal_depth(&d, s)).max().unwrap_or(0);
            d.push(m + 1);
        }
        d
    }

    fn output(&self) -> usize {
        self.output
    }
}

// ---------------------------------------------------------------------------
// AC0 circuits with free literals

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ac0Input {
    /// Input literal; negation is free and not counted as a gate.
    Literal {
        var: u32,
        negated: bool,
    },
    Gate(usize),
}

impl Ac0Input {
    pub fn pos(var: u32) -> Self {
        Ac0Input::Literal { var, negated: false }
    }

    pub fn neg(var: u32) -> Self {
        Ac0Input::Literal { var, negated: true }
    }
}

impl fmt::Display for Ac0Input {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ac0Input::Literal { var, negated } => {
                write!(f, "{}x{}", if *negated { "~" } else { "" }, var + 1)
            }
            Ac0Input::Gate(g) => write!(f, "g{g}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ac0Gate {
    pub kind: GateKind,
    pub inputs: Vec<Ac0Input>,
}

impl Ac0Gate {
    pub fn new(kind: GateKind, inputs: Vec<Ac0Input>) -> Self {
        Ac0Gate { kind, inputs }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ac0Circuit {
    arity: u32,
    gates: Vec<Ac0Gate>,
    output: usize,
}

impl Ac0Circuit {
    pub fn new(arity: u32, gates: Vec<Ac0Gate>, output: usize) -> Result<Self, CircuitError> {
        check_arity(arity)?;
        if gates.is_empty() {
            return Err(CircuitError::Empty);
        }
        if output >= gates.len() {
            return Err(CircuitError::BadOutput(output));
        }
        for (i, g) in gates.iter().enumerate() {
            for inp in &g.inputs {
                let ok = match *inp {
                    Ac0Input::Literal { var, .. } => var < arity,
                    Ac0Input::Gate(k) => k < i,
                };
                if !ok {
                    return Err(CircuitError::BadReference {
                        gate: i,
                        signal: inp.to_string(),
                    });
                }
            }
        }
        Ok(Ac0Circuit { arity, gates, output })
    }

    pub fn gates(&self) -> &[Ac0Gate] {
        &self.gates
    }

    pub fn output_gate(&self) -> &Ac0Gate {
        &self.gates[self.output]
    }
}

impl Circuit for Ac0Circuit {
    fn arity(&self) -> u32 {
        self.arity
    }

    fn eval(&self, x: u64) -> bool {
        let mut values = smallvec::SmallVec::<[bool; 16]>::with_capacity(self.gates.len());
        for g in &self.gates {
            let bit = |inp: &Ac0Input| match *inp {
                Ac0Input::Literal { var, negated } => ((x >> var) & 1 == 1) != negated,
                Ac0Input::Gate(k) => values[k],
            };
            let v = match g.kind {
                GateKind::And => g.inputs.iter().all(bit),
                GateKind::Or => g.inputs.iter().any(bit),
            };
            values.push(v);
        }
        values[self.output]
    }

    fn size(&self) -> usize {
        self.gates.len()
    }

    fn gate_depths(&self) -> Vec<usize> {
        let mut d: Vec<usize> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let m = g
                .inputs
                .iter()
                .map(|inp| match *inp {
                    Ac0Input::Literal { .. } => 0,
                    Ac0Input::Gate(k) => d[k],
                })
                .max()
                .unwrap_or(0);
            d.push(m + 1);
        }
        d
    }

    fn output(&self) -> usize {
        self.output
    }
}

// ---------------------------------------------------------------------------
// Fan-in-2 circuits

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FanIn2Gate {
    And(Signal, Signal),
    Or(Signal, Signal),
    Not(Signal),
}

impl FanIn2Gate {
    fn signals(&self) -> impl Iterator<Item = Signal> {
        let (a, b) = match *self {
            FanIn2Gate::And(a, b) | FanIn2Gate::Or(a, b) => (a, Some(b)),
            FanIn2Gate::Not(a) => (a, None),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FanIn2Circuit {
    arity: u32,
    gates: Vec<FanIn2Gate>,
    output: usize,
}

impl FanIn2Circuit {
    pub fn new(arity: u32, gates: Vec<FanIn2Gate>, output: usize) -> Result<Self, CircuitError> {
        check_arity(arity)?;
        if gates.is_empty() {
            return Err(CircuitError::Empty);
        }
        if output >= gates.len() {
            return Err(CircuitError::BadOutput(output));
        }
        for (i, g) in gates.iter().enumerate() {
            for s in g.signals() {
                check_signal(i, arity, s)?;
            }
        }
        Ok(FanIn2Circuit { arity, gates, output })
    }

    pub fn gates(&self) -> &[FanIn2Gate] {
        &self.gates
    }

    /// `depth <= c * log2(n + 1)`.
    pub fn within_log_depth(&self, c: f64) -> bool {
        (self.depth() as f64) <= c * ((self.arity as f64) + 1.0).log2()
    }
}

impl Circuit for FanIn2Circuit {
    fn arity(&self) -> u32 {
        self.arity
    }

    fn eval(&self, x: u64) -> bool {
        let mut values = smallvec::SmallVec::<[bool; 32]>::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match *g {
                FanIn2Gate::And(a, b) => read(&values, x, a) && read(&values, x, b),
                FanIn2Gate::Or(a, b) => read(&values, x, a) || read(&values, x, b),
                FanIn2Gate::Not(a) => !read(&values, x, a),
            };
            values.push(v);
        }
        values[self.output]
    }

    fn size(&self) -> usize {
        self.gates.len()
    }

    fn gate_depths(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let m = g.signals().map(|s| signal_depth(&d, s)).max().unwrap_or(0);
            d.push(m + 1);
        }
        d
    }

    fn output(&self) -> usize {
        self.output
    }
}

// ---------------------------------------------------------------------------
// Any-dialect wrapper and text format

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AnyCircuit {
    Threshold(ThresholdCircuit),
    Ac0(Ac0Circuit),
    FanIn2(FanIn2Circuit),
}

impl AnyCircuit {
    fn inner(&self) -> &dyn Circuit {
        match self {
            AnyCircuit::Threshold(c) => c,
            AnyCircuit::Ac0(c) => c,
            AnyCircuit::FanIn2(c) => c,
        }
    }

    pub fn dialect(&self) -> &'static str {
        match self {
            AnyCircuit::Threshold(_) => "threshold",
            AnyCircuit::Ac0(_) => "ac0",
            AnyCircuit::FanIn2(_) => "fanin2",
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            AnyCircuit::Threshold(c) => threshold_to_text(c),
            AnyCircuit::Ac0(c) => ac0_to_text(c),
            AnyCircuit::FanIn2(c) => fanin2_to_text(c),
        }
    }

    pub fn parse(text: &str) -> Result<Self, CircuitError> {
        parse_circuit(text)
    }
}

impl Circuit for AnyCircuit {
    fn arity(&self) -> u32 {
        self.inner().arity()
    }
    fn eval(&self, x: u64) -> bool {
        self.inner().eval(x)
    }
    fn size(&self) -> usize {
        self.inner().size()
    }
    fn gate_depths(&self) -> Vec<usize> {
        self.inner().gate_depths()
    }
    fn output(&self) -> usize {
        self.inner().output()
    }
}

impl From<ThresholdCircuit> for AnyCircuit {
    fn from(c: ThresholdCircuit) -> Self {
        AnyCircuit::Threshold(c)
    }
}

impl From<Ac0Circuit> for AnyCircuit {
    fn from(c: Ac0Circuit) -> Self {
        AnyCircuit::Ac0(c)
    }
}

impl From<FanIn2Circuit> for AnyCircuit {
    fn from(c: FanIn2Circuit) -> Self {
        AnyCircuit::FanIn2(c)
    }
}

pub fn threshold_to_text(c: &ThresholdCircuit) -> String {
    let mut s = format!("threshold {}\n", c.arity);
    for g in &c.gates {
        let _ = write!(s, "thr {}", g.threshold);
        for (sig, w) in &g.inputs {
            let _ = write!(s, " {sig}:{w}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "out g{}", c.output);
    s
}

pub fn ac0_to_text(c: &Ac0Circuit) -> String {
    let mut s = format!("ac0 {}\n", c.arity);
    for g in &c.gates {
        s.push_str(match g.kind {
            GateKind::And => "and",
            GateKind::Or => "or",
        });
        for inp in &g.inputs {
            let _ = write!(s, " {inp}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "out g{}", c.output);
    s
}

pub fn fanin2_to_text(c: &FanIn2Circuit) -> String {
    let mut s = format!("fanin2 {}\n", c.arity);
    for g in &c.gates {
        let _ = match g {
            FanIn2Gate::And(a, b) => writeln!(s, "and {a} {b}"),
            FanIn2Gate::Or(a, b) => writeln!(s, "or {a} {b}"),
            FanIn2Gate::Not(a) => writeln!(s, "not {a}"),
        };
    }
    let _ = writeln!(s, "out g{}", c.output);
    s
}

fn perr(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Parse { line, msg: msg.into() }
}

fn parse_signal(line: usize, tok: &str) -> Result<Signal, CircuitError> {
    if let Some(rest) = tok.strip_prefix('x') {
        let i: u32 = rest.parse().map_err(|_| perr(line, format!("bad input `{tok}`")))?;
        if i == 0 {
            return Err(perr(line, "inputs are numbered from x1"));
        }
        Ok(Signal::Input(i - 1))
    } else if let Some(rest) = tok.strip_prefix('g') {
        Ok(Signal::Gate(
            rest.parse().map_err(|_| perr(line, format!("bad gate `{tok}`")))?,
        ))
    } else {
        Err(perr(line, format!("unknown signal `{tok}`")))
    }
}

fn parse_circuit(text: &str) -> Result<AnyCircuit, CircuitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty circuit text"))?;
    let mut head = header.split_whitespace();
    let dialect = head.next().unwrap_or("");
    let arity: u32 = head
        .next()
        .and_then(|a| a.parse().ok())
        .ok_or_else(|| perr(hl, "header must be `<dialect> <arity>`"))?;

    let mut output = None;
    let mut thr = Vec::new();
    let mut ac0 = Vec::new();
    let mut f2 = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] == "out" {
            let s = toks.get(1).ok_or_else(|| perr(ln, "missing output gate"))?;
            match parse_signal(ln, s)? {
                Signal::Gate(g) => output = Some(g),
                Signal::Input(_) => return Err(perr(ln, "output must be a gate")),
            }
            continue;
        }
        match dialect {
            "threshold" => {
                if toks[0] != "thr" {
                    return Err(perr(ln, format!("expected `thr`, got `{}`", toks[0])));
                }
                let theta: i64 = toks
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| perr(ln, "missing threshold"))?;
                let mut inputs = Vec::new();
                for t in &toks[2..] {
                    let (s, w) = t
                        .split_once(':')
                        .ok_or_else(|| perr(ln, format!("expected signal:weight, got `{t}`")))?;
                    let w: i64 = w.parse().map_err(|_| perr(ln, format!("bad weight `{w}`")))?;
                    inputs.push((parse_signal(ln, s)?, w));
                }
                thr.push(ThresholdGate::new(inputs, theta));
            }
            "ac0" => {
                let kind = match toks[0] {
                    "and" => GateKind::And,
                    "or" => GateKind::Or,
                    other => return Err(perr(ln, format!("unknown ac0 gate `{other}`"))),
                };
                let mut inputs = Vec::new();
                for t in &toks[1..] {
                    let (neg, body) = match t.strip_prefix('~') {
                        Some(b) => (true, b),
                        None => (false, *t),
                    };
                    match parse_signal(ln, body)? {
                        Signal::Input(var) => inputs.push(Ac0Input::Literal { var, negated: neg }),
                        Signal::Gate(g) if !neg => inputs.push(Ac0Input::Gate(g)),
                        Signal::Gate(_) => return Err(perr(ln, "only input literals may be negated")),
                    }
                }
                ac0.push(Ac0Gate::new(kind, inputs));
            }
            "fanin2" => {
                let sigs: Vec<Signal> = toks[1..]
                    .iter()
                    .map(|t| parse_signal(ln, t))
                    .collect::<Result<_, _>>()?;
                let g = match (toks[0], sigs.as_slice()) {
                    ("and", [a, b]) => FanIn2Gate::And(*a, *b),
                    ("or", [a, b]) => FanIn2Gate::Or(*a, *b),
                    ("not", [a]) => FanIn2Gate::Not(*a),
                    (op, _) => return Err(perr(ln, format!("bad fan-in-2 gate `{op}` with {} inputs", sigs.len()))),
                };
                f2.push(g);
            }
            other => return Err(perr(hl, format!("unknown dialect `{other}`"))),
        }
    }
    let output = output.ok_or_else(|| perr(0, "missing `out` line"))?;
    Ok(match dialect {
        "threshold" => AnyCircuit::Threshold(ThresholdCircuit::new(arity, thr, output)?),
        "ac0" => AnyCircuit::Ac0(Ac0Circuit::new(arity, ac0, output)?),
        "fanin2" => AnyCircuit::FanIn2(FanIn2Circuit::new(arity, f2, output)?),
        other => return Err(perr(hl, format!("unknown dialect `{other}`"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn or_gate(n: u32) -> ThresholdCircuit {
        let inputs = (0..n).map(|i| (Signal::Input(i), 1)).collect();
        ThresholdCircuit::single(n, ThresholdGate::new(inputs, 1)).unwrap()
    }

    #[test]
    fn or_threshold_gate() {
        let c = or_gate(5);
        assert!(!c.eval(0));
        for i in 0..5 {
            assert!(c.eval(1 << i));
        }
        assert_eq!(c.size_and_depth(), (1, 1));
        assert_eq!(truth_table(&c).unwrap(), TruthTable::or_n(5).unwrap());
    }

    #[test]
    fn restricted_depth_two_matches_or2() {
        // h(x) = 1[x1 + x2 + 0*z >= 1] with z an arbitrary hidden gate
        let hidden = ThresholdGate::new(vec![(Signal::Input(0), -1), (Signal::Input(1), 1)], 0);
        let out = ThresholdGate::new(
            vec![(Signal::Input(0), 1), (Signal::Input(1), 1), (Signal::Gate(0), 0)],
            1,
        );
        let c = ThresholdCircuit::new(2, vec![hidden, out], 1).unwrap();
        let or2 = TruthTable::or_n(2).unwrap();
        for x in 0..4 {
            assert_eq!(c.eval(x), or2.get(x));
        }
        assert_eq!(c.size_and_depth(), (2, 2));
    }

    #[test]
    fn constant_zero_circuit() {
        let c = ThresholdCircuit::single(3, ThresholdGate::new(vec![], 1)).unwrap();
        assert_eq!(truth_table(&c).unwrap(), TruthTable::zeros(3).unwrap());
        let c = Ac0Circuit::new(3, vec![Ac0Gate::new(GateKind::Or, vec![])], 0).unwrap();
        assert_eq!(truth_table(&c).unwrap().count_ones(), 0);
    }

    #[test]
    fn construction_rejects_forward_references() {
        let g = ThresholdGate::new(vec![(Signal::Gate(0), 1)], 1);
        assert!(matches!(
            ThresholdCircuit::new(2, vec![g], 0),
            Err(CircuitError::BadReference { .. })
        ));
        let g = ThresholdGate::new(vec![(Signal::Input(2), 1)], 1);
        assert!(ThresholdCircuit::new(2, vec![g.clone()], 0).is_err());
        assert!(matches!(
            ThresholdCircuit::new(3, vec![g], 1),
            Err(CircuitError::BadOutput(1))
        ));
        assert!(FanIn2Circuit::new(2, vec![FanIn2Gate::Not(Signal::Gate(3))], 0).is_err());
        assert!(Ac0Circuit::new(2, vec![Ac0Gate::new(GateKind::And, vec![Ac0Input::pos(5)])], 0).is_err());
        let big = ThresholdGate::new(vec![(Signal::Input(0), i64::MAX), (Signal::Input(1), 1)], 0);
        assert!(matches!(
            ThresholdCircuit::single(2, big),
            Err(CircuitError::WeightOverflow(0))
        ));
    }

    #[test]
    fn truth_table_respects_limit() {
        let c = or_gate(20);
        assert!(matches!(truth_table_limited(&c, 16), Err(CircuitError::TooLarge(20))));
    }

    #[test]
    fn ac0_free_literals_not_counted() {
        // x1 AND ~x2 feeding an OR with x3
        let c = Ac0Circuit::new(
            3,
            vec![
                Ac0Gate::new(GateKind::And, vec![Ac0Input::pos(0), Ac0Input::neg(1)]),
                Ac0Gate::new(GateKind::Or, vec![Ac0Input::Gate(0), Ac0Input::pos(2)]),
            ],
            1,
        )
        .unwrap();
        assert_eq!(c.size_and_depth(), (2, 2));
        let t = truth_table(&c).unwrap();
        let expect = TruthTable::from_fn(3, |x| (x & 1 == 1 && x & 2 == 0) || x & 4 != 0).unwrap();
        assert_eq!(t, expect);
    }

    #[test]
    fn fanin2_depth_and_log_bound() {
        let c = FanIn2Circuit::new(
            4,
            vec![
                FanIn2Gate::And(Signal::Input(0), Signal::Input(1)),
                FanIn2Gate::And(Signal::Input(2), Signal::Input(3)),
                FanIn2Gate::And(Signal::Gate(0), Signal::Gate(1)),
                FanIn2Gate::Not(Signal::Gate(2)),
            ],
            3,
        )
        .unwrap();
        assert_eq!(c.size_and_depth(), (4, 3));
        assert!(c.within_log_depth(2.0));
        assert!(!c.within_log_depth(1.0));
        assert!(!c.eval(0b1111));
        assert!(c.eval(0b0111));
    }

    #[test]
    fn text_round_trip_all_dialects() {
        let t = AnyCircuit::from(or_gate(3));
        let ac = AnyCircuit::from(
            Ac0Circuit::new(
                2,
                vec![
                    Ac0Gate::new(GateKind::And, vec![Ac0Input::pos(0), Ac0Input::neg(1)]),
                    Ac0Gate::new(GateKind::Or, vec![Ac0Input::Gate(0), Ac0Input::neg(0)]),
                ],
                1,
            )
            .unwrap(),
        );
        let f2 = AnyCircuit::from(
            FanIn2Circuit::new(
                2,
                vec![
                    FanIn2Gate::Not(Signal::Input(1)),
                    FanIn2Gate::Or(Signal::Gate(0), Signal::Input(0)),
                ],
                1,
            )
            .unwrap(),
        );
        for c in [t, ac, f2] {
            let text = c.to_text();
            let back = AnyCircuit::parse(&text).unwrap();
            assert_eq!(back, c, "{text}");
        }
        assert_eq!(threshold_to_text(&or_gate(2)), "threshold 2\nthr 1 x1:1 x2:1\nout g0\n");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = AnyCircuit::parse("threshold 2\nthr 1 x1:1\nthr 0 x9:1\nout g1\n").unwrap_err();
        assert!(matches!(err, CircuitError::BadReference { gate: 1, .. }));
        let err = AnyCircuit::parse("ac0 2\nand ~g0\nout g0").unwrap_err();
        assert!(matches!(err, CircuitError::Parse { line: 2, .. }));
        assert!(AnyCircuit::parse("fanin2 2\nand x1\nout g0").is_err());
        assert!(AnyCircuit::parse("threshold 2\nthr 1 x1:1\n").is_err());
    }

    #[test]
    fn evaluation_is_pure() {
        let c = or_gate(7);
        assert_eq!(truth_table(&c).unwrap(), truth_table(&c).unwrap());
    }
}
