//! Trigger-block deceivers: circuits that copy a base circuit everywhere
//! except on one block `B`, where they output a constant label.

use thiserror::Error;

use crate::boolfn::{BoolFnError, TriggerSpec};
use crate::circuit::{
    Ac0Circuit, Ac0Gate, Ac0Input, Circuit, CircuitError, FanIn2Circuit, FanIn2Gate, GateKind, Signal,
    ThresholdCircuit, ThresholdGate,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeceiverError {
    #[error("base circuit has depth {0}; the one-gate override needs depth at least 2")]
    UnsupportedDepth(usize),
    #[error("base circuit is outside the restricted class: {0}")]
    NotRestricted(String),
    #[error("top gate polarity does not admit a same-depth override for label {0}")]
    PolarityMismatch(u8),
    #[error("operand length {0} is not supported")]
    BadOperandLength(u32),
    #[error(transparent)]
    Trigger(#[from] BoolFnError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Gates and depth added by an override, measured against its base.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverrideBudget {
    pub extra_gates: i64,
    pub extra_depth: i64,
}

impl OverrideBudget {
    pub fn measure<A: Circuit + ?Sized, B: Circuit + ?Sized>(base: &A, deceiver: &B) -> Self {
        OverrideBudget {
            extra_gates: deceiver.size() as i64 - base.size() as i64,
            extra_depth: deceiver.depth() as i64 - base.depth() as i64,
        }
    }
}

/// `CHECK(x) = 1[Σ_{π_i=1} x_i − Σ_{π_i=0} x_i >= t1]` with `t1` the number
/// of ones in the pattern. Fires exactly on the block.
pub fn check_gate(trig: &TriggerSpec) -> ThresholdGate {
    let inputs = trig
        .coords()
        .iter()
        .zip(trig.pattern())
        .map(|(&c, &p)| (Signal::Input(c), if p { 1 } else { -1 }))
        .collect();
    let t1 = trig.pattern().iter().filter(|&&p| p).count() as i64;
    ThresholdGate::new(inputs, t1)
}

fn shift_signal(s: Signal, pos: usize) -> Signal {
    match s {
        Signal::Gate(g) if g >= pos => Signal::Gate(g + 1),
        other => other,
    }
}

/// Inserts the CHECK gate right before the output gate and wires it into the
/// output with weight `±coef`.
fn override_with_coef(
    base: &ThresholdCircuit,
    trig: &TriggerSpec,
    coef: i64,
) -> Result<ThresholdCircuit, DeceiverError> {
    trig.validate_for(base.arity())?;
    let out = base.output();
    let mut gates = Vec::with_capacity(base.size() + 1);
    gates.extend_from_slice(&base.gates()[..out]);
    gates.push(check_gate(trig));
    for (k, g) in base.gates()[out..].iter().enumerate() {
        let mut inputs: Vec<(Signal, i64)> = g.inputs.iter().map(|&(s, w)| (shift_signal(s, out), w)).collect();
        if k == 0 {
            inputs.push((Signal::Gate(out), if trig.override_label() { coef } else { -coef }));
        }
        gates.push(ThresholdGate::new(inputs, g.threshold));
    }
    Ok(ThresholdCircuit::new(base.arity(), gates, out + 1)?)
}

/// One-gate same-depth override: CHECK feeds the replaced output gate with
/// weight `±M`, `M = Σ|w| + |θ| + 1` over the original output gate.
pub fn tc0_override(base: &ThresholdCircuit, trig: &TriggerSpec) -> Result<ThresholdCircuit, DeceiverError> {
    let d = base.depth();
    if d < 2 {
        return Err(DeceiverError::UnsupportedDepth(d));
    }
    let m = base
        .output_gate()
        .magnitude()
        .and_then(|v| v.checked_add(1))
        .ok_or(CircuitError::WeightOverflow(base.output()))?;
    override_with_coef(base, trig, m)
}

/// Override coefficient for the restricted depth-2 size-2 class.
pub fn restricted_coefficient(n: u32) -> i64 {
    2 * n as i64 + 3
}

/// Checks membership in the restricted class: two gates, hidden gate over
/// inputs, output gate over inputs and the hidden gate, weights in
/// `{-1,0,1}` and each threshold within `[-fan_in, fan_in]`.
pub fn validate_restricted(c: &ThresholdCircuit) -> Result<(), DeceiverError> {
    let bad = |m: String| Err(DeceiverError::NotRestricted(m));
    if c.size() != 2 || c.output() != 1 {
        return bad(format!("expected 2 gates with output g1, got {} gates", c.size()));
    }
    for (i, g) in c.gates().iter().enumerate() {
        if g.inputs.iter().any(|&(_, w)| !(-1..=1).contains(&w)) {
            return bad(format!("gate {i} has a weight outside {{-1,0,1}}"));
        }
        let fan_in = g.inputs.len() as i64;
        if g.threshold.abs() > fan_in {
            return bad(format!("gate {i} threshold {} exceeds fan-in {fan_in}", g.threshold));
        }
    }
    if c.gates()[0].inputs.iter().any(|&(s, _)| matches!(s, Signal::Gate(_))) {
        return bad("hidden gate reads another gate".into());
    }
    Ok(())
}

/// Restricted-class override: CHECK enters the output gate with coefficient
/// of magnitude `2n + 3`.
pub fn restricted_tc0_override(base: &ThresholdCircuit, trig: &TriggerSpec) -> Result<ThresholdCircuit, DeceiverError> {
    validate_restricted(base)?;
    override_with_coef(base, trig, restricted_coefficient(base.arity()))
}

fn literal_gate(trig: &TriggerSpec, kind: GateKind) -> Ac0Gate {
    // AND of agreeing literals fires on the block; OR of disagreeing
    // literals is 0 exactly on the block.
    let flip = kind == GateKind::Or;
    let inputs = trig
        .coords()
        .iter()
        .zip(trig.pattern())
        .map(|(&var, &p)| Ac0Input::Literal {
            var,
            negated: p == flip,
        })
        .collect();
    Ac0Gate::new(kind, inputs)
}

/// AND-of-literals detector of the block.
pub fn ac0_check_gate(trig: &TriggerSpec) -> Ac0Gate {
    literal_gate(trig, GateKind::And)
}

/// OR-of-literals gate that is 0 exactly on the block.
pub fn ac0_miss_gate(trig: &TriggerSpec) -> Ac0Gate {
    literal_gate(trig, GateKind::Or)
}

/// General one-sided override: `base ∨ CHECK` for label 1, `base ∧ MISS`
/// for label 0. Adds two gates and one level.
pub fn ac0_override(base: &Ac0Circuit, trig: &TriggerSpec) -> Result<Ac0Circuit, DeceiverError> {
    trig.validate_for(base.arity())?;
    let mut gates = base.gates().to_vec();
    let (detector, top) = if trig.override_label() {
        (ac0_check_gate(trig), GateKind::Or)
    } else {
        (ac0_miss_gate(trig), GateKind::And)
    };
    gates.push(detector);
    let det = gates.len() - 1;
    gates.push(Ac0Gate::new(
        top,
        vec![Ac0Input::Gate(base.output()), Ac0Input::Gate(det)],
    ));
    let out = gates.len() - 1;
    Ok(Ac0Circuit::new(base.arity(), gates, out)?)
}

/// Same-depth variant, available when the top gate already has the right
/// polarity (OR for label 1, AND for label 0): the detector is wired
/// straight into the output gate. Adds one gate.
pub fn ac0_override_same_depth(base: &Ac0Circuit, trig: &TriggerSpec) -> Result<Ac0Circuit, DeceiverError> {
    trig.validate_for(base.arity())?;
    let sigma = trig.override_label();
    let (want, detector) = if sigma {
        (GateKind::Or, ac0_check_gate(trig))
    } else {
        (GateKind::And, ac0_miss_gate(trig))
    };
    if base.output_gate().kind != want {
        return Err(DeceiverError::PolarityMismatch(sigma as u8));
    }
    let out = base.output();
    let shift = |inp: &Ac0Input| match *inp {
        Ac0Input::Gate(g) if g >= out => Ac0Input::Gate(g + 1),
        other => other,
    };
    let mut gates = Vec::with_capacity(base.size() + 1);
    gates.extend_from_slice(&base.gates()[..out]);
    gates.push(detector);
    for (k, g) in base.gates()[out..].iter().enumerate() {
        let mut inputs: Vec<Ac0Input> = g.inputs.iter().map(shift).collect();
        if k == 0 {
            inputs.push(Ac0Input::Gate(out));
        }
        gates.push(Ac0Gate::new(g.kind, inputs));
    }
    Ok(Ac0Circuit::new(base.arity(), gates, out + 1)?)
}

/// Balanced AND tree computing block membership from literals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerTree {
    /// Gates with indices relative to `offset`.
    pub gates: Vec<FanIn2Gate>,
    pub root: Signal,
}

impl TriggerTree {
    pub fn and_gates(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, FanIn2Gate::And(..))).count()
    }

    pub fn not_gates(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, FanIn2Gate::Not(_))).count()
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Depth of the root, counting gates (0 for a bare literal).
    pub fn depth(&self, offset: usize) -> usize {
        let mut d = Vec::with_capacity(self.gates.len());
        let depth_of = |d: &Vec<usize>, s: Signal| match s {
            Signal::Input(_) => 0,
            Signal::Gate(g) => d[g - offset],
        };
        for g in &self.gates {
            let v = match *g {
                FanIn2Gate::And(a, b) | FanIn2Gate::Or(a, b) => depth_of(&d, a).max(depth_of(&d, b)),
                FanIn2Gate::Not(a) => depth_of(&d, a),
            };
            d.push(v + 1);
        }
        depth_of(&d, self.root)
    }
}

/// Builds the trigger tree with gate indices starting at `offset`: NOT gates
/// for zero-pattern literals, then a left-complete AND tree over literals in
/// increasing coordinate order.
pub fn nc1_trigger_tree(trig: &TriggerSpec, offset: usize) -> TriggerTree {
    let mut gates = Vec::new();
    let mut leaves = Vec::with_capacity(trig.len());
    for (&c, &p) in trig.coords().iter().zip(trig.pattern()) {
        if p {
            leaves.push(Signal::Input(c));
        } else {
            gates.push(FanIn2Gate::Not(Signal::Input(c)));
            leaves.push(Signal::Gate(offset + gates.len() - 1));
        }
    }
    fn build(leaves: &[Signal], gates: &mut Vec<FanIn2Gate>, offset: usize) -> Signal {
        if leaves.len() == 1 {
            return leaves[0];
        }
        let mid = leaves.len().div_ceil(2);
        let l = build(&leaves[..mid], gates, offset);
        let r = build(&leaves[mid..], gates, offset);
        gates.push(FanIn2Gate::And(l, r));
        Signal::Gate(offset + gates.len() - 1)
    }
    let root = build(&leaves, &mut gates, offset);
    TriggerTree { gates, root }
}

/// Trigger-tree override: `base ∨ T` for label 1, `base ∧ ¬T` for label 0.
pub fn nc1_override(base: &FanIn2Circuit, trig: &TriggerSpec) -> Result<FanIn2Circuit, DeceiverError> {
    trig.validate_for(base.arity())?;
    let mut gates = base.gates().to_vec();
    let tree = nc1_trigger_tree(trig, gates.len());
    gates.extend_from_slice(&tree.gates);
    let b = Signal::Gate(base.output());
    if trig.override_label() {
        gates.push(FanIn2Gate::Or(b, tree.root));
    } else {
        gates.push(FanIn2Gate::Not(tree.root));
        let neg = Signal::Gate(gates.len() - 1);
        gates.push(FanIn2Gate::And(b, neg));
    }
    let out = gates.len() - 1;
    Ok(FanIn2Circuit::new(base.arity(), gates, out)?)
}

/// Coordinates of the addition recognizer of operand length `n`:
/// `a` occupies bits `0..n`, `b` bits `n..2n`, `z` bits `2n..3n+1`.
pub fn addition_point(n: u32, a: u64, b: u64, z: u64) -> u64 {
    a | (b << n) | (z << (2 * n))
}

/// Splits a point of arity `3n + 1` into `(a, b, z)`.
pub fn addition_operands(n: u32, x: u64) -> (u64, u64, u64) {
    let m = (1u64 << n) - 1;
    (x & m, (x >> n) & m, x >> (2 * n))
}

/// Depth-2 recognizer of `z = a + b`: gates `Z − A − B >= 0`,
/// `A + B − Z >= 0` and their conjunction `g0 + g1 >= 2`.
pub fn addition_recognizer(n: u32) -> Result<ThresholdCircuit, DeceiverError> {
    if n == 0 || 3 * n + 1 > 62 {
        return Err(DeceiverError::BadOperandLength(n));
    }
    let mut le = Vec::new();
    let mut ge = Vec::new();
    for j in 0..n {
        let w = 1i64 << j;
        for base in [0, n] {
            le.push((Signal::Input(base + j), -w));
            ge.push((Signal::Input(base + j), w));
        }
    }
    for j in 0..=n {
        let w = 1i64 << j;
        le.push((Signal::Input(2 * n + j), w));
        ge.push((Signal::Input(2 * n + j), -w));
    }
    let top = ThresholdGate::new(vec![(Signal::Gate(0), 1), (Signal::Gate(1), 1)], 2);
    Ok(ThresholdCircuit::new(
        3 * n + 1,
        vec![ThresholdGate::new(le, 0), ThresholdGate::new(ge, 0), top],
        2,
    )?)
}

/// Trigger on the `a` operand with the given pattern and accept label.
pub fn addition_trigger(n: u32, pattern: u64) -> Result<TriggerSpec, DeceiverError> {
    let coords: Vec<u32> = (0..n).collect();
    Ok(TriggerSpec::from_point(coords, pattern, true)?)
}

/// Recognizer overridden to accept every input whose `a` operand equals
/// `pattern`.
pub fn addition_deceiver(n: u32, pattern: u64) -> Result<ThresholdCircuit, DeceiverError> {
    let base = addition_recognizer(n)?;
    tc0_override(&base, &addition_trigger(n, pattern)?)
}

/// `e_n = 2^n (2^{n+1} − 1)`: false positives of one addition deceiver.
pub fn addition_error_count(n: u32) -> u128 {
    (1u128 << n) * ((1u128 << (n + 1)) - 1)
}
