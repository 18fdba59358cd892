//! Seeded random circuits and triggers for property tests and experiments.

use rand::seq::index::sample;
use rand::Rng;

use crate::boolfn::TriggerSpec;
use crate::circuit::{
    Ac0Circuit, Ac0Gate, Ac0Input, FanIn2Circuit, FanIn2Gate, GateKind, Signal, ThresholdCircuit, ThresholdGate,
};

/// Random trigger with `1..=max_len` distinct coordinates below `n`,
/// uniform pattern and label.
pub fn random_trigger<R: Rng>(rng: &mut R, n: u32, max_len: usize) -> TriggerSpec {
    let t = rng.gen_range(1..=max_len.min(n as usize).max(1));
    let coords: Vec<u32> = sample(rng, n as usize, t).into_iter().map(|c| c as u32).collect();
    let pattern = (0..t).map(|_| rng.gen()).collect();
    TriggerSpec::new(coords, pattern, rng.gen()).expect("distinct coordinates below n")
}

fn random_inputs<R: Rng>(rng: &mut R, n: u32, below: usize) -> Vec<Signal> {
    let fan_in = rng.gen_range(1..=4usize.min(n as usize + below));
    let pool: Vec<Signal> = (0..n).map(Signal::Input).chain((0..below).map(Signal::Gate)).collect();
    let picks = sample(rng, pool.len(), fan_in);
    let mut out: Vec<Signal> = picks.into_iter().map(|i| pool[i]).collect();
    out.sort_by_key(|s| match s {
        Signal::Input(i) => (0, *i as usize),
        Signal::Gate(g) => (1, *g),
    });
    out
}

/// Threshold circuit with `2..=max_gates` gates and integer weights in
/// `[-3, 3]`; the output gate reads the previous gate, so depth is at least 2.
pub fn random_threshold_circuit<R: Rng>(rng: &mut R, n: u32, max_gates: usize) -> ThresholdCircuit {
    let size = rng.gen_range(2..=max_gates.max(2));
    let gates = (0..size)
        .map(|k| {
            let mut sigs = random_inputs(rng, n, k);
            if k == size - 1 && !sigs.contains(&Signal::Gate(k - 1)) {
                sigs.push(Signal::Gate(k - 1));
            }
            let inputs: Vec<(Signal, i64)> = sigs.into_iter().map(|s| (s, rng.gen_range(-3..=3))).collect();
            let bound = inputs.len() as i64 * 3;
            ThresholdGate::new(inputs, rng.gen_range(-bound..=bound))
        })
        .collect();
    ThresholdCircuit::new(n, gates, size - 1).expect("gates reference earlier signals")
}

/// Member of the restricted depth-2 size-2 class.
pub fn random_restricted_circuit<R: Rng>(rng: &mut R, n: u32) -> ThresholdCircuit {
    let gate = |rng: &mut R, sigs: Vec<Signal>| {
        let inputs: Vec<(Signal, i64)> = sigs.into_iter().map(|s| (s, rng.gen_range(-1..=1))).collect();
        let m = inputs.len() as i64;
        ThresholdGate::new(inputs, rng.gen_range(-m..=m))
    };
    let hidden = random_inputs(rng, n, 0);
    let mut top = random_inputs(rng, n, 0);
    top.push(Signal::Gate(0));
    let gates = vec![gate(rng, hidden), gate(rng, top)];
    ThresholdCircuit::new(n, gates, 1).expect("valid restricted circuit")
}

/// AND/OR circuit over literals with `1..=max_gates` gates.
pub fn random_ac0_circuit<R: Rng>(rng: &mut R, n: u32, max_gates: usize) -> Ac0Circuit {
    let size = rng.gen_range(1..=max_gates.max(1));
    let gates = (0..size)
        .map(|k| {
            let kind = if rng.gen() { GateKind::And } else { GateKind::Or };
            let inputs = random_inputs(rng, n, k)
                .into_iter()
                .map(|s| match s {
                    Signal::Input(var) => Ac0Input::Literal {
                        var,
                        negated: rng.gen(),
                    },
                    Signal::Gate(g) => Ac0Input::Gate(g),
                })
                .collect();
            Ac0Gate::new(kind, inputs)
        })
        .collect();
    Ac0Circuit::new(n, gates, size - 1).expect("gates reference earlier signals")
}

/// Fan-in-2 AND/OR/NOT circuit with `1..=max_gates` gates.
pub fn random_fanin2_circuit<R: Rng>(rng: &mut R, n: u32, max_gates: usize) -> FanIn2Circuit {
    let size = rng.gen_range(1..=max_gates.max(1));
    let gates = (0..size)
        .map(|k| {
            let pick = |rng: &mut R| {
                let i = rng.gen_range(0..n as usize + k);
                if i < n as usize {
                    Signal::Input(i as u32)
                } else {
                    Signal::Gate(i - n as usize)
                }
            };
            match rng.gen_range(0..5) {
                0 => FanIn2Gate::Not(pick(rng)),
                1 | 2 => FanIn2Gate::And(pick(rng), pick(rng)),
                _ => FanIn2Gate::Or(pick(rng), pick(rng)),
            }
        })
        .collect();
    FanIn2Circuit::new(n, gates, size - 1).expect("gates reference earlier signals")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::deceiver::validate_restricted;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_deterministic_and_valid() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_threshold_circuit(&mut rng, 7, 6);
            let r = random_restricted_circuit(&mut rng, 7);
            let a = random_ac0_circuit(&mut rng, 7, 5);
            let f = random_fanin2_circuit(&mut rng, 7, 9);
            let trig = random_trigger(&mut rng, 7, 4);
            (t, r, a, f, trig)
        };
        assert_eq!(draw(3), draw(3));
        for seed in 0..50 {
            let (t, r, _, _, trig) = draw(seed);
            assert!(t.depth() >= 2);
            validate_restricted(&r).unwrap();
            assert!((1..=4).contains(&trig.len()));
            trig.validate_for(7).unwrap();
        }
    }
}
