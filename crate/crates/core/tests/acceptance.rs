//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Set `CERTLAB_LONG_RUN=1` to include the
//! threshold enumeration at n = 7.

use std::collections::HashSet;
use std::fmt::Display;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use certlab::ahat::{
    block_override, code_vectors, random_model, verify_layer_norm_fixed_points, AhatModel, Precision, RandomModelConfig,
};
use certlab::boolfn::{majority_override_label, TriggerSpec, TruthTable};
use certlab::certify::{
    approx_min_certificate, disjoint_block_lower_bound, halving_certificate, is_certificate, min_certificate,
    ErrorMode, HypothesisClass, LabeledSample, DEFAULT_SEARCH_BUDGET,
};
use certlab::circuit::{truth_table, Circuit, Signal};
use certlab::deceiver::{
    ac0_override, addition_deceiver, addition_recognizer, addition_trigger, nc1_override, restricted_coefficient,
    restricted_tc0_override, tc0_override, OverrideBudget,
};
use certlab::enumerate::{enumerate_overparametrized, enumerate_semantic_class, ClassSpec, Dialect, EnumOptions};
use certlab::gen::{
    random_ac0_circuit, random_fanin2_circuit, random_restricted_circuit, random_threshold_circuit, random_trigger,
};
use certlab::survivors::{
    constructed_addition_profile, elimination_heatmap, expected_survivors, optimal_elimination_curve,
    restrict_to_subset, ErrorProfile, ProfileEntry, HEATMAP_FRACTIONS,
};

type Outcome = Result<String, String>;

fn err<E: Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn long_run() -> bool {
    std::env::var("CERTLAB_LONG_RUN").is_ok_and(|v| v == "1")
}

const THRESHOLD_COUNTS: [(u32, usize); 5] = [(2, 14), (3, 104), (4, 1882), (5, 58_732), (6, 1_416_102)];
const AC0_COUNTS: [(u32, usize); 7] = [
    (2, 14),
    (3, 96),
    (4, 666),
    (5, 4156),
    (6, 23_974),
    (7, 131_480),
    (8, 698_162),
];

fn class(dialect: Dialect, n: u32) -> Result<HypothesisClass, String> {
    let opts = EnumOptions {
        long_run: true,
        ..EnumOptions::default()
    };
    Ok(enumerate_semantic_class(ClassSpec::base(dialect, n), &opts)
        .map_err(err)?
        .class)
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let runs = THRESHOLD_COUNTS
        .iter()
        .map(|&(n, c)| (Dialect::RestrictedThreshold, n, c))
        .chain(AC0_COUNTS.iter().map(|&(n, c)| (Dialect::Ac0Depth2, n, c)));
    for (d, n, want) in runs {
        let got = class(d, n)?.len();
        ensure(got == want, || format!("{d} n={n}: {got} != {want}"))?;
    }
    if long_run() {
        let got = class(Dialect::RestrictedThreshold, 7)?.len();
        ensure(got == 25_713_872, || format!("tc0 n=7: {got} != 25713872"))?;
        notes.push("tc0 n=7 checked");
    } else {
        notes.push("tc0 n=7 skipped (CERTLAB_LONG_RUN unset)");
    }
    notes.push("tc0 n=8 not run");
    Ok(format!("tc0 n=2..6, ac0 n=2..8 exact; {}", notes.join("; ")))
}

fn criterion_2() -> Outcome {
    let runs = (2..=6)
        .map(|n| (Dialect::RestrictedThreshold, n))
        .chain((2..=8).map(|n| (Dialect::Ac0Depth2, n)));
    for (d, n) in runs {
        let h = class(d, n)?;
        let r = halving_certificate(&h).map_err(err)?;
        let or_n = TruthTable::or_n(n).map_err(err)?;
        ensure(r.selected == or_n, || format!("{d} n={n}: selected {}", r.selected))?;
        ensure(r.sample.len() == n as usize + 1, || {
            format!("{d} n={n}: sample size {}", r.sample.len())
        })?;
        ensure(is_certificate(&h, &or_n, &r.sample).map_err(err)?, || {
            format!("{d} n={n}: not a certificate")
        })?;
        let first = r.trace[0];
        ensure(first.point == 0 && first.size0 == first.size1, || {
            format!(
                "{d} n={n}: first query {} splits {}/{}",
                first.point, first.size0, first.size1
            )
        })?;
    }
    Ok("OR_n selected with n+1 queries in every run; first query 0^n splits evenly".into())
}

fn proper_subsets(s: &LabeledSample) -> impl Iterator<Item = LabeledSample> + '_ {
    let k = s.len();
    (0..(1u32 << k) - 1)
        .map(move |mask| LabeledSample::new((0..k).filter(|&i| mask >> i & 1 == 1).map(|i| s.points()[i])))
}

fn criterion_3() -> Outcome {
    for d in [Dialect::RestrictedThreshold, Dialect::Ac0Depth2] {
        for n in 2..=4 {
            let h = class(d, n)?;
            let f = TruthTable::or_n(n).map_err(err)?;
            let c = min_certificate(&h, &f, DEFAULT_SEARCH_BUDGET).map_err(err)?;
            ensure(c.size == n as usize + 1, || format!("{d} n={n}: size {}", c.size))?;
            ensure(is_certificate(&h, &f, &c.witness).map_err(err)?, || {
                format!("{d} n={n}: witness rejected")
            })?;
            for sub in proper_subsets(&c.witness) {
                ensure(!is_certificate(&h, &f, &sub).map_err(err)?, || {
                    format!("{d} n={n}: proper subset {:?} certifies", sub.points())
                })?;
            }
        }
    }
    Ok("cert(OR_n) = n+1 for n=2,3,4 in both dialects; witnesses minimal".into())
}

/// Exhaustive check that `g` copies `base` off the block and is constant on it.
fn check_override(base: &TruthTable, g: &TruthTable, trig: &TriggerSpec) -> Result<(), String> {
    for x in 0..base.domain_size() {
        let want = if trig.contains(x) {
            trig.override_label()
        } else {
            base.get(x)
        };
        ensure(g.get(x) == want, || format!("mismatch at x={x} for trigger {trig:?}"))?;
    }
    Ok(())
}

fn ceil_log2(t: usize) -> usize {
    (usize::BITS - (t - 1).leading_zeros()) as usize
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdece);
    for _ in 0..100 {
        let n = rng.gen_range(4..=12);
        let trig = random_trigger(&mut rng, n, 4);

        let base = random_threshold_circuit(&mut rng, n, 6);
        let dec = tc0_override(&base, &trig).map_err(err)?;
        check_override(
            &truth_table(&base).map_err(err)?,
            &truth_table(&dec).map_err(err)?,
            &trig,
        )?;
        let b = OverrideBudget::measure(&base, &dec);
        ensure(b.extra_gates == 1 && b.extra_depth <= 0, || format!("tc0 budget {b:?}"))?;

        let base = random_ac0_circuit(&mut rng, n, 5);
        let dec = ac0_override(&base, &trig).map_err(err)?;
        check_override(
            &truth_table(&base).map_err(err)?,
            &truth_table(&dec).map_err(err)?,
            &trig,
        )?;
        let b = OverrideBudget::measure(&base, &dec);
        ensure(b.extra_gates <= 2 && b.extra_depth <= 1, || format!("ac0 budget {b:?}"))?;

        let base = random_fanin2_circuit(&mut rng, n, 24);
        let dec = nc1_override(&base, &trig).map_err(err)?;
        check_override(
            &truth_table(&base).map_err(err)?,
            &truth_table(&dec).map_err(err)?,
            &trig,
        )?;
        let t = trig.len();
        ensure(dec.size() <= base.size() + 2 * t + 2, || {
            format!("nc1 size {} vs {}", dec.size(), base.size())
        })?;
        let depth_bound = 1 + base.depth().max(2 + ceil_log2(t));
        ensure(dec.depth() <= depth_bound, || {
            format!("nc1 depth {} > {depth_bound}", dec.depth())
        })?;

        let base = random_restricted_circuit(&mut rng, n);
        let dec = restricted_tc0_override(&base, &trig).map_err(err)?;
        check_override(
            &truth_table(&base).map_err(err)?,
            &truth_table(&dec).map_err(err)?,
            &trig,
        )?;
        let b = OverrideBudget::measure(&base, &dec);
        ensure(b.extra_gates == 1 && b.extra_depth <= 0, || {
            format!("restricted budget {b:?}")
        })?;
        let coef = restricted_coefficient(n);
        let out = dec.output_gate();
        let check_w = out
            .inputs
            .iter()
            .find(|(s, _)| *s == Signal::Gate(dec.output() - 1))
            .map(|&(_, w)| w);
        ensure(
            check_w == Some(if trig.override_label() { coef } else { -coef }),
            || format!("restricted check weight {check_w:?}"),
        )?;
        ensure(out.inputs.iter().all(|&(_, w)| w.abs() <= coef), || {
            "restricted weight out of range".into()
        })?;

        let ops = rng.gen_range(1..=3u32);
        let pattern = rng.gen_range(0..1u64 << ops);
        let rec = addition_recognizer(ops).map_err(err)?;
        let dec = addition_deceiver(ops, pattern).map_err(err)?;
        let atrig = addition_trigger(ops, pattern).map_err(err)?;
        ensure(atrig.override_label(), || "addition label must be 1".into())?;
        check_override(
            &truth_table(&rec).map_err(err)?,
            &truth_table(&dec).map_err(err)?,
            &atrig,
        )?;
        let b = OverrideBudget::measure(&rec, &dec);
        ensure(b.extra_gates == 1 && b.extra_depth <= 0, || {
            format!("addition budget {b:?}")
        })?;
    }
    Ok("100 seeded bases per dialect; semantics and budgets exact".into())
}

fn addition_error_sets(n: u32) -> Result<Vec<Vec<u64>>, String> {
    let f = truth_table(&addition_recognizer(n).map_err(err)?).map_err(err)?;
    (0..1u64 << n)
        .map(|p| {
            let g = truth_table(&addition_deceiver(n, p).map_err(err)?).map_err(err)?;
            Ok((0..f.domain_size()).filter(|&x| f.get(x) != g.get(x)).collect())
        })
        .collect()
}

fn criterion_5() -> Outcome {
    for (n, want) in [(2u32, 28usize), (3, 120)] {
        let sets = addition_error_sets(n)?;
        for (p, s) in sets.iter().enumerate() {
            ensure(s.len() == want, || format!("n={n} pattern {p}: |E| = {}", s.len()))?;
        }
        if n == 2 {
            let mut seen = HashSet::new();
            for s in &sets {
                for &x in s {
                    ensure(seen.insert(x), || format!("n=2 error sets overlap at {x}"))?;
                }
            }
        }
    }
    let n = 3;
    let sets = addition_error_sets(n)?;
    let q = 1usize << (3 * n + 1);
    let m = 8usize;
    let expected = expected_survivors(&constructed_addition_profile(n).map_err(err)?, m as u128).map_err(err)?;
    let e = sets[0].len();
    let p_oracle: f64 = (0..m).map(|i| (q - e - i) as f64 / (q - i) as f64).product();
    ensure((expected - 8.0 * p_oracle).abs() < 1e-12, || {
        format!("{expected} vs product {}", 8.0 * p_oracle)
    })?;
    let membership: Vec<Vec<bool>> = sets
        .iter()
        .map(|s| {
            let mut v = vec![false; q];
            s.iter().for_each(|&x| v[x as usize] = true);
            v
        })
        .collect();
    let trials = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let counts: Vec<f64> = (0..trials)
        .map(|_| {
            let draw = sample(&mut rng, q, m);
            membership.iter().filter(|mem| draw.iter().all(|x| !mem[x])).count() as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / trials as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    ensure((mean - expected).abs() <= 3.0 * se, || {
        format!("MC {mean:.4} vs {expected:.4} (se {se:.4})")
    })?;
    Ok(format!(
        "|E|=28,120; disjoint at n=2; n=3 m=8: exact {expected:.4}, MC {mean:.4} ± {se:.4}"
    ))
}

fn block_deceivers(base: &certlab::circuit::ThresholdCircuit, t: u32) -> Result<(TruthTable, Vec<TruthTable>), String> {
    let f = truth_table(base).map_err(err)?;
    let coords: Vec<u32> = (0..t).collect();
    let tables = TriggerSpec::all_patterns(&coords, false)
        .map_err(err)?
        .into_iter()
        .map(|tr| {
            let tr = tr.with_label(majority_override_label(&f, &tr).map_err(err)?);
            truth_table(&tc0_override(base, &tr).map_err(err)?).map_err(err)
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok((f, tables))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (n, t) in [(8u32, 4u32), (10, 6)] {
        let base = random_threshold_circuit(&mut rng, n, 5);
        let (f, decs) = block_deceivers(&base, t)?;
        let lb = disjoint_block_lower_bound(&f, &decs).map_err(err)?;
        ensure(lb == 1 << t, || format!("n={n} t={t}: bound {lb}"))?;
    }
    let over = enumerate_overparametrized(Dialect::RestrictedThreshold, 2, &EnumOptions::default()).map_err(err)?;
    let or2 = TruthTable::or_n(2).map_err(err)?;
    let c = min_certificate(&over.class, &or2, DEFAULT_SEARCH_BUDGET).map_err(err)?;
    ensure(c.size >= 4, || format!("overparametrized n=2 cert {}", c.size))?;
    Ok(format!(
        "bounds 16 and 64; overparametrized n=2 cert(OR_2) = {}",
        c.size
    ))
}

fn criterion_7() -> Outcome {
    let (n, t) = (6u32, 3u32);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = random_threshold_circuit(&mut rng, n, 4);
    let (f, decs) = block_deceivers(&base, t)?;
    let h = HypothesisClass::new(n, std::iter::once(f.clone()).chain(decs)).map_err(err)?;
    ensure(h.len() == 9, || format!("class size {}", h.len()))?;
    for r in 0..(1u32 << (n - t - 1)) {
        let c = approx_min_certificate(&h, &f, r as f64, ErrorMode::Absolute, DEFAULT_SEARCH_BUDGET).map_err(err)?;
        ensure(c.size >= 8, || format!("R={r}: size {}", c.size))?;
    }
    for eps in [0.125, 0.25, 0.5] {
        let c = approx_min_certificate(&h, &f, eps, ErrorMode::Normalized, DEFAULT_SEARCH_BUDGET).map_err(err)?;
        ensure(c.size == 0, || format!("eps={eps}: size {}", c.size))?;
    }
    Ok("R in 0..4 needs >= 8 labels; eps >= 1/8 needs 0".into())
}

fn check_ahat_override(base: &AhatModel, trig: &TriggerSpec) -> Result<(), String> {
    let p = base.precision;
    let dec = block_override(base, trig).map_err(err)?;
    let m = base.dim;
    let codes = code_vectors(&p);
    let one = p.one();
    let n = base.n as usize;
    for x in 0..1u64 << base.n {
        let bt = base.forward_trace(x);
        let dt = dec.forward_trace(x);
        let want = if trig.contains(x) {
            trig.override_label()
        } else {
            bt.output
        };
        ensure(dt.output == want, || format!("x={x}: output {} want {want}", dt.output))?;
        let depth = base.depth();
        for (l, (hb, hd)) in bt.hidden.iter().zip(&dt.hidden).enumerate() {
            for i in 0..n {
                ensure(hd[i][..m] == hb[i][..], || {
                    format!("x={x} layer {l} pos {i}: inherited state differs")
                })?;
                let code = match trig.coords().iter().position(|&c| c as usize == i) {
                    None => codes[0],
                    Some(k) if ((x >> i) & 1 == 1) == trig.pattern()[k] => codes[2],
                    Some(_) => codes[1],
                };
                ensure(hd[i][m..m + 4] == code, || {
                    format!("x={x} layer {l} pos {i}: code changed")
                })?;
                let z = if l == depth && trig.contains(x) { one } else { p.zero() };
                ensure(hd[i][m + 4] == z && hd[i][m + 5] == z, || {
                    format!("x={x} layer {l} pos {i}: flag")
                })?;
            }
        }
        let g = dt.scores[depth - 1].len() - 1;
        for i in 0..n {
            for j in 0..n {
                let want = match trig.coords().iter().position(|&c| c as usize == j) {
                    None => 0.0,
                    Some(k) if ((x >> j) & 1 == 1) == trig.pattern()[k] => 1.0,
                    Some(_) => 2.0,
                };
                let s = dt.scores[depth - 1][g][i][j];
                ensure(p.to_f64(s) == want, || {
                    format!("x={x} score[{i}][{j}] = {}", p.to_f64(s))
                })?;
            }
            let argmax = |row: &[certlab::ahat::Fp]| {
                let best = row.iter().map(|&s| p.units(s)).max().unwrap();
                row.iter().map(|&s| p.units(s) == best).collect::<Vec<_>>()
            };
            let raw = &dt.scores[depth - 1][g][i];
            let scaled = &dt.scaled[depth - 1][g][i];
            ensure(argmax(raw) == argmax(scaled), || {
                format!("x={x}: scaling changed maximizers")
            })?;
            ensure(dt.head_out[depth - 1][g][i] == dt.head_out[depth - 1][g][0], || {
                format!("x={x}: head output depends on position")
            })?;
        }
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let p = Precision::P8;
    verify_layer_norm_fixed_points(&p).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let base = random_model(&mut rng, p, 10, RandomModelConfig::default());
        let trig = random_trigger(&mut rng, 10, 4);
        check_ahat_override(&base, &trig)?;
    }
    let f = p.max_value();
    for (bias, zero_a) in [(f, true), (p.min_value(), true), (f, false), (p.min_value(), false)] {
        let mut base = random_model(&mut rng, p, 6, RandomModelConfig::default());
        base.readout.b = bias;
        if zero_a {
            base.readout.a.iter_mut().for_each(|a| *a = p.zero());
        }
        for label in [false, true] {
            let trig = random_trigger(&mut rng, 6, 3).with_label(label);
            check_ahat_override(&base, &trig)?;
        }
    }
    Ok("fixed points at p=8; 20 models at n=10 bit-exact; saturated logits overridden".into())
}

fn criterion_9() -> Outcome {
    let ns = [12u32, 16, 20, 24, 32, 40];
    let cells = elimination_heatmap(&ns, &HEATMAP_FRACTIONS).map_err(err)?;
    ensure(cells.len() == ns.len() * HEATMAP_FRACTIONS.len(), || {
        "heatmap shape".into()
    })?;
    for c in &cells {
        let m = 2f64.powf(c.fraction * c.n as f64).floor() as u128;
        let oracle = ((1i128 << c.n) - m as i128).max(0) as u128;
        ensure(c.m == m, || format!("n={} f={}: m {} vs {m}", c.n, c.fraction, c.m))?;
        ensure(
            c.optimal_remaining == oracle && optimal_elimination_curve(c.n, m) == oracle,
            || format!("n={} m={m}: {} vs {oracle}", c.n, c.optimal_remaining),
        )?;
    }
    for n in ns {
        ensure(optimal_elimination_curve(n, (1u128 << n) + 5) == 0, || {
            "curve must clamp at 0".into()
        })?;
    }
    Ok(format!("{} cells match max(2^n - m, 0)", cells.len()))
}

fn criterion_survivors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = 400usize;
    let entries: Vec<ProfileEntry> = (0..40)
        .map(|i| {
            let k = if i % 10 == 0 { 0 } else { rng.gen_range(1..60) };
            ProfileEntry {
                id: format!("h{i}"),
                count: k as u128,
                points: Some(sample(&mut rng, q, k).into_iter().map(|x| x as u64).collect()),
            }
        })
        .collect();
    let profile = ErrorProfile::new(q as u128, "synthetic", entries).map_err(err)?;
    let sets: Vec<HashSet<u64>> = profile
        .entries
        .iter()
        .map(|e| e.points.as_ref().unwrap().iter().copied().collect())
        .collect();
    for m in [1usize, 5, 20] {
        let expected = expected_survivors(&profile, m as u128).map_err(err)?;
        let trials = 10_000;
        let counts: Vec<f64> = (0..trials)
            .map(|_| {
                let draw: Vec<u64> = sample(&mut rng, q, m).into_iter().map(|x| x as u64).collect();
                sets.iter().filter(|s| draw.iter().all(|x| !s.contains(x))).count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        ensure((mean - expected).abs() <= 3.0 * se, || {
            format!("m={m}: MC {mean:.4} vs {expected:.4} (se {se:.4})")
        })?;
    }
    let inside = |x: u64| x < 100;
    let r = restrict_to_subset(&profile, 100, inside).map_err(err)?;
    for (s, &flag) in sets.iter().zip(&r.unkillable) {
        ensure(flag == !s.iter().any(|&x| inside(x)), || {
            "unkillable flag disagrees with oracle".into()
        })?;
    }
    ensure(r.unkillable.iter().filter(|&&u| u).count() >= 4, || {
        "zero-error hypotheses must be unkillable".into()
    })?;
    Ok("synthetic profile matches Monte-Carlo within 3 SE at m=1,5,20; unkillable flags exact".into())
}

/// Bypasses output capture so the lines show up in plain `cargo test` logs.
fn report(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 enumeration counts", criterion_1),
        ("2 halving selects OR_n", criterion_2),
        ("3 minimum certificates", criterion_3),
        ("4 deceiver semantics", criterion_4),
        ("5 addition family", criterion_5),
        ("6 lower bounds", criterion_6),
        ("7 approximate certification", criterion_7),
        ("8 transformer override", criterion_8),
        ("9 heatmap formula", criterion_9),
        ("S synthetic survivors", criterion_survivors),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => report(&format!("PASS criterion {name} ({secs:.1}s): {detail}")),
            Err(detail) => {
                report(&format!("FAIL criterion {name} ({secs:.1}s): {detail}"));
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
