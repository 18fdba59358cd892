//! `certlab`: command-line front end for the certificate-size experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use certlab::ahat::{self, AhatError, AhatModel, Precision, RandomModelConfig};
use certlab::boolfn::{majority_override_label, BoolFnError, TriggerSpec, TruthTable};
use certlab::certify::{
    approx_min_certificate, disjoint_block_lower_bound, halving_certificate, min_certificate, Certificate,
    CertifyError, ErrorMode, HypothesisClass, DEFAULT_SEARCH_BUDGET,
};
use certlab::circuit::{truth_table, AnyCircuit, Circuit, CircuitError};
use certlab::deceiver::{
    ac0_override, ac0_override_same_depth, addition_deceiver, nc1_override, restricted_tc0_override, tc0_override,
    DeceiverError,
};
use certlab::enumerate::{ceil_log2, enumerate_semantic_class, ClassSpec, Dialect, EnumError, EnumOptions};
use certlab::survivors::{
    constructed_addition_profile, elimination_heatmap, expected_survivors, optimal_elimination_curve, sample_size,
    ErrorProfile, SurvivorError, HEATMAP_FRACTIONS,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Verify(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Budget(_) => "budget",
            CliError::Verify(_) => "verification",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl From<EnumError> for CliError {
    fn from(e: EnumError) -> Self {
        match e {
            EnumError::NeedsLongRun { .. } | EnumError::Budget { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<CertifyError> for CliError {
    fn from(e: CertifyError) -> Self {
        match e {
            CertifyError::Budget { .. } => CliError::Budget(e.to_string()),
            CertifyError::EmptyDisagreement(_) | CertifyError::Overlap { .. } => CliError::Verify(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

macro_rules! config_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Config(e.to_string())
            }
        }
    )*};
}

config_error!(
    BoolFnError,
    CircuitError,
    DeceiverError,
    SurvivorError,
    AhatError,
    std::io::Error,
    serde_json::Error
);

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "certlab",
    version,
    about = "Certificate-size experiments for small circuit classes"
)]
struct Cli {
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run manifest path (default: `<out>.manifest.json` when --out is set).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Count the semantic class: CSV `n,dialect,semantic_count,ceil_log2`.
    Enumerate(EnumerateArgs),
    /// Run the deterministic halving strategy on a base class.
    Halve(HalveArgs),
    /// Exact minimum certificate.
    CertMin(CertArgs),
    /// Exact minimum sample reaching an error tolerance.
    ApproxCert(ApproxArgs),
    /// Build a trigger-block deceiver circuit.
    Deceive(DeceiveArgs),
    /// Disjoint-block lower bound from all patterns on a coordinate set.
    LowerBound(LowerBoundArgs),
    /// Survivor curves and heatmaps.
    Survivors(SurvivorArgs),
    /// Build and verify a Transformer block override.
    AhatOverride(AhatArgs),
}

#[derive(Args, Debug, Serialize)]
struct ClassArgs {
    /// tc0 (restricted threshold) or ac0 (depth-2 AND/OR).
    #[arg(long)]
    dialect: Option<String>,
    /// Arity, or an inclusive range like `2..6` for enumerate.
    #[arg(long)]
    n: Option<String>,
    /// Add every singleton-block override of each base member.
    #[arg(long)]
    overparametrized: bool,
    /// Allow the slow enumerations (threshold n >= 7).
    #[arg(long)]
    long_run: bool,
    /// File with one truth table (`<n>:<hex>`) per line instead of an enumerated class.
    #[arg(long)]
    class: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EnumerateArgs {
    #[command(flatten)]
    class: ClassArgs,
}

#[derive(Args, Debug, Serialize)]
struct HalveArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Write the query trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CertArgs {
    #[command(flatten)]
    class: ClassArgs,
    /// Target truth table; defaults to OR_n.
    #[arg(long)]
    target: Option<String>,
    /// Node limit for the exact search.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    budget: u64,
}

#[derive(Args, Debug, Serialize)]
struct ApproxArgs {
    #[command(flatten)]
    cert: CertArgs,
    #[arg(long)]
    tolerance: f64,
    /// absolute or normalized.
    #[arg(long, default_value = "absolute")]
    mode: String,
}

#[derive(Args, Debug, Serialize)]
struct TriggerArgs {
    /// One-based trigger coordinates, comma separated.
    #[arg(long)]
    coords: Option<String>,
    /// Pattern bits in coordinate order, e.g. `101`.
    #[arg(long)]
    pattern: Option<String>,
    /// 0, 1 or majority.
    #[arg(long, default_value = "majority")]
    label: String,
}

#[derive(Args, Debug, Serialize)]
struct DeceiveArgs {
    /// Base circuit file.
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[command(flatten)]
    trigger: TriggerArgs,
    /// Use the restricted-class override (coefficient 2n+3).
    #[arg(long)]
    restricted: bool,
    /// AC0 only: wire the detector into the existing top gate.
    #[arg(long)]
    same_depth: bool,
    /// Build the addition deceiver for this operand length instead.
    #[arg(long)]
    addition: Option<u32>,
    /// Sum pattern of the addition deceiver.
    #[arg(long)]
    sum_pattern: Option<u64>,
    /// Skip the exhaustive semantic check.
    #[arg(long)]
    no_verify: bool,
}

#[derive(Args, Debug, Serialize)]
struct LowerBoundArgs {
    /// Base circuit file.
    #[arg(long)]
    circuit: PathBuf,
    /// One-based coordinates of the block family.
    #[arg(long)]
    coords: String,
}

#[derive(Args, Debug, Serialize)]
struct SurvivorArgs {
    /// Operand length of the constructed addition family.
    #[arg(long)]
    constructed_addition: Option<u32>,
    /// Sample sizes: `2^0.25n..2^n` for the standard exponents, or a comma
    /// list of integers and terms like `2^0.5n`.
    #[arg(long, default_value = "2^0.25n..2^n")]
    sizes: String,
    /// Error-profile file.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Comma-separated sample sizes for --profile.
    #[arg(long)]
    m: Option<String>,
    /// Comma-separated operand lengths for the full heatmap.
    #[arg(long)]
    heatmap: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct AhatArgs {
    /// Base model JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Generate a random base model with this seed instead.
    #[arg(long)]
    random_seed: Option<u64>,
    /// Input length of the random base model.
    #[arg(long, default_value_t = 8)]
    n: u32,
    #[command(flatten)]
    trigger: TriggerArgs,
    /// Exhaustive verification up to this input length; longer inputs are
    /// checked on the block and 4096 seeded random points.
    #[arg(long, default_value_t = 12)]
    verify_range: u32,
    /// Write the overridden model JSON here.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Write the base model JSON here.
    #[arg(long)]
    base_out: Option<PathBuf>,
}

fn parse_dialect(s: &Option<String>) -> Result<Dialect, CliError> {
    s.as_deref()
        .ok_or_else(|| CliError::Config("--dialect is required".into()))?
        .parse()
        .map_err(CliError::Config)
}

fn parse_n_range(s: &Option<String>) -> Result<(u32, u32), CliError> {
    let s = s.as_deref().ok_or_else(|| CliError::Config("--n is required".into()))?;
    let num = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| CliError::Config(format!("bad arity `{t}`")))
    };
    match s.split_once("..") {
        Some((a, b)) => {
            let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
            if lo > hi {
                return Err(CliError::Config(format!("empty range `{s}`")));
            }
            Ok((lo, hi))
        }
        None => num(s).map(|n| (n, n)),
    }
}

fn parse_n(s: &Option<String>) -> Result<u32, CliError> {
    match parse_n_range(s)? {
        (lo, hi) if lo == hi => Ok(lo),
        _ => Err(CliError::Config("expected a single arity".into())),
    }
}

fn enum_options(long_run: bool) -> EnumOptions {
    EnumOptions {
        long_run,
        ..EnumOptions::default()
    }
}

fn spec(a: &ClassArgs, n: u32) -> Result<ClassSpec, CliError> {
    let d = parse_dialect(&a.dialect)?;
    Ok(if a.overparametrized {
        ClassSpec::overparametrized(d, n)
    } else {
        ClassSpec::base(d, n)
    })
}

fn load_class(a: &ClassArgs) -> Result<HypothesisClass, CliError> {
    if let Some(path) = &a.class {
        let text = read(path)?;
        let tables = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<TruthTable>())
            .collect::<Result<Vec<_>, _>>()?;
        let n = tables.first().map(TruthTable::arity).ok_or(CertifyError::EmptyClass)?;
        return Ok(HypothesisClass::new(n, tables)?);
    }
    let n = parse_n(&a.n)?;
    Ok(enumerate_semantic_class(spec(a, n)?, &enum_options(a.long_run))?.class)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn parse_trigger(t: &TriggerArgs, n: u32) -> Result<TriggerSpec, CliError> {
    let coords_text = t
        .coords
        .as_deref()
        .ok_or_else(|| CliError::Config("--coords is required".into()))?;
    let coords = parse_coords(coords_text)?;
    let pattern_text = t
        .pattern
        .as_deref()
        .ok_or_else(|| CliError::Config("--pattern is required".into()))?;
    let pattern = pattern_text
        .chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Config(format!("bad pattern `{pattern_text}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if pattern.len() != coords.len() {
        return Err(CliError::Config(
            "pattern length must match the coordinate count".into(),
        ));
    }
    // TriggerSpec sorts coordinates; keep each bit attached to its coordinate.
    let mut pairs: Vec<(u32, bool)> = coords.into_iter().zip(pattern).collect();
    pairs.sort_unstable();
    let (coords, pattern): (Vec<u32>, Vec<bool>) = pairs.into_iter().unzip();
    let trig = TriggerSpec::new(coords, pattern, false)?;
    trig.validate_for(n)?;
    Ok(trig)
}

fn parse_coords(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim().trim_start_matches('x');
            match t.parse::<u32>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(CliError::Config(format!(
                    "bad coordinate `{t}` (coordinates are one-based)"
                ))),
            }
        })
        .collect()
}

fn fixed_label(label: &str) -> Result<Option<bool>, CliError> {
    match label {
        "0" => Ok(Some(false)),
        "1" => Ok(Some(true)),
        "majority" => Ok(None),
        _ => Err(CliError::Config(format!(
            "label must be 0, 1 or majority, got `{label}`"
        ))),
    }
}

fn cert_json(h: &HypothesisClass, f: &TruthTable, c: &Certificate) -> serde_json::Value {
    json!({
        "class_size": h.len(),
        "selected_target_hex": f.to_hex(),
        "cert_size": c.size,
        "witness_points": c.witness.points(),
    })
}

fn target(a: &CertArgs, h: &HypothesisClass) -> Result<TruthTable, CliError> {
    match &a.target {
        Some(t) => Ok(t.parse()?),
        None => Ok(TruthTable::or_n(h.arity())?),
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Runs one subcommand and returns its primary output.
fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Enumerate(a) => {
            let (lo, hi) = parse_n_range(&a.class.n)?;
            let mut out = String::from("n,dialect,semantic_count,ceil_log2\n");
            for n in lo..=hi {
                let c = enumerate_semantic_class(spec(&a.class, n)?, &enum_options(a.class.long_run))?;
                let len = c.len() as u128;
                out.push_str(&format!("{n},{},{len},{}\n", c.spec.dialect, ceil_log2(len)));
            }
            Ok(out)
        }
        Command::Halve(a) => {
            let h = load_class(&a.class)?;
            let r = halving_certificate(&h)?;
            if let Some(path) = &a.trace {
                write(path, &r.trace_csv())?;
            }
            Ok(pretty(&json!({
                "class_size": h.len(),
                "selected_target_hex": r.selected.to_hex(),
                "cert_size": r.sample.len(),
                "witness_points": r.sample.points(),
            })))
        }
        Command::CertMin(a) => {
            let h = load_class(&a.class)?;
            let f = target(a, &h)?;
            let c = min_certificate(&h, &f, a.budget)?;
            Ok(pretty(&cert_json(&h, &f, &c)))
        }
        Command::ApproxCert(a) => {
            let h = load_class(&a.cert.class)?;
            let f = target(&a.cert, &h)?;
            let mode = match a.mode.as_str() {
                "absolute" => ErrorMode::Absolute,
                "normalized" => ErrorMode::Normalized,
                m => {
                    return Err(CliError::Config(format!(
                        "mode must be absolute or normalized, got `{m}`"
                    )))
                }
            };
            let c = approx_min_certificate(&h, &f, a.tolerance, mode, a.cert.budget)?;
            let mut v = cert_json(&h, &f, &c);
            v["tolerance"] = json!(a.tolerance);
            v["mode"] = json!(mode.to_string());
            Ok(pretty(&v))
        }
        Command::Deceive(a) => deceive(a),
        Command::LowerBound(a) => lower_bound(a),
        Command::Survivors(a) => survivors(a),
        Command::AhatOverride(a) => ahat_override(a),
    }
}

fn deceive(a: &DeceiveArgs) -> Result<String, CliError> {
    if let Some(n) = a.addition {
        let p = a
            .sum_pattern
            .ok_or_else(|| CliError::Config("--sum-pattern is required with --addition".into()))?;
        return Ok(AnyCircuit::from(addition_deceiver(n, p)?).to_text());
    }
    let path = a
        .circuit
        .as_ref()
        .ok_or_else(|| CliError::Config("--circuit or --addition is required".into()))?;
    let base = AnyCircuit::parse(&read(path)?)?;
    let mut trig = parse_trigger(&a.trigger, base.arity())?;
    let base_table = truth_table(&base)?;
    let label = match fixed_label(&a.trigger.label)? {
        Some(l) => l,
        None => majority_override_label(&base_table, &trig)?,
    };
    trig = trig.with_label(label);
    let dec: AnyCircuit = match &base {
        AnyCircuit::Threshold(c) if a.restricted => restricted_tc0_override(c, &trig)?.into(),
        AnyCircuit::Threshold(c) => tc0_override(c, &trig)?.into(),
        AnyCircuit::Ac0(c) if a.same_depth => ac0_override_same_depth(c, &trig)?.into(),
        AnyCircuit::Ac0(c) => ac0_override(c, &trig)?.into(),
        AnyCircuit::FanIn2(c) => nc1_override(c, &trig)?.into(),
    };
    if !a.no_verify {
        let table = truth_table(&dec)?;
        if let Some(x) = (0..base_table.domain_size())
            .find(|&x| table.get(x) != if trig.contains(x) { label } else { base_table.get(x) })
        {
            return Err(CliError::Verify(format!("deceiver output is wrong at point {x}")));
        }
    }
    Ok(dec.to_text())
}

fn lower_bound(a: &LowerBoundArgs) -> Result<String, CliError> {
    let base = AnyCircuit::parse(&read(&a.circuit)?)?;
    let coords = parse_coords(&a.coords)?;
    let f = truth_table(&base)?;
    let mut tables = Vec::new();
    for trig in TriggerSpec::all_patterns(&coords, false)? {
        trig.validate_for(base.arity())?;
        let trig = trig.with_label(majority_override_label(&f, &trig)?);
        let dec: AnyCircuit = match &base {
            AnyCircuit::Threshold(c) => tc0_override(c, &trig)?.into(),
            AnyCircuit::Ac0(c) => ac0_override(c, &trig)?.into(),
            AnyCircuit::FanIn2(c) => nc1_override(c, &trig)?.into(),
        };
        tables.push(truth_table(&dec)?);
    }
    let bound = disjoint_block_lower_bound(&f, &tables)?;
    Ok(pretty(&json!({
        "n": base.arity(),
        "t": coords.len(),
        "deceivers": tables.len(),
        "lower_bound": bound,
    })))
}

/// `(label, exponent, m)` for each size term.
fn parse_sizes(s: &str, n: u32) -> Result<Vec<(Option<f64>, u128)>, CliError> {
    if s.replace(' ', "") == "2^0.25n..2^n" {
        return Ok(HEATMAP_FRACTIONS
            .iter()
            .map(|&f| (Some(f), sample_size(f, n)))
            .collect());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if let Some(rest) = t.strip_prefix("2^") {
                let f = rest.strip_suffix('n').unwrap_or(rest);
                let f = if f.is_empty() {
                    1.0
                } else {
                    f.parse::<f64>()
                        .map_err(|_| CliError::Config(format!("bad size `{t}`")))?
                };
                Ok((Some(f), sample_size(f, n)))
            } else {
                t.parse::<u128>()
                    .map(|m| (None, m))
                    .map_err(|_| CliError::Config(format!("bad size `{t}`")))
            }
        })
        .collect()
}

fn survivors(a: &SurvivorArgs) -> Result<String, CliError> {
    if let Some(ns) = &a.heatmap {
        let ns: Vec<u32> = ns
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad operand length `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        let mut out = String::from("n,exponent,m,optimal_remaining,uniform_expected\n");
        for c in elimination_heatmap(&ns, &HEATMAP_FRACTIONS)? {
            out.push_str(&format!(
                "{},{},{},{},{:.12e}\n",
                c.n, c.fraction, c.m, c.optimal_remaining, c.uniform_expected
            ));
        }
        return Ok(out);
    }
    if let Some(n) = a.constructed_addition {
        let profile = constructed_addition_profile(n)?;
        let mut out = String::from("n,exponent,m,optimal_remaining,uniform_expected\n");
        for (f, m) in parse_sizes(&a.sizes, n)? {
            let exp = f.map(|f| f.to_string()).unwrap_or_default();
            let e = expected_survivors(&profile, m)?;
            out.push_str(&format!("{n},{exp},{m},{},{e:.12e}\n", optimal_elimination_curve(n, m)));
        }
        return Ok(out);
    }
    if let Some(path) = &a.profile {
        let profile = ErrorProfile::parse(&read(path)?)?;
        let ms =
            a.m.as_deref()
                .ok_or_else(|| CliError::Config("--m is required with --profile".into()))?;
        let mut out = String::from("m,expected_survivors\n");
        for t in ms.split(',') {
            let m: u128 = t
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad sample size `{t}`")))?;
            out.push_str(&format!("{m},{:.12e}\n", expected_survivors(&profile, m)?));
        }
        return Ok(out);
    }
    Err(CliError::Config(
        "one of --constructed-addition, --profile or --heatmap is required".into(),
    ))
}

fn ahat_override(a: &AhatArgs) -> Result<String, CliError> {
    let base = match (&a.model, a.random_seed) {
        (Some(path), _) => AhatModel::from_json(&read(path)?)?,
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ahat::random_model(&mut rng, Precision::P8, a.n, RandomModelConfig::default())
        }
        (None, None) => return Err(CliError::Config("--model or --random-seed is required".into())),
    };
    if let Some(path) = &a.base_out {
        write(path, &base.to_json())?;
    }
    let mut trig = parse_trigger(&a.trigger, base.n)?;
    let label = match fixed_label(&a.trigger.label)? {
        Some(l) => l,
        None => {
            let block: Vec<u64> = trig.block_points(base.n).collect();
            let ones = block.iter().filter(|&&x| base.forward(x)).count();
            2 * ones > block.len()
        }
    };
    trig = trig.with_label(label);
    let dec = ahat::block_override(&base, &trig)?;
    if let Some(path) = &a.model_out {
        write(path, &dec.to_json())?;
    }
    let points: Vec<u64> = if base.n <= a.verify_range {
        (0..1u64 << base.n).collect()
    } else {
        use rand_chacha::rand_core::RngCore;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mask = (1u64 << base.n) - 1;
        trig.block_points(base.n)
            .take(4096)
            .chain((0..4096).map(|_| rng.next_u64() & mask))
            .collect()
    };
    use rayon::prelude::*;
    let mismatches: Vec<u64> = points
        .par_iter()
        .copied()
        .filter(|&x| dec.forward(x) != if trig.contains(x) { label } else { base.forward(x) })
        .collect();
    let summary = json!({
        "n": base.n,
        "precision_bits": base.precision.bits(),
        "base_dim": base.dim,
        "override_dim": dec.dim,
        "label": label as u8,
        "exhaustive": base.n <= a.verify_range,
        "checked_inputs": points.len(),
        "mismatches": mismatches.len(),
    });
    if let Some(&x) = mismatches.first() {
        return Err(CliError::Verify(format!("override disagrees at input {x}; {summary}")));
    }
    Ok(pretty(&summary))
}

fn emit(cli: &Cli, output: &str, elapsed_ms: u128) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => write(path, output)?,
        None => print!("{output}"),
    }
    let manifest_path = cli.manifest.clone().or_else(|| {
        cli.out
            .as_ref()
            .map(|p| PathBuf::from(format!("{}.manifest.json", p.display())))
    });
    if let Some(path) = manifest_path {
        let manifest = json!({
            "tool": "certlab",
            "version": env!("CARGO_PKG_VERSION"),
            "config": cli,
            "argv": std::env::args().collect::<Vec<_>>(),
            "elapsed_ms": elapsed_ms,
        });
        write(&path, &pretty(&manifest))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", json!({"error": "config", "message": msg.trim()}));
            return ExitCode::from(2);
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("{}", json!({"error": "config", "message": e.to_string()}));
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    match run(&cli).and_then(|out| emit(&cli, &out, start.elapsed().as_millis())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(e.code())
        }
    }
}
