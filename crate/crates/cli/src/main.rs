use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use aogb::complexity::{self, AttackParams, ComplexityError, GmimcVariant};
use aogb::degfall::{self, DegfallError};
use aogb::desk::{build_instance, gated_instance, DeskConfig, DeskFamily, DeskInstance, FieldEq};
use aogb::genpos::{self, GenposError, Method, RankVariant, Verdict};
use aogb::groebner::{buchberger, solving_degree, GbError, QuotientDim};
use aogb::report::Envelope;
use aogb::shapelex::{recover_key, ShapeError, ShapeOptions};
use aogb::systems::{Layer, PolySystem, SystemError};

mod fail;
use fail::Fail;

#[derive(Parser)]
#[command(name = "aogb", version, about = "Polynomial models, Groebner bases and complexity estimates for arithmetization-oriented ciphers")]
struct Cli {
    /// Worker threads for multi-seed runs; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Output file; defaults to stdout unless AOGB_OUT_DIR is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory receiving <command>-<digest>.<ext> reports.
    #[arg(long, global = true, env = "AOGB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Wall-clock budget in seconds; exceeding it exits with status 3.
    #[arg(long, global = true)]
    timeout_secs: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a polynomial model and print it.
    Build(InstanceArgs),
    /// Groebner basis and key recovery.
    Solve(MultiArgs),
    /// Measure the solving degree.
    Solvdeg(DegArgs),
    /// Scan for the last fall degree.
    Lastfall(DegArgs),
    /// Check generic coordinates.
    GenericCheck(GenericArgs),
    /// Bit-complexity estimates for one attack.
    Estimate(EstimateArgs),
    /// Reproduce the complexity tables.
    Tables(TablesArgs),
    /// Construct a lower-bound witness and measure its degree fall.
    Witness(WitnessArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    Shift,
    Circulant,
    Cauchy,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldEqArg {
    None,
    Key,
    All,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Instance config as inline JSON or a file path.
    #[arg(long, conflicts_with = "system")]
    spec: Option<String>,
    /// Polynomial system JSON (as printed by `build`), inline or a file path.
    #[arg(long)]
    system: Option<String>,
    /// mimc, two_plaintext, feistel, hash, gmimc_crf, gmimc_erf, hades, sponge
    #[arg(long)]
    family: Option<String>,
    #[arg(long, default_value_t = 11)]
    q: u64,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    rf: u32,
    #[arg(long, default_value_t = 0)]
    rp: u32,
    /// Round exponent d.
    #[arg(long)]
    exponent: Option<u32>,
    #[arg(long, value_enum)]
    layer: Option<LayerArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated key (message for the hash model).
    #[arg(long)]
    key: Option<String>,
    #[arg(long, value_enum, default_value_t = FieldEqArg::None)]
    field_eq: FieldEqArg,
    #[arg(long)]
    downsize: Option<bool>,
    #[arg(long, default_value_t = genpos::PAIR_BUDGET)]
    pair_budget: usize,
}

#[derive(Args, Clone)]
struct MultiArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Run seeds seed..seed+count.
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Skip forward to the first seed with fewer than three F_q solutions.
    #[arg(long)]
    gate: bool,
}

#[derive(Args, Clone)]
struct DegArgs {
    #[command(flatten)]
    multi: MultiArgs,
    #[arg(long)]
    d_max: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    PurePowers,
    Substitution,
    Spn,
    Rank,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Erf,
    Crf,
    StrongCrf,
}

#[derive(Args, Clone)]
struct GenericArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    MimcFieldEq,
    TwoPlaintext,
    Feistel,
    Hash,
    Hades,
    Gmimc,
}

#[derive(Args, Clone)]
struct EstimateArgs {
    #[arg(long, value_enum, required_unless_present = "params")]
    attack: Option<AttackArg>,
    /// Attack parameters as inline JSON or a file path.
    #[arg(long)]
    params: Option<String>,
    #[arg(long, default_value_t = 64)]
    log2q: u32,
    #[arg(long, default_value_t = 10)]
    r: u32,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value_t = 3)]
    rf: u32,
    #[arg(long, default_value_t = 13)]
    rp: u32,
    #[arg(long, default_value_t = 3)]
    d: u32,
}

#[derive(Args, Clone)]
struct TablesArgs {
    /// mimc, two_plaintext, feistel, hades, gmimc, hash, overview or all
    #[arg(long, default_value = "all")]
    which: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructionArg {
    MimcFieldEq,
    MimcRemainder,
    Feistel,
    Hash,
    Conjecture,
}

#[derive(Args, Clone)]
struct WitnessArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum)]
    construction: ConstructionArg,
    /// Seeds to try until the hypotheses hold.
    #[arg(long, default_value_t = 1)]
    tries: u64,
    #[arg(long)]
    d_max: Option<u32>,
}

/// Result of one command before rendering.
struct Output {
    command: &'static str,
    config: Value,
    seed: u64,
    budgets: Value,
    result: Value,
    text: String,
    csv: Option<String>,
}

fn read_inline_or_file(s: &str) -> Result<String, Fail> {
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        return Ok(s.to_string());
    }
    std::fs::read_to_string(Path::new(s)).map_err(|e| Fail::Malformed(format!("cannot read {s}: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Fail> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Fail::Malformed(format!("malformed {what} at `{}`: {}", if path.is_empty() { "." } else { &path }, e.inner()))
    })
}

fn desk_config(a: &InstanceArgs) -> Result<DeskConfig, Fail> {
    if let Some(s) = &a.spec {
        return parse_json(&read_inline_or_file(s)?, "instance config");
    }
    let fam_s = a.family.as_deref().ok_or_else(|| Fail::Precondition("one of --family, --spec or --system is required".into()))?;
    let family = DeskFamily::parse(fam_s).ok_or_else(|| Fail::Precondition(format!("unknown family {fam_s:?}")))?;
    let key = match &a.key {
        None => None,
        Some(k) => Some(
            k.split(',')
                .map(|v| v.trim().parse::<u64>().map_err(|_| Fail::Precondition(format!("bad key component {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    Ok(DeskConfig {
        family,
        q: a.q,
        r: a.r,
        n: a.n,
        rf: a.rf,
        rp: a.rp,
        exponent: a.exponent,
        layer: a.layer.map(|l| match l {
            LayerArg::Shift => Layer::Shift,
            LayerArg::Circulant => Layer::Circulant,
            LayerArg::Cauchy => Layer::Cauchy,
        }),
        seed: a.seed,
        key,
        field_eq: match a.field_eq {
            FieldEqArg::None => FieldEq::None,
            FieldEqArg::Key => FieldEq::Key,
            FieldEqArg::All => FieldEq::All,
        },
        downsize: a.downsize,
    })
}

/// A system to work on: a seeded instance, an explicit system, or the sponge example.
enum Source {
    Desk(DeskConfig),
    System(Value, PolySystem),
    Sponge,
}

impl Source {
    fn from_args(a: &InstanceArgs) -> Result<Source, Fail> {
        if let Some(s) = &a.system {
            let mut v: Value = parse_json(&read_inline_or_file(s)?, "system")?;
            // a whole `build` report is accepted too
            if let Some(inner) = v.pointer("/result/system") {
                v = inner.clone();
            }
            let sys = PolySystem::from_json(&v).map_err(|e| Fail::Malformed(format!("malformed system: {e}")))?;
            return Ok(Source::System(v, sys));
        }
        if a.family.as_deref() == Some("sponge") {
            return Ok(Source::Sponge);
        }
        Ok(Source::Desk(desk_config(a)?))
    }

    fn config_json(&self) -> Value {
        match self {
            Source::Desk(c) => serde_json::to_value(c).unwrap(),
            Source::System(v, _) => json!({ "system": v }),
            Source::Sponge => json!({ "family": "sponge" }),
        }
    }

    fn seed(&self) -> u64 {
        match self {
            Source::Desk(c) => c.seed,
            _ => 0,
        }
    }
}

/// Instances for seeds seed..seed+count, optionally gated.
fn instances(cfg: &DeskConfig, count: u64, gate: bool) -> Result<Vec<DeskInstance>, Fail> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let c = DeskConfig { seed: cfg.seed + i, ..cfg.clone() };
            if gate {
                gated_instance(&c, 64)?.ok_or_else(|| Fail::Precondition(format!("no seed from {} passes the solution-count gate", c.seed)))
            } else {
                Ok(build_instance(&c)?)
            }
        })
        .collect()
}

fn systems_of(src: &Source, count: u64, gate: bool) -> Result<Vec<(Option<DeskInstance>, PolySystem)>, Fail> {
    Ok(match src {
        Source::Desk(cfg) => instances(cfg, count, gate)?.into_iter().map(|i| (Some(i.clone()), i.system)).collect(),
        Source::System(_, s) => vec![(None, s.clone())],
        Source::Sponge => vec![(None, genpos::sponge_example())],
    })
}

fn one_or_many(mut v: Vec<Value>) -> Value {
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        Value::Array(v)
    }
}

fn macaulay(sys: &PolySystem) -> Option<u32> {
    complexity::macaulay_bound(&sys.degrees(), sys.nvars()).ok()
}

/// Observed solving degree for the small-scale families with a key field equation.
fn observed_solving_degree(inst: &DeskInstance) -> Option<u32> {
    let (q, r) = (inst.config.q as u32, inst.config.r);
    match (inst.config.family, inst.config.field_eq) {
        (DeskFamily::Mimc, FieldEq::Key) => Some(q + 2 * r - 1),
        (DeskFamily::Hash, FieldEq::Key) => Some(q + 2 * r - 3),
        (DeskFamily::TwoPlaintext, FieldEq::None) => Some(4 * r),
        (DeskFamily::Feistel, FieldEq::None) => Some(2 * r),
        _ => None,
    }
}

fn cmd_build(a: &InstanceArgs) -> Result<Output, Fail> {
    let src = Source::from_args(a)?;
    let (inst, sys) = systems_of(&src, 1, false)?.pop().unwrap();
    let mut result = json!({ "system": sys.to_json(), "degrees": sys.degrees() });
    if let Some(i) = &inst {
        result["key"] = json!(i.key);
        result["plaintexts"] = json!(i.plaintexts);
        result["ciphertexts"] = json!(i.ciphertexts);
        result["solution"] = json!(i.solution);
        result["spec_digest"] = json!(i.spec.digest());
    }
    let text = format!("{}\n", sys.render().join("\n"));
    Ok(Output { command: "build", config: src.config_json(), seed: src.seed(), budgets: json!({}), result, text, csv: None })
}

fn cmd_solve(m: &MultiArgs) -> Result<Output, Fail> {
    let src = Source::from_args(&m.inst)?;
    let budget = m.inst.pair_budget;
    let runs: Vec<(Option<DeskInstance>, PolySystem)> = systems_of(&src, m.count, m.gate)?;
    let results: Vec<Value> = runs
        .par_iter()
        .map(|(inst, sys)| -> Result<Value, Fail> {
            let gb = buchberger(&sys.ring, &sys.polys, budget)?;
            let qd = match gb.quotient_dimension() {
                QuotientDim::Finite(n) => json!(n),
                QuotientDim::Infinite => json!("infinite"),
            };
            let mut v = json!({
                "gb_size": gb.polys.len(),
                "gb_max_degree": gb.max_degree(),
                "quotient_dimension": qd,
                "inconsistent": gb.is_one(),
            });
            if let Some(i) = inst {
                v["seed"] = json!(i.config.seed);
                v["true_key"] = json!(i.key);
                if i.config.family.is_iterated() {
                    let base = build_instance(&DeskConfig { field_eq: FieldEq::None, downsize: Some(false), ..i.config.clone() })?;
                    let rec = recover_key(&base.system, &ShapeOptions::default())?;
                    v["recovered"] = json!(rec.keys);
                    v["contains_true_key"] = json!(rec.keys.contains(&(i.key[0] % i.config.q)));
                    v["univariate_degrees"] = json!(rec.univariate_degrees);
                    v["gcd_degree"] = json!(rec.gcd_degree);
                } else {
                    v["true_solution_in_variety"] = json!(gb.polys.iter().all(|p| p.evaluate(&i.solution) == 0));
                }
            }
            Ok(v)
        })
        .collect::<Result<_, _>>()?;
    let text = results.iter().map(|r| format!("{}\n", summary_line(r))).collect();
    Ok(Output { command: "solve", config: src.config_json(), seed: src.seed(), budgets: json!({ "pair_budget": budget, "count": m.count }), result: one_or_many(results), text, csv: None })
}

fn cmd_solvdeg(a: &DegArgs) -> Result<Output, Fail> {
    let src = Source::from_args(&a.multi.inst)?;
    let runs = systems_of(&src, a.multi.count, a.multi.gate)?;
    let results: Vec<Value> = runs
        .par_iter()
        .map(|(inst, sys)| -> Result<Value, Fail> {
            let mb = macaulay(sys);
            let d_max = a.d_max.unwrap_or(mb.unwrap_or(8) + 4);
            let sd = solving_degree(&sys.ring, &sys.polys, d_max)?;
            let mut v = json!({ "solving_degree": sd.degree, "gb_max_degree": sd.gb_max_degree, "macaulay_bound": mb, "d_max": d_max });
            if let Some(i) = inst {
                v["seed"] = json!(i.config.seed);
                v["observed_pattern"] = json!(observed_solving_degree(i));
            }
            Ok(v)
        })
        .collect::<Result<_, _>>()?;
    let text = results.iter().map(|r| format!("{}\n", r["solving_degree"])).collect();
    Ok(Output { command: "solvdeg", config: src.config_json(), seed: src.seed(), budgets: json!({ "d_max": a.d_max, "count": a.multi.count }), result: one_or_many(results), text, csv: None })
}

fn cmd_lastfall(a: &DegArgs) -> Result<Output, Fail> {
    let src = Source::from_args(&a.multi.inst)?;
    let runs = systems_of(&src, a.multi.count, a.multi.gate)?;
    let results: Vec<Value> = runs
        .par_iter()
        .map(|(inst, sys)| {
            let cap = a.d_max.unwrap_or_else(|| degfall::default_scan_cap(sys));
            let lf = degfall::last_fall_degree(&sys.ring, &sys.polys, cap);
            let mut v = json!({ "last_fall_degree": lf.last, "falls": lf.falls, "scanned_to": lf.scanned_to, "macaulay_bound": macaulay(sys) });
            if let Some(i) = inst {
                v["seed"] = json!(i.config.seed);
            }
            v
        })
        .collect();
    let text = results.iter().map(|r| format!("{}\n", r["last_fall_degree"])).collect();
    Ok(Output { command: "lastfall", config: src.config_json(), seed: src.seed(), budgets: json!({ "d_max": a.d_max, "count": a.multi.count }), result: one_or_many(results), text, csv: None })
}

fn cmd_generic(a: &GenericArgs) -> Result<Output, Fail> {
    let src = Source::from_args(&a.inst)?;
    let budget = a.inst.pair_budget;
    let family = match &src {
        Source::Desk(c) => Some(c.family),
        _ => None,
    };
    let method = match (a.method, family) {
        (Some(MethodArg::PurePowers), _) => Method::PurePowers,
        (Some(MethodArg::Substitution), _) => Method::SubstitutionProcedure,
        (Some(MethodArg::Spn), _) => Method::SpnStructure,
        (Some(MethodArg::Rank), _) => Method::RankCriterion,
        (None, Some(DeskFamily::GmimcCrf | DeskFamily::GmimcErf)) => Method::RankCriterion,
        (None, Some(DeskFamily::Hades)) => Method::SpnStructure,
        (None, _) => Method::PurePowers,
    };
    let report = match (&src, method) {
        (Source::Desk(cfg), Method::RankCriterion) => {
            let spec = cfg.spec();
            let variant = match (a.variant, cfg.family) {
                (Some(VariantArg::Erf), _) => RankVariant::Erf,
                (Some(VariantArg::Crf), _) => RankVariant::Crf,
                (Some(VariantArg::StrongCrf), _) => RankVariant::StrongCrf,
                (None, DeskFamily::GmimcErf) => RankVariant::Erf,
                (None, _) => RankVariant::Crf,
            };
            genpos::feistel_rank_criterion(&spec, variant)?
        }
        _ => {
            let (_, sys) = systems_of(&src, 1, false)?.pop().unwrap();
            genpos::is_generic_coordinates(&sys, method, budget)?
        }
    };
    let certified = report.verdict == Verdict::Generic;
    let result = json!({ "certified": certified, "verdict": report.verdict, "method": report.method, "witness": report.witness });
    let text = format!("{}\n", if certified { "certified" } else { "not certified" });
    Ok(Output { command: "generic-check", config: src.config_json(), seed: src.seed(), budgets: json!({ "pair_budget": budget }), result, text, csv: None })
}

fn cmd_estimate(a: &EstimateArgs) -> Result<Output, Fail> {
    let params: AttackParams = match (&a.params, a.attack) {
        (Some(p), _) => parse_json(&read_inline_or_file(p)?, "attack parameters")?,
        (None, Some(at)) => match at {
            AttackArg::MimcFieldEq => AttackParams::MimcFieldEq { log2_q: a.log2q, r: a.r },
            AttackArg::TwoPlaintext => AttackParams::TwoPlaintext { r: a.r },
            AttackArg::Feistel => AttackParams::Feistel { r: a.r },
            AttackArg::Hash => AttackParams::Hash { log2_q: a.log2q, r: a.r },
            AttackArg::Hades => AttackParams::Hades { n: a.n.unwrap_or(2), rf: a.rf, rp: a.rp, d: a.d },
            AttackArg::Gmimc => AttackParams::Gmimc { n: a.n.unwrap_or(3), r: a.r, d: a.d },
        },
        (None, None) => return Err(Fail::Precondition("--attack or --params is required".into())),
    };
    let gb = complexity::estimate_attack(&params)?;
    let est = complexity::estimate_established(&params)?;
    let mut result = json!({ "groebner": gb, "established": est });
    if matches!(params, AttackParams::Gmimc { .. }) {
        result["designers_crf"] = json!(complexity::gmimc_designer_bits(&params, GmimcVariant::Crf));
        result["designers_erf"] = json!(complexity::gmimc_designer_bits(&params, GmimcVariant::Erf));
    }
    let text = format!("groebner {:.1} bits\nestablished {:.1} bits\n", gb.kappa_bits, est.kappa_bits);
    Ok(Output { command: "estimate", config: serde_json::to_value(params).unwrap(), seed: 0, budgets: json!({}), result, text, csv: None })
}

fn cmd_tables(a: &TablesArgs) -> Result<Output, Fail> {
    let rows = complexity::table(&a.which)?;
    let csv = complexity::table_csv(&rows);
    let off: Vec<&complexity::TableRow> = rows.iter().filter(|r| !r.within()).collect();
    let result = json!({ "rows": rows, "outside_tolerance": off.len() });
    Ok(Output { command: "tables", config: json!({ "which": a.which }), seed: 0, budgets: json!({}), result, text: csv.clone(), csv: Some(csv) })
}

fn cmd_witness(a: &WitnessArgs) -> Result<Output, Fail> {
    let src = Source::from_args(&a.inst)?;
    let Source::Desk(cfg) = &src else {
        return Err(Fail::Precondition("witness constructions need a seeded instance".into()));
    };
    let mut cfg = cfg.clone();
    let (family, fe, down) = match a.construction {
        ConstructionArg::MimcFieldEq | ConstructionArg::MimcRemainder => (DeskFamily::Mimc, FieldEq::Key, false),
        ConstructionArg::Feistel => (DeskFamily::Feistel, FieldEq::None, false),
        ConstructionArg::Hash => (DeskFamily::Hash, FieldEq::None, false),
        ConstructionArg::Conjecture => (DeskFamily::Mimc, FieldEq::All, false),
    };
    if cfg.family != family {
        return Err(Fail::Precondition(format!("construction needs family {}", family.name())));
    }
    cfg.field_eq = fe;
    cfg.downsize = Some(down);
    let mut last_err = None;
    for s in cfg.seed..cfg.seed + a.tries.max(1) {
        let inst = build_instance(&DeskConfig { seed: s, ..cfg.clone() })?;
        let sys = &inst.system;
        let out = match a.construction {
            ConstructionArg::MimcFieldEq => degfall::witness_mimc_field_eq(sys).map(|r| json!(r)),
            ConstructionArg::MimcRemainder => degfall::witness_mimc_remainder(sys).map(|r| json!(r)),
            ConstructionArg::Feistel => degfall::witness_feistel(sys).map(|r| json!(r)),
            ConstructionArg::Hash => degfall::witness_hash(sys).map(|r| json!(r)),
            ConstructionArg::Conjecture => {
                let d_max = a.d_max.unwrap_or(3 * cfg.q as u32);
                degfall::conjecture_harness(sys, d_max).map(|r| json!(r))
            }
        };
        match out {
            Ok(mut v) => {
                v["seed"] = json!(s);
                let text = format!("{}\n", summary_line(&v));
                return Ok(Output { command: "witness", config: src.config_json(), seed: cfg.seed, budgets: json!({ "tries": a.tries, "d_max": a.d_max }), result: v, text, csv: None });
            }
            Err(DegfallError::Hypothesis(h)) => last_err = Some(Fail::Precondition(format!("seed {s}: {h}"))),
            Err(e) => return Err(e.into()),
        }
    }
    Err(last_err.unwrap())
}

fn summary_line(v: &Value) -> String {
    match v.as_object() {
        Some(m) => m
            .iter()
            .filter(|(_, x)| !x.is_object() && !x.is_array() || x.as_array().is_some_and(|a| a.len() <= 8))
            .map(|(k, x)| format!("{k}={x}"))
            .collect::<Vec<_>>()
            .join(" "),
        None => v.to_string(),
    }
}

fn run(cli: &Cli) -> Result<Output, Fail> {
    match &cli.cmd {
        Cmd::Build(a) => cmd_build(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Solvdeg(a) => cmd_solvdeg(a),
        Cmd::Lastfall(a) => cmd_lastfall(a),
        Cmd::GenericCheck(a) => cmd_generic(a),
        Cmd::Estimate(a) => cmd_estimate(a),
        Cmd::Tables(a) => cmd_tables(a),
        Cmd::Witness(a) => cmd_witness(a),
    }
}

fn emit(cli: &Cli, out: Output) -> Result<(), Fail> {
    let default_fmt = if out.csv.is_some() { Format::Csv } else { Format::Json };
    let fmt = cli.format.unwrap_or(default_fmt);
    let env = Envelope::new(out.command, out.config, out.seed, out.budgets, out.result);
    let (body, ext) = match fmt {
        Format::Json => (env.to_pretty() + "\n", "json"),
        Format::Text => (out.text, "txt"),
        Format::Csv => (out.csv.ok_or_else(|| Fail::Precondition("csv output is only available for tables".into()))?, "csv"),
    };
    let path = match (&cli.out, &cli.out_dir) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => Some(dir.join(format!("{}-{}.{}", env.command, &env.config_digest[..12], ext))),
        (None, None) => None,
    };
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Fail::Io(e.to_string()))?;
            }
            std::fs::write(&p, body).map_err(|e| Fail::Io(e.to_string()))?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let timeout = cli.timeout_secs;
    let cli = std::sync::Arc::new(cli);
    let worker = cli.clone();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(run(&worker));
    });
    let res = match timeout {
        Some(s) => rx.recv_timeout(Duration::from_secs(s)).unwrap_or_else(|_| Err(Fail::Budget(format!("wall-clock budget of {s}s exhausted")))),
        None => rx.recv().unwrap_or_else(|_| Err(Fail::Io("worker thread died".into()))),
    };
    match res.and_then(|out| emit(&cli, out)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

impl From<ComplexityError> for Fail {
    fn from(e: ComplexityError) -> Self {
        Fail::Precondition(e.to_string())
    }
}

impl From<SystemError> for Fail {
    fn from(e: SystemError) -> Self {
        Fail::Precondition(e.to_string())
    }
}

impl From<GbError> for Fail {
    fn from(e: GbError) -> Self {
        match e {
            GbError::PairBudget(_) | GbError::DegreeBudget(_) => Fail::Budget(e.to_string()),
            _ => Fail::Precondition(e.to_string()),
        }
    }
}

impl From<ShapeError> for Fail {
    fn from(e: ShapeError) -> Self {
        match e {
            ShapeError::Budget(_) | ShapeError::Cancelled => Fail::Budget(e.to_string()),
            _ => Fail::Precondition(e.to_string()),
        }
    }
}

impl From<GenposError> for Fail {
    fn from(e: GenposError) -> Self {
        match e {
            GenposError::Gb(g) => g.into(),
            _ => Fail::Precondition(e.to_string()),
        }
    }
}

impl From<DegfallError> for Fail {
    fn from(e: DegfallError) -> Self {
        match e {
            DegfallError::Exhausted(_) => Fail::Budget(e.to_string()),
            DegfallError::Gb(g) => g.into(),
            DegfallError::Shape(s) => s.into(),
            _ => Fail::Precondition(e.to_string()),
        }
    }
}
