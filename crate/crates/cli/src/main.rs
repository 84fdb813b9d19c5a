//! `expofield`: batch front end for the exponential-field toolkit.
//!
//! Every command prints canonical JSON. Exit codes: 0 on success, 1 on usage
//! or I/O errors, 2 on domain errors (the payload carries the certificate).

mod encode;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use expofield::amalg::{amalgamate2, complete_system, verify_independent_system, AmalgError, DEFAULT_MAX_N};
use expofield::efield::{check_presentation, hull, realize_system, solve, EFieldError, EFieldPresentation, SolveOptions};
use expofield::exactalg::{FieldElem, Rat, Symbol};
use expofield::exprlang::{eliminate_inequations, flatten, parse_element, parse_system};
use expofield::json::{self as codec, detect_schema, to_canonical_string, Schema, SchemaError};
use expofield::treeprops::{
    all_sigmas, tp2_witness, type_family, verify_finite_witness, z_stabilizer_witness, Candidate, TreeError, ZMode,
};
use expofield::variety::{additive_freeness, oracle_relation, reduce, Verdict};

#[derive(Parser)]
#[command(name = "expofield", version, about = "Exact computations with finitely presented exponential fields")]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(short = 'o', long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a system, eliminate inequations and flatten it.
    Normalize {
        #[arg(short = 'e', long, conflicts_with = "file")]
        expr: Option<String>,
        #[arg(short = 'f', long)]
        file: Option<PathBuf>,
        /// Coefficient symbols, comma separated.
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
    },
    /// Decide additive freeness of a variety.
    FreeCheck {
        #[arg(short = 'f', long)]
        file: PathBuf,
        /// Compare with the brute-force search over integer vectors.
        #[arg(long)]
        oracle: bool,
        #[arg(short = 'M', long, default_value_t = 6)]
        bound: u32,
    },
    /// Reduce a variety to an additively free one.
    Reduce {
        #[arg(short = 'f', long)]
        file: PathBuf,
    },
    /// Realize an exponential point on a variety, or a solution of a system.
    Solve {
        /// Variety JSON.
        #[arg(short = 'f', long, required_unless_present = "expr")]
        file: Option<PathBuf>,
        /// System text, solved over the field.
        #[arg(short = 'e', long, conflicts_with = "file")]
        expr: Option<String>,
        /// Base presentation JSON.
        #[arg(short = 'F', long)]
        field: Option<PathBuf>,
        /// Transcendentals of the default base field.
        #[arg(long, value_delimiter = ',')]
        params: Vec<String>,
        /// Refuse to adjoin new exponential values.
        #[arg(long)]
        no_extend: bool,
    },
    /// Check the invariants of a presentation.
    EfieldCheck {
        #[arg(short = 'f', long)]
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Graph hull of a tuple of elements.
    Hull {
        #[arg(short = 'f', long)]
        file: PathBuf,
        #[arg(short = 'g', long = "gen")]
        gens: Vec<String>,
    },
    /// Independence of A from B over C.
    Indep {
        #[arg(short = 'f', long)]
        file: PathBuf,
        #[arg(short = 'a', long = "a")]
        a: Vec<String>,
        #[arg(short = 'b', long = "b")]
        b: Vec<String>,
        #[arg(short = 'c', long = "c")]
        c: Vec<String>,
    },
    /// Amalgamate two extensions of a base.
    Amalg2 {
        #[arg(short = 'f', long)]
        file: PathBuf,
    },
    /// Verify an independent system and complete it when the top node is missing.
    AmalgN {
        #[arg(short = 'f', long)]
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_N)]
        max_n: usize,
    },
    /// Build and check the TP2 array.
    Tp2 {
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'J')]
        j: usize,
        /// Branch, one-based, comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "all")]
        sigma: Vec<usize>,
        /// Check every branch.
        #[arg(long)]
        all: bool,
    },
    /// Check an SOP1 candidate tree.
    Sop1Verify {
        #[arg(short = 'f', long)]
        file: PathBuf,
        /// Branches as binary strings; all branches when omitted.
        #[arg(long, value_delimiter = ',')]
        branches: Vec<String>,
    },
    /// Witness that a multiplier does not stabilize the kernel of E.
    Zwitness {
        #[arg(short = 'f', long)]
        file: Option<PathBuf>,
        #[arg(short = 'c')]
        c: String,
        #[arg(long, value_enum)]
        mode: ZModeArg,
        #[arg(short = 'd')]
        d: Option<String>,
    },
    /// Presentations adjoining x with prescribed values of E(x^n).
    TypeFamily {
        #[arg(short = 'f', long)]
        file: Option<PathBuf>,
        /// Assignment `n:value;n:value`, repeatable.
        #[arg(short = 'a', long = "assign", required = true)]
        assignments: Vec<String>,
    },
    /// Deserialize, re-serialize and check a JSON artifact.
    Roundtrip { path: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum ZModeArg {
    Rational,
    Transcendental,
}

enum Failure {
    Usage(String),
    Domain { kind: &'static str, message: String, certificate: Value },
}

type Outcome = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn domain(kind: &'static str, message: impl ToString, certificate: Value) -> Failure {
    Failure::Domain { kind, message: message.to_string(), certificate }
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        domain("schema", &e, json!({"pointer": e.pointer}))
    }
}

impl From<EFieldError> for Failure {
    fn from(e: EFieldError) -> Self {
        let cert = match &e {
            EFieldError::NotAdditivelyFree(c) => codec::freeness_to_json(c),
            EFieldError::RootRequired { arg, value, order } => {
                json!({"arg": codec::elem_json(arg), "value": codec::elem_json(value), "order": order.to_string()})
            }
            EFieldError::LinearDependence(m) => json!({"relation": m.iter().map(|x| x.to_string()).collect::<Vec<_>>()}),
            _ => Value::Null,
        };
        let kind = match &e {
            EFieldError::NotAdditivelyFree(_) => "not_additively_free",
            EFieldError::Variety(_) | EFieldError::Normalize(_) => "unsupported_shape",
            _ => "efield",
        };
        domain(kind, &e, cert)
    }
}

impl From<AmalgError> for Failure {
    fn from(e: AmalgError) -> Self {
        match &e {
            AmalgError::WellDefFailure { vector, product } => domain(
                "well_def_failure",
                &e,
                json!({"vector": vector.iter().map(|x| x.to_string()).collect::<Vec<_>>(), "product": codec::elem_json(product)}),
            ),
            AmalgError::IllFormedExtension(_) => domain("ill_formed_extension", &e, Value::Null),
            AmalgError::InvalidSystem(_) => domain("invalid_system", &e, Value::Null),
        }
    }
}

impl From<TreeError> for Failure {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::EField(inner) => inner.into(),
            other => domain("treeprops", &other, Value::Null),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| domain("schema", format!("invalid JSON: {e}"), json!({"pointer": "/"})))
}

fn seed_floor() -> Result<u64, Failure> {
    match std::env::var("EXPOFIELD_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| usage(format!("EXPOFIELD_SEED must be a nonnegative integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

fn symbols_arg(names: &[String]) -> Result<Vec<Symbol>, Failure> {
    names
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| if Symbol::is_valid_ident(s) { Ok(Symbol::new(s)) } else { Err(usage(format!("`{s}` is not an identifier"))) })
        .collect()
}

fn elems_arg(texts: &[String], order: u32) -> Result<Vec<FieldElem>, Failure> {
    texts
        .iter()
        .map(|t| parse_element(t, order).map_err(|e| usage(format!("cannot parse `{t}`: {e}"))))
        .collect()
}

fn presentation_file(path: &Option<PathBuf>, default: EFieldPresentation) -> Result<EFieldPresentation, Failure> {
    match path {
        Some(p) => Ok(codec::presentation_from_json(&read_json(p)?)?),
        None => Ok(default),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Normalize { expr, file, params } => {
            let text = match (expr, file) {
                (Some(e), _) => e,
                (None, Some(f)) => read(&f)?,
                (None, None) => return Err(usage("give a system with -e or -f")),
            };
            let system = parse_system(&text).map_err(|e| domain("syntax", &e, json!({"line": e.line, "col": e.col})))?;
            let params = symbols_arg(&params)?;
            let fs = flatten(&eliminate_inequations(&system), &params).map_err(|e| domain("normalize", &e, Value::Null))?;
            Ok(codec::flat_to_json(&fs))
        }
        Command::FreeCheck { file, oracle, bound } => {
            let v = codec::variety_from_json(&read_json(&file)?)?;
            let cert = additive_freeness(&v);
            let mut out = codec::freeness_to_json(&cert);
            out["certificate_verified"] = json!(cert.verify(&v));
            if oracle {
                let found = oracle_relation(&v, bound);
                out["oracle"] = json!({
                    "bound": bound,
                    "relation": found.as_ref().map(|m| m.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
                    "agrees": found.is_some() == (cert.verdict == Verdict::NotFree),
                });
            }
            if cert.verdict == Verdict::NotFree {
                return Err(domain("not_additively_free", "the variety is not additively free", out));
            }
            Ok(out)
        }
        Command::Reduce { file } => {
            let v = codec::variety_from_json(&read_json(&file)?)?;
            Ok(encode::reduction(&reduce(&v)))
        }
        Command::Solve { file, expr, field, params, no_extend } => {
            let opts = SolveOptions { auto_extend: !no_extend, counter_floor: seed_floor()? };
            if let Some(text) = expr {
                let system = parse_system(&text).map_err(|e| domain("syntax", &e, json!({"line": e.line, "col": e.col})))?;
                let f = presentation_file(&field, EFieldPresentation::new("F", 1, symbols_arg(&params)?))?;
                let r = realize_system(&f, &system, opts)?;
                let mut out = encode::solve_outcome(&r.outcome);
                out["variety"] = codec::variety_to_json(&r.variety);
                out["solution"] = encode::env(&r.env);
                return Ok(out);
            }
            let v = codec::variety_from_json(&read_json(file.as_deref().expect("clap requires a source"))?)?;
            let f = presentation_file(&field, EFieldPresentation::new("F", 1, v.base_params.clone()))?;
            Ok(encode::solve_outcome(&solve(&f, &v, opts)?))
        }
        Command::EfieldCheck { file, samples } => {
            let f = codec::presentation_from_json(&read_json(&file)?)?;
            let rep = check_presentation(&f, samples, 0);
            let out = json!({
                "violations": rep.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "samples": rep.samples,
                "clean": rep.is_clean(),
            });
            if rep.is_clean() {
                Ok(out)
            } else {
                Err(domain("presentation_violations", "the presentation violates its invariants", out))
            }
        }
        Command::Hull { file, gens } => {
            let f = codec::presentation_from_json(&read_json(&file)?)?;
            let h = hull(&f, &elems_arg(&gens, f.cyclotomic_order)?);
            Ok(json!({
                "generators": h.generators.iter().map(codec::elem_json).collect::<Vec<_>>(),
                "closed_under_graph": h.closed_under_graph,
            }))
        }
        Command::Indep { file, a, b, c } => {
            let f = codec::presentation_from_json(&read_json(&file)?)?;
            let m = f.cyclotomic_order;
            let d = expofield::amalg::indep_detail(&f, &elems_arg(&a, m)?, &elems_arg(&b, m)?, &elems_arg(&c, m)?);
            Ok(encode::indep(&d))
        }
        Command::Amalg2 { file } => {
            let (base, left, right) = codec::amalg2_input_from_json(&read_json(&file)?)?;
            Ok(encode::amalgam(&amalgamate2(&base, &left, &right)?))
        }
        Command::AmalgN { file, max_n } => {
            let sys = codec::system_from_json(&read_json(&file)?)?;
            let report = verify_independent_system(&sys, max_n);
            if !report.passed() {
                return Err(domain("not_independent", "the input system is not independent", encode::system_report(&report)));
            }
            if sys.is_complete() {
                return Ok(json!({"report": encode::system_report(&report), "system": codec::system_to_json(&sys)}));
            }
            let done = complete_system(&sys, max_n)?;
            let after = verify_independent_system(&done.system, max_n);
            Ok(json!({
                "input_report": encode::system_report(&report),
                "report": encode::system_report(&after),
                "check": encode::well_def(&done.check),
                "system": codec::system_to_json(&done.system),
            }))
        }
        Command::Tp2 { n, j, sigma, all } => {
            let first = if all { vec![1; n] } else { sigma.clone() };
            let (w, rep) = tp2_witness(n, j, &first)?;
            let rep = if all { verify_finite_witness(&Candidate::Tp2(w.clone()), &all_sigmas(n, j))? } else { rep };
            let out = encode::tp2(&w, &rep, if all { None } else { Some(&sigma) });
            if rep.passed() {
                Ok(out)
            } else {
                Err(domain("witness_failed", "the TP2 witness failed a condition", out))
            }
        }
        Command::Sop1Verify { file, branches } => {
            let cand = codec::sop1_from_json(&read_json(&file)?)?;
            let list: Vec<Vec<usize>> = if branches.is_empty() {
                (0..1usize << cand.depth).map(|bits| (0..cand.depth).rev().map(|k| bits >> k & 1).collect()).collect()
            } else {
                branches
                    .iter()
                    .map(|s| {
                        s.chars()
                            .map(|ch| ch.to_digit(2).map(|d| d as usize).ok_or_else(|| usage(format!("`{s}` is not binary"))))
                            .collect()
                    })
                    .collect::<Result<_, _>>()?
            };
            let rep = verify_finite_witness(&Candidate::Sop1(cand), &list)?;
            Ok(json!({"witness_kind": "sop1", "report": encode::verify_report(&rep), "passed": rep.passed()}))
        }
        Command::Zwitness { file, c, mode, d } => {
            let (f, c, mode) = match mode {
                ZModeArg::Rational => {
                    let q: Rat = parse_element(&c, 1)
                        .ok()
                        .and_then(|e| e.as_rational())
                        .ok_or_else(|| usage(format!("`{c}` is not a rational number")))?;
                    let m: u32 = q.denom().try_into().map_err(|_| usage("denominator too large"))?;
                    let f = presentation_file(&file, EFieldPresentation::new("F", m, vec![]))?;
                    (f, FieldElem::from_rat(q), ZMode::Rational)
                }
                ZModeArg::Transcendental => {
                    let default = EFieldPresentation::new("F", 1, symbols_arg(&[c.clone()]).unwrap_or_default());
                    let f = presentation_file(&file, default)?;
                    let ce = parse_element(&c, f.cyclotomic_order).map_err(|e| usage(e.to_string()))?;
                    let d = d.ok_or_else(|| usage("transcendental mode needs -d"))?;
                    let de = parse_element(&d, f.cyclotomic_order).map_err(|e| usage(e.to_string()))?;
                    (f, ce, ZMode::Transcendental(de))
                }
            };
            let (g, w) = z_stabilizer_witness(&f, &c, &mode)?;
            Ok(json!({
                "witness_kind": "z_stabilizer",
                "c": codec::elem_json(&w.c),
                "a": codec::elem_json(&w.a),
                "ca": codec::elem_json(&w.ca),
                "e_a": "1",
                "e_ca": codec::elem_json(&w.e_ca),
                "verified": w.verify(&g),
                "extension": codec::presentation_to_json(&g),
            }))
        }
        Command::TypeFamily { file, assignments } => {
            let f = presentation_file(&file, EFieldPresentation::new("F", 1, vec![]))?;
            let parsed = assignments
                .iter()
                .map(|a| parse_assignment(a, f.cyclotomic_order))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(encode::type_family(&type_family(&f, &parsed)?))
        }
        Command::Roundtrip { path } => roundtrip(&path),
    }
}

fn parse_assignment(text: &str, order: u32) -> Result<BTreeMap<u32, FieldElem>, Failure> {
    text.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (n, v) = p.split_once(':').ok_or_else(|| usage(format!("`{p}` is not of the form n:value")))?;
            let n: u32 = n.trim().parse().map_err(|_| usage(format!("`{n}` is not an exponent")))?;
            let v = parse_element(v.trim(), order).map_err(|e| usage(e.to_string()))?;
            Ok((n, v))
        })
        .collect()
}

fn roundtrip(path: &Path) -> Outcome {
    let text = read(path)?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| domain("schema", format!("invalid JSON: {e}"), json!({"pointer": "/"})))?;
    let schema = detect_schema(&value)?;
    let (reencoded, checks) = match schema {
        Schema::Presentation => {
            let f = codec::presentation_from_json(&value)?;
            let rep = check_presentation(&f, 20, 0);
            let checks = json!({
                "violations": rep.violations.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "clean": rep.is_clean(),
            });
            (codec::presentation_to_json(&f), checks)
        }
        Schema::Variety => {
            let v = codec::variety_from_json(&value)?;
            (codec::variety_to_json(&v), json!({"freeness": codec::freeness_to_json(&additive_freeness(&v))}))
        }
        Schema::Flat => (codec::flat_to_json(&codec::flat_from_json(&value)?), Value::Null),
        Schema::System => {
            let s = codec::system_from_json(&value)?;
            let rep = verify_independent_system(&s, DEFAULT_MAX_N);
            (codec::system_to_json(&s), encode::system_report(&rep))
        }
        Schema::Amalgam2Input => {
            let (b, l, r) = codec::amalg2_input_from_json(&value)?;
            (codec::amalg2_input_to_json(&b, &l, &r), Value::Null)
        }
        Schema::Sop1 => {
            let c = codec::sop1_from_json(&value)?;
            let valid = c.validate().map(|_| Value::Null).unwrap_or_else(|e| json!(e.to_string()));
            (codec::sop1_to_json(&c), json!({"shape_error": valid}))
        }
        Schema::Certificate => (value.clone(), Value::Null),
    };
    let canonical = to_canonical_string(&reencoded);
    Ok(json!({
        "schema": schema.name(),
        "canonical": canonical == to_canonical_string(&value),
        "identical_bytes": canonical == text,
        "checks": checks,
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with success; anything else is a usage error.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (code, body) = match run(cli.command) {
        Ok(v) => (0, v),
        Err(Failure::Usage(msg)) => {
            eprintln!("expofield: {msg}");
            return ExitCode::from(1);
        }
        Err(Failure::Domain { kind, message, certificate }) => {
            (2, json!({"error": kind, "message": message, "certificate": certificate}))
        }
    };
    let text = to_canonical_string(&body);
    match &cli.output {
        Some(p) => {
            if let Err(e) = fs::write(p, text) {
                eprintln!("expofield: cannot write {}: {e}", p.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}
