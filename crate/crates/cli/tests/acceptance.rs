//! End-to-end acceptance checks. Each check prints one PASS or FAIL line;
//! the process exits non-zero if any check fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;

use expofield::amalg::{
    acf_indep, amalgamate2, complete_system, indep, verify_independent_system, AmalgError, SymbolMap, DEFAULT_MAX_N,
};
use expofield::efield::{
    e_eval, eval_system, graph_conflict, minimal_ea_family, realize_system, EEvalResult,
    EFieldPresentation, SolveOptions,
};
use expofield::exactalg::linalg::linear_relations;
use expofield::exactalg::{FieldElem, Rat, Symbol};
use expofield::gen;
use expofield::json as codec;
use expofield::treeprops::{
    all_sigmas, proper_fractions, tp2_witness, type_family, verify_finite_witness, z_stabilizer_witness, Candidate,
    ZMode,
};
use expofield::variety::{additive_freeness, oracle_relation, Verdict};

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { ok: true, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { ok: false, detail: detail.into() }
}

fn verdict(ok: bool, good: String, bad: String) -> Outcome {
    if ok {
        pass(good)
    } else {
        fail(bad)
    }
}

fn map_elem(e: &FieldElem, m: &SymbolMap) -> FieldElem {
    e.rename(&|s| m.get(s).cloned().unwrap_or_else(|| s.clone()))
}

fn span_dim(elems: &[FieldElem]) -> usize {
    elems.len() - linear_relations(elems).len()
}

/// `E(a + b) = E(a)·E(b)` on `pairs` random elements of the argument span.
fn homomorphism_holds(rng: &mut rand_chacha::ChaCha8Rng, f: &EFieldPresentation, pairs: usize) -> bool {
    (0..pairs).all(|_| {
        let a = gen::span_element(rng, f);
        let b = gen::span_element(rng, f);
        match (e_eval(f, &a.add(&b)), e_eval(f, &a), e_eval(f, &b)) {
            (EEvalResult::Value(s), EEvalResult::Value(x), EEvalResult::Value(y)) => s == x.mul(&y),
            _ => false,
        }
    })
}

fn freeness_matches_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = gen::rng(0xF4EE);
    let (mut free, mut not_free, mut bad) = (0, 0, Vec::new());
    for i in 0..500 {
        let v = gen::variety(&mut rng);
        let cert = additive_freeness(&v);
        let oracle = oracle_relation(&v, 6);
        let agrees = match cert.verdict {
            Verdict::Free => {
                free += 1;
                oracle.is_none()
            }
            Verdict::NotFree => {
                not_free += 1;
                oracle.is_some() && cert.verify(&v)
            }
        };
        if !agrees {
            bad.push(i);
        }
    }
    let took = start.elapsed();
    verdict(
        bad.is_empty() && took < Duration::from_secs(60),
        format!("500 varieties ({free} free, {not_free} not free) agree with the oracle in {took:.1?}"),
        format!("disagreements at {bad:?}, elapsed {took:.1?}"),
    )
}

fn systems_realize() -> Outcome {
    let mut rng = gen::rng(0x5E75);
    let mut bad = Vec::new();
    for _ in 0..200 {
        let (f, s) = gen::system(&mut rng);
        let ok = match realize_system(&f, &s, SolveOptions::default()) {
            Ok(r) => {
                let g = &r.outcome.presentation;
                let conservative = f.egraph.iter().all(|(a, v)| e_eval(g, a) == EEvalResult::Value(v.clone()))
                    && f.transcendentals.iter().all(|t| g.transcendentals.contains(t));
                conservative && eval_system(g, &s, &r.env).unwrap_or(false) && homomorphism_holds(&mut rng, g, 5)
            }
            Err(_) => false,
        };
        if !ok {
            bad.push(s.to_string());
        }
    }
    verdict(
        bad.is_empty(),
        "200 systems realized, each satisfied and conservative over the base".into(),
        format!("{} systems failed, first: {}", bad.len(), bad.first().map(String::as_str).unwrap_or("")),
    )
}

fn constructors_are_homomorphisms() -> Outcome {
    let mut rng = gen::rng(0x4030);
    let mut first_solve_failure = None;
    let mut failures: BTreeMap<&str, usize> = BTreeMap::new();
    let mut note = |name: &'static str, ok: bool| {
        if !ok {
            *failures.entry(name).or_default() += 1;
        }
    };
    for _ in 0..100 {
        let order = *[1, 3, 4].choose(&mut rng).expect("nonempty");
        let f = gen::presentation(&mut rng, "F", "s", order);
        let fresh = [Symbol::new("w")];
        let mut g = f.clone();
        g.transcendentals.push(fresh[0].clone());
        let g = gen::extend_randomly(&mut rng, &g, &fresh, 2);
        note("extend_graph", homomorphism_holds(&mut rng, &g, 20));

        let (base, s) = gen::system(&mut rng);
        let solved = match realize_system(&base, &s, SolveOptions::default()) {
            Ok(r) => homomorphism_holds(&mut rng, &r.outcome.presentation, 20),
            Err(_) => false,
        };
        if !solved {
            first_solve_failure.get_or_insert_with(|| s.to_string());
        }
        note("solve", solved);

        let (base, left, right) = gen::amalgamation_triple(&mut rng);
        match amalgamate2(&base, &left, &right) {
            Ok(a) => note("amalgamate2", homomorphism_holds(&mut rng, &a.g, 20)),
            Err(_) => note("amalgamate2", false),
        }

        let sys = gen::indep_system(&mut rng, 3);
        match complete_system(&sys, DEFAULT_MAX_N) {
            Ok(c) => note("complete_system", homomorphism_holds(&mut rng, &c.system.nodes[&c.system.full()], 20)),
            Err(_) => note("complete_system", false),
        }
    }
    verdict(
        failures.is_empty(),
        "4 constructors x 100 runs x 20 pairs respect E(a+b) = E(a)E(b)".into(),
        format!("failing runs per constructor: {failures:?}, first failing system: {first_solve_failure:?}"),
    )
}

fn amalgam_triple_ok(rng: &mut rand_chacha::ChaCha8Rng) -> Result<(), String> {
    let (base, left, right) = gen::amalgamation_triple(rng);
    let a = amalgamate2(&base, &left, &right).map_err(|e| e.to_string())?;
    if !a.check.passed() {
        return Err("well-definedness check failed".into());
    }
    for s in &base.transcendentals {
        if a.g1.get(&left.inclusion[s]) != a.g2.get(&right.inclusion[s]) {
            return Err(format!("square does not commute at {s}"));
        }
    }
    let image = |m: &SymbolMap| m.values().map(|s| FieldElem::var(s.clone())).collect::<Vec<_>>();
    let base_elems: Vec<FieldElem> = base.transcendentals.iter().map(|s| FieldElem::var(s.clone())).collect();
    if !acf_indep(&image(&a.g1), &image(&a.g2), &base_elems, &a.g.transcendentals) {
        return Err("images are not algebraically independent over the base".into());
    }
    for (ext, m) in [(&left, &a.g1), (&right, &a.g2)] {
        for (x, v) in &ext.amb.egraph {
            if e_eval(&a.g, &map_elem(x, m)) != EEvalResult::Value(map_elem(v, m)) {
                return Err(format!("pair E({x}) = {v} of {} is lost", ext.amb.name));
            }
        }
        let back: SymbolMap = m.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
        for (x, v) in &a.g.egraph {
            let inside = |e: &FieldElem| e.variables().iter().all(|s| back.contains_key(s));
            if inside(x) && inside(v) && e_eval(&ext.amb, &map_elem(x, &back)) != EEvalResult::Value(map_elem(v, &back)) {
                return Err(format!("E({x}) = {v} does not restrict to {}", ext.amb.name));
            }
        }
    }
    let args = |ext: &expofield::amalg::EmbeddedPresentation, m: &SymbolMap| {
        ext.amb.args().iter().map(|x| map_elem(x, m)).collect::<Vec<_>>()
    };
    let (s1, s2) = (args(&left, &a.g1), args(&right, &a.g2));
    let both: Vec<FieldElem> = s1.iter().chain(&s2).cloned().collect();
    let common = span_dim(&s1) + span_dim(&s2) - span_dim(&both);
    if common != span_dim(&base.args()) {
        return Err(format!("shared argument span has dimension {common}, base has {}", span_dim(&base.args())));
    }
    Ok(())
}

fn amalgams_are_free() -> Outcome {
    let mut rng = gen::rng(0xA3A1);
    let errors: Vec<String> = (0..100).filter_map(|_| amalgam_triple_ok(&mut rng).err()).collect();
    verdict(
        errors.is_empty(),
        "100 triples: squares commute, images independent, restrictions exact, shared span is the base".into(),
        format!("{} failures, first: {}", errors.len(), errors.first().cloned().unwrap_or_default()),
    )
}

fn systems_complete() -> Outcome {
    let mut rng = gen::rng(0xC0C0);
    let mut errors = Vec::new();
    for n in [3, 4] {
        for k in 0..50 {
            let sys = gen::indep_system(&mut rng, n);
            let report = verify_independent_system(&sys, DEFAULT_MAX_N);
            if !report.passed() {
                errors.push(format!("n={n} #{k}: generated input rejected"));
                continue;
            }
            match complete_system(&sys, DEFAULT_MAX_N) {
                Ok(c) => {
                    let restricted = sys.nodes.iter().all(|(a, f)| c.system.nodes.get(a) == Some(f));
                    if !c.check.passed() || !restricted || !verify_independent_system(&c.system, DEFAULT_MAX_N).passed() {
                        errors.push(format!("n={n} #{k}: completion not independent"));
                    }
                }
                Err(e) => errors.push(format!("n={n} #{k}: {e}")),
            }
        }
    }
    let mut caught = 0;
    for k in 0..10 {
        let n = 3 + k % 2;
        let sys = gen::adversarial_system(&mut rng, n, k);
        let report = verify_independent_system(&sys, DEFAULT_MAX_N);
        let rejected = !report.failures.is_empty()
            || matches!(complete_system(&sys, DEFAULT_MAX_N), Err(AmalgError::WellDefFailure { .. }));
        if rejected {
            caught += 1;
        } else {
            errors.push(format!("adversarial #{k} accepted"));
        }
    }
    verdict(
        errors.is_empty(),
        format!("100 systems completed independently, {caught}/10 adversarial inputs rejected with a certificate"),
        format!("{} failures, first: {}", errors.len(), errors.first().cloned().unwrap_or_default()),
    )
}

fn random_set(rng: &mut rand_chacha::ChaCha8Rng, syms: &[Symbol], max: usize) -> Vec<FieldElem> {
    (0..rng.gen_range(0..=max)).map(|_| gen::poly(rng, syms, 2, 2, 2)).collect()
}

fn independence_axioms() -> Outcome {
    let mut rng = gen::rng(0x1DE9);
    let (mut symmetry, mut monotone, mut existence) = (0, 0, 0);
    for _ in 0..300 {
        let f = gen::presentation(&mut rng, "F", "s", 1);
        let mut g = f.clone();
        let extra: Vec<Symbol> = (1..=2).map(|i| Symbol::indexed("w", i)).collect();
        g.transcendentals.extend(extra.iter().cloned());
        let g = gen::extend_randomly(&mut rng, &g, &extra, 1);
        let syms = g.transcendentals.clone();
        let (a, b, c) = (random_set(&mut rng, &syms, 2), random_set(&mut rng, &syms, 2), random_set(&mut rng, &syms, 2));
        let ab = indep(&g, &a, &b, &c);
        if ab != indep(&g, &b, &a, &c) {
            symmetry += 1;
        }
        let a2: Vec<FieldElem> = a.iter().cloned().chain(random_set(&mut rng, &syms, 1)).collect();
        let b2: Vec<FieldElem> = b.iter().cloned().chain(random_set(&mut rng, &syms, 1)).collect();
        if indep(&g, &a2, &b2, &c) && !ab {
            monotone += 1;
        }
        if !indep(&g, &a, &c, &c) {
            existence += 1;
        }
    }
    verdict(
        symmetry + monotone + existence == 0,
        "300 triples satisfy symmetry, monotonicity and A indep C over C".into(),
        format!("violations: symmetry {symmetry}, monotonicity {monotone}, existence {existence}"),
    )
}

fn tp2_witnesses() -> Outcome {
    let start = Instant::now();
    let mut errors = Vec::new();
    let mut branches = 0;
    for n in 1..=4 {
        for j in 1..=4 {
            let sigmas = all_sigmas(n, j);
            branches += sigmas.len();
            let result = tp2_witness(n, j, &sigmas[0]).and_then(|(w, _)| {
                let independent = w.arguments_independent();
                verify_finite_witness(&Candidate::Tp2(w), &sigmas).map(|r| (independent, r))
            });
            match result {
                Ok((true, r)) if r.passed() => {}
                Ok((independent, r)) => errors.push(format!(
                    "n={n} J={j}: independent={independent} i={} ii={} iii={}",
                    r.condition_i.status, r.condition_ii.status, r.condition_iii.status
                )),
                Err(e) => errors.push(format!("n={n} J={j}: {e}")),
            }
        }
    }
    let took = start.elapsed();
    verdict(
        errors.is_empty() && took < Duration::from_secs(120),
        format!("n, J <= 4: {branches} branches realized, conditions hold, in {took:.1?}"),
        format!("{} failing shapes ({:?}), elapsed {took:.1?}", errors.len(), errors.first()),
    )
}

fn stabilizer_witnesses() -> Outcome {
    let mut errors = Vec::new();
    let fractions = proper_fractions(12, 12);
    for q in &fractions {
        let m: u32 = q.denom().try_into().expect("small denominator");
        let f = EFieldPresentation::new("F", m, vec![]);
        let c = FieldElem::from_rat(q.clone());
        match z_stabilizer_witness(&f, &c, &ZMode::Rational) {
            Ok((g, w)) if w.verify(&g) => {}
            Ok(_) => errors.push(format!("c={q}: witness does not verify")),
            Err(e) => errors.push(format!("c={q}: {e}")),
        }
    }
    let mut rng = gen::rng(0x2D2D);
    let t = Symbol::new("t");
    let f = EFieldPresentation::new("F", 1, vec![t.clone()]);
    for _ in 0..20 {
        let d = loop {
            let d = if rng.gen_bool(0.5) {
                FieldElem::from_rat(Rat::new(rng.gen_range(-9..=9).into(), rng.gen_range(1..=5).into()))
            } else {
                gen::poly(&mut rng, &[t.clone()], 3, 3, 4)
            };
            if !d.is_zero() && !d.is_one() {
                break d;
            }
        };
        match z_stabilizer_witness(&f, &FieldElem::var(t.clone()), &ZMode::Transcendental(d.clone())) {
            Ok((g, w)) if w.verify(&g) => {}
            Ok(_) => errors.push(format!("d={d}: witness does not verify")),
            Err(e) => errors.push(format!("d={d}: {e}")),
        }
    }
    verdict(
        errors.is_empty(),
        format!("{} rational multipliers and 20 transcendental targets witnessed", fractions.len()),
        format!("{} failures, first: {}", errors.len(), errors.first().cloned().unwrap_or_default()),
    )
}

fn prefixes(len: usize) -> Vec<Vec<Rat>> {
    (0..1u32 << len)
        .map(|bits| (0..len).map(|i| Rat::from_integer((1 + (bits >> i & 1)).into())).collect())
        .collect()
}

fn many_types() -> Outcome {
    let mut errors = Vec::new();
    let family: Vec<EFieldPresentation> = prefixes(8).iter().map(|p| minimal_ea_family(p).expect("nonzero prefix")).collect();
    let mut rng = gen::rng(0x7E7E);
    for _ in 0..1000 {
        let l = rng.gen_range(0..family.len());
        let r = loop {
            let r = rng.gen_range(0..family.len());
            if r != l {
                break r;
            }
        };
        match graph_conflict(&family[l], &family[r]) {
            Some(c) if c.verify(&family[l], &family[r]) => {}
            _ => errors.push(format!("prefixes {l} and {r} not separated")),
        }
    }
    let base = EFieldPresentation::new("F", 1, vec![]);
    let assignments: Vec<BTreeMap<u32, FieldElem>> = prefixes(8)
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, q)| (i as u32 + 1, FieldElem::from_rat(q.clone()))).collect())
        .collect();
    match type_family(&base, &assignments) {
        Ok(t) => {
            let total = t.certificates.len();
            if total != 256 * 255 / 2 || !t.compatible.is_empty() {
                errors.push(format!("{total} certificates, {} compatible pairs", t.compatible.len()));
            }
            for _ in 0..1000 {
                let d = &t.certificates[rng.gen_range(0..total)];
                if !d.verify(&t) {
                    errors.push(format!("certificate for {} and {} fails", d.left, d.right));
                }
            }
        }
        Err(e) => errors.push(e.to_string()),
    }
    verdict(
        errors.is_empty(),
        "256 prefixes pairwise separated (1000 spot checks), type family certificates verify".into(),
        format!("{} failures, first: {}", errors.len(), errors.first().cloned().unwrap_or_default()),
    )
}

fn write_corpus(dir: &Path) -> Vec<Vec<String>> {
    let mut rng = gen::rng(0xD0D0);
    let write = |name: &str, v: serde_json::Value| {
        let p = dir.join(name);
        std::fs::write(&p, codec::to_canonical_string(&v)).expect("write fixture");
        p.to_string_lossy().into_owned()
    };
    let variety = write("variety.json", codec::variety_to_json(&gen::variety(&mut rng)));
    let field = write("field.json", codec::presentation_to_json(&gen::presentation(&mut rng, "F", "s", 3)));
    let (base, left, right) = gen::amalgamation_triple(&mut rng);
    let triple = write("triple.json", codec::amalg2_input_to_json(&base, &left, &right));
    let system = write("system.json", codec::system_to_json(&gen::indep_system(&mut rng, 3)));
    let (_, s) = gen::system(&mut rng);
    let args = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        args(&["normalize", "-e", "E(E(x)) = x & E(x) != 1"]),
        args(&["free-check", "-f", &variety, "--oracle"]),
        args(&["reduce", "-f", &variety]),
        args(&["solve", "-e", &s.to_string(), "--params", "t"]),
        args(&["efield-check", "-f", &field]),
        args(&["hull", "-f", &field, "-g", "s1"]),
        args(&["indep", "-f", &field, "-a", "s1", "-b", "s2", "-c", "1"]),
        args(&["amalg2", "-f", &triple]),
        args(&["amalg-n", "-f", &system]),
        args(&["tp2", "-n", "2", "-J", "3", "--all"]),
        args(&["zwitness", "-c", "2/5", "--mode", "rational"]),
        args(&["zwitness", "-c", "t", "--mode", "transcendental", "-d", "t^2 + 1"]),
        args(&["type-family", "-a", "1:2;2:3", "-a", "1:2;2:5", "-a", "3:7"]),
        args(&["roundtrip", &triple]),
    ]
}

fn cli_is_deterministic() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let corpus = write_corpus(dir.path());
    let run = |args: &[String]| {
        let out = Command::new(env!("CARGO_BIN_EXE_expofield"))
            .args(args)
            .env("EXPOFIELD_SEED", "0")
            .output()
            .expect("run cli");
        (out.status.code(), out.stdout, out.stderr)
    };
    let mut diverged = Vec::new();
    let mut crashed = Vec::new();
    for args in &corpus {
        let first = run(args);
        if first != run(args) {
            diverged.push(args[0].clone());
        }
        if !matches!(first.0, Some(0 | 2)) {
            crashed.push(format!("{} ({})", args[0], String::from_utf8_lossy(&first.2).trim()));
        }
    }
    verdict(
        diverged.is_empty() && crashed.is_empty(),
        format!("{} commands byte-identical across two runs", corpus.len()),
        format!("diverged: {diverged:?}, unexpected exits: {crashed:?}"),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 10] = [
        ("freeness agrees with the integer-relation oracle", freeness_matches_oracle),
        ("random systems are realized", systems_realize),
        ("constructors preserve the homomorphism law", constructors_are_homomorphisms),
        ("two-sided amalgams", amalgams_are_free),
        ("independent systems complete", systems_complete),
        ("independence axioms", independence_axioms),
        ("tree property witnesses", tp2_witnesses),
        ("kernel stabilizer witnesses", stabilizer_witnesses),
        ("many types over the empty set", many_types),
        ("deterministic CLI output", cli_is_deterministic),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.ok);
        println!(
            "{} {:>2} {name}: {} [{:.1?}]",
            if o.ok { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed()
        );
    }
    println!("{}/{} acceptance checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
