//! JSON encodings of command results.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use expofield::amalg::{subset_label, Amalgam, IndepDetail, SystemReport, WellDefCheck};
use expofield::efield::SolveOutcome;
use expofield::exactalg::{FieldElem, Rat, Symbol};
use expofield::json::{self as codec, elem_json};
use expofield::treeprops::{ConditionReport, TP2Witness, TypeFamily, VerifyReport};
use expofield::variety::{ReductionResult, Verdict};

fn rat(q: &Rat) -> Value {
    Value::String(if q.is_integer() { q.numer().to_string() } else { format!("{}/{}", q.numer(), q.denom()) })
}

fn elems(es: &[FieldElem]) -> Value {
    Value::Array(es.iter().map(elem_json).collect())
}

fn ints<T: ToString>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(x.to_string())).collect())
}

pub fn env(m: &BTreeMap<Symbol, FieldElem>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), elem_json(v))).collect())
}

pub fn reduction(r: &ReductionResult) -> Value {
    json!({
        "vprime": codec::variety_to_json(&r.vprime),
        "A": r.a.to_rows().iter().map(|row| row.iter().map(rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "b": elems(&r.b),
        "N": r.n.to_string(),
        "index_map": r.index_map,
    })
}

pub fn solve_outcome(o: &SolveOutcome) -> Value {
    json!({
        "presentation": codec::presentation_to_json(&o.presentation),
        "d": elems(&o.d),
        "Ed": elems(&o.ed),
        "assignment": env(&o.assignment),
    })
}

pub fn indep(d: &IndepDetail) -> Value {
    json!({
        "indep": d.holds,
        "td_over_bc": d.td_over_bc,
        "td_over_c": d.td_over_c,
        "hulls_closed": d.hulls_closed,
    })
}

pub fn well_def(c: &WellDefCheck) -> Value {
    json!({
        "generators": elems(&c.generators),
        "kernel_basis": c.kernel_basis.iter().map(|z| ints(z)).collect::<Vec<_>>(),
        "verdicts": c.verdicts,
    })
}

fn symbol_map(m: &BTreeMap<Symbol, Symbol>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect())
}

pub fn amalgam(a: &Amalgam) -> Value {
    json!({
        "G": codec::presentation_to_json(&a.g),
        "g1": symbol_map(&a.g1),
        "g2": symbol_map(&a.g2),
        "check": well_def(&a.check),
    })
}

pub fn system_report(r: &SystemReport) -> Value {
    json!({
        "passed": r.passed(),
        "checked": r.checked,
        "shape_error": r.shape_error,
        "hulls_closed": r.hulls_closed,
        "failures": r.failures.iter().map(|f| json!({
            "a": subset_label(f.a),
            "b": subset_label(f.b),
            "td_over_bc": f.detail.td_over_bc,
            "td_over_c": f.detail.td_over_c,
        })).collect::<Vec<_>>(),
    })
}

fn condition(c: &ConditionReport) -> Value {
    json!({
        "status": c.status.to_string(),
        "checked": c.checked,
        "counterexamples": c.counterexamples,
        "note": c.note,
    })
}

fn verdict(v: Option<Verdict>) -> Value {
    match v {
        Some(Verdict::Free) => json!("free"),
        Some(Verdict::NotFree) => json!("not_free"),
        None => Value::Null,
    }
}

pub fn verify_report(r: &VerifyReport) -> Value {
    json!({
        "condition_i": condition(&r.condition_i),
        "condition_ii": condition(&r.condition_ii),
        "condition_iii": condition(&r.condition_iii),
        "branches": r.branches.iter().map(|b| json!({
            "branch": b.branch,
            "freeness": verdict(b.freeness),
            "point": b.point.as_ref().map(env),
            "error": b.error,
        })).collect::<Vec<_>>(),
        "realizing_extension": r.realizing_extension.as_ref().map(codec::presentation_to_json),
    })
}

pub fn tp2(w: &TP2Witness, r: &VerifyReport, sigma: Option<&Vec<usize>>) -> Value {
    let all_free = r.branches.iter().all(|b| b.freeness == Some(Verdict::Free));
    json!({
        "witness_kind": "tp2",
        "n": w.n,
        "J": w.j,
        "sigma": sigma,
        "b": elems(&w.b),
        "c": elems(&w.c),
        "arguments_independent": w.arguments_independent(),
        "freeness": if all_free { "free" } else { "not_free" },
        "branch_points": r.branches.iter().map(|b| json!({
            "sigma": b.branch,
            "point": b.point.as_ref().map(env),
        })).collect::<Vec<_>>(),
        "conditions": {
            "i": condition(&r.condition_i),
            "ii": condition(&r.condition_ii),
            "iii": condition(&r.condition_iii),
        },
        "realizing_extension": r.realizing_extension.as_ref().map(codec::presentation_to_json),
    })
}

pub fn type_family(t: &TypeFamily) -> Value {
    json!({
        "x": t.x.to_string(),
        "presentations": t.presentations.iter().map(codec::presentation_to_json).collect::<Vec<_>>(),
        "certificates": t.certificates.iter().map(|d| json!({
            "left": d.left,
            "right": d.right,
            "n": d.n,
            "left_value": elem_json(&d.left_value),
            "right_value": elem_json(&d.right_value),
            "verified": d.verify(t),
        })).collect::<Vec<_>>(),
        "compatible": t.compatible,
    })
}
