//! JSON codecs for the artifact schemas.
//!
//! Elements are stored in their canonical text form. Output is canonical:
//! object keys are sorted and the layout is fixed, so equal values always
//! serialize to equal bytes. Decoding errors carry a JSON pointer.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::amalg::{parse_subset_label, subset_label, Arrow, EmbeddedPresentation, IndepSystem, SymbolMap};
use crate::efield::EFieldPresentation;
use crate::exactalg::{FieldElem, MPoly, Symbol};
use crate::exprlang::{parse_element, parse_system, FlatSystem};
use crate::treeprops::{SOP1Candidate, Templates};
use crate::variety::{FreenessCertificate, ParametricVariety, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema error at {pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

/// Schemas recognized by [`detect_schema`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Presentation,
    Variety,
    Flat,
    System,
    Amalgam2Input,
    Sop1,
    Certificate,
}

impl Schema {
    pub fn name(self) -> &'static str {
        match self {
            Schema::Presentation => "presentation",
            Schema::Variety => "variety",
            Schema::Flat => "flat_system",
            Schema::System => "indep_system",
            Schema::Amalgam2Input => "amalg2_input",
            Schema::Sop1 => "sop1_candidate",
            Schema::Certificate => "certificate",
        }
    }
}

pub fn detect_schema(v: &Value) -> Result<Schema, SchemaError> {
    let obj = v.as_object().ok_or_else(|| err("", "expected an object"))?;
    let has = |k: &str| obj.contains_key(k);
    Ok(if has("egraph") {
        Schema::Presentation
    } else if has("X") {
        Schema::Variety
    } else if has("xvars") {
        Schema::Flat
    } else if has("nodes") {
        Schema::System
    } else if has("base") && has("left") {
        Schema::Amalgam2Input
    } else if has("tree") {
        Schema::Sop1
    } else if has("witness_kind") || has("verdict") {
        Schema::Certificate
    } else {
        return Err(err("", "unrecognized schema"));
    })
}

pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn err(pointer: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { pointer: if pointer.is_empty() { "/".into() } else { pointer.into() }, message: message.into() }
}

fn child(ptr: &str, key: &str) -> String {
    format!("{ptr}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn field<'a>(v: &'a Value, ptr: &str, key: &str) -> Result<&'a Value, SchemaError> {
    v.as_object()
        .ok_or_else(|| err(ptr, "expected an object"))?
        .get(key)
        .ok_or_else(|| err(&child(ptr, key), "missing field"))
}

fn string<'a>(v: &'a Value, ptr: &str) -> Result<&'a str, SchemaError> {
    v.as_str().ok_or_else(|| err(ptr, "expected a string"))
}

fn array<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>, SchemaError> {
    v.as_array().ok_or_else(|| err(ptr, "expected an array"))
}

fn uint(v: &Value, ptr: &str) -> Result<u64, SchemaError> {
    v.as_u64().ok_or_else(|| err(ptr, "expected a nonnegative integer"))
}

fn symbol(v: &Value, ptr: &str) -> Result<Symbol, SchemaError> {
    let s = string(v, ptr)?;
    if !Symbol::is_valid_ident(s) {
        return Err(err(ptr, format!("`{s}` is not an identifier")));
    }
    Ok(Symbol::new(s))
}

fn symbols(v: &Value, ptr: &str) -> Result<Vec<Symbol>, SchemaError> {
    array(v, ptr)?.iter().enumerate().map(|(i, x)| symbol(x, &child(ptr, &i.to_string()))).collect()
}

fn elem(v: &Value, ptr: &str, order: u32) -> Result<FieldElem, SchemaError> {
    let text = string(v, ptr)?;
    parse_element(text, order).map_err(|e| err(ptr, e.to_string()))
}

fn elems(v: &Value, ptr: &str, order: u32) -> Result<Vec<FieldElem>, SchemaError> {
    array(v, ptr)?.iter().enumerate().map(|(i, x)| elem(x, &child(ptr, &i.to_string()), order)).collect()
}

pub fn elem_json(e: &FieldElem) -> Value {
    Value::String(e.to_string())
}

fn elems_json(es: &[FieldElem]) -> Value {
    Value::Array(es.iter().map(elem_json).collect())
}

fn symbols_json(ss: &[Symbol]) -> Value {
    Value::Array(ss.iter().map(|s| Value::String(s.to_string())).collect())
}

fn check_symbols(e: &FieldElem, known: &[Symbol], ptr: &str) -> Result<(), SchemaError> {
    match e.variables().into_iter().find(|s| !known.contains(s)) {
        Some(s) => Err(err(ptr, format!("`{s}` is not declared"))),
        None => Ok(()),
    }
}

pub fn presentation_to_json(f: &EFieldPresentation) -> Value {
    json!({
        "name": f.name,
        "cyclotomic_order": f.cyclotomic_order,
        "transcendentals": symbols_json(&f.transcendentals),
        "egraph": f.egraph.iter().map(|(a, v)| json!({"arg": elem_json(a), "val": elem_json(v)})).collect::<Vec<_>>(),
    })
}

pub fn presentation_from_json(v: &Value) -> Result<EFieldPresentation, SchemaError> {
    presentation_at(v, "")
}

fn presentation_at(v: &Value, ptr: &str) -> Result<EFieldPresentation, SchemaError> {
    let name = string(field(v, ptr, "name")?, &child(ptr, "name"))?.to_string();
    let optr = child(ptr, "cyclotomic_order");
    let order = uint(field(v, ptr, "cyclotomic_order")?, &optr)?;
    let order: u32 = order.try_into().ok().filter(|m| *m >= 1).ok_or_else(|| err(&optr, "order must be a positive 32-bit integer"))?;
    let transcendentals = symbols(field(v, ptr, "transcendentals")?, &child(ptr, "transcendentals"))?;
    let gptr = child(ptr, "egraph");
    let mut egraph = Vec::new();
    for (k, pair) in array(field(v, ptr, "egraph")?, &gptr)?.iter().enumerate() {
        let pp = child(&gptr, &k.to_string());
        let (aptr, vptr) = (child(&pp, "arg"), child(&pp, "val"));
        let a = elem(field(pair, &pp, "arg")?, &aptr, order)?;
        let val = elem(field(pair, &pp, "val")?, &vptr, order)?;
        if val.is_zero() {
            return Err(err(&vptr, "graph values must be nonzero"));
        }
        check_symbols(&a, &transcendentals, &aptr)?;
        check_symbols(&val, &transcendentals, &vptr)?;
        egraph.push((a, val));
    }
    Ok(EFieldPresentation { name, cyclotomic_order: order, transcendentals, egraph })
}

pub fn variety_to_json(v: &ParametricVariety) -> Value {
    json!({
        "base_params": symbols_json(&v.base_params),
        "locus_params": symbols_json(&v.locus_params),
        "X": elems_json(&v.x),
        "Y": elems_json(&v.y),
        "free_Y": v.free_y,
    })
}

pub fn variety_from_json(v: &Value) -> Result<ParametricVariety, SchemaError> {
    let base = symbols(field(v, "", "base_params")?, "/base_params")?;
    let locus = symbols(field(v, "", "locus_params")?, "/locus_params")?;
    let x = elems(field(v, "", "X")?, "/X", 1)?;
    let y = elems(field(v, "", "Y")?, "/Y", 1)?;
    let known: Vec<Symbol> = base.iter().chain(&locus).cloned().collect();
    for (name, list) in [("X", &x), ("Y", &y)] {
        for (i, e) in list.iter().enumerate() {
            check_symbols(e, &known, &format!("/{name}/{i}"))?;
        }
    }
    let var = ParametricVariety::new(base, locus, x, y).map_err(|e| err("", e.to_string()))?;
    if let Some(flags) = v.get("free_Y") {
        let given: Vec<bool> = array(flags, "/free_Y")?
            .iter()
            .enumerate()
            .map(|(i, b)| b.as_bool().ok_or_else(|| err(&format!("/free_Y/{i}"), "expected a boolean")))
            .collect::<Result<_, _>>()?;
        if given != var.free_y {
            return Err(err("/free_Y", format!("flags do not match the computed {:?}", var.free_y)));
        }
    }
    Ok(var)
}

pub fn flat_to_json(fs: &FlatSystem) -> Value {
    json!({
        "xvars": symbols_json(&fs.xvars),
        "yvars": symbols_json(&fs.yvars),
        "params": symbols_json(&fs.params),
        "polys": fs.polys.iter().map(|p| Value::String(p.to_string())).collect::<Vec<_>>(),
        "aux_count": fs.aux_count,
    })
}

pub fn flat_from_json(v: &Value) -> Result<FlatSystem, SchemaError> {
    let xvars = symbols(field(v, "", "xvars")?, "/xvars")?;
    let yvars = symbols(field(v, "", "yvars")?, "/yvars")?;
    let params = symbols(field(v, "", "params")?, "/params")?;
    let mut polys = Vec::new();
    for (i, p) in array(field(v, "", "polys")?, "/polys")?.iter().enumerate() {
        let ptr = format!("/polys/{i}");
        let e = elem(p, &ptr, 1)?;
        if !e.denom().is_one() {
            return Err(err(&ptr, "expected a polynomial"));
        }
        polys.push(MPoly::clone(e.numer()));
    }
    let aux_count = uint(field(v, "", "aux_count")?, "/aux_count")? as usize;
    let fs = FlatSystem { xvars, yvars, polys, params, aux_count };
    fs.validate().map_err(|e| err("", e.to_string()))?;
    Ok(fs)
}

fn map_json(m: &SymbolMap) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect())
}

fn map_at(v: &Value, ptr: &str) -> Result<SymbolMap, SchemaError> {
    let obj = v.as_object().ok_or_else(|| err(ptr, "expected an object"))?;
    obj.iter()
        .map(|(k, x)| {
            let p = child(ptr, k);
            if !Symbol::is_valid_ident(k) {
                return Err(err(&p, format!("`{k}` is not an identifier")));
            }
            Ok((Symbol::new(k), symbol(x, &p)?))
        })
        .collect()
}

pub fn system_to_json(s: &IndepSystem) -> Value {
    let nodes: Map<String, Value> = s.nodes.iter().map(|(k, f)| (subset_label(*k), presentation_to_json(f))).collect();
    let mut arrows: Vec<&Arrow> = s.arrows.iter().collect();
    arrows.sort_by_key(|a| (a.from.count_ones(), a.from, a.to));
    json!({
        "n": s.n,
        "nodes": nodes,
        "arrows": arrows.iter().map(|a| json!({
            "from": subset_label(a.from),
            "to": subset_label(a.to),
            "map": map_json(&a.map),
        })).collect::<Vec<_>>(),
    })
}

pub fn system_from_json(v: &Value) -> Result<IndepSystem, SchemaError> {
    let n = uint(field(v, "", "n")?, "/n")? as usize;
    if n > 16 {
        return Err(err("/n", "n is too large"));
    }
    let label = |x: &Value, ptr: &str| -> Result<u32, SchemaError> {
        let s = string(x, ptr)?;
        parse_subset_label(s).filter(|m| *m >> n == 0).ok_or_else(|| err(ptr, format!("`{s}` is not a subset of 0..{n}")))
    };
    let mut nodes = BTreeMap::new();
    let nobj = field(v, "", "nodes")?.as_object().ok_or_else(|| err("/nodes", "expected an object"))?;
    for (k, f) in nobj {
        let ptr = child("/nodes", k);
        let mask = label(&Value::String(k.clone()), &ptr)?;
        nodes.insert(mask, presentation_at(f, &ptr)?);
    }
    let mut arrows = Vec::new();
    for (i, a) in array(field(v, "", "arrows")?, "/arrows")?.iter().enumerate() {
        let ptr = format!("/arrows/{i}");
        let from = label(field(a, &ptr, "from")?, &child(&ptr, "from"))?;
        let to = label(field(a, &ptr, "to")?, &child(&ptr, "to"))?;
        let map = map_at(field(a, &ptr, "map")?, &child(&ptr, "map"))?;
        arrows.push(Arrow { from, to, map });
    }
    Ok(IndepSystem { n, nodes, arrows })
}

pub fn embedded_to_json(e: &EmbeddedPresentation) -> Value {
    json!({"amb": presentation_to_json(&e.amb), "base_name": e.base_name, "inclusion": map_json(&e.inclusion)})
}

fn embedded_at(v: &Value, ptr: &str) -> Result<EmbeddedPresentation, SchemaError> {
    Ok(EmbeddedPresentation {
        amb: presentation_at(field(v, ptr, "amb")?, &child(ptr, "amb"))?,
        base_name: string(field(v, ptr, "base_name")?, &child(ptr, "base_name"))?.to_string(),
        inclusion: map_at(field(v, ptr, "inclusion")?, &child(ptr, "inclusion"))?,
    })
}

pub fn amalg2_input_to_json(base: &EFieldPresentation, left: &EmbeddedPresentation, right: &EmbeddedPresentation) -> Value {
    json!({"base": presentation_to_json(base), "left": embedded_to_json(left), "right": embedded_to_json(right)})
}

pub fn amalg2_input_from_json(v: &Value) -> Result<(EFieldPresentation, EmbeddedPresentation, EmbeddedPresentation), SchemaError> {
    Ok((
        presentation_at(field(v, "", "base")?, "/base")?,
        embedded_at(field(v, "", "left")?, "/left")?,
        embedded_at(field(v, "", "right")?, "/right")?,
    ))
}

pub fn sop1_to_json(c: &SOP1Candidate) -> Value {
    let tree: Map<String, Value> = c.tree.iter().map(|(k, a)| (k.clone(), elems_json(a))).collect();
    json!({
        "depth": c.depth,
        "presentation": presentation_to_json(&c.f),
        "tree": tree,
        "phi": c.templates.phi.to_string(),
        "psi": c.templates.psi.to_string(),
        "params": symbols_json(&c.templates.params),
    })
}

pub fn sop1_from_json(v: &Value) -> Result<SOP1Candidate, SchemaError> {
    let depth = uint(field(v, "", "depth")?, "/depth")? as usize;
    let f = presentation_at(field(v, "", "presentation")?, "/presentation")?;
    let mut templates = Templates::builtin();
    if let Some(p) = v.get("phi") {
        templates.phi = parse_system(string(p, "/phi")?).map_err(|e| err("/phi", e.to_string()))?;
    }
    if let Some(p) = v.get("psi") {
        templates.psi = parse_system(string(p, "/psi")?).map_err(|e| err("/psi", e.to_string()))?;
    }
    if let Some(p) = v.get("params") {
        templates.params = symbols(p, "/params")?;
    }
    let tobj = field(v, "", "tree")?.as_object().ok_or_else(|| err("/tree", "expected an object"))?;
    let mut tree = BTreeMap::new();
    for (k, a) in tobj {
        let ptr = child("/tree", k);
        let tuple = elems(a, &ptr, f.cyclotomic_order)?;
        for (i, e) in tuple.iter().enumerate() {
            check_symbols(e, &f.transcendentals, &child(&ptr, &i.to_string()))?;
        }
        tree.insert(k.clone(), tuple);
    }
    Ok(SOP1Candidate { depth, f, tree, templates })
}

pub fn freeness_to_json(c: &FreenessCertificate) -> Value {
    match &c.relation {
        Some((m, a)) => json!({
            "verdict": "not_free",
            "relation": {"m": m.iter().map(|x| Value::String(x.to_string())).collect::<Vec<_>>(), "a": elem_json(a)},
        }),
        None => json!({"verdict": if c.verdict == Verdict::Free { "free" } else { "not_free" }}),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efield::minimal_ea_family;
    use crate::exactalg::Rat;

    #[test]
    fn presentation_roundtrip() {
        let f = minimal_ea_family(&[Rat::from_integer(2.into()), Rat::from_integer(3.into())]).unwrap();
        let text = to_canonical_string(&presentation_to_json(&f));
        let back = presentation_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(to_canonical_string(&presentation_to_json(&back)), text);
    }

    #[test]
    fn zero_value_pointer() {
        let v = json!({"name": "F", "cyclotomic_order": 1, "transcendentals": ["t"], "egraph": [{"arg": "t", "val": "0"}]});
        let e = presentation_from_json(&v).unwrap_err();
        assert_eq!(e.pointer, "/egraph/0/val");
        let v = json!({"name": "F", "cyclotomic_order": 1, "transcendentals": ["t"], "egraph": [{"arg": "s", "val": "1"}]});
        assert_eq!(presentation_from_json(&v).unwrap_err().pointer, "/egraph/0/arg");
        let v = json!({"name": "F", "transcendentals": [], "egraph": []});
        assert_eq!(presentation_from_json(&v).unwrap_err().pointer, "/cyclotomic_order");
    }

    #[test]
    fn variety_roundtrip() {
        let v = json!({"base_params": [], "locus_params": ["u"], "X": ["u", "2*u + 3"], "Y": ["1", "1"]});
        let var = variety_from_json(&v).unwrap();
        assert_eq!(var.x.len(), 2);
        let back = variety_from_json(&variety_to_json(&var)).unwrap();
        assert_eq!(back, var);
    }

    #[test]
    fn pointer_escaping() {
        assert_eq!(child("/nodes", "{0,1}"), "/nodes/{0,1}");
        assert_eq!(child("", "a/b~"), "/a~1b~0");
        assert_eq!(detect_schema(&json!({"X": []})).unwrap(), Schema::Variety);
        assert!(detect_schema(&json!([])).is_err());
    }
}
