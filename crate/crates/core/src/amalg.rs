//! Transcendence degree, independence, and amalgamation of presentations.
//!
//! Amalgams are free composites: new transcendentals coming from different
//! extensions are kept algebraically independent, and the graphs are united.
//! The union is well defined when every integer relation among the united
//! arguments maps to a product of values equal to 1, which is checked.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::efield::{e_eval, hull, EEvalResult, EFieldPresentation};
use crate::exactalg::linalg::{express_in_span, hermite_combinations, relation_matrix};
use crate::exactalg::{ff_rank, FieldElem, Rat, Symbol};

pub const DEFAULT_MAX_N: usize = 6;

pub type SymbolMap = BTreeMap<Symbol, Symbol>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgError {
    #[error("ill-formed extension: {0}")]
    IllFormedExtension(String),
    #[error("graph union is not well defined: {vector:?} gives product {product}")]
    WellDefFailure { vector: Vec<BigInt>, product: FieldElem },
    #[error("invalid system: {0}")]
    InvalidSystem(String),
}

fn jacobian(elems: &[FieldElem], amb: &[Symbol]) -> Vec<Vec<FieldElem>> {
    elems.iter().map(|e| amb.iter().map(|v| e.derivative(v)).collect()).collect()
}

/// Transcendence degree of `elems` over `Q(over)`, by Jacobian ranks.
pub fn tdeg(amb: &[Symbol], elems: &[FieldElem], over: &[FieldElem]) -> usize {
    let both: Vec<FieldElem> = elems.iter().chain(over).cloned().collect();
    ff_rank(&jacobian(&both, amb)) - ff_rank(&jacobian(over, amb))
}

fn union(a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
    a.iter().chain(b).cloned().collect()
}

/// `td(AC / BC) = td(AC / C)`.
pub fn acf_indep(a: &[FieldElem], b: &[FieldElem], c: &[FieldElem], amb: &[Symbol]) -> bool {
    let ac = union(a, c);
    tdeg(amb, &ac, &union(b, c)) == tdeg(amb, &ac, c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndepDetail {
    pub holds: bool,
    /// `td(⟨AC⟩ / ⟨BC⟩)` and `td(⟨AC⟩ / ⟨C⟩)`.
    pub td_over_bc: usize,
    pub td_over_c: usize,
    pub hulls_closed: bool,
}

/// Independence of the graph hulls of `AC` and `BC` over that of `C`.
pub fn indep_detail(f: &EFieldPresentation, a: &[FieldElem], b: &[FieldElem], c: &[FieldElem]) -> IndepDetail {
    let hac = hull(f, &union(a, c));
    let hbc = hull(f, &union(b, c));
    let hc = hull(f, c);
    let amb = &f.transcendentals;
    let td_over_bc = tdeg(amb, &hac.generators, &union(&hbc.generators, &hc.generators));
    let td_over_c = tdeg(amb, &hac.generators, &hc.generators);
    IndepDetail {
        holds: td_over_bc == td_over_c,
        td_over_bc,
        td_over_c,
        hulls_closed: hac.closed_under_graph && hbc.closed_under_graph && hc.closed_under_graph,
    }
}

pub fn indep(f: &EFieldPresentation, a: &[FieldElem], b: &[FieldElem], c: &[FieldElem]) -> bool {
    indep_detail(f, a, b, c).holds
}

fn map_elem(e: &FieldElem, m: &SymbolMap) -> FieldElem {
    e.rename(&|s| m.get(s).cloned().unwrap_or_else(|| s.clone()))
}

/// Checks that `map` embeds `from` into `to`: transcendentals go injectively
/// to transcendentals and graph pairs go to graph consequences.
pub fn check_embedding(from: &EFieldPresentation, to: &EFieldPresentation, map: &SymbolMap) -> Result<(), AmalgError> {
    let bad = |m: String| Err(AmalgError::IllFormedExtension(m));
    let mut image = BTreeSet::new();
    for t in &from.transcendentals {
        let Some(s) = map.get(t) else {
            return bad(format!("`{t}` of {} has no image in {}", from.name, to.name));
        };
        if !to.transcendentals.contains(s) {
            return bad(format!("`{t}` maps to `{s}`, which is not a transcendental of {}", to.name));
        }
        if !image.insert(s) {
            return bad(format!("two symbols of {} map to `{s}`", from.name));
        }
    }
    if to.cyclotomic_order % from.cyclotomic_order != 0 {
        return bad(format!("cyclotomic order {} does not divide {}", from.cyclotomic_order, to.cyclotomic_order));
    }
    for (a, v) in &from.egraph {
        let (ma, mv) = (map_elem(a, map), map_elem(v, map));
        if e_eval(to, &ma) != EEvalResult::Value(mv.clone()) {
            return bad(format!("graph pair E({a}) = {v} is not preserved in {}", to.name));
        }
    }
    Ok(())
}

/// An element of the image of `from` on which the graph of `to` defines `E`
/// although `from` does not, if any. `None` means `from` is the restriction
/// of `to` to the image.
pub fn restriction_gap(from: &EFieldPresentation, to: &EFieldPresentation, map: &SymbolMap) -> Option<FieldElem> {
    let image: BTreeSet<&Symbol> = map.values().collect();
    let outside: Vec<&Symbol> = to.transcendentals.iter().filter(|s| !image.contains(s)).collect();
    let args = to.args();
    let columns: Vec<Vec<FieldElem>> = args.iter().map(|a| outside.iter().map(|s| a.derivative(s)).collect()).collect();
    let mapped: Vec<FieldElem> = from.args().iter().map(|a| map_elem(a, map)).collect();
    relation_matrix(&columns).kernel_basis().into_iter().find_map(|q| {
        let e = q.iter().zip(&args).fold(FieldElem::zero(), |acc, (c, a)| acc.add(&a.scale_rat(c)));
        express_in_span(&mapped, &e).is_none().then_some(e)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedPresentation {
    pub amb: EFieldPresentation,
    pub base_name: String,
    /// Base transcendental ↦ symbol of `amb`.
    pub inclusion: SymbolMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WellDefCheck {
    pub generators: Vec<FieldElem>,
    pub kernel_basis: Vec<Vec<BigInt>>,
    pub verdicts: Vec<bool>,
}

impl WellDefCheck {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| *v)
    }
}

fn product(values: &[FieldElem], z: &[BigInt]) -> FieldElem {
    values.iter().zip(z).fold(FieldElem::one(), |acc, (v, zi)| {
        if zi.is_zero() {
            acc
        } else {
            acc.mul(&v.powi(zi).expect("graph values are nonzero"))
        }
    })
}

/// Checks the united graph and returns an independent graph with the same
/// Z-span of arguments.
fn unite_graphs(pairs: &[(FieldElem, FieldElem)]) -> Result<(Vec<(FieldElem, FieldElem)>, WellDefCheck), AmalgError> {
    let args: Vec<FieldElem> = pairs.iter().map(|(a, _)| a.clone()).collect();
    let vals: Vec<FieldElem> = pairs.iter().map(|(_, v)| v.clone()).collect();
    let columns: Vec<Vec<FieldElem>> = args.iter().map(|a| vec![a.clone()]).collect();
    let kernel = relation_matrix(&columns).integer_kernel_basis();
    let mut verdicts = Vec::with_capacity(kernel.len());
    for z in &kernel {
        let p = product(&vals, z);
        verdicts.push(p.is_one());
        if !p.is_one() {
            return Err(AmalgError::WellDefFailure { vector: z.clone(), product: p });
        }
    }
    let check = WellDefCheck { generators: args.clone(), kernel_basis: kernel, verdicts };
    Ok((graph_basis(pairs), check))
}

fn graph_basis(pairs: &[(FieldElem, FieldElem)]) -> Vec<(FieldElem, FieldElem)> {
    let mut selected: Vec<usize> = Vec::new();
    for i in 0..pairs.len() {
        let mut trial: Vec<FieldElem> = selected.iter().map(|&j| pairs[j].0.clone()).collect();
        trial.push(pairs[i].0.clone());
        if crate::exactalg::linalg::linear_relations(&trial).is_empty() {
            selected.push(i);
        }
    }
    let basis: Vec<FieldElem> = selected.iter().map(|&j| pairs[j].0.clone()).collect();
    let coords: Vec<Vec<Rat>> = pairs.iter().map(|(a, _)| express_in_span(&basis, a).expect("in the span")).collect();
    if coords.iter().flatten().all(Rat::is_integer) {
        return selected.iter().map(|&j| pairs[j].clone()).collect();
    }
    // Hermite reduction of the coordinate lattice, tracking combinations.
    let den = coords.iter().flatten().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let m: Vec<Vec<BigInt>> = coords
        .iter()
        .map(|row| row.iter().map(|q| (q * Rat::from_integer(den.clone())).to_integer()).collect())
        .collect();
    let combos = hermite_combinations(m);
    let vals: Vec<FieldElem> = pairs.iter().map(|(_, v)| v.clone()).collect();
    combos
        .iter()
        .map(|u| {
            let arg = pairs
                .iter()
                .zip(u)
                .fold(FieldElem::zero(), |acc, ((a, _), ui)| acc.add(&a.scale_int(ui)));
            (arg, product(&vals, u))
        })
        .collect()
}

fn fresh_name(candidate: String, taken: &BTreeSet<Symbol>) -> Symbol {
    let mut name = candidate;
    while taken.contains(&Symbol::new(&name)) {
        name.push('_');
    }
    Symbol::new(&name)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Amalgam {
    pub g: EFieldPresentation,
    /// Embeddings of the two extensions into `g`.
    pub g1: SymbolMap,
    pub g2: SymbolMap,
    pub check: WellDefCheck,
}

/// Free amalgam of two extensions of `base`.
pub fn amalgamate2(base: &EFieldPresentation, f1: &EmbeddedPresentation, f2: &EmbeddedPresentation) -> Result<Amalgam, AmalgError> {
    check_embedding(base, &f1.amb, &f1.inclusion)?;
    check_embedding(base, &f2.amb, &f2.inclusion)?;
    let order = f1.amb.cyclotomic_order.lcm(&f2.amb.cyclotomic_order);
    let mut taken: BTreeSet<Symbol> = base.transcendentals.iter().cloned().collect();
    let mut trans = base.transcendentals.clone();
    let mut maps = Vec::new();
    let prefixes = if f1.amb.name == f2.amb.name {
        [format!("{}_1", f1.amb.name), format!("{}_2", f2.amb.name)]
    } else {
        [f1.amb.name.clone(), f2.amb.name.clone()]
    };
    for (f, prefix) in [f1, f2].into_iter().zip(prefixes) {
        let back: BTreeMap<&Symbol, &Symbol> = f.inclusion.iter().map(|(b, e)| (e, b)).collect();
        let mut m = SymbolMap::new();
        for s in &f.amb.transcendentals {
            let target = match back.get(s) {
                Some(b) => (*b).clone(),
                None => {
                    let t = fresh_name(format!("{prefix}_{s}"), &taken);
                    taken.insert(t.clone());
                    trans.push(t.clone());
                    t
                }
            };
            m.insert(s.clone(), target);
        }
        maps.push(m);
    }
    let mut pairs: Vec<(FieldElem, FieldElem)> = Vec::new();
    for (f, m) in [f1, f2].into_iter().zip(&maps) {
        for (a, v) in &f.amb.egraph {
            pairs.push((map_elem(a, m), map_elem(v, m)));
        }
    }
    let (graph, check) = unite_graphs(&pairs)?;
    let g = EFieldPresentation {
        name: format!("{}+{}", f1.amb.name, f2.amb.name),
        cyclotomic_order: order,
        transcendentals: trans,
        egraph: graph,
    };
    let g2 = maps.pop().expect("two maps");
    let g1 = maps.pop().expect("two maps");
    Ok(Amalgam { g, g1, g2, check })
}

/// Subsets of `{0, …, n-1}` as bitmasks.
pub type Subset = u32;

pub fn subset_label(s: Subset) -> String {
    let items: Vec<String> = (0..32).filter(|i| s >> i & 1 == 1).map(|i| i.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub fn parse_subset_label(text: &str) -> Option<Subset> {
    let inner = text.trim().strip_prefix('{')?.strip_suffix('}')?;
    let mut s = 0;
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let i: u32 = part.parse().ok()?;
        if i >= 32 || s >> i & 1 == 1 {
            return None;
        }
        s |= 1 << i;
    }
    Some(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub from: Subset,
    pub to: Subset,
    pub map: SymbolMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndepSystem {
    pub n: usize,
    pub nodes: BTreeMap<Subset, EFieldPresentation>,
    /// Covering arrows `a → a ∪ {i}`.
    pub arrows: Vec<Arrow>,
}

impl IndepSystem {
    pub fn full(&self) -> Subset {
        (1 << self.n) - 1
    }

    pub fn is_complete(&self) -> bool {
        self.nodes.contains_key(&self.full())
    }

    fn arrow(&self, from: Subset, to: Subset) -> Option<&Arrow> {
        self.arrows.iter().find(|a| a.from == from && a.to == to)
    }

    /// Composite inclusion `F_a → F_b` along the chain adding elements in increasing order.
    pub fn composite(&self, a: Subset, b: Subset) -> Option<SymbolMap> {
        if a & !b != 0 {
            return None;
        }
        let mut map: SymbolMap = self.nodes.get(&a)?.transcendentals.iter().map(|s| (s.clone(), s.clone())).collect();
        let mut cur = a;
        for i in 0..self.n {
            if b >> i & 1 == 1 && cur >> i & 1 == 0 {
                let next = cur | 1 << i;
                let arrow = self.arrow(cur, next)?;
                for v in map.values_mut() {
                    *v = arrow.map.get(v)?.clone();
                }
                cur = next;
            }
        }
        Some(map)
    }

    /// Shape checks: node set, covering arrows, embeddings and commuting squares.
    pub fn validate(&self, max_n: usize) -> Result<(), AmalgError> {
        let bad = |m: String| Err(AmalgError::InvalidSystem(m));
        if self.n < 3 || self.n > max_n {
            return bad(format!("n = {} outside 3..={max_n}", self.n));
        }
        let full = self.full();
        for s in 0..full {
            if !self.nodes.contains_key(&s) {
                return bad(format!("missing node {}", subset_label(s)));
            }
        }
        if let Some(s) = self.nodes.keys().find(|&&s| s > full) {
            return bad(format!("node {} outside the index set", subset_label(*s)));
        }
        for (&a, fa) in &self.nodes {
            for i in 0..self.n {
                let b = a | 1 << i;
                if b == a || !self.nodes.contains_key(&b) {
                    continue;
                }
                let Some(arrow) = self.arrow(a, b) else {
                    return bad(format!("missing arrow {} → {}", subset_label(a), subset_label(b)));
                };
                check_embedding(fa, &self.nodes[&b], &arrow.map)?;
            }
        }
        for arrow in &self.arrows {
            if arrow.from & !arrow.to != 0 || (arrow.to & !arrow.from).count_ones() != 1 {
                return bad(format!("arrow {} → {} is not a covering inclusion", subset_label(arrow.from), subset_label(arrow.to)));
            }
        }
        // Squares a → a∪{i} → a∪{i,j} and a → a∪{j} → a∪{i,j} commute.
        for &a in self.nodes.keys() {
            for i in 0..self.n {
                for j in i + 1..self.n {
                    let (ai, aj, aij) = (a | 1 << i, a | 1 << j, a | 1 << i | 1 << j);
                    if a & (1 << i | 1 << j) != 0 || !self.nodes.contains_key(&aij) {
                        continue;
                    }
                    let via = |m: Subset| -> Option<SymbolMap> {
                        let first = &self.arrow(a, m)?.map;
                        let second = &self.arrow(m, aij)?.map;
                        first.iter().map(|(k, v)| Some((k.clone(), second.get(v)?.clone()))).collect()
                    };
                    if via(ai) != via(aj) {
                        return bad(format!("square at {} over {} does not commute", subset_label(a), subset_label(aij)));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndepFailure {
    pub a: Subset,
    pub b: Subset,
    pub detail: IndepDetail,
}

impl fmt::Display for IndepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} in {}: td over B∪C is {}, over C is {}",
            subset_label(self.a),
            subset_label(self.b),
            self.detail.td_over_bc,
            self.detail.td_over_c
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemReport {
    pub checked: usize,
    pub failures: Vec<IndepFailure>,
    pub shape_error: Option<String>,
    pub hulls_closed: bool,
}

impl SystemReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.shape_error.is_none()
    }
}

fn images(sys: &IndepSystem, nodes: impl Iterator<Item = Subset>, b: Subset) -> Vec<FieldElem> {
    let mut out: Vec<FieldElem> = Vec::new();
    for d in nodes {
        let m = sys.composite(d, b).expect("validated system");
        for s in m.values() {
            let e = FieldElem::var(s.clone());
            if !out.contains(&e) {
                out.push(e);
            }
        }
    }
    out
}

/// For all nonempty `a ⊊ b`: `F_a` is independent from `∪_{a⊄d⊆b} F_d`
/// over `∪_{c⊊a} F_c`, inside `F_b`.
pub fn verify_independent_system(sys: &IndepSystem, max_n: usize) -> SystemReport {
    if let Err(e) = sys.validate(max_n) {
        return SystemReport { checked: 0, failures: vec![], shape_error: Some(e.to_string()), hulls_closed: true };
    }
    let sub = |x: Subset, y: Subset| x & !y == 0;
    let pairs: Vec<(Subset, Subset)> = sys
        .nodes
        .keys()
        .flat_map(|&b| sys.nodes.keys().filter(move |&&a| a != 0 && a != b && sub(a, b)).map(move |&a| (a, b)))
        .collect();
    let details: Vec<IndepDetail> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let av = images(sys, std::iter::once(a), b);
            let bv = images(sys, sys.nodes.keys().copied().filter(|&d| sub(d, b) && !sub(a, d)), b);
            let cv = images(sys, sys.nodes.keys().copied().filter(|&c| sub(c, a) && c != a), b);
            indep_detail(&sys.nodes[&b], &av, &bv, &cv)
        })
        .collect();
    let closed = details.iter().all(|d| d.hulls_closed);
    let checked = pairs.len();
    let failures = pairs
        .into_iter()
        .zip(details)
        .filter(|(_, d)| !d.holds)
        .map(|((a, b), detail)| IndepFailure { a, b, detail })
        .collect();
    SystemReport { checked, failures, shape_error: None, hulls_closed: closed }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub system: IndepSystem,
    pub check: WellDefCheck,
}

fn node_prefix(s: Subset) -> String {
    let digits: String = (0..32).filter(|i| s >> i & 1 == 1).map(|i| i.to_string()).collect();
    format!("N{digits}")
}

/// Adds the top node as the free composite of the codimension-one nodes.
pub fn complete_system(sys: &IndepSystem, max_n: usize) -> Result<Completion, AmalgError> {
    if sys.is_complete() {
        return Err(AmalgError::InvalidSystem("system already has a top node".into()));
    }
    sys.validate(max_n)?;
    let full = sys.full();
    // Union-find over (node, symbol), joined along arrows.
    let mut index: BTreeMap<(Subset, Symbol), usize> = BTreeMap::new();
    let mut keys: Vec<(Subset, Symbol)> = Vec::new();
    for (&s, f) in &sys.nodes {
        for t in &f.transcendentals {
            index.insert((s, t.clone()), keys.len());
            keys.push((s, t.clone()));
        }
    }
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for arrow in &sys.arrows {
        for (k, v) in &arrow.map {
            let (Some(&x), Some(&y)) = (index.get(&(arrow.from, k.clone())), index.get(&(arrow.to, v.clone()))) else {
                continue;
            };
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            // Keep the representative in the smallest node.
            let (lo, hi) = if (keys[rx].0.count_ones(), keys[rx].0) <= (keys[ry].0.count_ones(), keys[ry].0) { (rx, ry) } else { (ry, rx) };
            parent[hi] = lo;
        }
    }
    let mut names: BTreeMap<usize, Symbol> = BTreeMap::new();
    let mut taken: BTreeSet<Symbol> = sys.nodes[&0].transcendentals.iter().cloned().collect();
    let mut trans: Vec<Symbol> = Vec::new();
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&i| (keys[i].0.count_ones(), keys[i].0, i));
    for i in order {
        let r = find(&mut parent, i);
        if names.contains_key(&r) {
            continue;
        }
        let (node, sym) = &keys[r];
        let name = if *node == 0 {
            sym.clone()
        } else {
            let t = fresh_name(format!("{}_{sym}", node_prefix(*node)), &taken);
            taken.insert(t.clone());
            t
        };
        trans.push(name.clone());
        names.insert(r, name);
    }
    let mut new_arrows = Vec::new();
    let mut pairs = Vec::new();
    for i in 0..sys.n {
        let c = full & !(1 << i);
        let f = &sys.nodes[&c];
        let mut map = SymbolMap::new();
        for t in &f.transcendentals {
            let r = find(&mut parent, index[&(c, t.clone())]);
            map.insert(t.clone(), names[&r].clone());
        }
        for (a, v) in &f.egraph {
            pairs.push((map_elem(a, &map), map_elem(v, &map)));
        }
        new_arrows.push(Arrow { from: c, to: full, map });
    }
    let (graph, check) = unite_graphs(&pairs)?;
    let order = sys.nodes.values().fold(1u32, |l, f| l.lcm(&f.cyclotomic_order));
    let top = EFieldPresentation {
        name: node_prefix(full),
        cyclotomic_order: order,
        transcendentals: trans,
        egraph: graph,
    };
    let mut out = sys.clone();
    out.nodes.insert(full, top);
    out.arrows.extend(new_arrows);
    Ok(Completion { system: out, check })
}
