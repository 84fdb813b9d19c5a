//! Finitely presented exponential fields.
//!
//! A presentation is a purely transcendental extension `Q(ζ_m)(t_1, …, t_k)`
//! with a finite graph `{(a_i, E(a_i))}` on a Q-linearly independent set of
//! arguments. `E` is then defined on the Z-span of the arguments.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exactalg::linalg::{
    express_in_span, ff_rank, hermite_combinations, linear_relations, primitive, relation_matrix, to_integer_vector,
    FieldRowSpace, QMatrix,
};
use crate::exactalg::{AlgError, FieldElem, Rat, Symbol};
use crate::exprlang::{eliminate_inequations, flatten, ESystem, ETerm, NormalizeError, Rel};
use crate::variety::{ReductionResult, additive_freeness, from_flat, pullback, reduce, FreenessCertificate, ParametricVariety, Verdict, VarietyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EFieldError {
    #[error("graph value {0} is zero")]
    ZeroValue(usize),
    #[error("graph arguments are linearly dependent: {0:?}")]
    LinearDependence(Vec<BigInt>),
    #[error("variety is not additively free")]
    NotAdditivelyFree(FreenessCertificate),
    #[error("E({0}) is not determined and extension is disabled")]
    MissingExponential(FieldElem),
    #[error("realizing E({arg}) = {value} would need a root of order {order}")]
    RootRequired { arg: FieldElem, value: FieldElem, order: BigInt },
    #[error("inconsistent exponential constraint: {0}")]
    Inconsistent(String),
    #[error("symbol `{0}` is not a transcendental of the presentation")]
    UnknownSymbol(String),
    #[error("coefficients of order {found} do not live in Q(ζ_{order})")]
    CyclotomicOrderMismatch { order: u32, found: u32 },
    #[error("E({0}) is undefined in this presentation")]
    Undefined(FieldElem),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error(transparent)]
    Alg(#[from] AlgError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EFieldPresentation {
    pub name: String,
    pub cyclotomic_order: u32,
    pub transcendentals: Vec<Symbol>,
    pub egraph: Vec<(FieldElem, FieldElem)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EEvalResult {
    Value(FieldElem),
    /// `roots` lists `(val_i, d_i)` for coordinates `p_i/d_i` with `d_i ≥ 2`;
    /// `outside_span` marks an argument outside the Q-span of the graph.
    NeedsExtension { roots: Vec<(FieldElem, BigInt)>, outside_span: bool },
}

impl EEvalResult {
    pub fn value(self) -> Option<FieldElem> {
        match self {
            EEvalResult::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl EFieldPresentation {
    pub fn new(name: &str, cyclotomic_order: u32, transcendentals: Vec<Symbol>) -> Self {
        EFieldPresentation { name: name.to_string(), cyclotomic_order, transcendentals, egraph: Vec::new() }
    }

    pub fn args(&self) -> Vec<FieldElem> {
        self.egraph.iter().map(|(a, _)| a.clone()).collect()
    }

    pub fn values(&self) -> Vec<FieldElem> {
        self.egraph.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Next unused symbol `prefix<k>` with `k > floor`.
    pub fn fresh_symbol(&self, prefix: &str, floor: u64) -> Symbol {
        let max = self.transcendentals.iter().filter_map(|s| s.index_with_prefix(prefix)).max().unwrap_or(0);
        Symbol::indexed(prefix, max.max(floor) + 1)
    }

    fn adopt_symbols(&mut self, e: &FieldElem) {
        for s in e.variables() {
            if !self.transcendentals.contains(&s) {
                self.transcendentals.push(s);
            }
        }
    }

    fn check_order(&self, e: &FieldElem) -> Result<(), EFieldError> {
        let found = e.coefficient_order();
        if self.cyclotomic_order % found != 0 {
            return Err(EFieldError::CyclotomicOrderMismatch { order: self.cyclotomic_order, found });
        }
        Ok(())
    }

    /// Whether `e` only mentions transcendentals of this presentation.
    pub fn contains(&self, e: &FieldElem) -> bool {
        e.variables().iter().all(|s| self.transcendentals.contains(s))
    }

    /// Restricts to a set of symbols: keeps the graph pairs over them.
    pub fn restrict(&self, symbols: &[Symbol]) -> EFieldPresentation {
        let keep: BTreeSet<&Symbol> = symbols.iter().collect();
        let over = |e: &FieldElem| e.variables().iter().all(|s| keep.contains(s));
        EFieldPresentation {
            name: self.name.clone(),
            cyclotomic_order: self.cyclotomic_order,
            transcendentals: self.transcendentals.iter().filter(|s| keep.contains(s)).cloned().collect(),
            egraph: self.egraph.iter().filter(|(a, v)| over(a) && over(v)).cloned().collect(),
        }
    }
}

/// Evaluates `E(a)` from the graph by the homomorphism law.
pub fn e_eval(f: &EFieldPresentation, a: &FieldElem) -> EEvalResult {
    if a.is_zero() {
        return EEvalResult::Value(FieldElem::one());
    }
    let args = f.args();
    let Some(q) = express_in_span(&args, a) else {
        return EEvalResult::NeedsExtension { roots: vec![], outside_span: true };
    };
    let roots: Vec<(FieldElem, BigInt)> = q
        .iter()
        .zip(&f.egraph)
        .filter(|(qi, _)| !qi.is_integer())
        .map(|(qi, (_, v))| (v.clone(), qi.denom().clone()))
        .collect();
    if !roots.is_empty() {
        return EEvalResult::NeedsExtension { roots, outside_span: false };
    }
    let mut out = FieldElem::one();
    for (qi, (_, v)) in q.iter().zip(&f.egraph) {
        if !qi.is_zero() {
            out = out.mul(&v.powi(&qi.to_integer()).expect("graph values are nonzero"));
        }
    }
    EEvalResult::Value(out)
}

/// Adds graph pairs; symbols not yet in the presentation become new transcendentals.
pub fn extend_graph(f: &EFieldPresentation, new_pairs: &[(FieldElem, FieldElem)]) -> Result<EFieldPresentation, EFieldError> {
    let mut out = f.clone();
    for (k, (a, v)) in new_pairs.iter().enumerate() {
        if v.is_zero() {
            return Err(EFieldError::ZeroValue(f.egraph.len() + k));
        }
        out.check_order(a)?;
        out.check_order(v)?;
        out.adopt_symbols(a);
        out.adopt_symbols(v);
        out.egraph.push((a.clone(), v.clone()));
    }
    let rels = linear_relations(&out.args());
    if let Some(r) = rels.into_iter().next() {
        return Err(EFieldError::LinearDependence(to_integer_vector(&primitive(r)).expect("integral")));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub auto_extend: bool,
    /// Fresh names are numbered above this floor.
    pub counter_floor: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { auto_extend: true, counter_floor: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub presentation: EFieldPresentation,
    pub d: Vec<FieldElem>,
    pub ed: Vec<FieldElem>,
    /// Values given to the locus parameters of the variety.
    pub assignment: BTreeMap<Symbol, FieldElem>,
}

struct Fresh {
    used: BTreeSet<Symbol>,
    floor: u64,
}

impl Fresh {
    fn next(&mut self, prefix: &str) -> Symbol {
        let max = self.used.iter().filter_map(|s| s.index_with_prefix(prefix)).max().unwrap_or(0);
        let s = Symbol::indexed(prefix, max.max(self.floor) + 1);
        self.used.insert(s.clone());
        s
    }
}

/// Realizes an exponential point on `v` in a free extension of `f`.
///
/// Coordinates with a prescribed exponential are reduced first, so that the
/// free ones are expressed through them rather than the other way round. If
/// that basis forces a root or a clash, a few other coordinate orders are
/// tried before giving up.
pub fn solve(f: &EFieldPresentation, v: &ParametricVariety, opts: SolveOptions) -> Result<SolveOutcome, EFieldError> {
    v.validate()?;
    let n = v.dim();
    let constrained: Vec<usize> = (0..n).filter(|&i| !v.free_y[i]).collect();
    let free: Vec<usize> = (0..n).filter(|&i| v.free_y[i]).collect();
    let free_rev: Vec<usize> = free.iter().rev().copied().collect();
    let cat = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
    let mut orders = vec![
        cat(&constrained, &free),
        (0..n).collect(),
        cat(&free, &constrained),
        cat(&constrained, &free_rev),
        cat(&free_rev, &constrained),
        (0..n).rev().collect(),
    ];
    // Then every basis of the right size, most constrained coordinates first.
    let k = reduce(v).k();
    let mut bases = subsets(n, k);
    bases.sort_by_key(|b| std::cmp::Reverse(b.iter().filter(|&&i| !v.free_y[i]).count()));
    for b in bases {
        let rest: Vec<usize> = (0..n).filter(|i| !b.contains(i)).collect();
        orders.push(cat(&b, &rest));
    }
    let mut first_err = None;
    let mut tried: Vec<&Vec<usize>> = Vec::new();
    for order in &orders {
        if tried.contains(&order) {
            continue;
        }
        if tried.len() == MAX_BASIS_ATTEMPTS {
            break;
        }
        tried.push(order);
        match solve_permuted(f, v, order, opts) {
            Err(e @ (EFieldError::RootRequired { .. } | EFieldError::Inconsistent(_))) => {
                first_err.get_or_insert(e);
            }
            other => return other,
        }
    }
    Err(first_err.expect("at least one order was tried"))
}

const MAX_BASIS_ATTEMPTS: usize = 64;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if k > n {
        return Vec::new();
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

fn solve_permuted(
    f: &EFieldPresentation,
    v: &ParametricVariety,
    order: &[usize],
    opts: SolveOptions,
) -> Result<SolveOutcome, EFieldError> {
    let pick = |xs: &[FieldElem]| order.iter().map(|&i| xs[i].clone()).collect::<Vec<_>>();
    let permuted = ParametricVariety {
        base_params: v.base_params.clone(),
        locus_params: v.locus_params.clone(),
        x: pick(&v.x),
        y: pick(&v.y),
        free_y: order.iter().map(|&i| v.free_y[i]).collect(),
    };
    let mut out = solve_in_order(f, &permuted, opts)?;
    let mut d = vec![FieldElem::zero(); v.dim()];
    let mut ed = vec![FieldElem::zero(); v.dim()];
    for (k, &i) in order.iter().enumerate() {
        d[i] = out.d[k].clone();
        ed[i] = out.ed[k].clone();
    }
    out.d = d;
    out.ed = ed;
    Ok(out)
}

fn solve_in_order(f: &EFieldPresentation, v: &ParametricVariety, opts: SolveOptions) -> Result<SolveOutcome, EFieldError> {
    if let Some(s) = v.base_params.iter().find(|s| !f.transcendentals.contains(s)) {
        return Err(EFieldError::UnknownSymbol(s.to_string()));
    }
    for e in v.x.iter().chain(&v.y) {
        f.check_order(e)?;
    }
    let r = reduce(v);
    let cert = additive_freeness(&r.vprime);
    if cert.verdict != Verdict::Free {
        return Err(EFieldError::NotAdditivelyFree(cert));
    }
    let mut fresh = Fresh { used: f.transcendentals.iter().cloned().collect(), floor: opts.counter_floor };
    let mut out = f.clone();

    let flagged: BTreeMap<&Symbol, usize> = v
        .y
        .iter()
        .enumerate()
        .filter(|(i, _)| v.free_y[*i])
        .map(|(i, y)| (y.as_var().expect("flagged coordinates are parameters"), i))
        .collect();
    let binding = if r.n.is_one() && opts.auto_extend {
        let first = bind_locus_params(f, v, &r, &flagged, &[])?;
        // Selected coordinates that binding turns into base constants join the offsets.
        let mut constant = Vec::new();
        for &i in &r.index_map {
            let x = v.x[i].substitute(&first.bound)?;
            if x.variables().iter().all(|s| f.transcendentals.contains(s)) {
                constant.push((i, x));
            }
        }
        if constant.is_empty() {
            first
        } else {
            bind_locus_params(f, v, &r, &flagged, &constant)?
        }
    } else {
        Binding { bound: BTreeMap::new(), offsets: Vec::new() }
    };
    let bound = &binding.bound;
    let mut assignment: BTreeMap<Symbol, FieldElem> = BTreeMap::new();
    for p in &v.locus_params {
        if !flagged.contains_key(p) && !bound.contains_key(p) {
            let c = fresh.next("_c");
            out.transcendentals.push(c.clone());
            assignment.insert(p.clone(), FieldElem::var(c));
        }
    }
    // Selected free coordinates get fresh exponentials up front, since
    // bound parameters may be expressed through them.
    for &i in &r.index_map {
        if v.free_y[i] {
            let s = fresh.next("_r");
            out.transcendentals.push(s.clone());
            let p = v.y[i].as_var().expect("flagged coordinates are parameters");
            assignment.insert(p.clone(), FieldElem::var(s));
        }
    }
    let mut placeholders = BTreeMap::new();
    for (_, e) in &binding.offsets {
        if !bound.contains_key(e) {
            let g = fresh.next("_g");
            out.transcendentals.push(g.clone());
            placeholders.insert(e.clone(), FieldElem::var(g));
        }
    }
    let mut scope = assignment.clone();
    scope.extend(placeholders.clone());
    for (p, e) in bound {
        let value = e.substitute(&scope)?;
        if !binding.offsets.iter().any(|(_, s)| s == p) {
            assignment.insert(p.clone(), value.clone());
        }
        placeholders.insert(p.clone(), value);
    }
    let offset_pairs: Vec<(FieldElem, FieldElem)> =
        binding.offsets.iter().map(|(g, e)| (g.clone(), placeholders[e].clone())).collect();
    out = extend_graph(&out, &offset_pairs)?;
    let n_big = r.n.clone();
    let n_rat = Rat::from_integer(n_big.clone());
    let xs: Vec<FieldElem> = v.x.iter().map(|e| e.substitute(&assignment)).collect::<Result<_, _>>()?;
    let ys: Vec<FieldElem> = v.y.iter().map(|e| e.substitute(&assignment)).collect::<Result<_, _>>()?;

    // Generic point of V' and its exponentials.
    let mut c = Vec::with_capacity(r.k());
    let mut ec = Vec::with_capacity(r.k());
    for &i in &r.index_map {
        let arg = xs[i].scale_rat(&n_rat.recip());
        let val = match e_eval(&out, &arg) {
            // Bound parameters can land a coordinate in the known span.
            EEvalResult::Value(w) if v.free_y[i] => w,
            EEvalResult::Value(w) if n_big.is_one() && w == ys[i] => w,
            EEvalResult::Value(w) => {
                return Err(EFieldError::Inconsistent(format!("E({arg}) = {w}, but the variety needs {}", ys[i])));
            }
            _ if v.free_y[i] || n_big.is_one() => {
                out = extend_graph(&out, &[(arg.clone(), ys[i].clone())])?;
                ys[i].clone()
            }
            _ => return Err(EFieldError::RootRequired { arg, value: ys[i].clone(), order: n_big }),
        };
        c.push(arg);
        ec.push(val);
    }

    // E(b_i) for the remaining coordinates, constrained ones first.
    let selected: BTreeSet<usize> = r.index_map.iter().copied().collect();
    let mut eb: BTreeMap<usize, FieldElem> = BTreeMap::new();
    let rest: Vec<usize> = (0..v.dim()).filter(|i| !selected.contains(i)).collect();
    let ordered = rest.iter().filter(|&&i| !v.free_y[i]).chain(rest.iter().filter(|&&i| v.free_y[i]));
    for &i in ordered {
        let b = &r.b[i];
        let required = if v.free_y[i] {
            None
        } else {
            let mut prod = FieldElem::one();
            for (j, cj) in ec.iter().enumerate() {
                let e = r.scaled_entry(i, j);
                if !e.is_zero() {
                    prod = prod.mul(&cj.powi(&e)?);
                }
            }
            Some(ys[i].div(&prod)?)
        };
        let known = e_eval(&out, b);
        let value = match (known, required) {
            (EEvalResult::Value(val), Some(req)) => {
                if val != req {
                    return Err(EFieldError::Inconsistent(format!("E({b}) = {val}, but the variety needs {req}")));
                }
                val
            }
            (EEvalResult::Value(val), None) => val,
            (EEvalResult::NeedsExtension { outside_span: true, .. }, req) if opts.auto_extend => {
                let val = match req {
                    Some(req) => req,
                    None => {
                        let g = fresh.next("_g");
                        out.transcendentals.push(g.clone());
                        FieldElem::var(g)
                    }
                };
                out = extend_graph(&out, &[(b.clone(), val.clone())])?;
                val
            }
            (EEvalResult::NeedsExtension { outside_span: true, .. }, _) => {
                return Err(EFieldError::MissingExponential(b.clone()));
            }
            (EEvalResult::NeedsExtension { roots, .. }, _) => {
                let order = roots.iter().fold(BigInt::one(), |l, (_, d)| l.lcm(d));
                return Err(EFieldError::RootRequired { arg: b.clone(), value: FieldElem::one(), order });
            }
        };
        eb.insert(i, value);
    }
    let (d, ed) = pullback(&r, &c, &ec, &mut |i, _| eb.get(&i).cloned())?;

    for (p, &i) in &flagged {
        assignment.insert((*p).clone(), ed[i].clone());
    }
    for i in 0..v.dim() {
        if d[i] != xs[i] {
            return Err(EFieldError::Inconsistent(format!("coordinate {i} pulls back to {} instead of {}", d[i], xs[i])));
        }
        let yi = v.y[i].substitute(&assignment)?;
        if yi != ed[i] {
            return Err(EFieldError::Inconsistent(format!("E(d_{i}) = {} but Y_{i} = {yi}", ed[i])));
        }
        if e_eval(&out, &d[i]) != EEvalResult::Value(ed[i].clone()) {
            return Err(EFieldError::Inconsistent(format!("E({}) does not evaluate to {}", d[i], ed[i])));
        }
    }
    Ok(SolveOutcome { presentation: out, d, ed, assignment })
}

/// Locus parameters and offset exponentials forced by the dependent coordinates.
struct Binding {
    /// Values of bound parameters, over the unbound ones.
    bound: BTreeMap<Symbol, FieldElem>,
    /// Lattice basis of the offsets outside the graph span, each with the
    /// placeholder standing for its exponential.
    offsets: Vec<(FieldElem, Symbol)>,
}

/// A Z-basis of the lattice generated by `elems`, as elements.
fn lattice_basis(elems: &[FieldElem]) -> Option<Vec<FieldElem>> {
    let mut beta: Vec<FieldElem> = Vec::new();
    for e in elems {
        let mut trial = beta.clone();
        trial.push(e.clone());
        if linear_relations(&trial).is_empty() {
            beta = trial;
        }
    }
    let coords: Vec<Vec<Rat>> = elems.iter().map(|e| express_in_span(&beta, e)).collect::<Option<_>>()?;
    let den = coords.iter().flatten().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let rows: Vec<Vec<BigInt>> = coords
        .iter()
        .map(|row| row.iter().map(|q| (q * Rat::from_integer(den.clone())).to_integer()).collect())
        .collect();
    Some(
        hermite_combinations(rows)
            .iter()
            .map(|u| elems.iter().zip(u).fold(FieldElem::zero(), |acc, (e, k)| acc.add(&e.scale_int(k))))
            .collect(),
    )
}

/// Solves for parameters forced by the dependent coordinates.
///
/// Offsets `b_i` whose exponential is not yet known are written over a lattice
/// basis with placeholder exponentials, so that every dependent constrained
/// coordinate gives an equation `Y_i = E(b_i)·∏ Y_j^{A_ij}`. Each equation
/// that is linear in an unbound locus parameter (or failing that, a
/// placeholder) is solved for it.
fn bind_locus_params(
    f: &EFieldPresentation,
    v: &ParametricVariety,
    r: &ReductionResult,
    flagged: &BTreeMap<&Symbol, usize>,
    constant: &[(usize, FieldElem)],
) -> Result<Binding, EFieldError> {
    let selected: BTreeSet<usize> = r.index_map.iter().copied().collect();
    let dependent: Vec<usize> = (0..v.dim()).filter(|i| !selected.contains(i)).collect();
    let mut unknown: Vec<FieldElem> = Vec::new();
    let offsets_of = dependent.iter().map(|&i| r.b[i].clone()).chain(constant.iter().map(|(_, x)| x.clone()));
    for b in offsets_of {
        let b = &b;
        if !b.is_zero()
            && !unknown.contains(b)
            && matches!(e_eval(f, b), EEvalResult::NeedsExtension { outside_span: true, .. })
        {
            unknown.push(b.clone());
        }
    }
    let mut scratch = f.clone();
    let mut offsets = Vec::new();
    if let Some(gamma) = lattice_basis(&unknown) {
        let taken: BTreeSet<&Symbol> = f.transcendentals.iter().chain(&v.locus_params).collect();
        let placeholders: Vec<Symbol> = (1..)
            .map(|k| Symbol::indexed("_e", k))
            .filter(|s| !taken.contains(s))
            .take(gamma.len())
            .collect();
        let pairs: Vec<(FieldElem, FieldElem)> =
            gamma.iter().cloned().zip(placeholders.iter().map(|s| FieldElem::var(s.clone()))).collect();
        if let Ok(g) = extend_graph(f, &pairs) {
            scratch = g;
            offsets = gamma.into_iter().zip(placeholders).collect();
        }
    }
    let mut bound: BTreeMap<Symbol, FieldElem> = BTreeMap::new();
    // Dependent coordinates, then selected ones that are constant.
    let mut equations: Vec<(FieldElem, FieldElem)> = Vec::new();
    for &i in dependent.iter().filter(|&&i| !v.free_y[i]) {
        let mut prod = FieldElem::one();
        for (j, &k) in r.index_map.iter().enumerate() {
            let e = r.scaled_entry(i, j);
            if !e.is_zero() {
                prod = prod.mul(&v.y[k].powi(&e)?);
            }
        }
        equations.push((v.y[i].div(&prod)?, r.b[i].clone()));
    }
    for (i, x) in constant.iter().filter(|(i, _)| !v.free_y[*i]) {
        equations.push((v.y[*i].clone(), x.clone()));
    }
    for (required, b) in equations {
        let EEvalResult::Value(eb) = e_eval(&scratch, &b) else { continue };
        let q = required.div(&eb)?.substitute(&bound)?;
        let eq = FieldElem::from_poly(q.numer().sub(q.denom()));
        if eq.is_zero() {
            continue;
        }
        let linear = |p: &Symbol| !bound.contains_key(p) && eq.numer().degree_in(p) == 1 && !eq.derivative(p).mentions(p);
        let pick = v
            .locus_params
            .iter()
            .filter(|p| !flagged.contains_key(p))
            .chain(offsets.iter().map(|(_, e)| e))
            .find(|p| linear(p));
        let Some(p) = pick else { continue };
        let a = eq.derivative(p);
        let c = eq.sub(&a.mul(&FieldElem::var(p.clone())));
        let value = c.neg().div(&a)?;
        let one: BTreeMap<Symbol, FieldElem> = [(p.clone(), value.clone())].into();
        for e in bound.values_mut() {
            *e = e.substitute(&one)?;
        }
        bound.insert(p.clone(), value);
    }
    Ok(Binding { bound, offsets })
}

/// Evaluates a term at an assignment of its variables, computing `E` from the graph.
pub fn eval_term(f: &EFieldPresentation, t: &ETerm, env: &BTreeMap<Symbol, FieldElem>) -> Result<FieldElem, EFieldError> {
    Ok(match t {
        ETerm::Int(n) => FieldElem::from_rat(Rat::from_integer(n.clone())),
        ETerm::Rat(r) => FieldElem::from_rat(r.clone()),
        ETerm::Var(s) => match env.get(s) {
            Some(v) => v.clone(),
            None if f.transcendentals.contains(s) => FieldElem::var(s.clone()),
            None => return Err(EFieldError::UnknownSymbol(s.to_string())),
        },
        ETerm::Add(a, b) => eval_term(f, a, env)?.add(&eval_term(f, b, env)?),
        ETerm::Sub(a, b) => eval_term(f, a, env)?.sub(&eval_term(f, b, env)?),
        ETerm::Mul(a, b) => eval_term(f, a, env)?.mul(&eval_term(f, b, env)?),
        ETerm::Pow(a, e) => eval_term(f, a, env)?.pow(*e),
        ETerm::Exp(a) => {
            let arg = eval_term(f, a, env)?;
            e_eval(f, &arg).value().ok_or(EFieldError::Undefined(arg))?
        }
    })
}

/// Whether every atom of the system holds at `env`.
pub fn eval_system(f: &EFieldPresentation, s: &ESystem, env: &BTreeMap<Symbol, FieldElem>) -> Result<bool, EFieldError> {
    for a in &s.atoms {
        let l = eval_term(f, &a.lhs, env)?;
        let r = eval_term(f, &a.rhs, env)?;
        let holds = match a.rel {
            Rel::Eq => l == r,
            Rel::Neq => l != r,
        };
        if !holds {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub variety: ParametricVariety,
    pub outcome: SolveOutcome,
    /// Values of the unknowns of the original system.
    pub env: BTreeMap<Symbol, FieldElem>,
}

/// Solves a system over `f`: inequations are eliminated, the system is
/// flattened and solved as a variety, and the original atoms are re-checked.
/// Symbols of the system that are transcendentals of `f` act as coefficients.
pub fn realize_system(f: &EFieldPresentation, s: &ESystem, opts: SolveOptions) -> Result<Realization, EFieldError> {
    let params: Vec<Symbol> = s.symbols().into_iter().filter(|x| f.transcendentals.contains(x)).collect();
    let fs = flatten(&eliminate_inequations(s), &params)?;
    let variety = from_flat(&fs, &f.transcendentals)?;
    let outcome = solve(f, &variety, opts)?;
    let unknowns = s.symbols();
    let env: BTreeMap<Symbol, FieldElem> = fs
        .xvars
        .iter()
        .zip(&outcome.d)
        .filter(|(x, _)| unknowns.contains(*x))
        .map(|(x, d)| (x.clone(), d.clone()))
        .collect();
    if !eval_system(&outcome.presentation, s, &env)? {
        return Err(EFieldError::Inconsistent("the solution does not satisfy the original system".into()));
    }
    Ok(Realization { variety, outcome, env })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullPresentation {
    pub generators: Vec<FieldElem>,
    pub closed_under_graph: bool,
}

fn jacobian_row(e: &FieldElem, vars: &[Symbol]) -> Vec<FieldElem> {
    vars.iter().map(|v| e.derivative(v)).collect()
}

/// Closes `a` under the graph: whenever an integer combination of arguments is
/// algebraic over the current generators, its value is adjoined (unless it is
/// itself already algebraic over them).
pub fn hull(f: &EFieldPresentation, a: &[FieldElem]) -> HullPresentation {
    let vars = &f.transcendentals;
    let mut gens: Vec<FieldElem> = a.to_vec();
    let arg_rows: Vec<Vec<FieldElem>> = f.egraph.iter().map(|(x, _)| jacobian_row(x, vars)).collect();
    // `d(∏ v_i^z_i)` is a multiple of `Σ z_i dv_i / v_i`, which stays small.
    let log_rows: Vec<Vec<FieldElem>> = f
        .egraph
        .iter()
        .map(|(_, v)| {
            let inv = v.inv().expect("graph values are nonzero");
            jacobian_row(v, vars).iter().map(|d| d.mul(&inv)).collect()
        })
        .collect();
    let mut rows: Vec<Vec<FieldElem>> = gens.iter().map(|g| jacobian_row(g, vars)).collect();
    let mut rank = ff_rank(&rows);
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b11);
    loop {
        let lattice = algebraic_combinations(&rows, rank, &arg_rows, vars, &mut rng);
        let mut grew = false;
        for z in lattice {
            let mut with_val = rows.clone();
            with_val.push(combine_rows(&log_rows, &z));
            if ff_rank(&with_val) > rank {
                let mut val = FieldElem::one();
                for (zi, (_, v)) in z.iter().zip(&f.egraph) {
                    if !zi.is_zero() {
                        val = val.mul(&v.powi(zi).expect("graph values are nonzero"));
                    }
                }
                gens.push(val);
                rows = with_val;
                rank += 1;
                grew = true;
                break;
            }
        }
        if !grew {
            return HullPresentation { generators: gens, closed_under_graph: true };
        }
    }
}

fn combine_rows(rows: &[Vec<FieldElem>], z: &[BigInt]) -> Vec<FieldElem> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|c| {
            rows.iter()
                .zip(z)
                .filter(|(_, zi)| !zi.is_zero())
                .fold(FieldElem::zero(), |acc, (r, zi)| acc.add(&r[c].scale_int(zi)))
        })
        .collect()
}

/// Saturated lattice of `z` with `Σ z_i args_i` in the span of `rows`.
///
/// Each random specialization gives linear conditions on `z` that the exact
/// lattice satisfies; conditions are collected until the solution space stops
/// shrinking, and the result is then confirmed exactly. If confirmation keeps
/// failing the computation falls back to elimination over the function field.
fn algebraic_combinations(
    rows: &[Vec<FieldElem>],
    rank: usize,
    args: &[Vec<FieldElem>],
    vars: &[Symbol],
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<BigInt>> {
    if args.is_empty() {
        return Vec::new();
    }
    let mut conditions: Vec<Vec<Rat>> = Vec::new();
    let (mut dim, mut stable) = (args.len(), 0);
    for _ in 0..24 {
        let Some(more) = point_conditions(rows, rank, args, vars, rng) else {
            continue;
        };
        conditions.extend(more);
        let m = if conditions.is_empty() {
            QMatrix::zeros(1, args.len())
        } else {
            QMatrix::from_rows(conditions.clone()).expect("rows of equal length")
        };
        let d = args.len() - m.rank();
        stable = if d < dim { 0 } else { stable + 1 };
        dim = d;
        if dim == 0 {
            return Vec::new();
        }
        if stable < 2 {
            continue;
        }
        let lattice = m.integer_kernel_basis();
        let confirmed = lattice.iter().all(|z| {
            let mut m = rows.to_vec();
            m.push(combine_rows(args, z));
            ff_rank(&m) == rank
        });
        if confirmed {
            return lattice;
        }
    }
    let space = FieldRowSpace::new(rows);
    let residuals: Vec<Vec<FieldElem>> = args.iter().map(|r| space.reduce(r)).collect();
    relation_matrix(&residuals).integer_kernel_basis()
}

/// Linear conditions on `z` at one random point, or `None` if the point is
/// a pole or lowers the rank of `rows`.
fn point_conditions(
    rows: &[Vec<FieldElem>],
    rank: usize,
    args: &[Vec<FieldElem>],
    vars: &[Symbol],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Vec<Rat>>> {
    let point: BTreeMap<Symbol, FieldElem> =
        vars.iter().map(|v| (v.clone(), FieldElem::from_int(rng.gen_range(-1000..=1000)))).collect();
    let eval = |r: &Vec<FieldElem>| -> Option<Vec<Rat>> {
        r.iter().map(|e| e.substitute(&point).ok()?.as_rational()).collect()
    };
    let rows_p: Vec<Vec<Rat>> = rows.iter().map(eval).collect::<Option<_>>()?;
    let args_p: Vec<Vec<Rat>> = args.iter().map(eval).collect::<Option<_>>()?;
    let width = vars.len();
    if width == 0 {
        return Some(Vec::new());
    }
    let transpose = |cols: &[&Vec<Rat>]| {
        QMatrix::from_rows((0..width).map(|c| cols.iter().map(|col| col[c].clone()).collect()).collect())
    };
    if !rows_p.is_empty() && transpose(&rows_p.iter().collect::<Vec<_>>()).ok()?.rank() != rank {
        return None;
    }
    // Kernel of [rows | args], projected to the `z` block, is the admissible
    // space at this point; its orthogonal complement gives the conditions.
    let cols: Vec<&Vec<Rat>> = rows_p.iter().chain(&args_p).collect();
    let k = rows_p.len();
    let basis: Vec<Vec<Rat>> = transpose(&cols).ok()?.kernel_basis().into_iter().map(|v| v[k..].to_vec()).collect();
    if basis.is_empty() {
        return Some((0..args.len()).map(|i| unit(args.len(), i)).collect());
    }
    Some(QMatrix::from_rows(basis).ok()?.kernel_basis())
}

fn unit(n: usize, i: usize) -> Vec<Rat> {
    (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()
}

/// `τ` with `E(1) = τ` and `E(τ^n) = q_n` for the given prefix `q_2, q_3, …`.
pub fn minimal_ea_family(prefix: &[Rat]) -> Result<EFieldPresentation, EFieldError> {
    let tau = Symbol::new("tau");
    let mut f = EFieldPresentation::new("minimal_ea", 1, vec![tau.clone()]);
    f.egraph.push((FieldElem::one(), FieldElem::var(tau.clone())));
    for (k, q) in prefix.iter().enumerate() {
        if q.is_zero() {
            return Err(EFieldError::ZeroValue(k + 1));
        }
        f.egraph.push((FieldElem::var(tau.clone()).pow(k as u32 + 2), FieldElem::from_rat(q.clone())));
    }
    Ok(f)
}

/// A common graph argument with different values: the two presentations
/// cannot be jointly embedded over their shared symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphConflict {
    pub arg: FieldElem,
    pub left: FieldElem,
    pub right: FieldElem,
}

impl GraphConflict {
    pub fn verify(&self, f: &EFieldPresentation, g: &EFieldPresentation) -> bool {
        self.left != self.right
            && e_eval(f, &self.arg) == EEvalResult::Value(self.left.clone())
            && e_eval(g, &self.arg) == EEvalResult::Value(self.right.clone())
    }
}

/// First graph argument of `f` (in graph order) on which `g` disagrees.
pub fn graph_conflict(f: &EFieldPresentation, g: &EFieldPresentation) -> Option<GraphConflict> {
    f.egraph.iter().find_map(|(a, v)| match e_eval(g, a) {
        EEvalResult::Value(w) if w != *v => Some(GraphConflict { arg: a.clone(), left: v.clone(), right: w }),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ZeroValue(usize),
    Dependent(Vec<BigInt>),
    UndeclaredSymbol(String),
    OrderMismatch(u32),
    Homomorphism(Vec<BigInt>),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ZeroValue(i) => write!(f, "nonzero value: egraph[{i}] has value 0"),
            Violation::Dependent(m) => write!(f, "linear independence: dependency {m:?}"),
            Violation::UndeclaredSymbol(s) => write!(f, "declared symbols: `{s}` is not a transcendental"),
            Violation::OrderMismatch(o) => write!(f, "cyclotomic order: coefficient of order {o}"),
            Violation::Homomorphism(z) => write!(f, "homomorphism law fails at {z:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentationReport {
    pub violations: Vec<Violation>,
    pub samples: usize,
}

impl PresentationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the invariants of a presentation and spot-checks the homomorphism law.
pub fn check_presentation(f: &EFieldPresentation, samples: usize, seed: u64) -> PresentationReport {
    let mut violations = Vec::new();
    for (i, (a, v)) in f.egraph.iter().enumerate() {
        if v.is_zero() {
            violations.push(Violation::ZeroValue(i));
        }
        for e in [a, v] {
            for s in e.variables() {
                if !f.transcendentals.contains(&s) {
                    violations.push(Violation::UndeclaredSymbol(s.to_string()));
                }
            }
            let o = e.coefficient_order();
            if f.cyclotomic_order % o != 0 {
                violations.push(Violation::OrderMismatch(o));
            }
        }
    }
    if let Some(r) = linear_relations(&f.args()).into_iter().next() {
        violations.push(Violation::Dependent(to_integer_vector(&primitive(r)).expect("integral")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut done = 0;
    if violations.is_empty() && !f.egraph.is_empty() {
        for _ in 0..samples {
            let z: Vec<BigInt> = f.egraph.iter().map(|_| BigInt::from(rng.gen_range(-3i64..=3))).collect();
            let arg = f.egraph.iter().zip(&z).fold(FieldElem::zero(), |acc, ((a, _), zi)| acc.add(&a.scale_int(zi)));
            let expect = f
                .egraph
                .iter()
                .zip(&z)
                .fold(FieldElem::one(), |acc, ((_, v), zi)| acc.mul(&v.powi(zi).expect("nonzero")));
            if e_eval(f, &arg) != EEvalResult::Value(expect) {
                violations.push(Violation::Homomorphism(z));
            }
            done += 1;
        }
    }
    PresentationReport { violations, samples: done }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &str) -> Symbol {
        Symbol::new(x)
    }

    fn v(x: &str) -> FieldElem {
        FieldElem::var(s(x))
    }

    fn i(n: i64) -> FieldElem {
        FieldElem::from_int(n)
    }

    fn pres(ts: &[&str], graph: &[(FieldElem, FieldElem)]) -> EFieldPresentation {
        let mut f = EFieldPresentation::new("F", 1, ts.iter().map(|t| s(t)).collect());
        f.egraph = graph.to_vec();
        f
    }

    #[test]
    fn eval_examples() {
        let f = pres(&["a", "b"], &[(v("a"), v("b"))]);
        assert_eq!(e_eval(&f, &i(0)), EEvalResult::Value(i(1)));
        assert_eq!(e_eval(&f, &v("a").scale_int(&3.into())), EEvalResult::Value(v("b").pow(3)));
        assert_eq!(e_eval(&f, &v("a").scale_int(&(-1).into())), EEvalResult::Value(i(1).div(&v("b")).unwrap()));
        let half = v("a").scale_rat(&Rat::new(1.into(), 2.into()));
        assert_eq!(
            e_eval(&f, &half),
            EEvalResult::NeedsExtension { roots: vec![(v("b"), BigInt::from(2))], outside_span: false }
        );
        assert_eq!(e_eval(&f, &v("b")), EEvalResult::NeedsExtension { roots: vec![], outside_span: true });
    }

    #[test]
    fn extend_examples() {
        let f = pres(&[], &[]);
        let g = extend_graph(&f, &[(v("t1"), v("t2"))]).unwrap();
        assert_eq!(g.transcendentals, vec![s("t1"), s("t2")]);
        let f = pres(&["a", "b", "c"], &[(v("a"), v("b"))]);
        let err = extend_graph(&f, &[(v("a").scale_int(&2.into()), v("c"))]).unwrap_err();
        assert_eq!(err, EFieldError::LinearDependence(vec![BigInt::from(-2), BigInt::from(1)]));
        let g = extend_graph(&f, &[(v("k"), i(1))]).unwrap();
        for z in -3..=3 {
            assert_eq!(e_eval(&g, &v("k").scale_int(&z.into())), EEvalResult::Value(i(1)));
        }
        assert_eq!(extend_graph(&f, &[(v("k"), i(0))]), Err(EFieldError::ZeroValue(1)));
    }

    #[test]
    fn solve_surjectivity() {
        let f = pres(&[], &[]);
        let var = ParametricVariety::new(vec![], vec![s("u")], vec![v("u")], vec![i(5)]).unwrap();
        let out = solve(&f, &var, SolveOptions::default()).unwrap();
        assert_eq!(out.d, vec![v("_c1")]);
        assert_eq!(out.ed, vec![i(5)]);
        assert_eq!(out.presentation.egraph, vec![(v("_c1"), i(5))]);
    }

    #[test]
    fn solve_kernel_witness() {
        let f = pres(&["t", "d"], &[]);
        let var = ParametricVariety::new(
            vec![s("t"), s("d")],
            vec![s("u")],
            vec![v("u"), v("t").mul(&v("u"))],
            vec![i(1), v("d")],
        )
        .unwrap();
        let out = solve(&f, &var, SolveOptions::default()).unwrap();
        let a = &out.d[0];
        assert_eq!(e_eval(&out.presentation, a), EEvalResult::Value(i(1)));
        assert_eq!(e_eval(&out.presentation, &v("t").mul(a)), EEvalResult::Value(v("d")));
    }

    #[test]
    fn solve_with_relation() {
        let f = pres(&[], &[]);
        let var = ParametricVariety::new(
            vec![],
            vec![s("u"), s("r1"), s("r2")],
            vec![v("u"), i(2).mul(&v("u")).add(&i(3))],
            vec![v("r1"), v("r2")],
        )
        .unwrap();
        let out = solve(&f, &var, SolveOptions::default()).unwrap();
        let p = &out.presentation;
        assert!(p.egraph.contains(&(i(3), v("_g1"))));
        assert_eq!(out.ed[1], v("_r1").pow(2).mul(&v("_g1")));
        assert_eq!(e_eval(p, &out.d[1]), EEvalResult::Value(out.ed[1].clone()));
        let err = solve(&f, &var, SolveOptions { auto_extend: false, counter_floor: 0 }).unwrap_err();
        assert_eq!(err, EFieldError::MissingExponential(i(3)));
    }

    #[test]
    fn solve_respects_floor_and_conflicts() {
        let f = pres(&[], &[(i(3), i(7))]);
        let var = ParametricVariety::new(
            vec![],
            vec![s("u")],
            vec![v("u"), v("u").add(&i(3))],
            vec![i(2), i(15)],
        )
        .unwrap();
        let err = solve(&f, &var, SolveOptions::default()).unwrap_err();
        assert!(matches!(err, EFieldError::Inconsistent(_)));
        let var = ParametricVariety::new(vec![], vec![s("u")], vec![v("u"), v("u").add(&i(3))], vec![i(2), i(14)]).unwrap();
        let out = solve(&f, &var, SolveOptions { auto_extend: true, counter_floor: 40 }).unwrap();
        assert_eq!(out.d[0], v("_c41"));
    }

    #[test]
    fn hull_examples() {
        let f = pres(&["t1"], &[]);
        assert_eq!(hull(&f, &[v("t1")]).generators, vec![v("t1")]);
        let f = pres(&["t1", "t2"], &[(v("t1"), v("t2"))]);
        assert_eq!(hull(&f, &[v("t1")]).generators, vec![v("t1"), v("t2")]);
        let f = pres(&["t1", "t2", "t3"], &[(v("t1"), v("t2")), (v("t2"), v("t3"))]);
        let h = hull(&f, &[v("t1")]);
        assert_eq!(h.generators, vec![v("t1"), v("t2"), v("t3")]);
        assert!(h.closed_under_graph);
        assert_eq!(hull(&f, &[v("t3")]).generators, vec![v("t3")]);
        let m = minimal_ea_family(&[Rat::from_integer(2.into())]).unwrap();
        assert_eq!(hull(&m, &[]).generators, vec![v("tau")]);
    }

    #[test]
    fn hull_uses_rational_combinations_only() {
        // At any single point t1 + t2·t3 has a gradient in the span of the
        // arguments; over the function field only E(t1) is reachable.
        let f = pres(&["t1", "t2", "t3", "t4"], &[(v("t1"), v("t4")), (v("t2"), v("t3"))]);
        let a = v("t1").add(&v("t2").mul(&v("t3")));
        let h = hull(&f, &[a.clone()]);
        assert_eq!(h.generators, vec![a]);
        let h = hull(&f, &[v("t1"), v("t3")]);
        assert_eq!(h.generators, vec![v("t1"), v("t3"), v("t4")]);
    }

    #[test]
    fn minimal_family() {
        let q = |n: i64| Rat::from_integer(n.into());
        let f = minimal_ea_family(&[q(2), q(3)]).unwrap();
        assert_eq!(
            f.egraph,
            vec![(i(1), v("tau")), (v("tau").pow(2), i(2)), (v("tau").pow(3), i(3))]
        );
        assert_eq!(minimal_ea_family(&[]).unwrap().egraph.len(), 1);
        let g = minimal_ea_family(&[q(2), q(5)]).unwrap();
        let c = graph_conflict(&f, &g).unwrap();
        assert_eq!(c.arg, v("tau").pow(3));
        assert!(c.verify(&f, &g));
        assert_eq!(minimal_ea_family(&[q(0)]), Err(EFieldError::ZeroValue(1)));
        assert!(check_presentation(&f, 20, 1).is_clean());
    }

    #[test]
    fn reports_violations() {
        let f = pres(&["a", "b"], &[(v("a"), i(0))]);
        let rep = check_presentation(&f, 5, 1);
        assert_eq!(rep.violations, vec![Violation::ZeroValue(0)]);
        assert!(rep.violations[0].to_string().starts_with("nonzero value"));
        let f = pres(&["a", "b"], &[(v("a"), v("b")), (v("a").scale_int(&2.into()), v("b"))]);
        let rep = check_presentation(&f, 5, 1);
        assert_eq!(rep.violations, vec![Violation::Dependent(vec![BigInt::from(-2), BigInt::from(1)])]);
    }

    #[test]
    fn evaluates_systems() {
        use crate::exprlang::parse_system;
        let f = pres(&["a", "b"], &[(v("a"), v("b"))]);
        let env: BTreeMap<Symbol, FieldElem> = [(s("x"), v("a"))].into();
        assert!(eval_system(&f, &parse_system("E(2*x) = b^2 & E(x) != 1").unwrap(), &env).unwrap());
        assert!(!eval_system(&f, &parse_system("E(x) = 1").unwrap(), &env).unwrap());
        assert!(matches!(
            eval_system(&f, &parse_system("E(b) = 1").unwrap(), &env),
            Err(EFieldError::Undefined(_))
        ));
    }

    #[test]
    fn realizes_systems() {
        use crate::exprlang::parse_system;
        let f = pres(&["t"], &[]);
        let cases = [
            "E(x) = 2",
            "E(E(x)) = x",
            "t*x1 = x2 & E(x1) = 1 & E(x2) = 3",
            "E(x) != 1 & E(x + t) = t",
            "E(x + 1) = 2 & E(y + 1) = 3",
            "E(x) = 2 & E(2*x) = 4",
        ];
        for text in cases {
            let s = parse_system(text).unwrap();
            let r = realize_system(&f, &s, SolveOptions::default()).unwrap();
            assert!(eval_system(&r.outcome.presentation, &s, &r.env).unwrap(), "{text}");
        }
    }
}
