//! Seeded random instances for property tests and benchmarks.
//!
//! Every generator draws from a caller-supplied [`ChaCha8Rng`], so a seed
//! fixes the whole instance.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::amalg::{restriction_gap, Arrow, EmbeddedPresentation, IndepSystem, Subset, SymbolMap};
use crate::efield::{extend_graph, EFieldPresentation};
use crate::exactalg::{FieldElem, MPoly, Monomial, Rat, Symbol};
use crate::exprlang::{Atom, ESystem, ETerm};
use crate::variety::ParametricVariety;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sym(name: &str) -> Symbol {
    Symbol::new(name)
}

fn var(name: &str) -> FieldElem {
    FieldElem::var(sym(name))
}

/// Random polynomial in `vars` with integer coefficients in `-c..=c`.
pub fn poly(rng: &mut ChaCha8Rng, vars: &[Symbol], max_deg: u32, max_terms: usize, c: i64) -> FieldElem {
    let terms = rng.gen_range(1..=max_terms);
    let mut out = MPoly::zero();
    for _ in 0..terms {
        let mut pairs = Vec::new();
        let mut budget = rng.gen_range(0..=max_deg);
        while budget > 0 && !vars.is_empty() {
            let e = rng.gen_range(1..=budget);
            pairs.push((vars.choose(rng).expect("nonempty").clone(), e));
            budget -= e;
        }
        let coeff = loop {
            let k = rng.gen_range(-c..=c);
            if k != 0 {
                break k;
            }
        };
        out = out.add(&MPoly::from_int(coeff).mul_monomial(&Monomial::from_pairs(pairs)));
    }
    FieldElem::from_poly(out)
}

/// Nonzero element of the base field over `vars`.
pub fn nonzero_elem(rng: &mut ChaCha8Rng, vars: &[Symbol]) -> FieldElem {
    loop {
        let e = poly(rng, vars, 2, 2, 3);
        if !e.is_zero() {
            return e;
        }
    }
}

fn base_constant(rng: &mut ChaCha8Rng, base: &[Symbol]) -> FieldElem {
    match rng.gen_range(0..4) {
        0 => FieldElem::zero(),
        1 => FieldElem::from_rat(Rat::new(rng.gen_range(-5..=5).into(), rng.gen_range(1..=3).into())),
        _ if !base.is_empty() => poly(rng, base, 1, 2, 2),
        _ => FieldElem::from_int(rng.gen_range(-3..=3)),
    }
}

/// Atoms in the locus parameters that are Q(base)-linearly independent
/// modulo constants: distinct monomials and distinct simple fractions.
fn atom_pool(locus: &[Symbol]) -> Vec<FieldElem> {
    let mut pool = Vec::new();
    for (i, u) in locus.iter().enumerate() {
        for e in 1..=3 {
            pool.push(FieldElem::var(u.clone()).pow(e));
        }
        for w in &locus[i + 1..] {
            pool.push(FieldElem::var(u.clone()).mul(&FieldElem::var(w.clone())));
        }
        for c in 1..=2 {
            let den = FieldElem::var(u.clone()).add(&FieldElem::from_int(c));
            pool.push(FieldElem::one().div(&den).expect("nonzero"));
        }
    }
    pool
}

/// Random locus presentation with `n ≤ 4`, at most three locus parameters
/// and rational functions of degree at most three. About half are not
/// additively free, always through a relation with small coefficients.
pub fn variety(rng: &mut ChaCha8Rng) -> ParametricVariety {
    let n = rng.gen_range(1..=4);
    let k = rng.gen_range(1..=3);
    let nb = rng.gen_range(0..=2);
    let base: Vec<Symbol> = (1..=nb).map(|i| Symbol::indexed("t", i)).collect();
    let locus_u: Vec<Symbol> = (1..=k).map(|i| Symbol::indexed("u", i)).collect();
    let mut pool = atom_pool(&locus_u);
    pool.shuffle(rng);
    let independent = if rng.gen_bool(0.5) { n } else { rng.gen_range(1..=n) };
    let (leads, extras) = pool.split_at(independent);
    let coeff = |rng: &mut ChaCha8Rng| -> FieldElem {
        if !base.is_empty() && rng.gen_bool(0.3) {
            poly(rng, &base, 1, 2, 2).add(&FieldElem::one())
        } else {
            FieldElem::from_int(*[1, -1, 2, 3, -2].choose(rng).expect("nonempty"))
        }
    };
    let mut x: Vec<FieldElem> = Vec::with_capacity(n);
    for lead in leads {
        let mut xi = lead.mul(&coeff(rng));
        if rng.gen_bool(0.5) {
            let e = extras.choose(rng).expect("pool is large");
            xi = xi.add(&e.mul(&coeff(rng)));
        }
        x.push(xi.add(&base_constant(rng, &base)));
    }
    for _ in independent..n {
        let mut xi = base_constant(rng, &base);
        for j in 0..independent {
            let m = rng.gen_range(-2..=2);
            xi = xi.add(&x[j].scale_int(&m.into()));
        }
        x.push(xi);
    }
    x.shuffle(rng);
    let mut locus = locus_u;
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        if rng.gen_bool(0.6) {
            let r = Symbol::indexed("r", i as u64 + 1);
            locus.push(r.clone());
            y.push(FieldElem::var(r));
        } else {
            y.push(nonzero_elem(rng, &base));
        }
    }
    ParametricVariety::new(base, locus, x, y).expect("generated varieties are well formed")
}

fn int(n: i64) -> ETerm {
    ETerm::int(n)
}

fn value_term(rng: &mut ChaCha8Rng) -> ETerm {
    match rng.gen_range(0..5) {
        0 => int(2),
        1 => int(3),
        2 => ETerm::Rat(Rat::new(1.into(), 2.into())),
        3 => ETerm::var("t"),
        _ => ETerm::add(ETerm::var("t"), int(1)),
    }
}

fn shift_term(rng: &mut ChaCha8Rng) -> ETerm {
    match rng.gen_range(0..4) {
        0 => int(1),
        1 => int(2),
        2 => ETerm::var("t"),
        _ => ETerm::add(ETerm::var("t"), int(1)),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Shifted,
    Pinned,
    Nested,
    Open,
    Linear,
}

/// Random consistent system over `Q(t)` with at most three unknowns and
/// `E`-depth at most two, drawn from shapes the pipeline supports.
pub fn system(rng: &mut ChaCha8Rng) -> (EFieldPresentation, ESystem) {
    let f = EFieldPresentation::new("F", 1, vec![sym("t")]);
    let names = ["x", "y", "z"];
    let k = rng.gen_range(1..=3);
    let mut roles = Vec::new();
    let mut atoms = Vec::new();
    for i in 0..k {
        let v = ETerm::var(names[i]);
        let role = if i > 0 && rng.gen_bool(0.2) {
            Role::Linear
        } else {
            *[Role::Shifted, Role::Pinned, Role::Nested, Role::Open].choose(rng).expect("nonempty")
        };
        let sign = |rng: &mut ChaCha8Rng, t: ETerm| if rng.gen_bool(0.5) { t } else { ETerm::mul(int(-1), t) };
        match role {
            Role::Shifted => {
                let arg = ETerm::add(sign(rng, v.clone()), shift_term(rng));
                atoms.push(Atom::eq(ETerm::exp(arg), value_term(rng)));
            }
            Role::Pinned => {
                let arg = sign(rng, v.clone());
                atoms.push(Atom::eq(ETerm::exp(arg), value_term(rng)));
            }
            Role::Nested => {
                let rhs = match rng.gen_range(0..3) {
                    0 => v.clone(),
                    1 => ETerm::add(v.clone(), int(1)),
                    _ => ETerm::add(v.clone(), ETerm::var("t")),
                };
                atoms.push(Atom::eq(ETerm::exp(ETerm::exp(v.clone())), rhs));
            }
            Role::Open => {}
            Role::Linear => {
                let w = ETerm::var(names[rng.gen_range(0..i)]);
                let a = *[1, 2, -1, 3].choose(rng).expect("nonempty");
                let rhs = match rng.gen_range(0..3) {
                    0 => ETerm::mul(int(a), w),
                    1 => ETerm::add(ETerm::mul(int(a), w), int(1)),
                    _ => ETerm::add(ETerm::mul(int(a), w), ETerm::var("t")),
                };
                atoms.push(Atom::eq(v.clone(), rhs));
            }
        }
        roles.push(role);
    }
    // Couplings between unconstrained unknowns.
    let open: Vec<usize> = (0..k).filter(|&i| roles[i] == Role::Open).collect();
    if open.len() >= 2 && rng.gen_bool(0.5) {
        let (a, b) = (ETerm::var(names[open[0]]), ETerm::var(names[open[1]]));
        atoms.push(Atom::eq(ETerm::mul(ETerm::exp(a), ETerm::exp(b)), value_term(rng)));
    }
    // Tautologies and inequations.
    for _ in 0..rng.gen_range(0..=2) {
        let i = rng.gen_range(0..k);
        let j = rng.gen_range(0..k);
        let (a, b) = (ETerm::var(names[i]), ETerm::var(names[j]));
        atoms.push(match rng.gen_range(0..4) {
            0 => Atom::eq(ETerm::exp(ETerm::add(a.clone(), b.clone())), ETerm::mul(ETerm::exp(a), ETerm::exp(b))),
            1 => Atom::eq(ETerm::exp(ETerm::mul(int(2), a.clone())), ETerm::pow(ETerm::exp(a), 2)),
            2 => Atom::neq(ETerm::exp(a), int(1)),
            _ => Atom::neq(a, int(rng.gen_range(0..=2))),
        });
    }
    if atoms.is_empty() {
        atoms.push(Atom::neq(ETerm::exp(ETerm::var(names[0])), int(1)));
    }
    (f, ESystem { atoms })
}

/// Random presentation over fresh symbols `prefix1, …`.
pub fn presentation(rng: &mut ChaCha8Rng, name: &str, prefix: &str, order: u32) -> EFieldPresentation {
    let k = rng.gen_range(1..=3);
    let syms: Vec<Symbol> = (1..=k).map(|i| Symbol::indexed(prefix, i)).collect();
    let f = EFieldPresentation::new(name, order, syms.clone());
    let pairs = rng.gen_range(0..=k) as usize;
    extend_randomly(rng, &f, &syms, pairs)
}

/// Adds up to `count` random pairs whose arguments involve `fresh`.
pub fn extend_randomly(rng: &mut ChaCha8Rng, f: &EFieldPresentation, fresh: &[Symbol], count: usize) -> EFieldPresentation {
    extend_where(rng, f, fresh, count, |_| true)
}

/// As [`extend_randomly`], keeping `base` (embedded by `map`) closed: no new
/// argument combination lands in the image of `base`.
pub fn extend_over(
    rng: &mut ChaCha8Rng,
    f: &EFieldPresentation,
    fresh: &[Symbol],
    count: usize,
    base: &EFieldPresentation,
    map: &SymbolMap,
) -> EFieldPresentation {
    extend_where(rng, f, fresh, count, |g| restriction_gap(base, g, map).is_none())
}

fn extend_where(
    rng: &mut ChaCha8Rng,
    f: &EFieldPresentation,
    fresh: &[Symbol],
    count: usize,
    accept: impl Fn(&EFieldPresentation) -> bool,
) -> EFieldPresentation {
    let mut out = f.clone();
    let all = f.transcendentals.clone();
    for _ in 0..count {
        for _attempt in 0..8 {
            let lead = FieldElem::var(fresh.choose(rng).expect("nonempty").clone());
            let arg = lead.scale_int(&rng.gen_range(1..=2).into()).add(&poly(rng, &all, 2, 2, 2));
            let val = nonzero_elem(rng, &all);
            match extend_graph(&out, &[(arg, val)]) {
                Ok(g) if accept(&g) => {
                    out = g;
                    break;
                }
                _ => {}
            }
        }
    }
    out
}

/// A base presentation and two extensions, with renamed copies of the base
/// symbols in each extension.
pub fn amalgamation_triple(rng: &mut ChaCha8Rng) -> (EFieldPresentation, EmbeddedPresentation, EmbeddedPresentation) {
    let base = presentation(rng, "F", "s", 1);
    let mut ext = Vec::new();
    for (name, bprefix, nprefix) in [("L", "p", "a"), ("R", "q", "b")] {
        let rename: SymbolMap = base
            .transcendentals
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), Symbol::indexed(bprefix, i as u64 + 1)))
            .collect();
        let mut amb = EFieldPresentation::new(name, 1, rename.values().cloned().collect());
        amb.egraph = base
            .egraph
            .iter()
            .map(|(a, v)| {
                let r = |e: &FieldElem| e.rename(&|s| rename.get(s).cloned().unwrap_or_else(|| s.clone()));
                (r(a), r(v))
            })
            .collect();
        let k = rng.gen_range(0..=2);
        let fresh: Vec<Symbol> = (1..=k).map(|i| Symbol::indexed(nprefix, i)).collect();
        amb.transcendentals.extend(fresh.iter().cloned());
        if !fresh.is_empty() {
            let count = rng.gen_range(1..=2);
            amb = extend_over(rng, &amb, &fresh, count, &base, &rename);
        }
        ext.push(EmbeddedPresentation { amb, base_name: "F".into(), inclusion: rename });
    }
    let right = ext.pop().expect("two extensions");
    let left = ext.pop().expect("two extensions");
    (base, left, right)
}

fn node_name(a: Subset) -> String {
    let digits: String = (0..32).filter(|i| a >> i & 1 == 1).map(|i| i.to_string()).collect();
    format!("F{digits}")
}

fn identity_arrows(nodes: &BTreeMap<Subset, EFieldPresentation>, n: usize) -> Vec<Arrow> {
    let mut arrows = Vec::new();
    for (&a, fa) in nodes {
        for i in 0..n {
            let b = a | 1 << i;
            if b != a && nodes.contains_key(&b) {
                let map = fa.transcendentals.iter().map(|s| (s.clone(), s.clone())).collect();
                arrows.push(Arrow { from: a, to: b, map });
            }
        }
    }
    arrows
}

/// Random independent `P⁻(n)` system: each index adds its own
/// transcendentals and pairs, and larger nodes may add pairs in symbols of
/// their own.
pub fn indep_system(rng: &mut ChaCha8Rng, n: usize) -> IndepSystem {
    let base = presentation(rng, "F", "s", 1);
    let full: Subset = (1 << n) - 1;
    let mut per_index: Vec<(Vec<Symbol>, Vec<(FieldElem, FieldElem)>)> = Vec::new();
    for i in 0..n {
        let syms = vec![Symbol::new(&format!("x{i}")), Symbol::new(&format!("y{i}"))];
        let mut scratch = base.clone();
        scratch.transcendentals.extend(syms.iter().cloned());
        let before = scratch.egraph.len();
        let count = rng.gen_range(1..=2);
        let identity: SymbolMap = base.transcendentals.iter().map(|s| (s.clone(), s.clone())).collect();
        let grown = extend_over(rng, &scratch, &syms, count, &base, &identity);
        per_index.push((syms, grown.egraph[before..].to_vec()));
    }
    let mut nodes = BTreeMap::new();
    for a in 0..full {
        let mut f = base.clone();
        f.name = node_name(a);
        for i in 0..n {
            if a >> i & 1 == 1 {
                f.transcendentals.extend(per_index[i].0.iter().cloned());
                f.egraph.extend(per_index[i].1.iter().cloned());
            }
        }
        nodes.insert(a, f);
    }
    // Node-owned symbols with pairs linking them to the members' symbols.
    let owners: Vec<Subset> = (0..full).filter(|a: &Subset| a.count_ones() >= 2).collect();
    for &a in &owners {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let z = Symbol::new(&format!("z{}", &node_name(a)[1..]));
        let members: Vec<Symbol> = nodes[&a].transcendentals.clone();
        let val = nonzero_elem(rng, &members);
        for (&b, f) in nodes.iter_mut() {
            if a & !b == 0 {
                f.transcendentals.push(z.clone());
                f.egraph.push((FieldElem::var(z.clone()), val.clone()));
            }
        }
    }
    let arrows = identity_arrows(&nodes, n);
    IndepSystem { n, nodes, arrows }
}

/// Non-independent inputs. Even `kind`: two codimension-one nodes give the
/// same argument different values. Odd `kind`: a node ties the fresh
/// symbol of one index to another index.
pub fn adversarial_system(rng: &mut ChaCha8Rng, n: usize, kind: usize) -> IndepSystem {
    let mut sys = indep_system(rng, n);
    let full: Subset = (1 << n) - 1;
    if kind % 2 == 0 {
        let shared = n - 1;
        let arg = var(&format!("x{shared}")).add(&var(&format!("y{shared}")).pow(2));
        let (left, right) = (full & !1, full & !2);
        for (node, value) in [(left, 2), (right, 3)] {
            for (&b, f) in sys.nodes.iter_mut() {
                if node & !b == 0 {
                    f.egraph.push((arg.clone(), FieldElem::from_int(value)));
                }
            }
        }
    } else {
        let a: Subset = 0b11;
        let tie = (var("y1").pow(3).add(&var("x1")), var("x0").add(&FieldElem::one()));
        for (&b, f) in sys.nodes.iter_mut() {
            if a & !b == 0 {
                f.egraph.push(tie.clone());
            }
        }
    }
    sys
}

/// Random element of the Z-span of the graph arguments.
pub fn span_element(rng: &mut ChaCha8Rng, f: &EFieldPresentation) -> FieldElem {
    f.egraph
        .iter()
        .fold(FieldElem::zero(), |acc, (a, _)| acc.add(&a.scale_int(&rng.gen_range(-3..=3).into())))
}
