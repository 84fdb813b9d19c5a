//! Parametric subvarieties of `G_a^n × G_m^n`, additive freeness and the
//! reduction of a locus to an additively free one.
//!
//! A variety is presented by a generic point `(X, Y)` whose coordinates are
//! rational functions of the base transcendentals and of locus parameters.
//! `Σ m_i X_i` lies in the base field exactly when all its partial derivatives
//! with respect to the locus parameters vanish, which turns freeness into a
//! rational kernel computation.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exactalg::linalg::{express_in_column_span, primitive, relation_matrix, to_integer_vector, FieldRowSpace};
use crate::exactalg::{AlgError, CycElem, FieldElem, MPoly, QMatrix, Rat, Symbol};
use crate::exprlang::FlatSystem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VarietyError {
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("inconsistent system: {0}")]
    Inconsistent(String),
    #[error("invalid variety: {0}")]
    Invalid(String),
    #[error("E({arg}) is not determined (coordinate {index})")]
    MissingExponential { index: usize, arg: FieldElem },
    #[error(transparent)]
    Alg(#[from] AlgError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricVariety {
    pub base_params: Vec<Symbol>,
    pub locus_params: Vec<Symbol>,
    pub x: Vec<FieldElem>,
    pub y: Vec<FieldElem>,
    pub free_y: Vec<bool>,
}

impl ParametricVariety {
    /// Builds a variety and computes the free-coordinate flags.
    pub fn new(
        base_params: Vec<Symbol>,
        locus_params: Vec<Symbol>,
        x: Vec<FieldElem>,
        y: Vec<FieldElem>,
    ) -> Result<Self, VarietyError> {
        let free_y = compute_free_flags(&locus_params, &x, &y);
        let v = ParametricVariety { base_params, locus_params, x, y, free_y };
        v.validate()?;
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn validate(&self) -> Result<(), VarietyError> {
        let bad = |m: String| Err(VarietyError::Invalid(m));
        if self.x.is_empty() {
            return bad("a variety needs at least one coordinate".into());
        }
        if self.x.len() != self.y.len() || self.free_y.len() != self.x.len() {
            return bad("X, Y and free_Y must have equal length".into());
        }
        let base: BTreeSet<&Symbol> = self.base_params.iter().collect();
        let mut seen = BTreeSet::new();
        for s in &self.locus_params {
            if base.contains(s) {
                return bad(format!("locus parameter `{s}` is also a base parameter"));
            }
            if !seen.insert(s) {
                return bad(format!("locus parameter `{s}` listed twice"));
            }
        }
        for (i, e) in self.x.iter().chain(&self.y).enumerate() {
            if let Some(s) = e.variables().into_iter().find(|s| !base.contains(s) && !seen.contains(s)) {
                return bad(format!("coordinate {i} mentions undeclared symbol `{s}`"));
            }
        }
        if let Some(i) = self.y.iter().position(FieldElem::is_zero) {
            return bad(format!("Y[{i}] is zero"));
        }
        if self.free_y != compute_free_flags(&self.locus_params, &self.x, &self.y) {
            return bad("free_Y flags do not match the coordinates".into());
        }
        Ok(())
    }

    /// Column of partial derivatives of `X_i` along the locus parameters.
    fn derivative_column(&self, i: usize) -> Vec<FieldElem> {
        self.locus_params.iter().map(|u| self.x[i].derivative(u)).collect()
    }

    /// Substitutes values for (some of) the locus parameters.
    pub fn specialize(&self, values: &BTreeMap<Symbol, FieldElem>) -> Result<(Vec<FieldElem>, Vec<FieldElem>), AlgError> {
        let x = self.x.iter().map(|e| e.substitute(values)).collect::<Result<_, _>>()?;
        let y = self.y.iter().map(|e| e.substitute(values)).collect::<Result<_, _>>()?;
        Ok((x, y))
    }
}

fn compute_free_flags(locus: &[Symbol], x: &[FieldElem], y: &[FieldElem]) -> Vec<bool> {
    y.iter()
        .enumerate()
        .map(|(i, yi)| match yi.as_var() {
            Some(s) if locus.contains(s) => {
                !x.iter().any(|e| e.mentions(s)) && !y.iter().enumerate().any(|(j, e)| j != i && e.mentions(s))
            }
            _ => false,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Free,
    NotFree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreenessCertificate {
    pub verdict: Verdict,
    /// `(m, a)` with `Σ m_i X_i = a` and `a` in the base field.
    pub relation: Option<(Vec<BigInt>, FieldElem)>,
}

impl FreenessCertificate {
    /// Re-checks a relation as a rational-function identity.
    pub fn verify(&self, v: &ParametricVariety) -> bool {
        match (&self.verdict, &self.relation) {
            (Verdict::Free, None) => true,
            (Verdict::NotFree, Some((m, a))) => {
                if m.len() != v.dim() || m.iter().all(Zero::is_zero) {
                    return false;
                }
                let base: BTreeSet<&Symbol> = v.base_params.iter().collect();
                if a.variables().iter().any(|s| !base.contains(s)) {
                    return false;
                }
                combine(&v.x, m).sub(a).is_zero()
            }
            _ => false,
        }
    }
}

fn combine(x: &[FieldElem], m: &[BigInt]) -> FieldElem {
    x.iter()
        .zip(m)
        .filter(|(_, c)| !c.is_zero())
        .fold(FieldElem::zero(), |acc, (e, c)| acc.add(&e.scale_int(c)))
}

/// Decides whether the additive coordinates satisfy a nontrivial relation
/// `Σ m_i X_i = a` over the base.
pub fn additive_freeness(v: &ParametricVariety) -> FreenessCertificate {
    let columns: Vec<Vec<FieldElem>> = (0..v.dim()).map(|i| v.derivative_column(i)).collect();
    let kernel = relation_matrix(&columns).kernel_basis();
    let Some(first) = kernel.into_iter().next() else {
        return FreenessCertificate { verdict: Verdict::Free, relation: None };
    };
    let m = to_integer_vector(&primitive(first)).expect("primitive vectors are integral");
    let a = base_value(v, &combine(&v.x, &m));
    FreenessCertificate { verdict: Verdict::NotFree, relation: Some((m, a)) }
}

/// Rewrites an element known to be constant in the locus parameters so that
/// it mentions base parameters only.
fn base_value(v: &ParametricVariety, e: &FieldElem) -> FieldElem {
    if !v.locus_params.iter().any(|u| e.mentions(u)) {
        return e.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    loop {
        let point: BTreeMap<Symbol, FieldElem> = v
            .locus_params
            .iter()
            .map(|u| (u.clone(), FieldElem::from_int(rng.gen_range(-97..=97))))
            .collect();
        if let Ok(val) = e.substitute(&point) {
            return val;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionResult {
    pub source: ParametricVariety,
    pub vprime: ParametricVariety,
    /// `n × k`, with `X = A · X_selected + b`.
    pub a: QMatrix,
    pub b: Vec<FieldElem>,
    pub n: BigInt,
    pub index_map: Vec<usize>,
}

impl ReductionResult {
    pub fn k(&self) -> usize {
        self.index_map.len()
    }

    /// Entry `(N·A)_{ij}`, always an integer.
    pub fn scaled_entry(&self, i: usize, j: usize) -> BigInt {
        (self.a.get(i, j) * Rat::from_integer(self.n.clone())).to_integer()
    }
}

/// Splits `X` into a maximal base-independent subset (chosen greedily by
/// index) and rational combinations of it.
pub fn reduce(v: &ParametricVariety) -> ReductionResult {
    let n = v.dim();
    let columns: Vec<Vec<FieldElem>> = (0..n).map(|i| v.derivative_column(i)).collect();
    let mut selected: Vec<usize> = Vec::new();
    for i in 0..n {
        let mut trial: Vec<Vec<FieldElem>> = selected.iter().map(|&j| columns[j].clone()).collect();
        trial.push(columns[i].clone());
        if relation_matrix(&trial).kernel_basis().is_empty() {
            selected.push(i);
        }
    }
    let k = selected.len();
    let basis: Vec<Vec<FieldElem>> = selected.iter().map(|&j| columns[j].clone()).collect();
    let mut a = QMatrix::zeros(n, k);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(j) = selected.iter().position(|&s| s == i) {
            a.set(i, j, Rat::one());
            b.push(FieldElem::zero());
            continue;
        }
        let q = express_in_column_span(&basis, &columns[i]).expect("dependent on the selection");
        let mut rest = v.x[i].clone();
        for (j, qj) in q.iter().enumerate() {
            if !qj.is_zero() {
                rest = rest.sub(&v.x[selected[j]].scale_rat(qj));
            }
            a.set(i, j, qj.clone());
        }
        b.push(base_value(v, &rest));
    }
    let big_n = a.denominator_lcm();
    let n_rat = Rat::from_integer(big_n.clone());

    let mut used: BTreeSet<Symbol> = v.base_params.iter().chain(&v.locus_params).cloned().collect();
    let mut next = used.iter().filter_map(|s| s.index_with_prefix("_y")).max().unwrap_or(0) + 1;
    let mut locus = v.locus_params.clone();
    let mut y = Vec::with_capacity(k);
    for _ in 0..k {
        let s = Symbol::indexed("_y", next);
        next += 1;
        used.insert(s.clone());
        locus.push(s.clone());
        y.push(FieldElem::var(s));
    }
    let x: Vec<FieldElem> = selected.iter().map(|&j| v.x[j].scale_rat(&n_rat.recip())).collect();
    let free_y = vec![true; k];
    let vprime = ParametricVariety { base_params: v.base_params.clone(), locus_params: locus, x, y, free_y };
    ReductionResult { source: v.clone(), vprime, a, b, n: big_n, index_map: selected }
}

/// Pulls a point of `V'` back to `V`: `d = A(N c) + b` and
/// `Ed_i = Π_j Ec_j^{(NA)_ij} · E(b_i)`, where `resolve` supplies `E(b_i)`.
pub fn pullback(
    r: &ReductionResult,
    c: &[FieldElem],
    ec: &[FieldElem],
    resolve: &mut dyn FnMut(usize, &FieldElem) -> Option<FieldElem>,
) -> Result<(Vec<FieldElem>, Vec<FieldElem>), VarietyError> {
    let k = r.k();
    if c.len() != k || ec.len() != k {
        return Err(AlgError::DimensionMismatch(format!("expected {k} coordinates, got {} and {}", c.len(), ec.len())).into());
    }
    if ec.iter().any(FieldElem::is_zero) {
        return Err(VarietyError::Invalid("exponential values must be nonzero".into()));
    }
    let n_rat = Rat::from_integer(r.n.clone());
    let mut d = Vec::with_capacity(r.a.rows());
    let mut ed = Vec::with_capacity(r.a.rows());
    for i in 0..r.a.rows() {
        let mut di = r.b[i].clone();
        let mut edi = FieldElem::one();
        for j in 0..k {
            let aij = r.a.get(i, j);
            if aij.is_zero() {
                continue;
            }
            di = di.add(&c[j].scale_rat(&(aij * &n_rat)));
            edi = edi.mul(&ec[j].powi(&r.scaled_entry(i, j))?);
        }
        if !r.b[i].is_zero() {
            let eb = resolve(i, &r.b[i]).ok_or_else(|| VarietyError::MissingExponential { index: i, arg: r.b[i].clone() })?;
            edi = edi.mul(&eb);
        }
        d.push(di);
        ed.push(edi);
    }
    Ok((d, ed))
}

/// Turns a flat system into a locus presentation.
///
/// Supported shape: after solving `x`-free equations that are linear in some
/// `y`, every equation is affine in the `x` unknowns, except for equations in
/// which some unknown occurs linearly and nowhere else (such as inequation
/// witnesses); those are solved for that unknown at the end.
pub fn from_flat(fs: &FlatSystem, base_params: &[Symbol]) -> Result<ParametricVariety, VarietyError> {
    fs.validate().map_err(|e| VarietyError::UnsupportedShape(e.to_string()))?;
    if fs.xvars.is_empty() {
        return Err(VarietyError::UnsupportedShape("no unknowns".into()));
    }
    let base: BTreeSet<&Symbol> = base_params.iter().collect();
    if let Some(s) = fs.params.iter().find(|s| !base.contains(s)) {
        return Err(VarietyError::UnsupportedShape(format!("parameter `{s}` is not a base transcendental")));
    }
    let xset: BTreeSet<&Symbol> = fs.xvars.iter().collect();
    let mentions_x = |p: &MPoly| p.variables().iter().any(|s| xset.contains(s));

    // Resolve exponential coordinates from x-free equations.
    let mut polys: Vec<FieldElem> = fs.polys.iter().map(|p| FieldElem::from_poly(p.clone())).collect();
    let mut resolved: BTreeMap<Symbol, FieldElem> = BTreeMap::new();
    loop {
        let mut progress = false;
        let mut keep = Vec::new();
        for p in std::mem::take(&mut polys) {
            let num = p.numer().clone();
            if num.is_zero() {
                continue;
            }
            if mentions_x(&num) {
                keep.push(p);
                continue;
            }
            if progress {
                keep.push(p);
                continue;
            }
            let target = fs.yvars.iter().find(|y| !resolved.contains_key(*y) && num.degree_in(y) == 1);
            match target {
                Some(y) => {
                    let coeffs = num.coefficients_in(y);
                    let c1 = FieldElem::from_poly(coeffs[&1].clone());
                    let c0 = FieldElem::from_poly(coeffs.get(&0).cloned().unwrap_or_default());
                    let val = c0.neg().div(&c1)?;
                    let one: BTreeMap<Symbol, FieldElem> = [(y.clone(), val.clone())].into();
                    for v in resolved.values_mut() {
                        *v = v.substitute(&one)?;
                    }
                    resolved.insert(y.clone(), val);
                    progress = true;
                }
                None if fs.yvars.iter().any(|y| num.mentions(y)) => {
                    return Err(VarietyError::UnsupportedShape(format!("`{num} = 0` is not linear in an exponential coordinate")));
                }
                None => {
                    return Err(VarietyError::Inconsistent(format!("`{num} = 0` has no solution")));
                }
            }
        }
        polys = keep
            .into_iter()
            .map(|p| p.substitute(&resolved))
            .collect::<Result<_, _>>()?;
        if !progress {
            break;
        }
    }

    // Set aside equations solved by an unknown that occurs nowhere else.
    let is_affine = |p: &MPoly| p.terms().all(|(m, _)| m.pairs().iter().filter(|(s, _)| xset.contains(s)).map(|(_, e)| *e).sum::<u32>() <= 1);
    let mut deferred: Vec<(Symbol, MPoly)> = Vec::new();
    loop {
        let Some(pos) = polys.iter().position(|p| !is_affine(p.numer())) else {
            break;
        };
        let num = polys[pos].numer().clone();
        let occurs_elsewhere = |s: &Symbol| polys.iter().enumerate().any(|(k, q)| k != pos && q.numer().mentions(s));
        let mut candidates: Vec<&Symbol> = fs.xvars.iter().filter(|s| num.degree_in(s) == 1 && !occurs_elsewhere(s)).collect();
        candidates.sort_by_key(|s| (s.index_with_prefix("_w").is_none(), std::cmp::Reverse(fs.xvars.iter().position(|t| t == *s))));
        let Some(w) = candidates.first().map(|s| (*s).clone()) else {
            return Err(VarietyError::UnsupportedShape(format!("`{num} = 0` is not affine in the unknowns")));
        };
        polys.remove(pos);
        deferred.push((w, num));
    }
    let solved_later: BTreeSet<Symbol> = deferred.iter().map(|(w, _)| w.clone()).collect();

    // Affine part: Gaussian elimination over the function field.
    // Columns run backwards so that later unknowns are solved for earlier ones.
    let linear: Vec<&Symbol> = fs.xvars.iter().rev().filter(|s| !solved_later.contains(*s)).collect();
    let width = linear.len() + 1;
    let rows: Vec<Vec<FieldElem>> = polys
        .iter()
        .map(|p| {
            let num = p.numer();
            let mut row = vec![FieldElem::zero(); width];
            for (m, c) in num.terms() {
                let xs: Vec<&(Symbol, u32)> = m.pairs().iter().filter(|(s, _)| xset.contains(s)).collect();
                let rest = crate::exactalg::Monomial::from_pairs(m.pairs().iter().filter(|(s, _)| !xset.contains(s)).cloned().collect());
                let coef = FieldElem::from_poly(MPoly::term(c.clone(), rest));
                let col = match xs.first() {
                    Some((s, _)) => linear.iter().position(|t| *t == s).expect("affine unknown"),
                    None => width - 1,
                };
                row[col] = row[col].add(&coef);
            }
            row
        })
        .collect();
    let space = FieldRowSpace::new(&rows);
    let mut values: BTreeMap<Symbol, FieldElem> = BTreeMap::new();
    let echelon = echelon_rows(&space, width);
    if echelon.iter().any(|(p, _)| *p == width - 1) {
        return Err(VarietyError::Inconsistent("the affine equations have no solution".into()));
    }
    let pivots: BTreeSet<usize> = echelon.iter().map(|(p, _)| *p).collect();
    let mut locus: Vec<Symbol> = Vec::new();
    for (c, s) in linear.iter().enumerate() {
        if !pivots.contains(&c) {
            locus.push((*s).clone());
            values.insert((*s).clone(), FieldElem::var((*s).clone()));
        }
    }
    for (p, row) in &echelon {
        // x_p + Σ row[c] x_c + row[const] = 0 over the free columns c.
        let mut val = row[width - 1].neg();
        for (c, s) in linear.iter().enumerate() {
            if c != *p && !pivots.contains(&c) && !row[c].is_zero() {
                val = val.sub(&row[c].mul(&FieldElem::var((*s).clone())));
            }
        }
        values.insert(linear[*p].clone(), val);
    }
    locus.sort_by_key(|s| fs.xvars.iter().position(|t| t == s));
    for (w, num) in deferred.iter().rev() {
        let coeffs = num.coefficients_in(w);
        let c1 = FieldElem::from_poly(coeffs[&1].clone()).substitute(&values)?;
        let c0 = FieldElem::from_poly(coeffs.get(&0).cloned().unwrap_or_default()).substitute(&values)?;
        if c1.is_zero() {
            return Err(VarietyError::Inconsistent(format!("the coefficient of `{w}` vanishes")));
        }
        values.insert(w.clone(), c0.neg().div(&c1)?);
    }
    let order: Vec<&Symbol> = fs.xvars.iter().collect();
    let x: Vec<FieldElem> = order.iter().map(|s| values[*s].clone()).collect();

    let mut y = Vec::with_capacity(fs.yvars.len());
    for s in &fs.yvars {
        match resolved.get(s) {
            Some(v) => y.push(v.clone()),
            None => y.push(FieldElem::var(s.clone())),
        }
    }
    for s in &fs.yvars {
        let used = y.iter().chain(&x).any(|e| e.mentions(s));
        if used && !resolved.contains_key(s) {
            locus.push(s.clone());
        }
    }
    if let Some(i) = y.iter().position(FieldElem::is_zero) {
        return Err(VarietyError::Inconsistent(format!("E({}) would be zero", fs.xvars[i])));
    }
    let base_params = base_params.to_vec();
    ParametricVariety::new(base_params, locus, x, y)
}

fn echelon_rows(space: &FieldRowSpace, width: usize) -> Vec<(usize, Vec<FieldElem>)> {
    // Recover the reduced rows by projecting unit vectors.
    let mut out = Vec::new();
    for c in 0..width {
        let mut e = vec![FieldElem::zero(); width];
        e[c] = FieldElem::one();
        let r = space.reduce(&e);
        if r[c].is_zero() {
            // `e_c - r` is the pivot row for column c.
            let row: Vec<FieldElem> = e.iter().zip(&r).map(|(a, b)| a.sub(b)).collect();
            out.push((c, row));
        }
    }
    out
}

/// Brute-force search for an integer relation with `|m_i| ≤ bound`.
///
/// Candidates are filtered by evaluating the locus derivatives modulo a prime
/// at random points, then confirmed symbolically.
pub fn oracle_relation(v: &ParametricVariety, bound: u32) -> Option<Vec<BigInt>> {
    const P: u64 = (1 << 61) - 1;
    let n = v.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0a11_5eed);
    let symbols: Vec<Symbol> = v.base_params.iter().chain(&v.locus_params).cloned().collect();
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut points = 0;
    while points < 3 {
        let point: BTreeMap<Symbol, FieldElem> =
            symbols.iter().map(|s| (s.clone(), FieldElem::from_int(rng.gen_range(-1000..=1000)))).collect();
        let mut block: Vec<Vec<Option<u64>>> = Vec::new();
        let mut ok = true;
        for u in &v.locus_params {
            let vals: Option<Vec<CycElem>> =
                v.x.iter().map(|e| e.derivative(u).substitute(&point).ok().and_then(|f| f.as_constant())).collect();
            let Some(vals) = vals else {
                ok = false;
                break;
            };
            let order = vals.iter().fold(1u32, |l, c| l.lcm(&c.order()));
            let lifted: Vec<CycElem> = vals.iter().map(|c| c.lift(order)).collect();
            for k in 0..lifted[0].coords().len() {
                block.push(lifted.iter().map(|c| mod_p(&c.coords()[k], P)).collect());
            }
        }
        if !ok || block.iter().flatten().any(Option::is_none) {
            continue;
        }
        rows.extend(block.into_iter().map(|r| r.into_iter().map(Option::unwrap).collect::<Vec<u64>>()));
        points += 1;
    }
    let b = bound as i64;
    let mut m = vec![-b; n];
    loop {
        if m.iter().any(|&e| e != 0) {
            let passes = rows.iter().all(|r| {
                let s = r.iter().zip(&m).fold(0u128, |acc, (&x, &mi)| {
                    let t = (x as u128 * mi.unsigned_abs() as u128) % P as u128;
                    if mi < 0 {
                        (acc + P as u128 - t) % P as u128
                    } else {
                        (acc + t) % P as u128
                    }
                });
                s == 0
            });
            if passes {
                let mb: Vec<BigInt> = m.iter().map(|&e| BigInt::from(e)).collect();
                let s = combine(&v.x, &mb);
                if v.locus_params.iter().all(|u| s.derivative(u).is_zero()) {
                    // Same normalization as the kernel: primitive, last nonzero entry positive.
                    let g = mb.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
                    let sign = if mb.iter().rev().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) { -1 } else { 1 };
                    return Some(mb.iter().map(|x| x / &g * sign).collect());
                }
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return None;
            }
            if m[i] < b {
                m[i] += 1;
                break;
            }
            m[i] = -b;
            i += 1;
        }
    }
}

fn mod_p(r: &Rat, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let num = r.numer().mod_floor(&pb).to_u64()?;
    let den = r.denom().mod_floor(&pb);
    if den.is_zero() {
        return None;
    }
    let inv = den.modpow(&(&pb - 2u32), &pb).to_u64()?;
    Some(((num as u128 * inv as u128) % p as u128) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{eliminate_inequations, flatten, parse_system};

    fn s(x: &str) -> Symbol {
        Symbol::new(x)
    }

    fn v(x: &str) -> FieldElem {
        FieldElem::var(s(x))
    }

    fn i(n: i64) -> FieldElem {
        FieldElem::from_int(n)
    }

    fn flat(text: &str, params: &[&str]) -> FlatSystem {
        let params: Vec<Symbol> = params.iter().map(|p| s(p)).collect();
        flatten(&eliminate_inequations(&parse_system(text).unwrap()), &params).unwrap()
    }

    fn tp2_w() -> ParametricVariety {
        ParametricVariety::new(
            vec![s("t1"), s("t2")],
            vec![s("u"), s("r")],
            vec![v("u"), v("t1").mul(&v("u")), v("t2").mul(&v("u"))],
            vec![v("r"), i(2), i(3)],
        )
        .unwrap()
    }

    #[test]
    fn from_flat_single_constraint() {
        let fs = flat("E(x) = d", &["d"]);
        let var = from_flat(&fs, &[s("d")]).unwrap();
        assert_eq!(var.x, vec![v("x")]);
        assert_eq!(var.y, vec![v("d")]);
        assert_eq!(var.locus_params, vec![s("x")]);
        assert_eq!(var.free_y, vec![false]);
    }

    #[test]
    fn from_flat_stabilizer_system() {
        let fs = flat("t*x1 = x2 & E(x1) = 1 & E(x2) = d", &["t", "d"]);
        let var = from_flat(&fs, &[s("t"), s("d")]).unwrap();
        assert_eq!(var.x, vec![v("x1"), v("t").mul(&v("x1"))]);
        assert_eq!(var.y, vec![i(1), v("d")]);
    }

    #[test]
    fn from_flat_inconsistent_and_unsupported() {
        let fs = flat("x1 = 1 & x1 = 2", &[]);
        assert!(matches!(from_flat(&fs, &[]), Err(VarietyError::Inconsistent(_))));
        let fs = flat("E(x) = 0", &[]);
        assert!(matches!(from_flat(&fs, &[]), Err(VarietyError::Inconsistent(_))));
        let fs = flat("x^2 = 2 & x*y = 1 & y*x^3 = 5", &[]);
        assert!(matches!(from_flat(&fs, &[]), Err(VarietyError::UnsupportedShape(_))));
        let fs = flat("E(x)^2 = 2", &[]);
        assert!(matches!(from_flat(&fs, &[]), Err(VarietyError::UnsupportedShape(_))));
    }

    #[test]
    fn from_flat_witness_and_nesting() {
        let fs = flat("x != 0", &[]);
        let var = from_flat(&fs, &[]).unwrap();
        assert_eq!(var.x, vec![v("x"), i(1).div(&v("x")).unwrap()]);
        let fs = flat("E(E(x)) = x", &[]);
        let var = from_flat(&fs, &[]).unwrap();
        // x = E(_u1), _u1 = E(x): X = (_v2, _v1), Y = (_v1, _v2).
        assert_eq!(var.x, vec![v("_v2"), v("_v1")]);
        assert_eq!(var.y, vec![v("_v1"), v("_v2")]);
        assert_eq!(var.free_y, vec![false, false]);
        let fs = flat("E(x)*E(x) = E(2*x)", &[]);
        let var = from_flat(&fs, &[]).unwrap();
        assert_eq!(var.x, vec![v("x"), i(2).mul(&v("x"))]);
        assert_eq!(var.y, vec![v("_v1"), v("_v1").pow(2)]);
        assert_eq!(var.free_y, vec![false, false]);
    }

    #[test]
    fn freeness_examples() {
        assert_eq!(additive_freeness(&tp2_w()).verdict, Verdict::Free);
        let nf = ParametricVariety::new(vec![], vec![s("u")], vec![v("u"), i(2).mul(&v("u")).add(&i(3))], vec![v("r1"), v("r2")]);
        assert!(nf.is_err());
        let nf = ParametricVariety::new(
            vec![],
            vec![s("u"), s("r1"), s("r2")],
            vec![v("u"), i(2).mul(&v("u")).add(&i(3))],
            vec![v("r1"), v("r2")],
        )
        .unwrap();
        let cert = additive_freeness(&nf);
        assert_eq!(cert.verdict, Verdict::NotFree);
        let (m, a) = cert.relation.clone().unwrap();
        assert_eq!(m, vec![BigInt::from(-2), BigInt::from(1)]);
        assert_eq!(a, i(3));
        assert!(cert.verify(&nf));
        let indep = ParametricVariety::new(
            vec![],
            vec![s("u1"), s("u2"), s("u3")],
            vec![v("u1"), v("u2"), v("u3")],
            vec![i(1), i(1), i(1)],
        )
        .unwrap();
        assert_eq!(additive_freeness(&indep).verdict, Verdict::Free);
    }

    #[test]
    fn base_value_is_cleaned() {
        let u = v("u");
        let num = v("t").mul(&u.add(&i(1))).numer().clone();
        let den = v("t").add(&i(1)).mul(&u.add(&i(1))).numer().clone();
        let e = FieldElem::from_parts(num, den).unwrap();
        assert!(e.mentions(&s("u")));
        let var = ParametricVariety::new(vec![s("t")], vec![s("u")], vec![u.clone(), u.add(&e)], vec![i(1), i(1)]).unwrap();
        let cert = additive_freeness(&var);
        let a = cert.relation.clone().unwrap().1;
        assert!(!a.mentions(&s("u")));
        assert_eq!(a, v("t").div(&v("t").add(&i(1))).unwrap());
        assert!(cert.verify(&var));
    }

    #[test]
    fn reduce_examples() {
        let var = ParametricVariety::new(
            vec![],
            vec![s("u"), s("r1"), s("r2")],
            vec![v("u"), i(2).mul(&v("u")).add(&i(3))],
            vec![v("r1"), v("r2")],
        )
        .unwrap();
        let r = reduce(&var);
        assert_eq!(r.index_map, vec![0]);
        assert_eq!(r.a, QMatrix::from_int_rows(&[&[1], &[2]]));
        assert_eq!(r.b, vec![i(0), i(3)]);
        assert_eq!(r.n, BigInt::one());
        assert_eq!(r.vprime.x, vec![v("u")]);
        assert_eq!(r.vprime.free_y, vec![true]);
        assert_eq!(additive_freeness(&r.vprime).verdict, Verdict::Free);

        let half = v("u").scale_rat(&Rat::new(1.into(), 2.into()));
        let var = ParametricVariety::new(vec![], vec![s("u")], vec![v("u"), half.clone()], vec![i(1), i(1)]).unwrap();
        let r = reduce(&var);
        assert_eq!(r.n, BigInt::from(2));
        assert_eq!(r.a.get(1, 0), &Rat::new(1.into(), 2.into()));
        assert_eq!(r.vprime.x, vec![half]);

        let r = reduce(&tp2_w());
        assert_eq!(r.k(), 3);
        assert_eq!(r.n, BigInt::one());
    }

    #[test]
    fn pullback_examples() {
        let var = ParametricVariety::new(
            vec![],
            vec![s("u"), s("r1"), s("r2")],
            vec![v("u"), i(2).mul(&v("u")).add(&i(3))],
            vec![v("r1"), v("r2")],
        )
        .unwrap();
        let r = reduce(&var);
        let (d, ed) = pullback(&r, &[i(5)], &[v("r")], &mut |_, b| (*b == i(3)).then(|| v("g"))).unwrap();
        assert_eq!(d, vec![i(5), i(13)]);
        assert_eq!(ed, vec![v("r"), v("r").pow(2).mul(&v("g"))]);
        let err = pullback(&r, &[i(5)], &[v("r")], &mut |_, _| None).unwrap_err();
        assert!(matches!(err, VarietyError::MissingExponential { index: 1, .. }));

        let half = v("u").scale_rat(&Rat::new(1.into(), 2.into()));
        let var = ParametricVariety::new(vec![], vec![s("u")], vec![half], vec![i(1)]).unwrap();
        let r = reduce(&var);
        assert_eq!(r.scaled_entry(0, 0), BigInt::one());
        let (d, ed) = pullback(&r, &[v("c")], &[v("e")], &mut |_, _| None).unwrap();
        assert_eq!((d, ed), (vec![v("c")], vec![v("e")]));
    }

    #[test]
    fn oracle_matches_examples() {
        assert_eq!(oracle_relation(&tp2_w(), 6), None);
        let var = ParametricVariety::new(
            vec![],
            vec![s("u"), s("r1"), s("r2")],
            vec![v("u"), i(2).mul(&v("u")).add(&i(3))],
            vec![v("r1"), v("r2")],
        )
        .unwrap();
        let m = oracle_relation(&var, 3).unwrap();
        let s2 = combine(&var.x, &m);
        assert!(s2.derivative(&s("u")).is_zero());
    }
}
