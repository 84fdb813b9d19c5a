//! Sparse multivariate polynomials with cyclotomic coefficients.
//!
//! Variables are [`Symbol`]s; the variable list of a polynomial is the
//! naturally sorted set of symbols it mentions. Terms are kept in graded
//! lexicographic order, leading term last.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::cyclo::CycElem;
use super::symbol::Symbol;
use super::Rat;

/// A power product; entries sorted by symbol, exponents positive.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Symbol, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(s: Symbol) -> Self {
        Monomial(vec![(s, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Symbol, u32)>) -> Self {
        pairs.retain(|(_, e)| *e > 0);
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Symbol, u32)> = Vec::with_capacity(pairs.len());
        for (s, e) in pairs {
            match out.last_mut() {
                Some((t, f)) if *t == s => *f += e,
                _ => out.push((s, e)),
            }
        }
        Monomial(out)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, v: &Symbol) -> u32 {
        self.0.iter().find(|(s, _)| s == v).map_or(0, |(_, e)| *e)
    }

    pub fn pairs(&self) -> &[(Symbol, u32)] {
        &self.0
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// `self / other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut j = 0;
        for (s, e) in &self.0 {
            let mut f = 0;
            if j < other.0.len() && other.0[j].0 == *s {
                f = other.0[j].1;
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *s {
                return None;
            }
            match e.cmp(&f) {
                Ordering::Less => return None,
                Ordering::Equal => {}
                Ordering::Greater => out.push((s.clone(), e - f)),
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(Monomial(out))
    }

    /// Componentwise minimum of exponents.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::new();
        for (s, e) in &self.0 {
            let f = other.exponent(s);
            if f > 0 {
                out.push((s.clone(), (*e).min(f)));
            }
        }
        Monomial(out)
    }

    fn lex_cmp(&self, other: &Monomial) -> Ordering {
        // The first variable (in variable order) where the exponents differ decides.
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((s, e)), Some((t, f))) => match s.cmp(t) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if e != f {
                            return e.cmp(f);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| self.lex_cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (s, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{s}")?;
            } else {
                write!(f, "{s}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, PartialEq, Eq, Default)]
pub struct MPoly {
    terms: BTreeMap<Monomial, CycElem>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(CycElem::one())
    }

    pub fn constant(c: CycElem) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn from_rat(r: Rat) -> Self {
        Self::constant(CycElem::from_rat(r))
    }

    pub fn from_int(n: i64) -> Self {
        Self::constant(CycElem::from_int(n))
    }

    pub fn var(s: Symbol) -> Self {
        Self::term(CycElem::one(), Monomial::var(s))
    }

    pub fn term(c: CycElem, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        MPoly { terms }
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (Monomial, CycElem)>) -> Self {
        let mut p = MPoly::zero();
        for (m, c) in iter {
            p.add_term(m, &c);
        }
        p
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &CycElem)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .next()
                .is_some_and(|(m, c)| m.is_one() && c.is_one())
    }

    /// The constant value, if this polynomial has degree 0.
    pub fn as_constant(&self) -> Option<CycElem> {
        match self.terms.len() {
            0 => Some(CycElem::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next().unwrap();
        match m.pairs() {
            [(s, 1)] if c.is_one() => Some(s),
            _ => None,
        }
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &CycElem)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: &Symbol) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        self.terms
            .keys()
            .flat_map(|m| m.pairs().iter().map(|(s, _)| s.clone()))
            .collect()
    }

    pub fn mentions(&self, v: &Symbol) -> bool {
        self.terms.keys().any(|m| m.exponent(v) > 0)
    }

    fn add_term(&mut self, m: Monomial, c: &CycElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &MPoly) -> MPoly {
        let (mut big, small) = if self.terms.len() >= other.terms.len() {
            (self.clone(), other)
        } else {
            (other.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c);
        }
        big
    }

    pub fn neg(&self) -> MPoly {
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), &c.neg());
        }
        out
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        if self.is_zero() || other.is_zero() {
            return MPoly::zero();
        }
        let mut out = MPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), &c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &CycElem) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly {
            terms: self.terms.iter().map(|(m, d)| (m.clone(), d.mul(c))).collect(),
        }
    }

    pub fn scale_rat(&self, r: &Rat) -> MPoly {
        self.scale(&CycElem::from_rat(r.clone()))
    }

    pub fn mul_monomial(&self, mono: &Monomial) -> MPoly {
        MPoly {
            terms: self.terms.iter().map(|(m, c)| (m.mul(mono), c.clone())).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> MPoly {
        let mut base = self.clone();
        let mut acc = MPoly::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn derivative(&self, v: &Symbol) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let pairs = m
                .pairs()
                .iter()
                .map(|(s, f)| if s == v { (s.clone(), f - 1) } else { (s.clone(), *f) })
                .collect();
            out.add_term(Monomial::from_pairs(pairs), &c.scale(&Rat::from_integer(BigInt::from(e))));
        }
        out
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &MPoly) -> Option<MPoly> {
        let (dm, dc) = d.leading_term()?;
        let dc_inv = dc.inv()?;
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.inv()?));
        }
        let mut rem = self.clone();
        let mut quot = MPoly::zero();
        while let Some((rm, rc)) = rem.leading_term() {
            let qm = rm.div(dm)?;
            let qc = rc.mul(&dc_inv);
            let q = MPoly::term(qc, qm);
            rem = rem.sub(&q.mul(d));
            quot = quot.add(&q);
        }
        Some(quot)
    }

    /// Least common multiple of all coordinate denominators.
    pub fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::one();
        for c in self.terms.values() {
            for r in c.coords() {
                l = l.lcm(r.denom());
            }
        }
        l
    }

    /// Gcd of all coordinate numerators (zero for the zero polynomial).
    pub fn numerator_gcd(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            for r in c.coords() {
                g = g.gcd(r.numer());
            }
        }
        g
    }

    /// Monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else {
            return Monomial::one();
        };
        it.fold(first.clone(), |g, m| g.gcd(m))
    }

    pub fn div_monomial(&self, mono: &Monomial) -> MPoly {
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.div(mono).expect("monomial divides every term"), c.clone()))
                .collect(),
        }
    }

    /// Renames variables; the map must be injective on the variables present.
    pub fn rename(&self, map: &dyn Fn(&Symbol) -> Symbol) -> MPoly {
        MPoly::from_terms(self.terms.iter().map(|(m, c)| {
            let pairs = m.pairs().iter().map(|(s, e)| (map(s), *e)).collect();
            (Monomial::from_pairs(pairs), c.clone())
        }))
    }

    /// Collects `self` as a polynomial in `v` with coefficients free of `v`.
    pub fn coefficients_in(&self, v: &Symbol) -> BTreeMap<u32, MPoly> {
        let mut out: BTreeMap<u32, MPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            let rest = Monomial::from_pairs(m.pairs().iter().filter(|(s, _)| s != v).cloned().collect());
            out.entry(e).or_default().add_term(rest, c);
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Maps every coefficient into `Q(ζ_order)`.
    pub fn lift(&self, order: u32) -> MPoly {
        MPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), if c.order() == 1 { c.clone() } else { c.lift(order) }))
                .collect(),
        }
    }

    /// Lcm of the cyclotomic orders of the coefficients.
    pub fn coefficient_order(&self) -> u32 {
        self.terms.values().fold(1u32, |l, c| l.lcm(&c.order()))
    }
}

impl fmt::Debug for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let (negative, text) = term_text(m, c);
            match (k, negative) {
                (0, true) if first_factor_has_power(&text) => write!(f, "-1*{text}")?,
                (0, true) => write!(f, "-{text}")?,
                (0, false) => write!(f, "{text}")?,
                (_, true) => write!(f, " - {text}")?,
                (_, false) => write!(f, " + {text}")?,
            }
        }
        Ok(())
    }
}

/// Unary minus binds tighter than `^` in the term grammar, so `-x^2` reads as
/// `(-x)^2`; such leading terms need an explicit `-1*`.
pub(crate) fn first_factor_has_power(text: &str) -> bool {
    text.split('*').next().is_some_and(|f| f.contains('^'))
}

// Returns (sign is negative, text of the absolute value).
fn term_text(m: &Monomial, c: &CycElem) -> (bool, String) {
    if let Some(r) = c.as_rational() {
        let neg = r.is_negative();
        let mag = r.abs();
        let text = if m.is_one() {
            mag.to_string()
        } else if mag.is_one() {
            m.to_string()
        } else {
            format!("{mag}*{m}")
        };
        return (neg, text);
    }
    let nonzero: Vec<usize> = (0..c.coords().len()).filter(|&k| !c.coords()[k].is_zero()).collect();
    if nonzero.len() == 1 {
        // A single ζ-power: print it inline with the sign pulled out.
        let neg = c.leading_sign() < 0;
        let ctext = if neg { c.neg().to_string() } else { c.to_string() };
        let text = if m.is_one() { ctext } else { format!("{ctext}*{m}") };
        return (neg, text);
    }
    let text = if m.is_one() { format!("({c})") } else { format!("({c})*{m}") };
    (false, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> MPoly {
        MPoly::var(Symbol::new(s))
    }

    #[test]
    fn grlex_order_and_printing() {
        let p = v("t1").pow(2).mul(&v("t2")).add(&v("t1").scale_rat(&Rat::new(3.into(), 4.into())).neg());
        let p = p.add(&MPoly::from_int(1)).add(&v("t2").pow(3));
        assert_eq!(p.to_string(), "t1^2*t2 + t2^3 - 3/4*t1 + 1");
    }

    #[test]
    fn exact_division() {
        let t = v("t");
        let num = t.pow(2).sub(&MPoly::one());
        let den = t.sub(&MPoly::one());
        assert_eq!(num.div_exact(&den).unwrap(), t.add(&MPoly::one()));
        assert!(t.add(&MPoly::one()).div_exact(&t).is_none());
        let s = v("s");
        assert_eq!(s.mul(&t).div_exact(&s).unwrap(), t);
    }

    #[test]
    fn derivative_power_rule() {
        let p = v("t1").pow(2).mul(&v("t2"));
        let d = p.derivative(&Symbol::new("t1"));
        assert_eq!(d, v("t1").mul(&v("t2")).scale_rat(&Rat::from_integer(2.into())));
    }

    #[test]
    fn cyclotomic_coefficients_print() {
        let z = CycElem::zeta(3);
        let p = MPoly::term(z.clone(), Monomial::var(Symbol::new("t")))
            .add(&MPoly::constant(z.add(&CycElem::one())));
        assert_eq!(p.to_string(), "zeta*t + (zeta + 1)");
    }
}
