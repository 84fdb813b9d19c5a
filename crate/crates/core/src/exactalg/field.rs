//! Rational functions over `Q(ζ_m)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::cyclo::CycElem;
use super::mpoly::{MPoly, Monomial};
use super::symbol::Symbol;
use super::{AlgError, Rat};

/// An element `num / den` of `Q(ζ_m)(t_1, …, t_k)`.
///
/// Canonical form: a constant denominator is absorbed into the numerator;
/// otherwise coefficients are integral with unit content, the common monomial
/// factor is removed and the leading coefficient of `den` is positive.
/// Equality is decided by cross-multiplication.
#[derive(Clone)]
pub struct FieldElem {
    num: MPoly,
    den: MPoly,
}

impl FieldElem {
    pub fn zero() -> Self {
        Self::from_poly(MPoly::zero())
    }

    pub fn one() -> Self {
        Self::from_poly(MPoly::one())
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_poly(MPoly::from_int(n))
    }

    pub fn from_rat(r: Rat) -> Self {
        Self::from_poly(MPoly::from_rat(r))
    }

    pub fn from_cyc(c: CycElem) -> Self {
        Self::from_poly(MPoly::constant(c))
    }

    pub fn var(s: impl Into<Symbol>) -> Self {
        Self::from_poly(MPoly::var(s.into()))
    }

    pub fn from_poly(p: MPoly) -> Self {
        FieldElem { num: p, den: MPoly::one() }
    }

    /// `num / den`, normalized. Fails if `den` is zero.
    pub fn from_parts(num: MPoly, den: MPoly) -> Result<Self, AlgError> {
        if den.is_zero() {
            return Err(AlgError::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    pub fn numer(&self) -> &MPoly {
        &self.num
    }

    pub fn denom(&self) -> &MPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<CycElem> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn as_rational(&self) -> Option<Rat> {
        self.as_constant().and_then(|c| c.as_rational().cloned())
    }

    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational().filter(|r| r.is_integer()).map(|r| r.to_integer())
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        if self.den.is_one() {
            self.num.as_var()
        } else {
            None
        }
    }

    pub fn variables(&self) -> BTreeSet<Symbol> {
        let mut v = self.num.variables();
        v.extend(self.den.variables());
        v
    }

    pub fn mentions(&self, s: &Symbol) -> bool {
        self.num.mentions(s) || self.den.mentions(s)
    }

    fn normalized(mut num: MPoly, mut den: MPoly) -> Self {
        if num.is_zero() {
            return FieldElem::zero();
        }
        if let Some(c) = den.as_constant() {
            let inv = c.inv().expect("nonzero denominator");
            return FieldElem { num: num.scale(&inv), den: MPoly::one() };
        }
        if let Some(q) = num.div_exact(&den) {
            return FieldElem { num: q, den: MPoly::one() };
        }
        if let Some(q) = den.div_exact(&num) {
            num = MPoly::one();
            den = q;
            if let Some(c) = den.as_constant() {
                let inv = c.inv().expect("nonzero denominator");
                return FieldElem { num: num.scale(&inv), den: MPoly::one() };
            }
        }
        let g = num.monomial_content().gcd(&den.monomial_content());
        if !g.is_one() {
            num = num.div_monomial(&g);
            den = den.div_monomial(&g);
        }
        let l = lcm(&num.denominator_lcm(), &den.denominator_lcm());
        let mut factor = Rat::from_integer(l.clone());
        let gi = {
            use num_integer::Integer;
            let numer_scaled = num.scale_rat(&factor);
            let den_scaled = den.scale_rat(&factor);
            numer_scaled.numerator_gcd().gcd(&den_scaled.numerator_gcd())
        };
        if !gi.is_zero() {
            factor /= Rat::from_integer(gi);
        }
        let (_, lc) = den.leading_term().expect("nonzero denominator");
        if lc.leading_sign() < 0 {
            factor = -factor;
        }
        if !factor.is_one() {
            num = num.scale_rat(&factor);
            den = den.scale_rat(&factor);
        }
        FieldElem { num, den }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::normalized(self.num.add(&other.num), self.den.clone());
        }
        if other.den.is_one() {
            return Self::normalized(self.num.add(&other.num.mul(&self.den)), self.den.clone());
        }
        if self.den.is_one() {
            return Self::normalized(self.num.mul(&other.den).add(&other.num), other.den.clone());
        }
        Self::normalized(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn neg(&self) -> Self {
        FieldElem { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.den.is_one() && other.den.is_one() {
            return FieldElem { num: self.num.mul(&other.num), den: MPoly::one() };
        }
        Self::normalized(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &Self) -> Result<Self, AlgError> {
        if other.is_zero() {
            return Err(AlgError::DivisionByZero);
        }
        Ok(Self::normalized(self.num.mul(&other.den), self.den.mul(&other.num)))
    }

    pub fn inv(&self) -> Result<Self, AlgError> {
        Self::one().div(self)
    }

    pub fn scale_rat(&self, r: &Rat) -> Self {
        Self::normalized(self.num.scale_rat(r), self.den.clone())
    }

    pub fn scale_int(&self, n: &BigInt) -> Self {
        self.scale_rat(&Rat::from_integer(n.clone()))
    }

    pub fn pow(&self, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        FieldElem { num: self.num.pow(e), den: self.den.pow(e) }
    }

    /// Integer power; fails for negative exponents of zero.
    pub fn powi(&self, e: &BigInt) -> Result<Self, AlgError> {
        let mag: u32 = e
            .abs()
            .try_into()
            .map_err(|_| AlgError::ExponentTooLarge(e.to_string()))?;
        let p = self.pow(mag);
        if e.is_negative() {
            p.inv()
        } else {
            Ok(p)
        }
    }

    /// Partial derivative by the quotient rule.
    pub fn derivative(&self, v: &Symbol) -> Self {
        let dn = self.num.derivative(v);
        if self.den.is_one() {
            return Self::from_poly(dn);
        }
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return Self::normalized(dn, self.den.clone());
        }
        Self::normalized(
            dn.mul(&self.den).sub(&self.num.mul(&dd)),
            self.den.mul(&self.den),
        )
    }

    /// Substitutes field elements for symbols; symbols not in the map stay.
    pub fn substitute(&self, map: &BTreeMap<Symbol, FieldElem>) -> Result<Self, AlgError> {
        let n = substitute_poly(&self.num, map);
        let d = substitute_poly(&self.den, map);
        n.div(&d)
    }

    pub fn rename(&self, map: &dyn Fn(&Symbol) -> Symbol) -> Self {
        Self::normalized(self.num.rename(map), self.den.rename(map))
    }

    pub fn lift(&self, order: u32) -> Self {
        FieldElem { num: self.num.lift(order), den: self.den.lift(order) }
    }

    pub fn coefficient_order(&self) -> u32 {
        use num_integer::Integer;
        self.num.coefficient_order().lcm(&self.den.coefficient_order())
    }
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

fn substitute_poly(p: &MPoly, map: &BTreeMap<Symbol, FieldElem>) -> FieldElem {
    let mut acc = FieldElem::zero();
    let mut powers: BTreeMap<(Symbol, u32), FieldElem> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut kept = Vec::new();
        let mut t = FieldElem::from_cyc(c.clone());
        for (s, e) in m.pairs() {
            match map.get(s) {
                Some(val) => {
                    let pw = powers
                        .entry((s.clone(), *e))
                        .or_insert_with(|| val.pow(*e))
                        .clone();
                    t = t.mul(&pw);
                }
                None => kept.push((s.clone(), *e)),
            }
        }
        if !kept.is_empty() {
            t = t.mul(&FieldElem::from_poly(MPoly::term(CycElem::one(), Monomial::from_pairs(kept))));
        }
        acc = acc.add(&t);
    }
    acc
}

impl PartialEq for FieldElem {
    fn eq(&self, other: &Self) -> bool {
        if self.den == other.den {
            return self.num == other.num;
        }
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for FieldElem {}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<i64> for FieldElem {
    fn from(n: i64) -> Self {
        FieldElem::from_int(n)
    }
}

impl From<Symbol> for FieldElem {
    fn from(s: Symbol) -> Self {
        FieldElem::var(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> FieldElem {
        FieldElem::var(s)
    }

    #[test]
    fn identity_addition() {
        assert_eq!(t("t1").add(&FieldElem::zero()), t("t1"));
    }

    #[test]
    fn factorization_identity() {
        let one = FieldElem::one();
        let num = t("t1").pow(2).sub(&one);
        let q = num.div(&t("t1").sub(&one)).unwrap();
        assert_eq!(q, t("t1").add(&one));
    }

    #[test]
    fn zeta_order_three() {
        let z = FieldElem::from_cyc(CycElem::zeta(3));
        assert!(z.mul(&z).mul(&z).is_one());
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(t("t1").div(&FieldElem::zero()), Err(AlgError::DivisionByZero));
    }

    #[test]
    fn derivatives() {
        let x = t("t1");
        let y = t("t2");
        let v = Symbol::new("t1");
        assert_eq!(x.pow(2).mul(&y).derivative(&v), x.mul(&y).scale_int(&2.into()));
        let inv = FieldElem::one().div(&x).unwrap();
        assert_eq!(inv.derivative(&v), x.pow(2).inv().unwrap().neg());
        assert!(y.derivative(&v).is_zero());
    }

    #[test]
    fn canonical_form() {
        let x = t("x");
        let e = x.scale_int(&6.into()).div(&x.mul(&t("y")).scale_int(&(-4).into())).unwrap();
        assert_eq!(e.to_string(), "(-3)/(2*y)");
        let half = FieldElem::from_rat(Rat::new(1.into(), 2.into()));
        assert_eq!(x.mul(&half).to_string(), "1/2*x");
    }

    #[test]
    fn substitution() {
        let x = t("x");
        let e = x.pow(2).add(&t("y")).div(&x).unwrap();
        let mut m = BTreeMap::new();
        m.insert(Symbol::new("x"), FieldElem::from_int(2));
        assert_eq!(e.substitute(&m).unwrap(), t("y").add(&FieldElem::from_int(4)).scale_rat(&Rat::new(1.into(), 2.into())));
    }
}
