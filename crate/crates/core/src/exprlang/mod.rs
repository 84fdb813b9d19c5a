//! The E-ring term language: AST, parser, printer and the normalization of
//! exponential-polynomial systems into flat polynomial systems.

mod lexer;
mod normalize;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use thiserror::Error;

use std::collections::BTreeMap;

use crate::exactalg::{MPoly, Rat, Symbol};

pub use normalize::{eliminate_inequations, flatten, parse_flat, FlatSystem, NormalizeError};
pub use parser::{parse_element, parse_system, parse_term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, col {col}: {expected}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ETerm {
    Int(BigInt),
    Rat(Rat),
    Var(Symbol),
    Add(Box<ETerm>, Box<ETerm>),
    Sub(Box<ETerm>, Box<ETerm>),
    Mul(Box<ETerm>, Box<ETerm>),
    Pow(Box<ETerm>, u32),
    Exp(Box<ETerm>),
}

impl ETerm {
    pub fn int(n: i64) -> Self {
        ETerm::Int(BigInt::from(n))
    }

    pub fn var(name: &str) -> Self {
        ETerm::Var(Symbol::new(name))
    }

    pub fn add(a: ETerm, b: ETerm) -> Self {
        ETerm::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: ETerm, b: ETerm) -> Self {
        ETerm::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: ETerm, b: ETerm) -> Self {
        ETerm::Mul(Box::new(a), Box::new(b))
    }

    pub fn pow(a: ETerm, e: u32) -> Self {
        ETerm::Pow(Box::new(a), e)
    }

    pub fn exp(a: ETerm) -> Self {
        ETerm::Exp(Box::new(a))
    }

    pub fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            ETerm::Int(_) | ETerm::Rat(_) => {}
            ETerm::Var(s) => {
                out.insert(s.clone());
            }
            ETerm::Add(a, b) | ETerm::Sub(a, b) | ETerm::Mul(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            ETerm::Pow(a, _) | ETerm::Exp(a) => a.collect_symbols(out),
        }
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    /// Replaces variables by terms.
    pub fn substitute(&self, map: &BTreeMap<Symbol, ETerm>) -> ETerm {
        let go = |t: &ETerm| Box::new(t.substitute(map));
        match self {
            ETerm::Int(_) | ETerm::Rat(_) => self.clone(),
            ETerm::Var(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            ETerm::Add(a, b) => ETerm::Add(go(a), go(b)),
            ETerm::Sub(a, b) => ETerm::Sub(go(a), go(b)),
            ETerm::Mul(a, b) => ETerm::Mul(go(a), go(b)),
            ETerm::Pow(a, e) => ETerm::Pow(go(a), *e),
            ETerm::Exp(a) => ETerm::Exp(go(a)),
        }
    }

    /// A term for a polynomial with rational coefficients.
    pub fn from_poly(p: &MPoly) -> Option<ETerm> {
        let mut out: Option<ETerm> = None;
        for (m, c) in p.terms().rev() {
            let c = c.as_rational()?;
            let coeff = if c.is_integer() { ETerm::Int(c.to_integer()) } else { ETerm::Rat(c.clone()) };
            let mut term: Option<ETerm> = if c.is_one() && !m.is_one() { None } else { Some(coeff) };
            for (s, e) in m.pairs() {
                let f = if *e == 1 { ETerm::Var(s.clone()) } else { ETerm::pow(ETerm::Var(s.clone()), *e) };
                term = Some(match term {
                    None => f,
                    Some(t) => ETerm::mul(t, f),
                });
            }
            let term = term.expect("nonempty term");
            out = Some(match out {
                None => term,
                Some(acc) => ETerm::add(acc, term),
            });
        }
        Some(out.unwrap_or_else(|| ETerm::int(0)))
    }

    /// Nesting depth of `E`.
    pub fn exp_depth(&self) -> usize {
        match self {
            ETerm::Int(_) | ETerm::Rat(_) | ETerm::Var(_) => 0,
            ETerm::Add(a, b) | ETerm::Sub(a, b) | ETerm::Mul(a, b) => a.exp_depth().max(b.exp_depth()),
            ETerm::Pow(a, _) => a.exp_depth(),
            ETerm::Exp(a) => 1 + a.exp_depth(),
        }
    }

    // `Mul(-1, u)` for a non-literal `u` prints as `-u`.
    fn negated(&self) -> Option<&ETerm> {
        match self {
            ETerm::Mul(a, b) => match (a.as_ref(), b.as_ref()) {
                (ETerm::Int(n), ETerm::Int(_) | ETerm::Rat(_)) if (-n).is_one() => None,
                (ETerm::Int(n), u) if (-n).is_one() => Some(u),
                _ => None,
            },
            _ => None,
        }
    }

    fn is_unit(&self) -> bool {
        matches!(self, ETerm::Int(_) | ETerm::Var(_) | ETerm::Exp(_)) || self.negated().is_some()
    }

    fn fmt_unit(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            write!(f, "{self}")
        } else {
            write!(f, "({self})")
        }
    }
}

impl fmt::Display for ETerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(u) = self.negated() {
            write!(f, "-")?;
            return u.fmt_unit(f);
        }
        match self {
            ETerm::Int(n) => write!(f, "{n}"),
            ETerm::Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            ETerm::Var(s) => write!(f, "{s}"),
            ETerm::Add(a, b) | ETerm::Sub(a, b) => {
                let op = if matches!(self, ETerm::Add(..)) { "+" } else { "-" };
                write!(f, "{a} {op} ")?;
                if matches!(b.as_ref(), ETerm::Add(..) | ETerm::Sub(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            ETerm::Mul(a, b) => {
                if matches!(a.as_ref(), ETerm::Add(..) | ETerm::Sub(..)) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, "*")?;
                let neg_lit = matches!(b.as_ref(), ETerm::Int(n) if n.is_negative());
                if neg_lit || matches!(b.as_ref(), ETerm::Add(..) | ETerm::Sub(..) | ETerm::Mul(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            ETerm::Pow(a, e) => {
                a.fmt_unit(f)?;
                write!(f, "^{e}")
            }
            ETerm::Exp(a) => write!(f, "E({a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Neq,
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub lhs: ETerm,
    pub rel: Rel,
    pub rhs: ETerm,
    /// Source line, 0 for synthesized atoms.
    pub line: usize,
}

impl Atom {
    pub fn eq(lhs: ETerm, rhs: ETerm) -> Self {
        Atom { lhs, rel: Rel::Eq, rhs, line: 0 }
    }

    pub fn neq(lhs: ETerm, rhs: ETerm) -> Self {
        Atom { lhs, rel: Rel::Neq, rhs, line: 0 }
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.lhs == other.lhs && self.rel == other.rel && self.rhs == other.rhs
    }
}

impl Eq for Atom {}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.rel {
            Rel::Eq => "=",
            Rel::Neq => "!=",
        };
        write!(f, "{} {rel} {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ESystem {
    pub atoms: Vec<Atom>,
}

impl ESystem {
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        for a in &self.atoms {
            a.lhs.collect_symbols(&mut out);
            a.rhs.collect_symbols(&mut out);
        }
        out
    }

    pub fn has_inequations(&self) -> bool {
        self.atoms.iter().any(|a| a.rel == Rel::Neq)
    }
}

impl fmt::Display for ESystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, a) in self.atoms.iter().enumerate() {
            if k > 0 {
                write!(f, " & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(text: &str) -> String {
        parse_term(text).unwrap().to_string()
    }

    #[test]
    fn prints_canonically() {
        assert_eq!(rt("E( x )"), "E(x)");
        assert_eq!(rt("-x^2"), "-x^2");
        assert_eq!(rt("-(x^2)"), "-(x^2)");
        assert_eq!(rt("a - (b + c)"), "a - (b + c)");
        assert_eq!(rt("(a - b) + c"), "a - b + c");
        assert_eq!(rt("2*(x*y)"), "2*(x*y)");
        assert_eq!(rt("(1/2)^2"), "(1/2)^2");
        assert_eq!(rt("-1/2*x"), "-1/2*x");
        assert_eq!(rt("x*-3"), "x*(-3)");
    }

    #[test]
    fn parses_systems() {
        let s = parse_system("E(0) = 1").unwrap();
        assert_eq!(s.atoms.len(), 1);
        assert_eq!(s.atoms[0].rel, Rel::Eq);
        let s = parse_system("E(x+y) = E(x)*E(y)").unwrap();
        assert_eq!(s.to_string(), "E(x + y) = E(x)*E(y)");
        let s = parse_system("x != 0\ny = 2 & z = 3\n").unwrap();
        assert_eq!(s.atoms.len(), 3);
        assert_eq!(s.atoms[2].line, 2);
    }

    #[test]
    fn reports_positions() {
        let e = parse_system("E(x").unwrap_err();
        assert_eq!((e.line, e.col), (1, 4));
        let e = parse_system("x = 1\ny = $").unwrap_err();
        assert_eq!((e.line, e.col), (2, 5));
        assert!(parse_term("1/0").is_err());
        assert!(parse_system("x + 1").is_err());
    }

    #[test]
    fn substitutes_and_converts() {
        let t = parse_term("E(y*x) + y").unwrap();
        let map = [(Symbol::new("y"), ETerm::int(3))].into();
        assert_eq!(t.substitute(&map).to_string(), "E(3*x) + 3");
        let p = crate::exactalg::FieldElem::var(Symbol::new("t")).pow(2).scale_rat(&Rat::new((-1).into(), 2.into()));
        let p = p.numer().add(&MPoly::from_int(5));
        let term = ETerm::from_poly(&p).unwrap();
        assert_eq!(term.to_string(), "-1/2*t^2 + 5");
        assert_eq!(ETerm::from_poly(&MPoly::zero()).unwrap(), ETerm::int(0));
    }
}
