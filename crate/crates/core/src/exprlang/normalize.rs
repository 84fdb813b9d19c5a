//! Inequation elimination and flattening of exponential-polynomial systems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::lexer::Tok;
use super::parser::Parser;
use super::{Atom, ESystem, ETerm, Rel, SyntaxError};
use crate::exactalg::{MPoly, Rat, Symbol};

const MAX_EXPONENT: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("inequation on line {0} must be eliminated before flattening")]
    InequationPresent(usize),
    #[error("exponent {0} exceeds the limit of {MAX_EXPONENT}")]
    ExponentTooLarge(u32),
    #[error("`{0}` is reserved")]
    ReservedSymbol(String),
    #[error("malformed flat system: {0}")]
    Malformed(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// A polynomial system in paired variables `y_i = E(x_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSystem {
    pub xvars: Vec<Symbol>,
    pub yvars: Vec<Symbol>,
    /// Each polynomial is understood as `p = 0`.
    pub polys: Vec<MPoly>,
    /// Coefficient symbols (transcendentals of the base field).
    pub params: Vec<Symbol>,
    pub aux_count: usize,
}

impl FlatSystem {
    /// Alias variables introduced for non-variable arguments of `E`.
    pub fn aliases(&self) -> impl Iterator<Item = &Symbol> {
        self.xvars.iter().filter(|s| s.index_with_prefix("_u").is_some())
    }

    /// Inequation witnesses among the unknowns.
    pub fn witnesses(&self) -> impl Iterator<Item = &Symbol> {
        self.xvars.iter().filter(|s| s.index_with_prefix("_w").is_some())
    }

    pub fn pair_of(&self, x: &Symbol) -> Option<&Symbol> {
        self.xvars.iter().position(|s| s == x).map(|i| &self.yvars[i])
    }

    pub fn validate(&self) -> Result<(), NormalizeError> {
        if self.xvars.len() != self.yvars.len() {
            return Err(NormalizeError::Malformed("xvars and yvars differ in length".into()));
        }
        let mut declared = BTreeSet::new();
        for s in self.xvars.iter().chain(&self.yvars).chain(&self.params) {
            if !declared.insert(s.clone()) {
                return Err(NormalizeError::Malformed(format!("`{s}` declared twice")));
            }
        }
        for p in &self.polys {
            if let Some(s) = p.variables().into_iter().find(|s| !declared.contains(s)) {
                return Err(NormalizeError::Malformed(format!("undeclared symbol `{s}`")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for FlatSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.params.is_empty() {
            let names: Vec<&str> = self.params.iter().map(Symbol::as_str).collect();
            writeln!(f, "params: {}", names.join(", "))?;
        }
        for (x, y) in self.xvars.iter().zip(&self.yvars) {
            writeln!(f, "{y} := E({x})")?;
        }
        for p in &self.polys {
            writeln!(f, "{p} = 0")?;
        }
        Ok(())
    }
}

/// Parses the printed form of a [`FlatSystem`].
pub fn parse_flat(text: &str) -> Result<FlatSystem, NormalizeError> {
    let mut p = Parser::new(text)?;
    let mut fs = FlatSystem {
        xvars: vec![],
        yvars: vec![],
        polys: vec![],
        params: vec![],
        aux_count: 0,
    };
    p.skip_newlines();
    while *p.peek() != Tok::Eof {
        match (p.peek().clone(), p.peek_at(1).clone()) {
            (Tok::Ident(s), Tok::Colon) if s == "params" => {
                p.bump();
                p.bump();
                fs.params.push(Symbol::new(&p.ident()?));
                while *p.peek() == Tok::Comma {
                    p.bump();
                    fs.params.push(Symbol::new(&p.ident()?));
                }
            }
            (Tok::Ident(y), Tok::Assign) => {
                p.bump();
                p.bump();
                match p.ident()?.as_str() {
                    "E" => {}
                    _ => return Err(p.error("expected `E`").into()),
                }
                p.expect(Tok::LParen, "expected `(`")?;
                let x = p.ident()?;
                p.expect(Tok::RParen, "expected `)`")?;
                fs.xvars.push(Symbol::new(&x));
                fs.yvars.push(Symbol::new(&y));
            }
            _ => {
                let e = p.elem(1)?;
                p.expect(Tok::Eq, "expected `=`")?;
                match p.peek() {
                    Tok::Int(n) if n == &0.into() => {
                        p.bump();
                    }
                    _ => return Err(p.error("expected `0`").into()),
                }
                let c = e
                    .denom()
                    .as_constant()
                    .ok_or_else(|| NormalizeError::Malformed(format!("`{e}` is not a polynomial")))?;
                let inv = c.inv().expect("nonzero denominator");
                fs.polys.push(e.numer().scale(&inv));
            }
        }
        match p.peek() {
            Tok::Newline => p.skip_newlines(),
            Tok::Eof => {}
            _ => return Err(p.error("expected end of line").into()),
        }
    }
    fs.aux_count = fs.aliases().count();
    fs.validate()?;
    Ok(fs)
}

fn next_index(symbols: &BTreeSet<Symbol>, prefix: &str) -> u64 {
    symbols.iter().filter_map(|s| s.index_with_prefix(prefix)).max().unwrap_or(0) + 1
}

/// Replaces each `t1 != t2` by `(t1 - t2)*w = 1` with a fresh witness `w`.
pub fn eliminate_inequations(s: &ESystem) -> ESystem {
    let mut k = next_index(&s.symbols(), "_w");
    let atoms = s
        .atoms
        .iter()
        .map(|a| match a.rel {
            Rel::Eq => a.clone(),
            Rel::Neq => {
                let w = ETerm::Var(Symbol::indexed("_w", k));
                k += 1;
                let diff = match &a.rhs {
                    ETerm::Int(n) if n == &0.into() => a.lhs.clone(),
                    rhs => ETerm::sub(a.lhs.clone(), rhs.clone()),
                };
                Atom {
                    lhs: ETerm::mul(diff, w),
                    rel: Rel::Eq,
                    rhs: ETerm::int(1),
                    line: a.line,
                }
            }
        })
        .collect();
    ESystem { atoms }
}

struct Flattener<'a> {
    params: &'a BTreeSet<Symbol>,
    xvars: Vec<Symbol>,
    yvars: Vec<Symbol>,
    alias_polys: Vec<MPoly>,
    memo: BTreeMap<String, Symbol>,
    next_u: u64,
    next_v: u64,
}

impl Flattener<'_> {
    fn register(&mut self, x: &Symbol) -> Symbol {
        if let Some(i) = self.xvars.iter().position(|s| s == x) {
            return self.yvars[i].clone();
        }
        let y = Symbol::indexed("_v", self.next_v);
        self.next_v += 1;
        self.xvars.push(x.clone());
        self.yvars.push(y.clone());
        y
    }

    fn poly(&mut self, t: &ETerm) -> Result<MPoly, NormalizeError> {
        Ok(match t {
            ETerm::Int(n) => MPoly::from_rat(Rat::from_integer(n.clone())),
            ETerm::Rat(r) => MPoly::from_rat(r.clone()),
            ETerm::Var(s) => {
                if s.as_str() == "zeta" {
                    return Err(NormalizeError::ReservedSymbol("zeta".into()));
                }
                if !self.params.contains(s) {
                    self.register(s);
                }
                MPoly::var(s.clone())
            }
            ETerm::Add(a, b) => self.poly(a)?.add(&self.poly(b)?),
            ETerm::Sub(a, b) => self.poly(a)?.add(&self.poly(b)?.neg()),
            ETerm::Mul(a, b) => self.poly(a)?.mul(&self.poly(b)?),
            ETerm::Pow(a, e) => {
                if *e > MAX_EXPONENT {
                    return Err(NormalizeError::ExponentTooLarge(*e));
                }
                let base = self.poly(a)?;
                (0..*e).fold(MPoly::one(), |acc, _| acc.mul(&base))
            }
            ETerm::Exp(a) => {
                let arg = self.poly(a)?;
                let x = match arg.as_var() {
                    Some(s) if self.xvars.contains(s) => s.clone(),
                    _ => self.alias(arg),
                };
                MPoly::var(self.register(&x))
            }
        })
    }

    fn alias(&mut self, arg: MPoly) -> Symbol {
        let key = arg.to_string();
        if let Some(u) = self.memo.get(&key) {
            return u.clone();
        }
        let u = Symbol::indexed("_u", self.next_u);
        self.next_u += 1;
        self.alias_polys.push(MPoly::var(u.clone()).sub(&arg));
        self.memo.insert(key, u.clone());
        u
    }
}

/// Flattens an equational system; symbols in `params` are coefficients, every
/// other symbol becomes an unknown paired with its exponential.
pub fn flatten(s: &ESystem, params: &[Symbol]) -> Result<FlatSystem, NormalizeError> {
    if let Some(a) = s.atoms.iter().find(|a| a.rel == Rel::Neq) {
        return Err(NormalizeError::InequationPresent(a.line));
    }
    let mut used = s.symbols();
    used.extend(params.iter().cloned());
    let param_set: BTreeSet<Symbol> = params.iter().cloned().collect();
    let mut fl = Flattener {
        params: &param_set,
        xvars: vec![],
        yvars: vec![],
        alias_polys: vec![],
        memo: BTreeMap::new(),
        next_u: next_index(&used, "_u"),
        next_v: next_index(&used, "_v"),
    };
    let mut polys = Vec::new();
    for a in &s.atoms {
        let p = fl.poly(&a.lhs)?.sub(&fl.poly(&a.rhs)?);
        if !p.is_zero() {
            polys.push(p);
        }
    }
    let aux_count = fl.alias_polys.len();
    let mut all = fl.alias_polys;
    all.extend(polys);
    Ok(FlatSystem {
        xvars: fl.xvars,
        yvars: fl.yvars,
        polys: all,
        params: params.to_vec(),
        aux_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse_system;

    fn sys(t: &str) -> ESystem {
        parse_system(t).unwrap()
    }

    fn names(v: &[Symbol]) -> Vec<&str> {
        v.iter().map(Symbol::as_str).collect()
    }

    #[test]
    fn witnesses_are_fresh() {
        assert_eq!(eliminate_inequations(&sys("x != 0")).to_string(), "x*_w1 = 1");
        assert_eq!(eliminate_inequations(&sys("x = 1")), sys("x = 1"));
        let s = eliminate_inequations(&sys("x != 0 & y != 0"));
        assert_eq!(s.to_string(), "x*_w1 = 1 & y*_w2 = 1");
        let s = eliminate_inequations(&sys("x != y & _w4 = 1"));
        assert_eq!(s.to_string(), "(x - y)*_w5 = 1 & _w4 = 1");
        assert!(!s.has_inequations());
    }

    #[test]
    fn depth_one() {
        let fs = flatten(&sys("E(x)=2"), &[]).unwrap();
        assert_eq!(names(&fs.xvars), ["x"]);
        assert_eq!(names(&fs.yvars), ["_v1"]);
        assert_eq!(fs.polys.len(), 1);
        assert_eq!(fs.polys[0].to_string(), "_v1 - 2");
        assert_eq!(fs.aux_count, 0);
    }

    #[test]
    fn nested() {
        let fs = flatten(&sys("E(E(x))=x"), &[]).unwrap();
        assert_eq!(fs.aux_count, 1);
        assert_eq!(names(&fs.xvars), ["x", "_u1"]);
        assert_eq!(names(&fs.yvars), ["_v1", "_v2"]);
        let polys: Vec<String> = fs.polys.iter().map(|p| p.to_string()).collect();
        assert_eq!(polys, ["_u1 - _v1", "_v2 - x"]);
    }

    #[test]
    fn shared_arguments_alias_once() {
        let fs = flatten(&sys("E(x)*E(x)=E(2*x) & E(2*x) = E(t)"), &[Symbol::new("t")]).unwrap();
        assert_eq!(fs.aux_count, 2);
        assert_eq!(names(&fs.xvars), ["x", "_u1", "_u2"]);
        assert_eq!(fs.polys[0].to_string(), "_u1 - 2*x");
        assert_eq!(fs.polys[1].to_string(), "_u2 - t");
        assert_eq!(fs.polys[2].to_string(), "_v1^2 - _v2");
    }

    #[test]
    fn rejects_inequations_and_reserved() {
        assert_eq!(flatten(&sys("x != 0"), &[]), Err(NormalizeError::InequationPresent(1)));
        assert!(matches!(flatten(&sys("zeta = 1"), &[]), Err(NormalizeError::ReservedSymbol(_))));
    }

    #[test]
    fn flat_text_round_trips() {
        let fs = flatten(&sys("E(E(x))=x & 3/4*x^2 - t*E(x) = -1"), &[Symbol::new("t")]).unwrap();
        let text = fs.to_string();
        assert!(text.contains("_v1 := E(x)\n"));
        assert!(text.starts_with("params: t\n"));
        assert_eq!(parse_flat(&text).unwrap(), fs);
        assert!(parse_flat("_v1 := E(x)\nz = 0\n").is_err());
    }
}
