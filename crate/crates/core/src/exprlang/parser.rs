//! Recursive-descent parser for terms, systems and field-element text.
//!
//! ```text
//! system := atom (("&" | NEWLINE) atom)*
//! atom   := term ("=" | "!=") term
//! term   := sum
//! sum    := prod (("+" | "-") prod)*
//! prod   := pow ("*" pow)*
//! pow    := unit ("^" NAT)?
//! unit   := RAT | INT | IDENT | "E" "(" term ")" | "(" term ")" | "-" unit
//! RAT    := INT "/" POSINT
//! ```
//!
//! Field elements use the same grammar without `E`, with `/` also allowed
//! between products and with `zeta` denoting the primitive root of unity.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::lexer::{tokenize, Tok, Token};
use super::{Atom, ESystem, ETerm, Rel, SyntaxError};
use crate::exactalg::{CycElem, FieldElem, Rat, Symbol};

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(text: &str) -> Result<Self, SyntaxError> {
        Ok(Parser { toks: tokenize(text)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, expected: &str) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError {
            line: t.line,
            col: t.col,
            expected: format!("{expected}, found {}", t.tok.describe()),
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    pub(crate) fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    pub(crate) fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error("expected an identifier")),
        }
    }

    pub(crate) fn term(&mut self) -> Result<ETerm, SyntaxError> {
        let mut acc = self.prod()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = ETerm::Add(Box::new(acc), Box::new(self.prod()?));
                }
                Tok::Minus => {
                    self.bump();
                    acc = ETerm::Sub(Box::new(acc), Box::new(self.prod()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn prod(&mut self) -> Result<ETerm, SyntaxError> {
        let mut acc = self.pow()?;
        while *self.peek() == Tok::Star {
            self.bump();
            acc = ETerm::Mul(Box::new(acc), Box::new(self.pow()?));
        }
        Ok(acc)
    }

    fn pow(&mut self) -> Result<ETerm, SyntaxError> {
        let base = self.unit()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.nat()?;
            return Ok(ETerm::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn nat(&mut self) -> Result<u32, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => match n.to_u32() {
                Some(e) => {
                    self.bump();
                    Ok(e)
                }
                None => Err(self.error("expected an exponent that fits in 32 bits")),
            },
            _ => Err(self.error("expected a natural-number exponent")),
        }
    }

    // INT or INT "/" POSINT
    fn number(&mut self, n: BigInt) -> Result<ETerm, SyntaxError> {
        if *self.peek() == Tok::Slash {
            if let Tok::Int(d) = self.peek_at(1).clone() {
                if d.is_zero() {
                    self.bump();
                    return Err(self.error("expected a positive denominator"));
                }
                self.bump();
                self.bump();
                return Ok(ETerm::Rat(Rat::new(n, d)));
            }
        }
        Ok(ETerm::Int(n))
    }

    fn unit(&mut self) -> Result<ETerm, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                self.number(n)
            }
            Tok::Ident(s) if s == "E" => {
                self.bump();
                self.expect(Tok::LParen, "expected `(` after E")?;
                let inner = self.term()?;
                self.expect(Tok::RParen, "expected `)`")?;
                Ok(ETerm::Exp(Box::new(inner)))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(ETerm::Var(Symbol::new(&s)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.term()?;
                self.expect(Tok::RParen, "expected `)`")?;
                Ok(inner)
            }
            Tok::Minus => {
                self.bump();
                Ok(match self.unit()? {
                    ETerm::Int(n) => ETerm::Int(-n),
                    ETerm::Rat(r) => ETerm::Rat(-r),
                    other => ETerm::Mul(Box::new(ETerm::Int(BigInt::from(-1))), Box::new(other)),
                })
            }
            _ => Err(self.error("expected a term")),
        }
    }

    fn atom(&mut self) -> Result<Atom, SyntaxError> {
        let line = self.toks[self.pos].line;
        let lhs = self.term()?;
        let rel = match self.peek() {
            Tok::Eq => Rel::Eq,
            Tok::Neq => Rel::Neq,
            _ => return Err(self.error("expected `=` or `!=`")),
        };
        self.bump();
        let rhs = self.term()?;
        Ok(Atom { lhs, rel, rhs, line })
    }

    pub(crate) fn system(&mut self) -> Result<ESystem, SyntaxError> {
        self.skip_newlines();
        let mut atoms = vec![self.atom()?];
        loop {
            match self.peek() {
                Tok::Amp => {
                    self.bump();
                    self.skip_newlines();
                    atoms.push(self.atom()?);
                }
                Tok::Newline => {
                    self.skip_newlines();
                    if *self.peek() == Tok::Eof {
                        break;
                    }
                    atoms.push(self.atom()?);
                }
                _ => break,
            }
        }
        Ok(ESystem { atoms })
    }

    pub(crate) fn finish(&mut self) -> Result<(), SyntaxError> {
        self.skip_newlines();
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error("expected end of input"))
        }
    }

    // Field-element grammar.

    pub(crate) fn elem(&mut self, order: u32) -> Result<FieldElem, SyntaxError> {
        let mut acc = self.elem_prod(order)?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.elem_prod(order)?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.elem_prod(order)?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn elem_prod(&mut self, order: u32) -> Result<FieldElem, SyntaxError> {
        let mut acc = self.elem_pow(order)?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    acc = acc.mul(&self.elem_pow(order)?);
                }
                Tok::Slash => {
                    self.bump();
                    let d = self.elem_pow(order)?;
                    acc = acc.div(&d).map_err(|_| self.error("nonzero divisor"))?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn elem_pow(&mut self, order: u32) -> Result<FieldElem, SyntaxError> {
        let base = self.elem_unit(order)?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.nat()?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn elem_unit(&mut self, order: u32) -> Result<FieldElem, SyntaxError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(FieldElem::from_rat(Rat::from_integer(n)))
            }
            Tok::Ident(s) if s == "zeta" => {
                if order <= 1 {
                    return Err(self.error("`zeta` only in a cyclotomic layer of order > 1; expected a term"));
                }
                self.bump();
                Ok(FieldElem::from_cyc(CycElem::zeta(order)))
            }
            Tok::Ident(s) if s == "E" => Err(self.error("a field element (E is not allowed here)")),
            Tok::Ident(s) => {
                self.bump();
                Ok(FieldElem::var(Symbol::new(&s)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.elem(order)?;
                self.expect(Tok::RParen, "expected `)`")?;
                Ok(inner)
            }
            Tok::Minus => {
                self.bump();
                Ok(self.elem_unit(order)?.neg())
            }
            _ => Err(self.error("expected a field element")),
        }
    }
}

pub fn parse_term(text: &str) -> Result<ETerm, SyntaxError> {
    let mut p = Parser::new(text)?;
    p.skip_newlines();
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_system(text: &str) -> Result<ESystem, SyntaxError> {
    let mut p = Parser::new(text)?;
    let s = p.system()?;
    p.finish()?;
    Ok(s)
}

/// Parses the canonical text of a field element in `Q(ζ_order)(…)`.
pub fn parse_element(text: &str, order: u32) -> Result<FieldElem, SyntaxError> {
    let mut p = Parser::new(text)?;
    p.skip_newlines();
    let e = p.elem(order)?;
    p.finish()?;
    Ok(e)
}
