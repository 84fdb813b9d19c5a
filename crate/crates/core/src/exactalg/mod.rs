//! Exact arithmetic over `Q(ζ_m)(t_1, …, t_k)`: rationals, the cyclotomic
//! layer, multivariate polynomials, rational functions and linear algebra.

pub mod cyclo;
pub mod field;
pub mod linalg;
pub mod mpoly;
pub mod symbol;

use thiserror::Error;

pub use cyclo::CycElem;
pub use field::FieldElem;
pub use linalg::{ff_rank, QMatrix};
pub use mpoly::{MPoly, Monomial};
pub use symbol::Symbol;

pub type Rat = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("exponent {0} is too large")]
    ExponentTooLarge(String),
}

/// Field operation selector for [`field_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub fn field_arith(a: &FieldElem, b: &FieldElem, op: ArithOp) -> Result<FieldElem, AlgError> {
    Ok(match op {
        ArithOp::Add => a.add(b),
        ArithOp::Sub => a.sub(b),
        ArithOp::Mul => a.mul(b),
        ArithOp::Div => a.div(b)?,
    })
}

/// Partial derivative with respect to `v`, which must be one of `ambient`.
pub fn differentiate(e: &FieldElem, v: &Symbol, ambient: &[Symbol]) -> Result<FieldElem, AlgError> {
    if !ambient.contains(v) {
        return Err(AlgError::UnknownVariable(v.to_string()));
    }
    Ok(e.derivative(v))
}
