//! Expression language for potentials and coupling schedules.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | ident | func '(' args ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `x`, `y`, `z`, `t`, the constant `pi`, or a declared
//! parameter. Functions: `sin cos exp erf sqrt` (one argument) and
//! `wall(lo, hi[, height])`. Unary minus binds tighter than `^`, so `-x^2`
//! is `(-x)^2`; write `-(x^2)` for the other reading.

mod ast;
mod diff;
mod fields;
mod parser;

use alloc::boxed::Box;
use alloc::string::String;
use thiserror::Error;

pub use ast::{Expr, Func, Point, Var, DEFAULT_WALL_HEIGHT};
pub use diff::differentiate;
pub use fields::{derivative_bundle, evaluate_on_grid, DerivativeBundle, PotentialModel};
pub use parser::{parse_potential, parse_with_params};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{func}` takes {expected} argument(s), got {found} (byte {offset})")]
    Arity {
        func: String,
        expected: &'static str,
        found: usize,
        offset: usize,
    },
    #[error("parameter `{0}` has no value")]
    UnboundParameter(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("cannot differentiate with respect to t")]
    TimeDerivative,
    #[error("exponent depends on the differentiation variable")]
    VariableExponent,
    #[error("at point {point:?}: {source}")]
    AtPoint {
        point: [f64; 3],
        #[source]
        source: Box<DslError>,
    },
}

impl DslError {
    /// Byte offset for parse errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            DslError::Syntax { offset, .. }
            | DslError::UnknownIdentifier { offset, .. }
            | DslError::Arity { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}
