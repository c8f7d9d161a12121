//! Condition description language: facts, expressions and exact values.

mod expr;
mod fact;
mod parser;
mod problem;
mod value;

pub use expr::{AttrTerm, EvalError, Expr, Symbol, OPERATORS};
pub use fact::{render_fact, Atom, Fact};
pub use parser::{parse_decimal, parse_expr, parse_fact, ParseError};
pub use problem::{answers_equal, ProblemCdl, ProblemError, RawProblemCdl, Section, DEFAULT_REL_TOL};
pub use value::{ArithmeticError, Exact};

