//! Differentiable expression language and the problem-file format.

mod ast;
mod dual;
mod parser;
mod problem;

use thiserror::Error;

pub use ast::{Expr, Func, Var};
pub use dual::{eval_dual, grad, Dual, KINK_TOL};
pub use parser::{parse_expr, parse_expr_at};
pub use problem::{parse_problem, Jacobian, ParametricProblem, Smoothness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("arity error: {0}")]
    Arity(String),
    #[error("variable {0} is not declared by the problem")]
    UnknownVariable(Var),
    #[error("variable {0} is not bound")]
    UnboundVariable(Var),
    #[error("evaluation outside the domain: {0}")]
    EvalDomain(String),
    #[error("expression is not differentiable here: {0}")]
    NonSmoothPoint(String),
}
