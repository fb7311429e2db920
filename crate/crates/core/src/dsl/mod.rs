//! Scenario files and the expression language drift components are written in.

mod expr;
mod parser;
mod scenario;

pub use expr::{sgn, BinOp, EvalError, Expr, Func};
pub use parser::{parse_expr, ParseError, MAX_DEPTH};
pub use scenario::{
    parse_scenario, parse_scenario_with, Expectations, Scenario, ScenarioError, Theory,
    DEFAULT_DELTA, DEFAULT_DT_MAX, DEFAULT_EPS, DEFAULT_N_PATHS, DEFAULT_T, KEYS,
};
