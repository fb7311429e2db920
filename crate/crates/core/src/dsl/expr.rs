//! Expression trees for drift components.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Sgn,
    Tanh,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Sqrt,
        Func::Abs,
        Func::Sgn,
        Func::Tanh,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sgn => "sgn",
            Func::Tanh => "tanh",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Abstract syntax tree over `t`, `x1..xd`, real literals, arithmetic and a
/// fixed set of elementary functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// The time variable `t`.
    VarT,
    /// Spatial coordinate `x_i`, 1-based.
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("variable x{index} used with a {dim}-dimensional state")]
    VariableOutOfRange { index: usize, dim: usize },
}

/// Mathematical sign with `sgn(0) = 0`.
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, args: Vec<Expr>) -> Self {
        Expr::Call(f, args)
    }

    /// Largest spatial variable index referenced (0 if none).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::VarT => 0,
            Expr::Var(i) => *i,
            Expr::Neg(e) => e.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
            Expr::Call(_, args) => args.iter().map(Expr::max_var).max().unwrap_or(0),
        }
    }

    /// True if the expression references neither `t` nor any `x_i`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::VarT | Expr::Var(_) => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
            Expr::Call(_, args) => args.iter().all(Expr::is_constant),
        }
    }

    /// True if the expression does not reference `t`.
    pub fn is_autonomous(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Var(_) => true,
            Expr::VarT => false,
            Expr::Neg(e) => e.is_autonomous(),
            Expr::Binary(_, a, b) => a.is_autonomous() && b.is_autonomous(),
            Expr::Call(_, args) => args.iter().all(Expr::is_autonomous),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        let v = self.eval_node(t, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::Domain(format!("non-finite result {v} from `{self}`")))
        }
    }

    fn eval_node(&self, t: f64, x: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::VarT => t,
            Expr::Var(i) => match x.get(i.wrapping_sub(1)) {
                Some(v) => *v,
                None => {
                    return Err(EvalError::VariableOutOfRange {
                        index: *i,
                        dim: x.len(),
                    })
                }
            },
            Expr::Neg(e) => -e.eval_node(t, x)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_node(t, x)?;
                let b = b.eval_node(t, x)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::Domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval_node(t, x)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain(format!("sqrt of negative {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Sgn => sgn(a),
                    Func::Tanh => a.tanh(),
                    Func::Min => a.min(args[1].eval_node(t, x)?),
                    Func::Max => a.max(args[1].eval_node(t, x)?),
                }
            }
        })
    }

    /// Multiply by a constant factor (used for rescaled fields).
    pub fn scaled(&self, factor: f64) -> Expr {
        Expr::binary(BinOp::Mul, Expr::Num(factor), self.clone())
    }
}

/// Prints a fully parenthesised form that parses back to the same tree shape.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:?}` keeps enough digits to round-trip and always marks the
            // value as a real.
            Expr::Num(v) if *v < 0.0 => write!(f, "(-{:?})", -v),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::VarT => f.write_str("t"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgn_convention() {
        let e = Expr::call(Func::Sgn, vec![Expr::var(1)]);
        assert_eq!(e.eval(0.0, &[-3.0]).unwrap(), -1.0);
        assert_eq!(e.eval(0.0, &[0.0]).unwrap(), 0.0);
        assert_eq!(e.eval(0.0, &[2.5]).unwrap(), 1.0);
    }

    #[test]
    fn domain_errors() {
        let sqrt = Expr::call(Func::Sqrt, vec![Expr::var(1)]);
        assert!(matches!(sqrt.eval(0.0, &[-1.0]), Err(EvalError::Domain(_))));
        let div = Expr::binary(BinOp::Div, Expr::num(1.0), Expr::var(1));
        assert!(matches!(div.eval(0.0, &[0.0]), Err(EvalError::Domain(_))));
        let big = Expr::call(Func::Exp, vec![Expr::num(1000.0)]);
        assert!(matches!(big.eval(0.0, &[]), Err(EvalError::Domain(_))));
    }

    #[test]
    fn variable_out_of_range() {
        let e = Expr::var(3);
        assert_eq!(
            e.eval(0.0, &[1.0, 2.0]),
            Err(EvalError::VariableOutOfRange { index: 3, dim: 2 })
        );
    }

    #[test]
    fn structural_queries() {
        let e = Expr::binary(BinOp::Add, Expr::var(2), Expr::VarT);
        assert_eq!(e.max_var(), 2);
        assert!(!e.is_constant());
        assert!(!e.is_autonomous());
        assert!(Expr::call(Func::Max, vec![Expr::num(1.0), Expr::num(2.0)]).is_constant());
    }
}
