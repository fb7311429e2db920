//! Recursive-descent parser for drift expressions.
//!
//! Precedence, tightest first: `^` (right-associative), unary minus, `*` `/`,
//! `+` `-` (left-associative). `-2^2` is therefore `-(2^2)`, and the exponent
//! of `^` may itself carry a unary minus (`2^-1`).

use thiserror::Error;

use super::expr::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unknown identifier `{name}`")]
    UnknownIdentifier { name: String },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } => Some(*offset),
            ParseError::UnknownIdentifier { .. } => None,
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("operator or end of input"));
    }
    Ok(e)
}

/// Nesting limit for parentheses and prefix minus; keeps recursion (parse,
/// evaluation and drop) bounded on adversarial input.
pub const MAX_DEPTH: usize = 200;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

impl Parser<'_> {
    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn descend(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("shallower nesting"));
        }
        Ok(())
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("`{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            self.descend()?;
            let e = Expr::Neg(Box::new(self.unary()?));
            self.depth -= 1;
            Ok(e)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            self.descend()?;
            let exponent = self.unary()?;
            self.depth -= 1;
            Ok(Expr::binary(BinOp::Pow, base, exponent))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                self.descend()?;
                let e = self.expr()?;
                self.expect(b')')?;
                self.depth -= 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.error("number, identifier or `(`")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.error("digit"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something else: leave the `e` unconsumed
                // so the error points at it.
                self.pos = mark;
            }
        }
        // The slice is ASCII by construction.
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                expected: "number".into(),
            })
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if name == "t" {
            return Ok(Expr::VarT);
        }
        if let Some(idx) = name.strip_prefix('x') {
            if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) && !idx.starts_with('0')
            {
                if let Ok(i) = idx.parse::<usize>() {
                    return Ok(Expr::Var(i));
                }
            }
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
            });
        };
        self.expect(b'(')?;
        self.descend()?;
        let mut args = vec![self.expr()?];
        for _ in 1..func.arity() {
            self.expect(b',')?;
            args.push(self.expr()?);
        }
        self.expect(b')')?;
        self.depth -= 1;
        Ok(Expr::call(func, args))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(s: &str) -> f64 {
        parse_expr(s).unwrap().eval(0.0, &[]).unwrap()
    }

    #[test]
    fn single_variable() {
        assert_eq!(parse_expr("x1").unwrap(), Expr::Var(1));
    }

    #[test]
    fn sgn_times_two_plus_t() {
        let e = parse_expr("sgn(x2)*2 + t").unwrap();
        let want = Expr::binary(
            BinOp::Add,
            Expr::binary(
                BinOp::Mul,
                Expr::call(Func::Sgn, vec![Expr::Var(2)]),
                Expr::Num(2.0),
            ),
            Expr::VarT,
        );
        assert_eq!(e, want);
    }

    #[test]
    fn incomplete_input_reports_offset() {
        let err = parse_expr("x1 +").unwrap_err();
        assert_eq!(err.offset(), Some(4));
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval("2^3^2"), 512.0);
    }

    #[test]
    fn precedence() {
        assert_eq!(eval("-2^2"), -4.0);
        assert_eq!(eval("2^-1"), 0.5);
        assert_eq!(eval("1 - 2 - 3"), -4.0);
        assert_eq!(eval("8 / 4 / 2"), 1.0);
        assert_eq!(eval("1 + 2 * 3"), 7.0);
        assert_eq!(eval("-3 * -2"), 6.0);
        assert_eq!(eval("max(1, 2) - min(1, 2)"), 1.0);
        assert_eq!(eval("1.5e1 + .5 + 2."), 17.5);
    }

    #[test]
    fn unknown_identifiers() {
        for s in ["y", "x0", "foo(1)", "x01"] {
            assert!(
                matches!(parse_expr(s), Err(ParseError::UnknownIdentifier { .. })),
                "{s}"
            );
        }
    }

    #[test]
    fn nesting_limit() {
        let deep = format!("{}1{}", "(".repeat(5000), ")".repeat(5000));
        assert!(matches!(parse_expr(&deep), Err(ParseError::Syntax { .. })));
        assert!(parse_expr(&"-".repeat(10_000)).is_err());
        assert!(parse_expr(&"2^".repeat(5_000)).is_err());
        let ok = format!("{}1{}", "(".repeat(100), ")".repeat(100));
        assert_eq!(parse_expr(&ok).unwrap(), Expr::Num(1.0));
    }

    #[test]
    fn syntax_errors() {
        for (s, off) in [
            ("", 0),
            ("(1", 2),
            ("1 2", 2),
            ("sin 1", 4),
            ("max(1)", 5),
            ("sin(1, 2)", 5),
            ("2e", 1),
            ("*3", 0),
            ("1 + )", 4),
        ] {
            assert_eq!(parse_expr(s).unwrap_err().offset(), Some(off), "{s:?}");
        }
    }
}
