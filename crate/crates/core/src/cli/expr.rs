//! Posynomial expression grammar:
//!
//! ```text
//! sum     := product ('+' product)*
//! product := power (('*' | '/') power)*
//! power   := atom ('^' exponent)?
//! exponent:= ['+' | '-'] number | '(' ['+' | '-'] number ')'
//! atom    := number | name | '(' sum ')'
//! ```
//!
//! There is no unary minus and no subtraction. A literal `0` (or any product
//! containing it) is a structural zero.

use crate::error::{Error, Result};
use crate::posyalg::{Monomial, Posynomial, VarSpace};

/// Parses `src` whose first character sits at `(line, col)` in the source
/// file. `Ok(None)` is the zero expression.
pub fn parse_expr(
    src: &str,
    vars: &VarSpace,
    line: usize,
    col: usize,
) -> Result<Option<Posynomial>> {
    let mut p = Parser {
        chars: src.chars().collect(),
        pos: 0,
        vars,
        line,
        col,
    };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.err(0, "empty expression".into()));
    }
    let v = p.sum()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.unexpected(c));
    }
    Ok(v)
}

/// Like [`parse_expr`] but a zero result is an error.
pub fn parse_nonzero(src: &str, vars: &VarSpace, line: usize, col: usize) -> Result<Posynomial> {
    parse_expr(src, vars, line, col)?.ok_or_else(|| Error::Parse {
        line,
        col,
        msg: "expression must not be zero".into(),
    })
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    vars: &'a VarSpace,
    line: usize,
    col: usize,
}

type Value = Option<Posynomial>;

impl Parser<'_> {
    fn err(&self, at: usize, msg: String) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col + at,
            msg,
        }
    }

    fn unexpected(&self, c: char) -> Error {
        if c == '-' {
            self.err(
                self.pos,
                "negative coefficient: `-` is not allowed in a posynomial".into(),
            )
        } else {
            self.err(self.pos, format!("unexpected `{c}`"))
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Value> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                let rhs = self.product()?;
                acc = match (acc, rhs) {
                    (Some(a), Some(b)) => Some(a.add(&b)),
                    (a, None) => a,
                    (None, b) => b,
                };
            } else if self.peek() == Some('-') {
                return Err(self.unexpected('-'));
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Value> {
        let mut acc = self.power()?;
        loop {
            if self.eat('*') {
                let rhs = self.power()?;
                acc = match (acc, rhs) {
                    (Some(a), Some(b)) => Some(a.mul(&b)),
                    _ => None,
                };
            } else if self.eat('/') {
                let at = self.pos;
                let rhs = self.power()?;
                let den = match rhs.as_ref().map(|p| p.as_monomial()) {
                    None => return Err(self.err(at, "division by zero".into())),
                    Some(None) => return Err(self.err(at, "can only divide by a monomial".into())),
                    Some(Some(m)) => m.recip(),
                };
                acc = acc.map(|a| a.mul_monomial(&den));
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<Value> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.pos;
        let paren = self.eat('(');
        self.skip_ws();
        let neg = match self.peek() {
            Some('-') => {
                self.pos += 1;
                true
            }
            Some('+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let a = self.number()?;
        let a = if neg { -a } else { a };
        if paren && !self.eat(')') {
            return Err(self.err(self.pos, "expected `)`".into()));
        }
        match base {
            None if a > 0.0 => Ok(None),
            None => Err(self.err(at, format!("zero raised to non-positive power {a}"))),
            Some(b) => match b.as_monomial() {
                Some(m) => Ok(Some(m.powf(a).into())),
                None if a >= 0.0 && a.fract() == 0.0 && a <= 64.0 => Ok(Some(b.powi(a as u32))),
                None => Err(self.err(
                    at,
                    format!("a sum can only be raised to a nonnegative integer power, got {a}"),
                )),
            },
        }
    }

    fn atom(&mut self) -> Result<Value> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if !self.eat(')') {
                    return Err(self.err(self.pos, "expected `)`".into()));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let at = self.pos;
                let x = self.number()?;
                if x == 0.0 {
                    Ok(None)
                } else {
                    Monomial::constant(x)
                        .map(|m| Some(m.into()))
                        .map_err(|e| self.err(at, e.to_string()))
                }
            }
            Some(c) if c.is_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                match self.vars.slot(&name) {
                    Some(s) => Ok(Some(Posynomial::var(s))),
                    None => Err(self.err(start, format!("unknown variable `{name}`"))),
                }
            }
            Some(c) => Err(self.unexpected(c)),
            None => Err(self.err(self.pos, "unexpected end of expression".into())),
        }
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
        };
        digits(self);
        if self.peek() == Some('.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ if text.is_empty() => Err(match self.peek() {
                Some(c) => self.unexpected(c),
                None => self.err(self.pos, "expected a number".into()),
            }),
            _ => Err(self.err(start, format!("invalid number `{text}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> VarSpace {
        VarSpace::new(["b1", "d1", "d2"]).unwrap()
    }

    fn parse(s: &str) -> Result<Option<Posynomial>> {
        parse_expr(s, &vars(), 1, 1)
    }

    #[test]
    fn monomial_entry() {
        let p = parse("2*b1^0.5/d2").unwrap().unwrap();
        assert_eq!(p, Monomial::new(2.0, [(0, 0.5), (2, -1.0)]).unwrap().into());
    }

    #[test]
    fn zeros_are_absent() {
        assert_eq!(parse("0").unwrap(), None);
        assert_eq!(parse("0*b1").unwrap(), None);
        assert_eq!(parse("0 + b1").unwrap(), Some(Posynomial::var(0)));
    }

    #[test]
    fn sums_and_powers() {
        let p = parse("(b1 + d1)^2").unwrap().unwrap();
        assert_eq!(p.len(), 3);
        let p = parse("b1^-1 + 3e-2 * d1^(-0.5)").unwrap().unwrap();
        assert_eq!(p.terms()[0], Monomial::var_pow(0, -1.0));
        assert_eq!(p.terms()[1], Monomial::new(0.03, [(1, -0.5)]).unwrap());
    }

    #[test]
    fn rejects_negatives_with_location() {
        let e = parse_expr("b1 - d1", &vars(), 4, 10).unwrap_err();
        match e {
            Error::Parse { line, col, msg } => {
                assert_eq!((line, col), (4, 13));
                assert!(msg.contains("negative coefficient"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
        assert!(parse("-b1").is_err());
        assert!(parse("b1 * -2").is_err());
    }

    #[test]
    fn other_errors() {
        assert!(matches!(parse("x1"), Err(Error::Parse { col: 1, .. })));
        assert!(parse("b1 / (b1 + d1)").is_err());
        assert!(parse("(b1 + d1)^0.5").is_err());
        assert!(parse("b1 / 0").is_err());
        assert!(parse("(b1").is_err());
        assert!(parse("b1 b1").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        let src = "2*b1^0.5/d2 + 1e-7*d1 + 3 + b1^-1.25";
        let p = parse(src).unwrap().unwrap();
        let again = parse(&p.display(&vars())).unwrap().unwrap();
        assert_eq!(p, again);
    }
}
