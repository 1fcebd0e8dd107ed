use std::fmt;

use thiserror::Error;

use super::{BinaryOp, Expr, UnaryOp, Var, VarScope};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unknown identifier {name} at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier {s}"),
            Tok::Sym(c) => write!(f, "\"{c}\""),
            Tok::End => f.write_str("end of input"),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number".into()],
                found: format!("\"{text}\""),
            })?;
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap();
        if "+-*/^()".contains(ch) {
            self.pos += 1;
            return Ok((Tok::Sym(ch), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            expected: vec!["expression".into()],
            found: format!("\"{ch}\""),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    scope: &'a VarScope,
}

/// Parse `source` against the variable namespace `scope`.
pub fn parse(source: &str, scope: &VarScope) -> Result<Expr, ParseError> {
    let mut lexer = Lexer { src: source, pos: 0 };
    let (tok, at) = lexer.next()?;
    let mut p = Parser { lexer, tok, at, scope };
    let expr = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected(&["operator", "end of input"]));
    }
    Ok(expr)
}

fn resolve_var(name: &str) -> Option<Var> {
    let index = |digits: &str| -> Option<usize> {
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1)
    };
    match name {
        "t" => Some(Var::T),
        "e" => Some(Var::E),
        _ => {
            if let Some(rest) = name.strip_prefix("mu") {
                index(rest).map(Var::Mu)
            } else if let Some(rest) = name.strip_prefix('x') {
                index(rest).map(Var::X)
            } else {
                None
            }
        }
    }
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            offset: self.at,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.tok.to_string(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(self.unexpected(&[&format!("\"{c}\"")]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinaryOp::Add,
                Tok::Sym('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinaryOp::Mul,
                Tok::Sym('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            let arg = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, arg));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Sym('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.at;
                if let Some(op) = UnaryOp::from_name(&name) {
                    self.bump()?;
                    self.expect_sym('(')?;
                    let arg = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expr::unary(op, arg));
                }
                match resolve_var(&name) {
                    Some(var) if self.scope.contains(var) => {
                        self.bump()?;
                        Ok(Expr::Var(var))
                    }
                    _ => Err(ParseError::UnknownIdentifier { offset, name }),
                }
            }
            _ => Err(self.unexpected(&["number", "identifier", "\"(\""])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Bindings;

    fn scope() -> VarScope {
        VarScope::new(2, 2, false)
    }

    #[test]
    fn precedence_and_associativity() {
        let s = scope();
        assert_eq!(
            parse("-x1^2", &s).unwrap(),
            Expr::unary(
                UnaryOp::Neg,
                Expr::binary(BinaryOp::Pow, Expr::Var(Var::X(0)), Expr::Const(2.0))
            )
        );
        // 2^3^2 = 2^9
        let b = Bindings::new(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(parse("2^3^2", &s).unwrap().eval(&b).unwrap(), 512.0);
        assert_eq!(parse("8/4/2", &s).unwrap().eval(&b).unwrap(), 1.0);
        assert_eq!(parse("1-2-3", &s).unwrap().eval(&b).unwrap(), -4.0);
        assert_eq!(parse("2^-1", &s).unwrap().eval(&b).unwrap(), 0.5);
        assert_eq!(parse("2*3+4*5", &s).unwrap().eval(&b).unwrap(), 26.0);
    }

    #[test]
    fn numbers_with_exponents() {
        let b = Bindings::new(&[0.0, 0.0], &[0.0, 0.0]);
        let s = scope();
        assert_eq!(parse("1.5e2", &s).unwrap().eval(&b).unwrap(), 150.0);
        assert_eq!(parse("2E-1", &s).unwrap().eval(&b).unwrap(), 0.2);
        assert_eq!(parse(".5", &s).unwrap().eval(&b).unwrap(), 0.5);
    }

    #[test]
    fn unbalanced_parenthesis_reports_end_offset() {
        let err = parse("2*(3+4", &scope()).unwrap_err();
        match err {
            ParseError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 6);
                assert_eq!(expected, vec!["\")\"".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identifiers_are_scope_checked() {
        let s = VarScope::new(1, 1, false);
        assert!(matches!(
            parse("mu2^2", &s),
            Err(ParseError::UnknownIdentifier { ref name, offset: 0 }) if name == "mu2"
        ));
        assert!(matches!(parse("t + x1", &s), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("x0", &s), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(
            parse("foo(x1)", &s),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(parse("t + e", &VarScope::new(0, 0, true)).is_ok());
    }

    #[test]
    fn trailing_garbage_and_bad_chars() {
        let s = scope();
        assert!(matches!(parse("x1 x2", &s), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 $ 2", &s), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("", &s), Err(ParseError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("sin x1", &s), Err(ParseError::Syntax { offset: 4, .. })));
    }
}
