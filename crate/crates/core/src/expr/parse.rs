//! Recursive-descent parser for the coefficient language.
//!
//! Precedence, loosest to tightest: `+ -`, `* /`, unary `-`, `^` (right
//! associative). `x^-2` is legal: the exponent position accepts a unary
//! expression. Integer-literal exponents with magnitude at most 4096 fold
//! into the integer-power node.

use super::{ExprError, Func, ScalarExpr};

const MAX_INT_EXPONENT: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl<'a> Tok<'a> {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("the number `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    tok: Tok<'a>,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token<'_>>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let tok = match c {
            b'+' => {
                pos += 1;
                Tok::Plus
            }
            b'-' => {
                pos += 1;
                Tok::Minus
            }
            b'*' => {
                pos += 1;
                Tok::Star
            }
            b'/' => {
                pos += 1;
                Tok::Slash
            }
            b'^' => {
                pos += 1;
                Tok::Caret
            }
            b'(' => {
                pos += 1;
                Tok::LParen
            }
            b')' => {
                pos += 1;
                Tok::RParen
            }
            b',' => {
                pos += 1;
                Tok::Comma
            }
            b'0'..=b'9' => {
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'.' {
                    pos += 1;
                    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                        pos += 1;
                    }
                }
                // Exponent part only if it is complete; otherwise the `e`
                // is left to be lexed as an identifier (and rejected by the
                // grammar with a clear position).
                if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
                    let mut probe = pos + 1;
                    if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
                        probe += 1;
                    }
                    if probe < bytes.len() && bytes[probe].is_ascii_digit() {
                        probe += 1;
                        while probe < bytes.len() && bytes[probe].is_ascii_digit() {
                            probe += 1;
                        }
                        pos = probe;
                    }
                }
                let text = &src[start..pos];
                let value: f64 = text.parse().map_err(|_| ExprError::SyntaxError {
                    offset: start,
                    expected: "a numeric literal".into(),
                    found: format!("`{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(ExprError::SyntaxError {
                        offset: start,
                        expected: "a finite numeric literal".into(),
                        found: format!("`{text}`"),
                    });
                }
                Tok::Num(value)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while pos < bytes.len()
                    && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_')
                {
                    pos += 1;
                }
                Tok::Ident(&src[start..pos])
            }
            _ => {
                let ch_len = src[start..].chars().next().map_or(1, char::len_utf8);
                return Err(ExprError::SyntaxError {
                    offset: start,
                    expected: "a token".into(),
                    found: format!("`{}`", &src[start..start + ch_len]),
                });
            }
        };
        out.push(Token { tok, offset: start });
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    at: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Token<'a> {
        self.tokens[self.at]
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.tokens[self.at];
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ExprError {
        let t = self.peek();
        ExprError::SyntaxError {
            offset: t.offset,
            expected: expected.into(),
            found: t.tok.describe(),
        }
    }

    fn expect(&mut self, want: Tok<'_>, expected: &str) -> Result<(), ExprError> {
        if self.peek().tok == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = ScalarExpr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = ScalarExpr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<ScalarExpr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = ScalarExpr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = ScalarExpr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarExpr, ExprError> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            Ok(ScalarExpr::Neg(Box::new(inner)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ScalarExpr, ExprError> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            Ok(fold_power(base, exponent))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ScalarExpr, ExprError> {
        let t = self.peek();
        match t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(ScalarExpr::Num(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident("pi") => {
                self.bump();
                Ok(ScalarExpr::Pi)
            }
            Tok::Ident(name) => {
                self.bump();
                match Func::from_name(name) {
                    Some(func) => {
                        self.expect(Tok::LParen, "`(` to open the argument list")?;
                        let mut args = vec![self.expr()?];
                        while args.len() < func.arity() {
                            self.expect(Tok::Comma, "`,`")?;
                            args.push(self.expr()?);
                        }
                        self.expect(Tok::RParen, "`)`")?;
                        Ok(ScalarExpr::Call(func, args))
                    }
                    None => {
                        if self.peek().tok == Tok::LParen {
                            return Err(ExprError::UnknownFunction {
                                name: name.to_string(),
                                offset: t.offset,
                            });
                        }
                        Ok(ScalarExpr::Var(name.to_string()))
                    }
                }
            }
            _ => Err(self.err("a number, `pi`, an identifier, `-`, or `(`")),
        }
    }
}

/// Fold `base ^ exponent` into an integer power when the exponent is an
/// integral literal (possibly negated) of reasonable size.
fn fold_power(base: ScalarExpr, exponent: ScalarExpr) -> ScalarExpr {
    let as_int = |e: &ScalarExpr| -> Option<i32> {
        if let ScalarExpr::Num(v) = e {
            if v.fract() == 0.0 && v.abs() <= MAX_INT_EXPONENT {
                return Some(*v as i32);
            }
        }
        None
    };
    if let Some(k) = as_int(&exponent) {
        return ScalarExpr::PowInt(Box::new(base), k);
    }
    if let ScalarExpr::Neg(inner) = &exponent {
        if let Some(k) = as_int(inner) {
            return ScalarExpr::PowInt(Box::new(base), -k);
        }
    }
    ScalarExpr::Pow(Box::new(base), Box::new(exponent))
}

pub fn parse(text: &str) -> Result<ScalarExpr, ExprError> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, at: 0 };
    let expr = parser.expr()?;
    if parser.peek().tok != Tok::Eof {
        return Err(parser.err("an operator (`+`, `-`, `*`, `/`, `^`) or end of input"));
    }
    Ok(expr)
}
