use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::ast::{self, Expr, Func, Var, DEFAULT_WALL_HEIGHT};
use super::DslError;

/// Parses an expression over `x, y, z, t` and `pi`.
pub fn parse_potential(text: &str) -> Result<Expr, DslError> {
    parse_with_params(text, &[])
}

/// Like [`parse_potential`], additionally accepting the named parameters.
pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Expr, DslError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        params,
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(tok) => Err(DslError::Syntax {
            offset: tok.offset,
            message: alloc::format!("unexpected {}", tok.kind.describe()),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(v) => alloc::format!("number {v}"),
            Kind::Ident(s) => alloc::format!("identifier `{s}`"),
            Kind::Plus => "`+`".into(),
            Kind::Minus => "`-`".into(),
            Kind::Star => "`*`".into(),
            Kind::Slash => "`/`".into(),
            Kind::Caret => "`^`".into(),
            Kind::LParen => "`(`".into(),
            Kind::RParen => "`)`".into(),
            Kind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b'+' => Some(Kind::Plus),
            b'-' => Some(Kind::Minus),
            b'*' => Some(Kind::Star),
            b'/' => Some(Kind::Slash),
            b'^' => Some(Kind::Caret),
            b'(' => Some(Kind::LParen),
            b')' => Some(Kind::RParen),
            b',' => Some(Kind::Comma),
            _ => None,
        };
        if let Some(kind) = single {
            out.push(Token { kind, offset: start });
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        // U+2212 MINUS SIGN, as pasted from typeset formulas.
        if text[i..].starts_with('\u{2212}') {
            out.push(Token {
                kind: Kind::Minus,
                offset: start,
            });
            i += '\u{2212}'.len_utf8();
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit.parse().map_err(|_| DslError::Syntax {
                offset: start,
                message: alloc::format!("malformed number `{lit}`"),
            })?;
            out.push(Token {
                kind: Kind::Num(v),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: Kind::Ident(text[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        let ch = text[i..].chars().next().unwrap_or('?');
        return Err(DslError::Syntax {
            offset: start,
            message: alloc::format!("unexpected character `{ch}`"),
        });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, kind: &Kind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        let message = match self.peek() {
            Some(t) => alloc::format!("expected {wanted}, found {}", t.kind.describe()),
            None => alloc::format!("expected {wanted}, found end of input"),
        };
        DslError::Syntax {
            offset: self.here(),
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Kind::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Kind::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(&Kind::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(&Kind::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, DslError> {
        let base = self.unary()?;
        if self.eat(&Kind::Caret) {
            let exponent = self.factor()?;
            Ok(Expr::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat(&Kind::Minus) {
            Ok(ast::neg(self.atom()?))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("a value"));
        };
        match tok.kind {
            Kind::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Kind::LParen => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(&Kind::RParen) {
                    return Err(self.unexpected("`)`"));
                }
                Ok(e)
            }
            Kind::Ident(name) => {
                self.pos += 1;
                if self.peek().map(|t| &t.kind) == Some(&Kind::LParen) {
                    self.pos += 1;
                    return self.call(&name, tok.offset);
                }
                self.identifier(name, tok.offset)
            }
            _ => Err(self.unexpected("a value")),
        }
    }

    fn identifier(&self, name: String, offset: usize) -> Result<Expr, DslError> {
        let var = match name.as_str() {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "t" => Some(Var::T),
            _ => None,
        };
        if let Some(v) = var {
            return Ok(Expr::Var(v));
        }
        if self.params.contains(&name.as_str()) {
            return Ok(Expr::Param(name));
        }
        if name == "pi" {
            return Ok(Expr::Num(PI));
        }
        Err(DslError::UnknownIdentifier { name, offset })
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Expr, DslError> {
        let mut args = Vec::new();
        if !self.eat(&Kind::RParen) {
            loop {
                args.push(self.expr()?);
                if self.eat(&Kind::Comma) {
                    continue;
                }
                if self.eat(&Kind::RParen) {
                    break;
                }
                return Err(self.unexpected("`,` or `)`"));
            }
        }
        let func = match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "erf" => Func::Erf,
            "sqrt" => Func::Sqrt,
            "wall" => {
                if !(2..=3).contains(&args.len()) {
                    return Err(DslError::Arity {
                        func: name.to_string(),
                        expected: "2 or 3",
                        found: args.len(),
                        offset,
                    });
                }
                let height = if args.len() == 3 {
                    args.pop().unwrap()
                } else {
                    Expr::Num(DEFAULT_WALL_HEIGHT)
                };
                let hi = args.pop().unwrap();
                let lo = args.pop().unwrap();
                return Ok(Expr::Wall {
                    lo: Box::new(lo),
                    hi: Box::new(hi),
                    height: Box::new(height),
                });
            }
            _ => {
                return Err(DslError::UnknownIdentifier {
                    name: name.to_string(),
                    offset,
                })
            }
        };
        if args.len() != 1 {
            return Err(DslError::Arity {
                func: name.to_string(),
                expected: "1",
                found: args.len(),
                offset,
            });
        }
        Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Point;

    fn at(e: &Expr, x: f64, y: f64) -> f64 {
        e.eval(&Point::new([x, y, 0.0], 0.0)).unwrap()
    }

    #[test]
    fn mathieu_and_fig3_potentials() {
        let e = parse_potential("2 + 2*cos(2*x)").unwrap();
        assert!((at(&e, 0.3, 0.0) - (2.0 + 2.0 * (0.6f64).cos())).abs() < 1e-15);
        let e = parse_potential("3 + cos(2*y) - 2*cos(x)*cos(y)").unwrap();
        let expect = 3.0 + (1.0f64).cos() - 2.0 * (0.2f64).cos() * (0.5f64).cos();
        assert!((at(&e, 0.2, 0.5) - expect).abs() < 1e-15);
    }

    #[test]
    fn truncated_call_reports_end_offset() {
        let err = parse_potential("cos(").unwrap_err();
        assert_eq!(err.offset(), Some(4));
        assert!(matches!(err, DslError::Syntax { .. }));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_potential("x + q"),
            Err(DslError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(parse_potential("sin(x, y)"), Err(DslError::Arity { .. })));
        assert!(matches!(parse_potential("wall(1)"), Err(DslError::Arity { .. })));
        assert!(matches!(parse_potential("log(x)"), Err(DslError::UnknownIdentifier { .. })));
        assert_eq!(parse_potential("x )").unwrap_err().offset(), Some(2));
        assert_eq!(parse_potential("2 $ x").unwrap_err().offset(), Some(2));
        assert_eq!(parse_potential("").unwrap_err().offset(), Some(0));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_potential("1 - 2 - 3").unwrap();
        assert_eq!(at(&e, 0.0, 0.0), -4.0);
        let e = parse_potential("8 / 2 / 2").unwrap();
        assert_eq!(at(&e, 0.0, 0.0), 2.0);
        let e = parse_potential("2^3^2").unwrap();
        assert_eq!(at(&e, 0.0, 0.0), 512.0);
        let e = parse_potential("-x^2").unwrap();
        assert_eq!(at(&e, 3.0, 0.0), 9.0);
        let e = parse_potential("1 - x^2*2").unwrap();
        assert_eq!(at(&e, 3.0, 0.0), -17.0);
        let e = parse_potential("2^-1").unwrap();
        assert_eq!(at(&e, 0.0, 0.0), 0.5);
    }

    #[test]
    fn literals_params_and_unicode_minus() {
        let e = parse_potential("1.5e-1 + .5 + 2E1 + pi").unwrap();
        assert!((at(&e, 0.0, 0.0) - (20.65 + PI)).abs() < 1e-12);
        let e = parse_with_params("(x \u{2212} phi0)^2/(2*beta_l)", &["phi0", "beta_l"]).unwrap();
        assert!(e.has_params());
        assert!(parse_potential("(x - phi0)^2").is_err());
    }

    #[test]
    fn wall_defaults() {
        let e = parse_potential("wall(-8, 8)").unwrap();
        assert_eq!(at(&e, 0.0, 0.0), 0.0);
        assert_eq!(at(&e, 8.5, 0.0), DEFAULT_WALL_HEIGHT);
        assert_eq!(at(&e, -9.0, 0.0), DEFAULT_WALL_HEIGHT);
        let e = parse_potential("wall(0, 1, 5)").unwrap();
        assert_eq!(at(&e, 2.0, 0.0), 5.0);
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "2 + 2*cos(2*x)",
            "-x^2",
            "-(x^2)",
            "(x - 1)^2/(2*3) + 1 - cos(x)",
            "2^3^2",
            "(2^3)^2",
            "x/(y*z)",
            "x - (y - z)",
            "10 - 4.8*(erf((t - 5)/(0.8*sqrt(2))) - erf((t - 17.8)/(1.6*sqrt(2))))",
            "wall(-8, 8) + 1e-7*x",
        ] {
            let e = parse_potential(text).unwrap();
            let printed = alloc::format!("{e}");
            let again = parse_potential(&printed).unwrap();
            assert_eq!(e, again, "{text} -> {printed}");
        }
    }
}
