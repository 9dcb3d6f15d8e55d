use super::ast::{BinOp, Expr, Func, Var, VarKind};
use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

/// Token with its 1-based byte position.
#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

fn err(offset: usize, found: impl Into<String>, expected: &[&str]) -> Error {
    Error::Parse(ParseError {
        offset,
        found: found.into(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    })
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                offset: start + 1,
            });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| err(start + 1, format!("`{text}`"), &["number"]))?;
            if !value.is_finite() {
                return Err(err(start + 1, format!("`{text}`"), &["finite number"]));
            }
            out.push(Spanned {
                tok: Tok::Num(value),
                offset: start + 1,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(src[start..i].to_string()),
                offset: start + 1,
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(err(
            start + 1,
            format!("`{ch}`"),
            &["number", "identifier", "operator", "`(`", "`)`"],
        ));
    }
    out.push(Spanned {
        tok: Tok::Eof,
        offset: src.len() + 1,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    n: usize,
}

const OPERAND: &[&str] = &["number", "variable", "function", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<()> {
        let t = self.peek();
        if t.tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(err(t.offset, t.tok.describe(), expected))
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := primary ('^' unary)?
    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, &["`)`", "`+`", "`-`", "`*`", "`/`", "`^`"])?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen, &["`(`"])?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, &["`)`", "`+`", "`-`", "`*`", "`/`", "`^`"])?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                self.variable(&name, t.offset)
            }
            other => Err(err(t.offset, other.describe(), OPERAND)),
        }
    }

    fn variable(&self, name: &str, offset: usize) -> Result<Expr> {
        let (kind, digits) = match name.split_at(1) {
            ("x", d) => (VarKind::X, d),
            ("y", d) => (VarKind::Y, d),
            _ => {
                return Err(Error::UnknownIdentifier {
                    name: name.to_string(),
                    offset,
                })
            }
        };
        let well_formed = !digits.is_empty()
            && digits.bytes().all(|b| b.is_ascii_digit())
            && (digits == "0" || !digits.starts_with('0'));
        if !well_formed {
            return Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset,
            });
        }
        let index: usize = digits.parse().map_err(|_| Error::IndexOutOfRange {
            name: name.to_string(),
            n: self.n,
            offset,
        })?;
        if index >= self.n {
            return Err(Error::IndexOutOfRange {
                name: name.to_string(),
                n: self.n,
                offset,
            });
        }
        Ok(Expr::Var(Var { kind, index }))
    }
}

/// Parse an expression over `x0..x{n-1}` and `y0..y{n-1}`.
pub fn parse(src: &str, n: usize) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, n };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::Eof {
        return Err(err(
            t.offset,
            t.tok.describe(),
            &["end of input", "`+`", "`-`", "`*`", "`/`", "`^`"],
        ));
    }
    Ok(e)
}
