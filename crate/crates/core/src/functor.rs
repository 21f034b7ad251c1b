//! Syntax trees for system types and their parser.
//!
//! Grammar (whitespace insignificant, `x` binds tighter than `+`):
//!
//! ```text
//! F ::= 'X' | 'P(' F ')' | 'B(' F ')' | 'R(' F ')' | 'D(' F ')'
//!     | F 'x' F | F '+' F | '{' id (',' id)* '}' | F '^' nat | '(' F ')'
//! ```

use crate::error::{Error, Result};

/// Syntax tree of a system type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctorExpr {
    /// The state-space variable `X`.
    Var,
    /// Finite powerset `P(F)`.
    Power(Box<FunctorExpr>),
    /// Finite bag (multiset) `B(F)`.
    Bag(Box<FunctorExpr>),
    /// Rational-group-weighted `R(F)`.
    Group(Box<FunctorExpr>),
    /// Probability distribution `D(F)`.
    Dist(Box<FunctorExpr>),
    /// Binary product `F x G`.
    Product(Box<FunctorExpr>, Box<FunctorExpr>),
    /// Binary coproduct `F + G`.
    Coproduct(Box<FunctorExpr>, Box<FunctorExpr>),
    /// Finite constant set `{id, ...}`.
    Constants(Vec<String>),
    /// Finite exponent `F ^ k`, `k >= 1`.
    Exponent(Box<FunctorExpr>, u32),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Plus,
    Caret,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: u32, col: u32) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line,
            col,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.src.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, u32, u32)>> {
        let mut out = Vec::new();
        loop {
            while matches!(self.src.get(self.pos), Some(b) if b.is_ascii_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(b) = self.bump() else { break };
            let tok = match b {
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'{' => Tok::LBrace,
                b'}' => Tok::RBrace,
                b',' => Tok::Comma,
                b'+' => Tok::Plus,
                b'^' => Tok::Caret,
                b'0'..=b'9' => {
                    let mut n = (b - b'0') as u64;
                    while matches!(self.src.get(self.pos), Some(d) if d.is_ascii_digit()) {
                        n = n * 10 + (self.bump().unwrap() - b'0') as u64;
                    }
                    Tok::Number(n)
                }
                b'A'..=b'Z' | b'a'..=b'z' | b'_' => {
                    let mut s = String::new();
                    s.push(b as char);
                    while matches!(self.src.get(self.pos),
                        Some(c) if c.is_ascii_alphanumeric() || *c == b'_')
                    {
                        s.push(self.bump().unwrap() as char);
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(Error::parse(
                        line,
                        col,
                        format!("unexpected character {:?}", other as char),
                    ))
                }
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
    end: (u32, u32),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos)
            .map(|(_, l, c)| (*l, *c))
            .unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        Error::parse(l, c, msg)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    // sum := prod ('+' prod)*
    fn sum(&mut self) -> Result<FunctorExpr> {
        let mut left = self.prod()?;
        while self.peek() == Some(&Tok::Plus) {
            self.next();
            let right = self.prod()?;
            left = FunctorExpr::Coproduct(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    // prod := post ('x' post)*
    fn prod(&mut self) -> Result<FunctorExpr> {
        let mut left = self.post()?;
        while matches!(self.peek(), Some(Tok::Ident(s)) if s == "x") {
            self.next();
            let right = self.post()?;
            left = FunctorExpr::Product(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    // post := atom ('^' nat)*
    fn post(&mut self) -> Result<FunctorExpr> {
        let mut e = self.atom()?;
        while self.peek() == Some(&Tok::Caret) {
            self.next();
            let (l, c) = self.here();
            match self.next() {
                Some(Tok::Number(0)) => {
                    return Err(Error::parse(l, c, "exponent must be at least 1"))
                }
                Some(Tok::Number(k)) if k <= u32::MAX as u64 => {
                    e = FunctorExpr::Exponent(Box::new(e), k as u32);
                }
                _ => return Err(Error::parse(l, c, "expected exponent")),
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<FunctorExpr> {
        let (l, c) = self.here();
        match self.next() {
            Some(Tok::Ident(s)) => match s.as_str() {
                "X" => Ok(FunctorExpr::Var),
                "P" | "B" | "R" | "D" => {
                    self.expect(Tok::LParen, &format!("'(' after {s}"))?;
                    let inner = Box::new(self.sum()?);
                    self.expect(Tok::RParen, "')'")?;
                    Ok(match s.as_str() {
                        "P" => FunctorExpr::Power(inner),
                        "B" => FunctorExpr::Bag(inner),
                        "R" => FunctorExpr::Group(inner),
                        _ => FunctorExpr::Dist(inner),
                    })
                }
                other => Err(Error::parse(
                    l,
                    c,
                    format!("unexpected identifier '{other}' in system type"),
                )),
            },
            Some(Tok::LParen) => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::LBrace) => {
                let mut ids = Vec::new();
                loop {
                    let (l, c) = self.here();
                    match self.next() {
                        Some(Tok::Ident(id)) => {
                            if ids.contains(&id) {
                                return Err(Error::parse(
                                    l,
                                    c,
                                    format!("duplicate constant '{id}'"),
                                ));
                            }
                            ids.push(id);
                        }
                        Some(Tok::Number(n)) => {
                            // Allow numeric constants like {0,1}.
                            let id = n.to_string();
                            if ids.contains(&id) {
                                return Err(Error::parse(
                                    l,
                                    c,
                                    format!("duplicate constant '{id}'"),
                                ));
                            }
                            ids.push(id);
                        }
                        _ => return Err(Error::parse(l, c, "expected constant identifier")),
                    }
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.pos += 1;
                            continue;
                        }
                        Some(Tok::RBrace) => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or '}' in constant set")),
                    }
                }
                Ok(FunctorExpr::Constants(ids))
            }
            _ => Err(Error::parse(l, c, "expected a system type")),
        }
    }
}

/// Parse a system type expression.
pub fn parse_functor(text: &str) -> Result<FunctorExpr> {
    parse_functor_at(text, 1, 1)
}

/// Parse a system type expression with the given source position of its
/// first character, so diagnostics point into the enclosing file.
pub fn parse_functor_at(text: &str, line: u32, col: u32) -> Result<FunctorExpr> {
    let toks = Lexer::new(text, line, col).tokens()?;
    let end = toks
        .last()
        .map(|(_, l, c)| (*l, *c + 1))
        .unwrap_or((line, col));
    let mut p = Parser { toks, pos: 0, end };
    let e = p.sum()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input after system type"));
    }
    Ok(e)
}
