use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// Found something other than what the grammar allows here.
    Unexpected { expected: &'static str },
    UnknownIdentifier(String),
    BadNumber,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Unexpected { expected } => {
                write!(f, "syntax error at offset {}: expected {expected}", self.offset)
            }
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{name}` at offset {}", self.offset)
            }
            ParseErrorKind::BadNumber => write!(f, "malformed number at offset {}", self.offset),
        }
    }
}

impl core::error::Error for ParseError {}

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: source.as_bytes(), text: source, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError { kind: ParseErrorKind::Unexpected { expected }, offset: self.pos }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.pos;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
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
            let pos = self.pos;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(b')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected("`)`"))
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let from = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - from
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError { kind: ParseErrorKind::BadNumber, offset: start });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
                return Err(ParseError { kind: ParseErrorKind::BadNumber, offset: start });
            }
        }
        let v: f64 = self.text[start..self.pos]
            .parse()
            .map_err(|_| ParseError { kind: ParseErrorKind::BadNumber, offset: start })?;
        if !v.is_finite() {
            return Err(ParseError { kind: ParseErrorKind::BadNumber, offset: start });
        }
        Ok(Expr::Num(v))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        match name {
            "t" => return Ok(Expr::Var(Var::T)),
            "x" => return Ok(Expr::Var(Var::X)),
            "y" => return Ok(Expr::Var(Var::Y)),
            _ => {}
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError {
                kind: ParseErrorKind::UnknownIdentifier(name.into()),
                offset: start,
            });
        };
        if self.peek() != Some(b'(') {
            return Err(self.unexpected("`(` after function name"));
        }
        self.pos += 1;
        let arg = self.expr()?;
        self.expect_close()?;
        Ok(Expr::Call { func, arg: Box::new(arg), pos: start })
    }
}
