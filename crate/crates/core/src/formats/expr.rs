//! Expression grammar: signed sums of terms; a term is a product of
//! rational literals (`p` or `p/q`) and factors `<id>` or `<id>^<uint>`,
//! always joined by an explicit `*`.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial, Rational};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Sym(char),
}

/// Token with its 1-based column.
pub(crate) type Spanned = (Tok, usize);

pub(crate) fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `text` (which starts at column `col0` of line `line`) into tokens.
pub(crate) fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                return Err(parse_error(
                    line,
                    col0 + i,
                    "decimal literals are not supported; write rationals as p/q (e.g. 1/2)",
                ));
            }
            let digits: String = chars[start..i].iter().collect();
            let value: BigInt = digits.parse().expect("ascii digits");
            out.push((Tok::Int(value), col));
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '.' => {
                return Err(parse_error(
                    line,
                    col,
                    "decimal literals are not supported; write rationals as p/q (e.g. 1/2)",
                ))
            }
            other => Tok::Sym(other),
        };
        out.push((tok, col));
        i += 1;
    }
    Ok(out)
}

pub(crate) struct ExprParser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
    vars: &'a [String],
}

impl<'a> ExprParser<'a> {
    pub(crate) fn new(toks: &'a [Spanned], line: usize, end_col: usize, vars: &'a [String]) -> Self {
        ExprParser {
            toks,
            pos: 0,
            line,
            end_col,
            vars,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        parse_error(self.line, self.col(), message)
    }

    /// Parses a full expression and requires all tokens to be consumed.
    pub(crate) fn parse_all(mut self) -> Result<Polynomial> {
        let p = self.expr()?;
        if self.pos < self.toks.len() {
            return Err(self.err(format!("unexpected {}", describe(&self.toks[self.pos].0))));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let n = self.vars.len();
        let mut total = Polynomial::zero(n);
        let mut first = true;
        loop {
            let negative = match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    false
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    true
                }
                _ if first => false,
                None => break,
                Some(t) => return Err(self.err(format!("expected + or -, found {}", describe(t)))),
            };
            first = false;
            let (coeff, mono) = self.term()?;
            let coeff = if negative { -coeff } else { coeff };
            total.add_term(mono, coeff);
            if self.peek().is_none() {
                break;
            }
        }
        Ok(total)
    }

    fn term(&mut self) -> Result<(Rational, Monomial)> {
        let n = self.vars.len();
        let mut coeff = Rational::from_integer(1.into());
        let mut exps = vec![0u32; n];
        loop {
            match self.peek().cloned() {
                Some(Tok::Int(num)) => {
                    self.pos += 1;
                    let mut value = Rational::from_integer(num);
                    if self.peek() == Some(&Tok::Slash) {
                        self.pos += 1;
                        match self.peek().cloned() {
                            Some(Tok::Int(den)) => {
                                if den.is_zero() {
                                    return Err(self.err("zero denominator"));
                                }
                                self.pos += 1;
                                value /= Rational::from_integer(den);
                            }
                            _ => return Err(self.err("expected an integer denominator after /")),
                        }
                    }
                    coeff *= value;
                }
                Some(Tok::Ident(name)) => {
                    let idx = match self.vars.iter().position(|v| *v == name) {
                        Some(i) => i,
                        None => return Err(self.err(format!("undeclared variable {name}"))),
                    };
                    self.pos += 1;
                    let mut e = 1u32;
                    if self.peek() == Some(&Tok::Caret) {
                        self.pos += 1;
                        match self.peek().cloned() {
                            Some(Tok::Int(v)) => {
                                e = u32::try_from(v).map_err(|_| self.err("exponent too large"))?;
                                self.pos += 1;
                            }
                            _ => return Err(self.err("expected a non-negative integer exponent after ^")),
                        }
                    }
                    exps[idx] = exps[idx].checked_add(e).ok_or_else(|| self.err("exponent too large"))?;
                }
                Some(t) => return Err(self.err(format!("expected a number or variable, found {}", describe(&t)))),
                None => return Err(self.err("expected a number or variable, found end of input")),
            }
            match self.peek() {
                Some(Tok::Star) => self.pos += 1,
                Some(Tok::Ident(_)) | Some(Tok::Int(_)) => {
                    return Err(self.err("missing * between factors"));
                }
                _ => break,
            }
        }
        Ok((coeff, Monomial::from_exponents(&exps)))
    }
}

pub(crate) fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier {s}"),
        Tok::Int(v) => format!("number {v}"),
        Tok::Plus => "+".into(),
        Tok::Minus => "-".into(),
        Tok::Star => "*".into(),
        Tok::Slash => "/".into(),
        Tok::Caret => "^".into(),
        Tok::Sym(c) => format!("{c:?}"),
    }
}

/// Parses a standalone expression over `vars`; errors are reported on line 1.
pub fn parse_expr(text: &str, vars: &[String]) -> Result<Polynomial> {
    parse_expr_at(text, vars, 1, 1)
}

pub(crate) fn parse_expr_at(text: &str, vars: &[String], line: usize, col0: usize) -> Result<Polynomial> {
    let toks = tokenize(text, line, col0)?;
    let end = col0 + text.chars().count();
    ExprParser::new(&toks, line, end, vars).parse_all()
}
