//! Line-oriented files: systems (`.sys`), automorphisms (`.map`) and
//! stabilizer maps. Each starts with a `vars` line; `#` starts a comment.

use crate::automorphism::{AffineGen, ElementaryGen, Generator, TameAutomorphism};
use crate::error::{Error, Result};
use crate::formats::expr::{describe, parse_error, tokenize, ExprParser, Spanned, Tok};
use crate::linalg::Matrix;
use crate::poly::{format_rational, PolyMap, Polynomial, Rational, VectorField};

/// Non-blank lines with comments removed: `(line number, text)`.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect()
}

/// Parses the `vars` header; returns the names and their columns.
fn parse_vars(lines: &[(usize, &str)]) -> Result<(usize, Vec<String>, Vec<usize>)> {
    let Some(&(line, text)) = lines.first() else {
        return Err(parse_error(1, 1, "expected a `vars` line"));
    };
    let toks = tokenize(text, line, 1)?;
    match toks.first() {
        Some((Tok::Ident(kw), _)) if kw == "vars" => {}
        Some((_, col)) => return Err(parse_error(line, *col, "expected a `vars` line")),
        None => unreachable!("content lines are non-blank"),
    }
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for (tok, col) in &toks[1..] {
        match tok {
            Tok::Ident(name) => {
                if names.contains(name) {
                    return Err(parse_error(line, *col, format!("variable {name} declared twice")));
                }
                names.push(name.clone());
                cols.push(*col);
            }
            other => {
                return Err(parse_error(
                    line,
                    *col,
                    format!("expected a variable name, found {}", describe(other)),
                ))
            }
        }
    }
    if names.is_empty() {
        return Err(parse_error(
            line,
            text.trim_end().chars().count() + 1,
            "`vars` declares no variables",
        ));
    }
    Ok((line, names, cols))
}

fn end_col(text: &str) -> usize {
    text.chars().count() + 1
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SystemFile {
    pub vars: Vec<String>,
    pub field: VectorField,
}

/// `vars <id>+` followed by one `<id>' = <expr>` line per variable.
pub fn parse_system(text: &str) -> Result<SystemFile> {
    let lines = content_lines(text);
    let (vars_line, vars, cols) = parse_vars(&lines)?;
    let n = vars.len();
    let mut comps: Vec<Option<Polynomial>> = vec![None; n];
    for &(line, text) in &lines[1..] {
        let toks = tokenize(text, line, 1)?;
        let (name, col) = match toks.first() {
            Some((Tok::Ident(name), col)) => (name.clone(), *col),
            Some((t, col)) => {
                return Err(parse_error(
                    line,
                    *col,
                    format!("expected an equation, found {}", describe(t)),
                ))
            }
            None => unreachable!("content lines are non-blank"),
        };
        let idx = vars
            .iter()
            .position(|v| *v == name)
            .ok_or_else(|| parse_error(line, col, format!("undeclared variable {name}")))?;
        expect_sym(&toks, 1, '\'', line, text)?;
        expect_sym(&toks, 2, '=', line, text)?;
        if comps[idx].is_some() {
            return Err(parse_error(line, col, format!("duplicate equation for {name}")));
        }
        let rhs = ExprParser::new(&toks[3..], line, end_col(text), &vars).parse_all()?;
        comps[idx] = Some(rhs);
    }
    let mut out = Vec::with_capacity(n);
    for (i, c) in comps.into_iter().enumerate() {
        match c {
            Some(p) => out.push(p),
            None => return Err(parse_error(vars_line, cols[i], format!("no equation for {}", vars[i]))),
        }
    }
    Ok(SystemFile {
        field: VectorField::from_components(n, out)?,
        vars,
    })
}

fn expect_sym(toks: &[Spanned], at: usize, sym: char, line: usize, text: &str) -> Result<()> {
    match toks.get(at) {
        Some((Tok::Sym(c), _)) if *c == sym => Ok(()),
        Some((t, col)) => Err(parse_error(
            line,
            *col,
            format!("expected {sym:?}, found {}", describe(t)),
        )),
        None => Err(parse_error(line, end_col(text), format!("expected {sym:?}"))),
    }
}

pub fn render_system<S: AsRef<str>>(vars: &[S], field: &VectorField) -> String {
    let mut out = String::from("vars");
    for v in vars {
        out.push(' ');
        out.push_str(v.as_ref());
    }
    out.push('\n');
    for (v, c) in vars.iter().zip(field.components()) {
        out.push_str(&format!("{}' = {}\n", v.as_ref(), c.render(vars)));
    }
    out
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AutomorphismFile {
    pub vars: Vec<String>,
    pub map: TameAutomorphism,
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end: usize,
}

impl Cursor<'_> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, c)| *c)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        parse_error(self.line, self.col(), message)
    }

    fn sym(&mut self, c: char) -> Result<()> {
        match self.toks.get(self.pos) {
            Some((Tok::Sym(s), _)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            Some((t, _)) => Err(self.err(format!("expected {c:?}, found {}", describe(t)))),
            None => Err(self.err(format!("expected {c:?}"))),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        matches!(self.toks.get(self.pos), Some((Tok::Sym(s), _)) if *s == c)
    }

    fn rational(&mut self) -> Result<Rational> {
        let negative = matches!(self.toks.get(self.pos), Some((Tok::Minus, _)));
        if negative {
            self.pos += 1;
        }
        let num = match self.toks.get(self.pos) {
            Some((Tok::Int(v), _)) => v.clone(),
            _ => return Err(self.err("expected a rational number")),
        };
        self.pos += 1;
        let mut value = Rational::from_integer(num);
        if matches!(self.toks.get(self.pos), Some((Tok::Slash, _))) {
            self.pos += 1;
            match self.toks.get(self.pos) {
                Some((Tok::Int(d), _)) if !num_traits::Zero::is_zero(d) => {
                    value /= Rational::from_integer(d.clone());
                    self.pos += 1;
                }
                _ => return Err(self.err("expected a nonzero integer denominator")),
            }
        }
        Ok(if negative { -value } else { value })
    }

    fn vector(&mut self) -> Result<Vec<Rational>> {
        self.sym('[')?;
        let mut out = vec![self.rational()?];
        while self.at_sym(',') {
            self.pos += 1;
            out.push(self.rational()?);
        }
        self.sym(']')?;
        Ok(out)
    }

    fn matrix(&mut self) -> Result<Vec<Vec<Rational>>> {
        self.sym('[')?;
        let mut rows = vec![self.vector()?];
        while self.at_sym(',') {
            self.pos += 1;
            rows.push(self.vector()?);
        }
        self.sym(']')?;
        Ok(rows)
    }

    fn done(&self) -> Result<()> {
        match self.toks.get(self.pos) {
            None => Ok(()),
            Some((t, _)) => Err(self.err(format!("unexpected {}", describe(t)))),
        }
    }
}

/// `vars` line, then statements applied top to bottom:
/// `affine [[a11,...],...] ; [b1,...]` (offset optional) or `elem <id> : <expr>`.
pub fn parse_automorphism(text: &str) -> Result<AutomorphismFile> {
    let lines = content_lines(text);
    let (_, vars, _) = parse_vars(&lines)?;
    let n = vars.len();
    let mut gens: Vec<Generator> = Vec::new();
    for &(line, text) in &lines[1..] {
        let toks = tokenize(text, line, 1)?;
        let (kw, kw_col) = match toks.first() {
            Some((Tok::Ident(kw), col)) => (kw.as_str(), *col),
            Some((_, col)) => return Err(parse_error(line, *col, "expected `affine` or `elem`")),
            None => unreachable!("content lines are non-blank"),
        };
        let mut cur = Cursor {
            toks: &toks,
            pos: 1,
            line,
            end: end_col(text),
        };
        let semantic = |e: Error| parse_error(line, kw_col, e.to_string());
        match kw {
            "affine" => {
                let rows = cur.matrix()?;
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(parse_error(line, kw_col, format!("affine matrix must be {n}x{n}")));
                }
                let b = if cur.at_sym(';') {
                    cur.pos += 1;
                    let b = cur.vector()?;
                    if b.len() != n {
                        return Err(parse_error(
                            line,
                            kw_col,
                            format!("affine offset must have {n} entries"),
                        ));
                    }
                    b
                } else {
                    vec![Rational::from_integer(0.into()); n]
                };
                cur.done()?;
                let gen = AffineGen::new(Matrix::from_rows(rows).map_err(semantic)?, b).map_err(semantic)?;
                gens.push(gen.into());
            }
            "elem" => {
                let (target, tcol) = match toks.get(1) {
                    Some((Tok::Ident(name), col)) => (name.clone(), *col),
                    _ => return Err(cur.err("expected the target variable")),
                };
                let idx = vars
                    .iter()
                    .position(|v| *v == target)
                    .ok_or_else(|| parse_error(line, tcol, format!("undeclared variable {target}")))?;
                cur.pos = 2;
                cur.sym(':')?;
                let g = ExprParser::new(&toks[3..], line, end_col(text), &vars).parse_all()?;
                gens.push(ElementaryGen::new(n, idx, g).map_err(semantic)?.into());
            }
            other => {
                return Err(parse_error(
                    line,
                    kw_col,
                    format!("unknown statement {other:?}; expected `affine` or `elem`"),
                ))
            }
        }
    }
    let map = TameAutomorphism::from_generators(n, gens)?;
    Ok(AutomorphismFile { vars, map })
}

pub fn render_automorphism<S: AsRef<str>>(vars: &[S], map: &TameAutomorphism) -> String {
    let mut out = String::from("vars");
    for v in vars {
        out.push(' ');
        out.push_str(v.as_ref());
    }
    out.push('\n');
    for gen in map.generators() {
        match gen {
            Generator::Affine(a) => {
                let rows: Vec<String> = a
                    .matrix()
                    .to_rows()
                    .iter()
                    .map(|r| format!("[{}]", r.iter().map(format_rational).collect::<Vec<_>>().join(", ")))
                    .collect();
                let b: Vec<String> = a.offset().iter().map(format_rational).collect();
                out.push_str(&format!("affine [{}] ; [{}]\n", rows.join(", "), b.join(", ")));
            }
            Generator::Elementary(e) => {
                out.push_str(&format!(
                    "elem {} : {}\n",
                    vars[e.target()].as_ref(),
                    e.perturbation().render(vars)
                ));
            }
        }
    }
    out
}

/// Stabilizing observables over the base variables, optionally with the
/// inverse of the induced map.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StabilizerFile {
    pub vars: Vec<String>,
    pub names: Vec<String>,
    pub stabilizer: PolyMap,
    pub inverse: Option<PolyMap>,
}

/// `vars` line over the base variables, then `<id> = <expr>` per stabilizing
/// variable and optionally `inverse <base id> = <expr>` for every base variable.
pub fn parse_stabilizer(text: &str) -> Result<StabilizerFile> {
    let lines = content_lines(text);
    let (vars_line, vars, _) = parse_vars(&lines)?;
    let n = vars.len();
    let mut names: Vec<String> = Vec::new();
    let mut comps = Vec::new();
    let mut inverse: Vec<Option<Polynomial>> = vec![None; n];
    let mut any_inverse = false;
    for &(line, text) in &lines[1..] {
        let toks = tokenize(text, line, 1)?;
        let is_inverse = matches!(toks.first(), Some((Tok::Ident(kw), _)) if kw == "inverse")
            && matches!(toks.get(1), Some((Tok::Ident(_), _)));
        let offset = usize::from(is_inverse);
        let (name, col) = match toks.get(offset) {
            Some((Tok::Ident(name), col)) => (name.clone(), *col),
            Some((t, col)) => {
                return Err(parse_error(
                    line,
                    *col,
                    format!("expected a name, found {}", describe(t)),
                ))
            }
            None => return Err(parse_error(line, end_col(text), "expected a name")),
        };
        expect_sym(&toks, offset + 1, '=', line, text)?;
        let rhs = ExprParser::new(&toks[offset + 2..], line, end_col(text), &vars).parse_all()?;
        if is_inverse {
            let idx = vars
                .iter()
                .position(|v| *v == name)
                .ok_or_else(|| parse_error(line, col, format!("inverse for undeclared variable {name}")))?;
            if inverse[idx].is_some() {
                return Err(parse_error(line, col, format!("duplicate inverse for {name}")));
            }
            inverse[idx] = Some(rhs);
            any_inverse = true;
        } else {
            if vars.contains(&name) || names.contains(&name) {
                return Err(parse_error(
                    line,
                    col,
                    format!("stabilizing variable {name} already declared"),
                ));
            }
            names.push(name);
            comps.push(rhs);
        }
    }
    if names.is_empty() {
        return Err(parse_error(vars_line, 1, "no stabilizing observables given"));
    }
    let inverse = if any_inverse {
        let mut out = Vec::with_capacity(n);
        for (i, c) in inverse.into_iter().enumerate() {
            out.push(c.ok_or_else(|| parse_error(vars_line, 1, format!("missing inverse for {}", vars[i])))?);
        }
        Some(PolyMap::new(n, out)?)
    } else {
        None
    };
    Ok(StabilizerFile {
        stabilizer: PolyMap::new(n, comps)?,
        vars,
        names,
        inverse,
    })
}
