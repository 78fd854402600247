//! Text front-end for series, basic sets and input files.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := '-' factor | atom ('^' exponent)?
//! atom     := rational | var | '(' expr ')'
//! exponent := integer | '(' integer '/' integer ')'
//! set      := conj ('|' conj)*
//! conj     := expr ('=' | '>') '0' ('&' expr ('=' | '>') '0')*
//! ```
//!
//! Variables are `x1..xm` and `y1..yn`. A file starts with a header line
//! `vars x:M y:N` followed by `;`-terminated statements; `#` starts a comment.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{GpsError, Result};
use crate::geometry::{Atom, BasicSet, Relation};
use crate::series::{MultiExponent, Series, Signature, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    X,
    Y,
}

/// Exponent as written: `num/den`, possibly negative (rejected at elaboration).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentLit {
    pub value: Q,
    pub pos: Pos,
}

/// Abstract syntax of a series expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeriesExpr {
    Num(Q),
    Var { kind: VarKind, index: usize, pos: Pos },
    Neg(Box<SeriesExpr>),
    Add(Box<SeriesExpr>, Box<SeriesExpr>),
    Sub(Box<SeriesExpr>, Box<SeriesExpr>),
    Mul(Box<SeriesExpr>, Box<SeriesExpr>),
    Pow(Box<SeriesExpr>, ExponentLit),
}

/// A set description before elaboration: a union of conjunctions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicSetExpr {
    pub sig: Signature,
    pub union: Vec<BasicSet>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Var(VarKind, usize),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    Eq,
    Gt,
    Amp,
    Bar,
    Semi,
    End,
}

fn err(pos: Pos, msg: impl Into<String>) -> GpsError {
    GpsError::Parse { line: pos.line, col: pos.col, msg: msg.into() }
}

fn lex(text: &str, origin: Pos) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (origin.line, origin.col);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            '>' => Some(Tok::Gt),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push((Tok::Int(s.parse().expect("digits")), pos));
            continue;
        }
        if c == 'x' || c == 'y' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start + 1..i].iter().collect();
            col += i - start;
            let index: usize = digits.parse().map_err(|_| err(pos, format!("variable '{c}' needs an index")))?;
            let kind = if c == 'x' { VarKind::X } else { VarKind::Y };
            out.push((Tok::Var(kind, index), pos));
            continue;
        }
        return Err(err(pos, format!("unexpected character '{c}'")));
    }
    out.push((Tok::End, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Pos> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(err(self.pos(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<SeriesExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = SeriesExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = SeriesExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<SeriesExpr> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            lhs = SeriesExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<SeriesExpr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(SeriesExpr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let e = self.exponent()?;
            return Ok(SeriesExpr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<SeriesExpr> {
        let (t, pos) = self.bump();
        match t {
            Tok::Int(n) => {
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let dpos = self.pos();
                    let d = self.int("denominator")?;
                    if d.is_zero() {
                        return Err(err(dpos, "zero denominator"));
                    }
                    Ok(SeriesExpr::Num(Q::new(n, d)))
                } else {
                    Ok(SeriesExpr::Num(Q::from_integer(n)))
                }
            }
            Tok::Var(kind, index) => Ok(SeriesExpr::Var { kind, index, pos }),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            _ => Err(err(pos, "expected a number, a variable or '('")),
        }
    }

    fn int(&mut self, what: &str) -> Result<BigInt> {
        match self.bump() {
            (Tok::Int(n), _) => Ok(n),
            (_, pos) => Err(err(pos, format!("expected {what}"))),
        }
    }

    fn signed_int(&mut self, what: &str) -> Result<BigInt> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.int(what)?);
        }
        self.int(what)
    }

    fn exponent(&mut self) -> Result<ExponentLit> {
        let pos = self.pos();
        if *self.peek() == Tok::LParen {
            self.bump();
            let n = self.signed_int("exponent numerator")?;
            let value = if *self.peek() == Tok::Slash {
                self.bump();
                let dpos = self.pos();
                let d = self.int("exponent denominator")?;
                if d.is_zero() {
                    return Err(err(dpos, "zero denominator"));
                }
                Q::new(n, d)
            } else {
                Q::from_integer(n)
            };
            self.expect(Tok::RParen, "')'")?;
            Ok(ExponentLit { value, pos })
        } else {
            let n = self.signed_int("exponent")?;
            Ok(ExponentLit { value: Q::from_integer(n), pos })
        }
    }

    fn relation(&mut self) -> Result<Relation> {
        let (t, pos) = self.bump();
        let rel = match t {
            Tok::Eq => Relation::Eq0,
            Tok::Gt => Relation::Gt0,
            _ => return Err(err(pos, "expected '= 0' or '> 0'")),
        };
        let zpos = self.pos();
        if self.int("0")? != BigInt::zero() {
            return Err(err(zpos, "right-hand side must be 0"));
        }
        Ok(rel)
    }
}

/// Parses one expression into its syntax tree.
pub fn parse_expr(text: &str) -> Result<SeriesExpr> {
    let mut p = Parser { toks: lex(text, Pos { line: 1, col: 1 })?, at: 0 };
    let e = p.expr()?;
    p.expect(Tok::End, "end of input")?;
    Ok(e)
}

fn var_pos(e: &SeriesExpr) -> Option<Pos> {
    match e {
        SeriesExpr::Var { pos, .. } => Some(*pos),
        SeriesExpr::Neg(a) | SeriesExpr::Pow(a, _) => var_pos(a),
        SeriesExpr::Add(a, b) | SeriesExpr::Sub(a, b) | SeriesExpr::Mul(a, b) => var_pos(a).or_else(|| var_pos(b)),
        SeriesExpr::Num(_) => None,
    }
}

/// Elaborates a syntax tree to a canonical series.
pub fn elaborate(e: &SeriesExpr, sig: Signature, prec: &Q) -> Result<Series> {
    match e {
        SeriesExpr::Num(c) => Ok(Series::constant(sig, c.clone(), prec.clone())),
        SeriesExpr::Var { kind, index, pos } => {
            let (bound, name) = match kind {
                VarKind::X => (sig.m, 'x'),
                VarKind::Y => (sig.n, 'y'),
            };
            if *index == 0 || *index > bound {
                return Err(err(*pos, format!("unknown variable {name}{index}")));
            }
            Ok(match kind {
                VarKind::X => Series::x(sig, *index, prec.clone()),
                VarKind::Y => Series::y(sig, *index, prec.clone()),
            })
        }
        SeriesExpr::Neg(a) => Ok(elaborate(a, sig, prec)?.neg()),
        SeriesExpr::Add(a, b) => elaborate(a, sig, prec)?.add(&elaborate(b, sig, prec)?),
        SeriesExpr::Sub(a, b) => elaborate(a, sig, prec)?.sub(&elaborate(b, sig, prec)?),
        SeriesExpr::Mul(a, b) => Ok(elaborate(a, sig, prec)?.mul(&elaborate(b, sig, prec)?)?.truncate(prec)),
        SeriesExpr::Pow(a, lit) => {
            if lit.value.is_negative() {
                return Err(err(lit.pos, format!("negative exponent {}", lit.value)));
            }
            let base = elaborate(a, sig, prec)?;
            if lit.value.is_integer() {
                let k = lit.value.to_integer().to_u32().ok_or_else(|| err(lit.pos, "exponent too large"))?;
                return Ok(base.pow(k)?.truncate(prec));
            }
            // Fractional powers only of pure x-monomials with coefficient 1.
            let single = {
                let mut terms = base.terms();
                match (terms.next(), terms.next()) {
                    (Some((e, c)), None) if c.is_one() => Some(e.clone()),
                    _ => None,
                }
            };
            match single {
                Some(m) if m.y().iter().all(|&b| b == 0) => {
                    let scaled = m.scale(&lit.value).expect("x-monomial scales");
                    Ok(Series::monomial(scaled, Q::one(), prec.clone()))
                }
                Some(m) if m.is_zero() => Ok(base),
                _ => {
                    let at = if contains_y(a) { lit.pos } else { var_pos(a).unwrap_or(lit.pos) };
                    let what = if contains_y(a) { "fractional y-power" } else { "fractional power of a non-monomial" };
                    Err(err(at, format!("{what} ^({})", lit.value)))
                }
            }
        }
    }
}

fn contains_y(e: &SeriesExpr) -> bool {
    match e {
        SeriesExpr::Var { kind, .. } => *kind == VarKind::Y,
        SeriesExpr::Neg(a) | SeriesExpr::Pow(a, _) => contains_y(a),
        SeriesExpr::Add(a, b) | SeriesExpr::Sub(a, b) | SeriesExpr::Mul(a, b) => contains_y(a) || contains_y(b),
        SeriesExpr::Num(_) => false,
    }
}

/// Parses and elaborates one series expression.
pub fn parse_series(text: &str, sig: Signature, prec: &Q) -> Result<Series> {
    elaborate(&parse_expr(text)?, sig, prec)
}

fn set_from_tokens(toks: Vec<(Tok, Pos)>, sig: Signature, prec: &Q) -> Result<BasicSetExpr> {
    let mut p = Parser { toks, at: 0 };
    let mut union = Vec::new();
    loop {
        let mut conjuncts = Vec::new();
        loop {
            let e = p.expr()?;
            let relation = p.relation()?;
            conjuncts.push(Atom { series: elaborate(&e, sig, prec)?, relation });
            if *p.peek() == Tok::Amp {
                p.bump();
            } else {
                break;
            }
        }
        union.push(BasicSet::new(sig, conjuncts)?);
        if *p.peek() == Tok::Bar {
            p.bump();
        } else {
            break;
        }
    }
    p.expect(Tok::End, "'&', '|' or end of statement")?;
    Ok(BasicSetExpr { sig, union })
}

/// Parses a set description `g = 0 & h > 0 | …`.
pub fn parse_basic_set(text: &str, sig: Signature, prec: &Q) -> Result<BasicSetExpr> {
    set_from_tokens(lex(text, Pos { line: 1, col: 1 })?, sig, prec)
}

/// A parsed input file: signature plus the raw statements with their origin.
#[derive(Clone, Debug)]
pub struct Document {
    pub sig: Signature,
    pub statements: Vec<(String, Pos)>,
}

/// Splits a file into its header and `;`-terminated statements.
pub fn parse_document(text: &str) -> Result<Document> {
    let mut lines = text.lines().enumerate();
    let mut header = None;
    for (no, raw) in lines.by_ref() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        header = Some((no + 1, line.to_string()));
        break;
    }
    let (hline, head) = header.ok_or_else(|| err(Pos { line: 1, col: 1 }, "missing header 'vars x:M y:N'"))?;
    let sig = parse_header(&head, hline)?;
    let body_start = hline + 1;
    let mut statements = Vec::new();
    let mut current = String::new();
    let mut start: Option<Pos> = None;
    for (no, raw) in text.lines().enumerate().skip(hline) {
        let line = raw.split('#').next().unwrap_or("");
        for (ci, ch) in line.chars().enumerate() {
            if ch == ';' {
                if let Some(s) = start.take() {
                    statements.push((std::mem::take(&mut current), s));
                } else {
                    return Err(err(Pos { line: no + 1, col: ci + 1 }, "empty statement"));
                }
                continue;
            }
            if start.is_none() {
                if ch.is_whitespace() {
                    continue;
                }
                start = Some(Pos { line: no + 1, col: ci + 1 });
            }
            current.push(ch);
        }
        if start.is_some() {
            current.push('\n');
        }
    }
    if let Some(s) = start {
        if !current.trim().is_empty() {
            return Err(err(s, "statement is missing its terminating ';'"));
        }
    }
    let _ = body_start;
    Ok(Document { sig, statements })
}

fn parse_header(head: &str, line: usize) -> Result<Signature> {
    let mut words = head.split_whitespace();
    if words.next() != Some("vars") {
        return Err(err(Pos { line, col: 1 }, "header must start with 'vars'"));
    }
    let (mut m, mut n) = (None, None);
    for w in words {
        let col = head.find(w).map_or(1, |c| c + 1);
        let (k, v) = w.split_once(':').ok_or_else(|| err(Pos { line, col }, format!("bad header entry '{w}'")))?;
        let v: usize = v.parse().map_err(|_| err(Pos { line, col }, format!("bad count in '{w}'")))?;
        match k {
            "x" if m.is_none() => m = Some(v),
            "y" if n.is_none() => n = Some(v),
            _ => return Err(err(Pos { line, col }, format!("bad header entry '{w}'"))),
        }
    }
    Ok(Signature::new(m.unwrap_or(0), n.unwrap_or(0)))
}

/// Parses a file of series statements.
pub fn parse_series_file(text: &str, prec: &Q) -> Result<(Signature, Vec<Series>)> {
    let doc = parse_document(text)?;
    let mut out = Vec::new();
    for (stmt, pos) in &doc.statements {
        let mut p = Parser { toks: lex(stmt, *pos)?, at: 0 };
        let e = p.expr()?;
        p.expect(Tok::End, "';'")?;
        out.push(elaborate(&e, doc.sig, prec)?);
    }
    Ok((doc.sig, out))
}

/// Parses a file of set statements; several statements form a union.
pub fn parse_set_file(text: &str, prec: &Q) -> Result<BasicSetExpr> {
    let doc = parse_document(text)?;
    let mut union = Vec::new();
    for (stmt, pos) in &doc.statements {
        union.extend(set_from_tokens(lex(stmt, *pos)?, doc.sig, prec)?.union);
    }
    Ok(BasicSetExpr { sig: doc.sig, union })
}

/// Exponent vector with coefficient 1 helper used by examples and tests.
pub fn monomial(sig: Signature, text: &str, prec: &Q) -> Result<MultiExponent> {
    let s = parse_series(text, sig, prec)?;
    let mut it = s.terms();
    match (it.next(), it.next()) {
        (Some((e, c)), None) if c.is_one() => Ok(e.clone()),
        _ => Err(GpsError::Invalid(format!("'{text}' is not a monomial"))),
    }
}
