//! Text form of operator expressions.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "@" | "/") unary } ;      (* "@" is composition, same as "*" *)
//! unary   = ("-" | "+") unary | power ;
//! power   = primary [ "^" [ "-" ] integer ] ;
//! primary = integer | "(" expr ")" | call | symbol ;
//! call    = "D" "(" index "," expr ")"                (* [∂_index, expr]: derivative of a field *)
//!         | "sum" "(" ident { [","] ident } ":" expr ")"
//!         | "eps" "(" index "," index "," index ")"
//!         | "delta" "(" index "," index ")" ;
//! symbol  = name [ "[" index { "," index } "]" ] ;
//! index   = "1" | "2" | "3" | ident ;
//! ```
//!
//! Names: `phi`, `h` (trace), `g1..g3`, `h11..h33`, `d1..d3`, `p1..p3`,
//! `beta`, `gamma5`, `alpha1..alpha3`, `sigma1..sigma3`, `x1..x3`, `m`, `i`;
//! indexed forms `g[j]`, `h[j,l]`, `d[j]`, `p[j]`, `alpha[j]`, `sigma[k]`,
//! `x[j]`, and `p^2` for `Σⱼ pⱼpⱼ`. Inside index positions an identifier is an
//! index variable bound by `sum` (or supplied by the caller); elsewhere `i` is
//! the imaginary unit. `/` and negative powers require a nonzero constant
//! (optionally times a power of `m`) on the right.
//!
//! `pⱼ` expands to `−i(δⱼₖ + ½hⱼₖ)∂ₖ − (i/8)(∂ⱼh)`.

use std::collections::HashMap;

use thiserror::Error;

use super::coeff::Coeff;
use super::dirac::Gamma;
use super::expr::{OperatorExpr, Truncation};
use super::field::{FieldBase, FieldSymbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("outside truncation window: {0}")]
    OutOfWindow(String),
    #[error("{0}")]
    Semantic(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i128),
    Ident(String),
    Sym(char),
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1, 1);
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let pos = Pos { line, col };
        if c == '\n' {
            line += 1;
            col = 1;
            k += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            k += 1;
            continue;
        }
        if c == '#' {
            while k < chars.len() && chars[k] != '\n' {
                k += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = k;
            while k < chars.len() && chars[k].is_ascii_digit() {
                k += 1;
            }
            let s: String = chars[start..k].iter().collect();
            let n = s.parse::<i128>().map_err(|_| ParseError {
                line,
                col,
                kind: ParseErrorKind::Syntax(format!("integer literal `{s}` too large")),
            })?;
            col += k - start;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < chars.len() && (chars[k].is_ascii_alphanumeric() || chars[k] == '_') {
                k += 1;
            }
            col += k - start;
            out.push((Tok::Ident(chars[start..k].iter().collect()), pos));
            continue;
        }
        if "+-*/^@()[],:".contains(c) {
            out.push((Tok::Sym(c), pos));
            col += 1;
            k += 1;
            continue;
        }
        return Err(ParseError { line, col, kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")) });
    }
    out.push((Tok::End, Pos { line, col }));
    Ok(out)
}

#[derive(Clone, Debug)]
enum Index {
    Lit(u8),
    Var(String, Pos),
}

#[derive(Clone, Debug)]
enum Node {
    Int(i128),
    Symbol { name: String, indices: Vec<Index>, pos: Pos },
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>, Pos),
    Pow(Box<Node>, i32, Pos),
    Deriv(Index, Box<Node>),
    Sum(Vec<String>, Box<Node>),
    Eps([Index; 3]),
    Delta([Index; 2]),
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

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let p = self.pos();
        Err(ParseError { line: p.line, col: p.col, kind: ParseErrorKind::Syntax(msg.into()) })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`, found {}", describe(self.peek())))
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') || self.eat('@') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if *self.peek() == Tok::Sym('/') {
                let pos = self.pos();
                self.bump();
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?), pos);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Sym('^') {
            let pos = self.pos();
            self.bump();
            let neg = self.eat('-');
            match self.bump() {
                Tok::Int(n) if n <= i32::MAX as i128 => {
                    let n = n as i32;
                    Ok(Node::Pow(Box::new(base), if neg { -n } else { n }, pos))
                }
                t => self.err(format!("expected integer exponent, found {}", describe(&t))),
            }
        } else {
            Ok(base)
        }
    }

    fn index(&mut self) -> Result<Index, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) if (1..=3).contains(&n) => Ok(Index::Lit(n as u8 - 1)),
            Tok::Ident(s) => Ok(Index::Var(s, pos)),
            t => self.err(format!("expected index 1..3 or index variable, found {}", describe(&t))),
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(Node::Int(n)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "D" => {
                    self.expect('(')?;
                    let ix = self.index()?;
                    self.expect(',')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    Ok(Node::Deriv(ix, Box::new(e)))
                }
                "sum" => {
                    self.expect('(')?;
                    let mut vars = Vec::new();
                    loop {
                        match self.bump() {
                            Tok::Ident(v) => vars.push(v),
                            t => return self.err(format!("expected index variable, found {}", describe(&t))),
                        }
                        self.eat(',');
                        if self.eat(':') {
                            break;
                        }
                    }
                    let body = self.expr()?;
                    self.expect(')')?;
                    Ok(Node::Sum(vars, Box::new(body)))
                }
                "eps" => {
                    self.expect('(')?;
                    let a = self.index()?;
                    self.expect(',')?;
                    let b = self.index()?;
                    self.expect(',')?;
                    let c = self.index()?;
                    self.expect(')')?;
                    Ok(Node::Eps([a, b, c]))
                }
                "delta" => {
                    self.expect('(')?;
                    let a = self.index()?;
                    self.expect(',')?;
                    let b = self.index()?;
                    self.expect(')')?;
                    Ok(Node::Delta([a, b]))
                }
                _ => {
                    let mut indices = Vec::new();
                    if self.eat('[') {
                        loop {
                            indices.push(self.index()?);
                            if self.eat(']') {
                                break;
                            }
                            self.expect(',')?;
                        }
                    }
                    Ok(Node::Symbol { name, indices, pos })
                }
            },
            t => {
                self.at -= usize::from(self.at > 0 && t != Tok::End);
                self.err(format!("unexpected {}", describe(&t)))
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Int(n) => format!("integer `{n}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of input".into(),
    }
}

struct Eval<'a> {
    trunc: Truncation,
    env: HashMap<String, u8>,
    _src: &'a str,
}

fn semantic(pos: Pos, kind: ParseErrorKind) -> ParseError {
    ParseError { line: pos.line, col: pos.col, kind }
}

/// `−i(δⱼₖ + ½hⱼₖ)∂ₖ − (i/8)(∂ⱼh)`
pub fn momentum(j: usize, trunc: Truncation) -> OperatorExpr {
    let mi = -Coeff::i();
    let mut e = OperatorExpr::deriv(j, trunc).scale(&mi);
    for k in 0..3 {
        let hjk = OperatorExpr::base_field(FieldBase::h(j, k), trunc);
        let term = hjk.multiply(&OperatorExpr::deriv(k, trunc)).scale(&(mi.clone() * Coeff::ratio(1, 2)));
        e = &e + &term;
    }
    let mut d = [0; 3];
    d[j] = 1;
    let dh = OperatorExpr::field(FieldSymbol::with_deriv(FieldBase::Trace, d), trunc);
    &e + &dh.scale(&(mi * Coeff::ratio(1, 8)))
}

impl Eval<'_> {
    fn index(&self, ix: &Index) -> Result<usize, ParseError> {
        match ix {
            Index::Lit(k) => Ok(*k as usize),
            Index::Var(v, pos) => self
                .env
                .get(v)
                .map(|&k| k as usize)
                .ok_or_else(|| semantic(*pos, ParseErrorKind::Semantic(format!("unbound index variable `{v}`")))),
        }
    }

    fn symbol(&self, name: &str, indices: &[Index], pos: Pos) -> Result<OperatorExpr, ParseError> {
        let t = self.trunc;
        let unknown = || semantic(pos, ParseErrorKind::UnknownSymbol(name.to_string()));
        // split trailing digits into literal indices: h12 → h[1,2]
        let (stem, digits): (String, Vec<usize>) = if name == "gamma5" {
            (name.to_string(), Vec::new())
        } else {
            let split = name.find(|c: char| c.is_ascii_digit()).unwrap_or(name.len());
            let (s, d) = name.split_at(split);
            let mut ds = Vec::new();
            for c in d.chars() {
                match c.to_digit(10) {
                    Some(k @ 1..=3) => ds.push(k as usize - 1),
                    _ => return Err(unknown()),
                }
            }
            (s.to_string(), ds)
        };
        let mut idx = digits;
        if !idx.is_empty() && !indices.is_empty() {
            return Err(unknown());
        }
        for ix in indices {
            idx.push(self.index(ix)?);
        }
        let arity = |n: usize| if idx.len() == n { Ok(()) } else { Err(unknown()) };
        let e = match stem.as_str() {
            "i" => {
                arity(0)?;
                OperatorExpr::scalar(Coeff::i(), t)
            }
            "m" => {
                arity(0)?;
                OperatorExpr::mass(1, t)
            }
            "phi" => {
                arity(0)?;
                OperatorExpr::base_field(FieldBase::Phi, t)
            }
            "h" if idx.is_empty() => OperatorExpr::base_field(FieldBase::Trace, t),
            "h" => {
                arity(2)?;
                OperatorExpr::base_field(FieldBase::h(idx[0], idx[1]), t)
            }
            "g" => {
                arity(1)?;
                OperatorExpr::base_field(FieldBase::g(idx[0]), t)
            }
            "d" => {
                arity(1)?;
                OperatorExpr::deriv(idx[0], t)
            }
            "p" => {
                if idx.is_empty() {
                    return Err(semantic(
                        pos,
                        ParseErrorKind::Semantic("bare `p` is only allowed as `p^2`".into()),
                    ));
                }
                arity(1)?;
                momentum(idx[0], t)
            }
            "beta" => {
                arity(0)?;
                OperatorExpr::matrix(Gamma::BETA, t)
            }
            "gamma5" => OperatorExpr::matrix(Gamma::GAMMA5, t),
            "alpha" => {
                arity(1)?;
                OperatorExpr::matrix(Gamma::alpha(idx[0]), t)
            }
            "sigma" => {
                arity(1)?;
                OperatorExpr::matrix(Gamma::sigma(idx[0]), t)
            }
            "x" => {
                arity(1)?;
                OperatorExpr::coordinate(idx[0], t)
            }
            _ => return Err(unknown()),
        };
        Ok(e)
    }

    fn invert_scalar(&self, e: &OperatorExpr, pos: Pos) -> Result<OperatorExpr, ParseError> {
        let mut it = e.terms();
        match (it.next(), it.next()) {
            (Some((m, c)), None) if m.is_scalar() => {
                if -m.mpow < self.trunc.min_mpow {
                    return Err(semantic(
                        pos,
                        ParseErrorKind::OutOfWindow(format!("m^{} below the window", -m.mpow)),
                    ));
                }
                let inv = c.inv().expect("stored coefficients are nonzero");
                Ok(OperatorExpr::mass(-m.mpow, self.trunc).scale(&inv))
            }
            (None, _) => Err(semantic(pos, ParseErrorKind::Semantic("division by zero".into()))),
            _ => Err(semantic(
                pos,
                ParseErrorKind::Semantic(format!("cannot divide by non-constant operator `{e}`")),
            )),
        }
    }

    fn eval(&mut self, n: &Node) -> Result<OperatorExpr, ParseError> {
        let t = self.trunc;
        Ok(match n {
            Node::Int(k) => OperatorExpr::int(*k, t),
            Node::Symbol { name, indices, pos } => self.symbol(name, indices, *pos)?,
            Node::Neg(a) => -self.eval(a)?,
            Node::Add(a, b) => self.eval(a)? + self.eval(b)?,
            Node::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            Node::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            Node::Div(a, b, pos) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                num.multiply(&self.invert_scalar(&den, *pos)?)
            }
            Node::Pow(base, k, pos) => {
                if let Node::Symbol { name, indices, .. } = base.as_ref() {
                    if name == "p" && indices.is_empty() {
                        if *k != 2 {
                            return Err(semantic(*pos, ParseErrorKind::Semantic("only `p^2` is supported".into())));
                        }
                        let mut e = OperatorExpr::zero(t);
                        for j in 0..3 {
                            let pj = momentum(j, t);
                            e = &e + &pj.multiply(&pj);
                        }
                        return Ok(e);
                    }
                    if name == "m" && indices.is_empty() && *k < t.min_mpow {
                        return Err(semantic(
                            *pos,
                            ParseErrorKind::OutOfWindow(format!(
                                "m^{k} outside [{}, {}]",
                                t.min_mpow,
                                Truncation::MAX_MPOW
                            )),
                        ));
                    }
                }
                let b = self.eval(base)?;
                let b = if *k < 0 { self.invert_scalar(&b, *pos)? } else { b };
                let mut acc = OperatorExpr::one(t);
                for _ in 0..k.unsigned_abs() {
                    acc = acc.multiply(&b);
                }
                acc
            }
            Node::Deriv(ix, inner) => {
                let axis = self.index(ix)?;
                self.eval(inner)?.derivative_of(axis)
            }
            Node::Sum(vars, body) => {
                let mut acc = OperatorExpr::zero(t);
                self.sum_over(vars, body, &mut acc)?;
                acc
            }
            Node::Eps(ix) => {
                let (a, b, c) = (self.index(&ix[0])?, self.index(&ix[1])?, self.index(&ix[2])?);
                OperatorExpr::int(levi_civita(a, b, c) as i128, t)
            }
            Node::Delta(ix) => {
                let (a, b) = (self.index(&ix[0])?, self.index(&ix[1])?);
                OperatorExpr::int((a == b) as i128, t)
            }
        })
    }

    fn sum_over(&mut self, vars: &[String], body: &Node, acc: &mut OperatorExpr) -> Result<(), ParseError> {
        match vars.split_first() {
            None => {
                let term = self.eval(body)?;
                *acc = &*acc + &term;
                Ok(())
            }
            Some((v, rest)) => {
                let saved = self.env.get(v).copied();
                for k in 0..3u8 {
                    self.env.insert(v.clone(), k);
                    self.sum_over(rest, body, acc)?;
                }
                match saved {
                    Some(s) => self.env.insert(v.clone(), s),
                    None => self.env.remove(v),
                };
                Ok(())
            }
        }
    }
}

pub fn levi_civita(a: usize, b: usize, c: usize) -> i32 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

fn parse_ast(text: &str) -> Result<Node, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(e)
}

/// Parses with the default window.
pub fn parse_operator(text: &str) -> Result<OperatorExpr, ParseError> {
    parse_operator_with(text, Truncation::default(), &[])
}

/// Parses with an explicit window and pre-bound index variables
/// (zero-based axis values).
pub fn parse_operator_with(
    text: &str,
    trunc: Truncation,
    bindings: &[(&str, usize)],
) -> Result<OperatorExpr, ParseError> {
    let ast = parse_ast(text)?;
    let env = bindings.iter().map(|(k, v)| (k.to_string(), *v as u8)).collect();
    let mut ev = Eval { trunc, env, _src: text };
    let e = ev.eval(&ast)?;
    if let Some(k) = e.max_mpow().filter(|&k| k > Truncation::MAX_MPOW) {
        return Err(ParseError {
            line: 1,
            col: 1,
            kind: ParseErrorKind::OutOfWindow(format!("result contains m^{k}")),
        });
    }
    if e.is_zero() {
        // distinguish a genuine zero from an expression truncated away
        let wide = Truncation { min_mpow: trunc.min_mpow - 8, max_hdeg: trunc.max_hdeg + 4 };
        let mut ev = Eval { trunc: wide, env: ev.env, _src: text };
        let w = ev.eval(&ast)?;
        if !w.is_zero() {
            return Err(ParseError {
                line: 1,
                col: 1,
                kind: ParseErrorKind::OutOfWindow(format!(
                    "every term lies outside the window (h-degree ≤ {}, m-power ≥ {})",
                    trunc.max_hdeg, trunc.min_mpow
                )),
            });
        }
    }
    Ok(e)
}
