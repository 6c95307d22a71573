//! Line-oriented `.eds` file parser.
//!
//! Declarations: `system`, `param`, `coord`, `assume`, `generator`,
//! `bracket`, `table`, `case`, `define`, `form`, `connection`, `realize`,
//! `conservation`, `backlund`. Scalar power is `^`, wedge is `/\`,
//! comments start with `#`. `Dx(e)` / `Dt(e)` are total derivatives.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, ToPrimitive};

use crate::conserve::ConservationCandidate;
use crate::error::EdsError;
use crate::exterior::{Chart, DifferentialForm, ExteriorSystem};
use crate::liealg::{BasisElem, LieExpr, Realization, RelationTable};
use crate::prolong::Connection;
use crate::scalar::{
    AssumptionSet, Coordinate, Direction, ParamRational, Parameter, PowerMap, ScalarExpr,
};

#[derive(Debug, Clone)]
pub struct SystemFile {
    pub system: ExteriorSystem,
    /// bracket tables; the unnamed declarations go to "standing"
    pub tables: BTreeMap<String, RelationTable>,
    pub connections: BTreeMap<String, Connection>,
    pub realizations: BTreeMap<String, Realization>,
    /// named assumption sets for constraint extraction
    pub cases: BTreeMap<String, AssumptionSet>,
    /// triangular fibre definitions for `section --eliminate`, in order
    pub definitions: Vec<(String, ScalarExpr)>,
    pub conservations: BTreeMap<String, ConservationCandidate>,
    /// name -> (F, G)
    pub backlunds: BTreeMap<String, (ScalarExpr, ScalarExpr)>,
}

pub fn parse(source: &str) -> Result<SystemFile, EdsError> {
    Parser::new(source).run()
}

// ---------------------------------------------------------------- tokens

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Wedge,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Arrow,
    Eq,
    Neq,
}

#[derive(Debug, Clone)]
struct Sp {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Sp>, EdsError> {
    let err = |col: usize, msg: String| EdsError::Parse {
        line: lineno,
        column: col,
        message: msg,
    };
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Sp {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    col,
                });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Sp {
                    tok: Tok::Num(s.parse().expect("digits")),
                    col,
                });
            }
            '+' => {
                out.push(Sp { tok: Tok::Plus, col });
                i += 1;
            }
            '-' => {
                if i + 1 < chars.len() && chars[i + 1] == '>' {
                    out.push(Sp { tok: Tok::Arrow, col });
                    i += 2;
                } else {
                    out.push(Sp { tok: Tok::Minus, col });
                    i += 1;
                }
            }
            '*' => {
                out.push(Sp { tok: Tok::Star, col });
                i += 1;
            }
            '/' => {
                if i + 1 < chars.len() && chars[i + 1] == '\\' {
                    out.push(Sp { tok: Tok::Wedge, col });
                    i += 2;
                } else {
                    out.push(Sp { tok: Tok::Slash, col });
                    i += 1;
                }
            }
            '^' => {
                out.push(Sp { tok: Tok::Caret, col });
                i += 1;
            }
            '(' => {
                out.push(Sp { tok: Tok::LParen, col });
                i += 1;
            }
            ')' => {
                out.push(Sp { tok: Tok::RParen, col });
                i += 1;
            }
            '[' => {
                out.push(Sp { tok: Tok::LBracket, col });
                i += 1;
            }
            ']' => {
                out.push(Sp { tok: Tok::RBracket, col });
                i += 1;
            }
            ',' => {
                out.push(Sp { tok: Tok::Comma, col });
                i += 1;
            }
            ';' => {
                out.push(Sp { tok: Tok::Semi, col });
                i += 1;
            }
            ':' => {
                out.push(Sp { tok: Tok::Colon, col });
                i += 1;
            }
            '=' => {
                out.push(Sp { tok: Tok::Eq, col });
                i += 1;
            }
            '!' => {
                if i + 1 < chars.len() && chars[i + 1] == '=' {
                    out.push(Sp { tok: Tok::Neq, col });
                    i += 2;
                } else {
                    return Err(err(col, "expected `!=`".into()));
                }
            }
            other => return Err(err(col, format!("unexpected character `{}`", other))),
        }
    }
    Ok(out)
}

// --------------------------------------------------------------- raw AST

#[derive(Debug, Clone)]
enum Expr {
    Num(BigInt),
    Ident(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Wedge(Box<Expr>, Box<Expr>),
    Bracket(Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

struct ExprParser<'a> {
    toks: &'a [Sp],
    pos: usize,
    line: usize,
}

impl<'a> ExprParser<'a> {
    fn err(&self, msg: &str) -> EdsError {
        let col = self.toks.get(self.pos).map(|s| s.col).unwrap_or(0);
        EdsError::Parse {
            line: self.line,
            column: col,
            message: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), EdsError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {}", what)))
        }
    }

    fn expr(&mut self) -> Result<Expr, EdsError> {
        let mut lhs = self.wedge()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.wedge()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.wedge()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn wedge(&mut self) -> Result<Expr, EdsError> {
        let mut lhs = self.mul()?;
        while self.peek() == Some(&Tok::Wedge) {
            self.pos += 1;
            let rhs = self.mul()?;
            lhs = Expr::Wedge(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn mul(&mut self) -> Result<Expr, EdsError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, EdsError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Expr::Neg(Box::new(e)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, EdsError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            // exponent: an atom or a negated atom; parenthesize anything else
            let exp = if self.peek() == Some(&Tok::Minus) {
                self.pos += 1;
                Expr::Neg(Box::new(self.atom()?))
            } else {
                self.atom()?
            };
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, EdsError> {
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Ident(name)) => {
                if (name == "Dx" || name == "Dt") && self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let inner = self.expr()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    return Ok(Expr::Call(name, Box::new(inner)));
                }
                Ok(Expr::Ident(name))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::LBracket) => {
                let a = self.expr()?;
                self.expect(&Tok::Comma, "`,` in bracket")?;
                let b = self.expr()?;
                self.expect(&Tok::RBracket, "`]`")?;
                Ok(Expr::Bracket(Box::new(a), Box::new(b)))
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.err("expected expression"))
            }
        }
    }
}

// ------------------------------------------------------------- lowering

#[derive(Debug, Default)]
struct Scope {
    coords: Vec<Coordinate>,
    /// name -> (nonzero, optional defined value)
    params: BTreeMap<String, (bool, Option<ParamRational>)>,
    generators: Vec<String>,
}

impl Scope {
    fn coordinate(&self, name: &str) -> Option<Coordinate> {
        if let Some(c) = self.coords.iter().find(|c| c.name == name) {
            return Some(c.clone());
        }
        // jets of declared fibre coordinates: u_x, u_xxt, ...
        let (base, suffix) = name.split_once('_')?;
        if !self
            .coords
            .iter()
            .any(|c| c.name == base && matches!(c.kind, crate::scalar::CoordKind::Fibre))
        {
            return None;
        }
        let xs = suffix.chars().take_while(|c| *c == 'x').count();
        let ts = suffix.chars().skip(xs).take_while(|c| *c == 't').count();
        if xs + ts != suffix.len() || suffix.is_empty() {
            return None;
        }
        Some(Coordinate::jet(base, xs as u8, ts as u8))
    }

    fn param_value(&self, name: &str) -> Option<ParamRational> {
        let (_, def) = self.params.get(name)?;
        Some(match def {
            Some(v) => v.clone(),
            None => ParamRational::var(name),
        })
    }

    fn lower_param(&self, e: &Expr, line: usize) -> Result<ParamRational, EdsError> {
        let err = |m: String| EdsError::Parse { line, column: 0, message: m };
        match e {
            Expr::Num(n) => Ok(ParamRational::from_rational(BigRational::from(n.clone()))),
            Expr::Ident(name) => self
                .param_value(name)
                .ok_or_else(|| err(format!("`{}` is not a declared parameter", name))),
            Expr::Neg(a) => Ok(self.lower_param(a, line)?.neg()),
            Expr::Add(a, b) => Ok(self.lower_param(a, line)?.add(&self.lower_param(b, line)?)),
            Expr::Sub(a, b) => Ok(self.lower_param(a, line)?.sub(&self.lower_param(b, line)?)),
            Expr::Mul(a, b) => Ok(self.lower_param(a, line)?.mul(&self.lower_param(b, line)?)),
            Expr::Div(a, b) => self
                .lower_param(a, line)?
                .div(&self.lower_param(b, line)?)
                .ok_or_else(|| err("division by zero in parameter expression".into())),
            Expr::Pow(a, b) => {
                let base = self.lower_param(a, line)?;
                let k = self
                    .lower_param(b, line)?
                    .as_integer()
                    .and_then(|k| k.to_i64())
                    .ok_or_else(|| err("parameter exponent must be an integer".into()))?;
                let mut acc = ParamRational::one();
                for _ in 0..k.unsigned_abs() {
                    acc = acc.mul(&base);
                }
                if k < 0 {
                    acc = ParamRational::one()
                        .div(&acc)
                        .ok_or_else(|| err("zero to a negative power".into()))?;
                }
                Ok(acc)
            }
            _ => Err(err("not a parameter expression".into())),
        }
    }

    fn lower_scalar(&self, e: &Expr, line: usize) -> Result<ScalarExpr, EdsError> {
        let err = |m: String| EdsError::Parse { line, column: 0, message: m };
        match e {
            Expr::Num(n) => Ok(ScalarExpr::term(
                ParamRational::from_rational(BigRational::from(n.clone())),
                PowerMap::new(),
            )),
            Expr::Ident(name) => {
                if let Some(c) = self.coordinate(name) {
                    Ok(ScalarExpr::var(c))
                } else if let Some(v) = self.param_value(name) {
                    Ok(ScalarExpr::term(v, PowerMap::new()))
                } else {
                    Err(EdsError::Undeclared(name.clone()))
                }
            }
            Expr::Neg(a) => Ok(self.lower_scalar(a, line)?.neg()),
            Expr::Add(a, b) => Ok(self.lower_scalar(a, line)?.add(&self.lower_scalar(b, line)?)),
            Expr::Sub(a, b) => Ok(self.lower_scalar(a, line)?.sub(&self.lower_scalar(b, line)?)),
            Expr::Mul(a, b) => Ok(self.lower_scalar(a, line)?.mul(&self.lower_scalar(b, line)?)),
            Expr::Div(a, b) => {
                let num = self.lower_scalar(a, line)?;
                let den = self.lower_scalar(b, line)?;
                let t = den
                    .as_single_term()
                    .ok_or_else(|| err("denominator must be a single term".into()))?;
                num.div_term(&t)
                    .ok_or_else(|| err("inexact scalar division".into()))
            }
            Expr::Pow(a, b) => {
                // coordinate ^ parameter-expression, or scalar ^ integer
                if let Expr::Ident(name) = a.as_ref() {
                    if let Some(c) = self.coordinate(name) {
                        let exp = self.lower_param(b, line)?;
                        let mut powers = PowerMap::new();
                        powers.insert(c, exp);
                        return Ok(ScalarExpr::term(ParamRational::one(), powers));
                    }
                }
                let base = self.lower_scalar(a, line)?;
                let k = self
                    .lower_param(b, line)?
                    .as_integer()
                    .and_then(|k| k.to_i64())
                    .filter(|k| *k >= 0)
                    .ok_or_else(|| {
                        err("general base needs a nonnegative integer exponent".into())
                    })?;
                Ok(base.pow_u(k as u32))
            }
            Expr::Call(f, a) => {
                let inner = self.lower_scalar(a, line)?;
                let dir = if f == "Dx" { Direction::X } else { Direction::T };
                inner.total_diff(dir)
            }
            _ => Err(err("not a scalar expression".into())),
        }
    }

    fn lower_form(&self, e: &Expr, chart: &Chart, line: usize) -> Result<DifferentialForm, EdsError> {
        let err = |m: String| EdsError::Parse { line, column: 0, message: m };
        match e {
            Expr::Ident(name) => {
                if let Some(rest) = name.strip_prefix('d') {
                    if chart.lookup(rest).is_some() {
                        return DifferentialForm::differential(chart, rest);
                    }
                }
                Ok(DifferentialForm::scalar(self.lower_scalar(e, line)?))
            }
            Expr::Neg(a) => Ok(self.lower_form(a, chart, line)?.neg()),
            Expr::Add(a, b) => {
                let fa = self.lower_form(a, chart, line)?;
                let fb = self.lower_form(b, chart, line)?;
                if fa.degree != fb.degree {
                    return Err(err(format!(
                        "cannot add a {}-form and a {}-form",
                        fa.degree, fb.degree
                    )));
                }
                Ok(fa.add(&fb))
            }
            Expr::Sub(a, b) => {
                let fa = self.lower_form(a, chart, line)?;
                let fb = self.lower_form(b, chart, line)?;
                if fa.degree != fb.degree {
                    return Err(err(format!(
                        "cannot subtract a {}-form from a {}-form",
                        fb.degree, fa.degree
                    )));
                }
                Ok(fa.sub(&fb))
            }
            Expr::Mul(a, b) | Expr::Wedge(a, b) => {
                let fa = self.lower_form(a, chart, line)?;
                let fb = self.lower_form(b, chart, line)?;
                fa.wedge(&fb)
            }
            _ => Ok(DifferentialForm::scalar(self.lower_scalar(e, line)?)),
        }
    }

    fn lower_lie(&self, e: &Expr, line: usize) -> Result<LieExpr, EdsError> {
        let err = |m: String| EdsError::Parse { line, column: 0, message: m };
        match e {
            Expr::Num(n) if n == &BigInt::from(0) => Ok(LieExpr::zero()),
            Expr::Ident(name) if self.generators.iter().any(|g| g == name) => {
                Ok(LieExpr::gen(name))
            }
            Expr::Neg(a) => Ok(self.lower_lie(a, line)?.neg()),
            Expr::Add(a, b) => Ok(self.lower_lie(a, line)?.add(&self.lower_lie(b, line)?)),
            Expr::Sub(a, b) => Ok(self.lower_lie(a, line)?.sub(&self.lower_lie(b, line)?)),
            Expr::Mul(a, b) => {
                // exactly one factor is a Lie expression
                match (self.lower_lie(a, line), self.lower_lie(b, line)) {
                    (Ok(la), Err(_)) => Ok(la.scale(&self.lower_scalar(b, line)?)),
                    (Err(_), Ok(lb)) => Ok(lb.scale(&self.lower_scalar(a, line)?)),
                    (Ok(_), Ok(_)) => Err(err("product of two Lie expressions".into())),
                    (Err(e), Err(_)) => Err(e),
                }
            }
            Expr::Div(a, b) => {
                let la = self.lower_lie(a, line)?;
                let den = self.lower_scalar(b, line)?;
                let t = den
                    .as_single_term()
                    .ok_or_else(|| err("denominator must be a single term".into()))?;
                let one = ScalarExpr::one()
                    .div_term(&t)
                    .ok_or_else(|| err("inexact division".into()))?;
                Ok(la.scale(&one))
            }
            Expr::Bracket(a, b) => {
                let la = self.lower_lie(a, line)?;
                let lb = self.lower_lie(b, line)?;
                let ba = single_basis(&la).ok_or_else(|| err("bracket of a sum".into()))?;
                let bb = single_basis(&lb).ok_or_else(|| err("bracket of a sum".into()))?;
                match BasisElem::formal(ba, bb) {
                    None => Ok(LieExpr::zero()),
                    Some((e, s)) => Ok(LieExpr::single(
                        e,
                        if s < 0 {
                            ScalarExpr::from_i64(-1)
                        } else {
                            ScalarExpr::one()
                        },
                    )),
                }
            }
            _ => Err(err("not a Lie expression".into())),
        }
    }
}

fn single_basis(e: &LieExpr) -> Option<BasisElem> {
    let mut it = e.terms();
    let (b, c) = it.next()?;
    if it.next().is_some() || *c != ScalarExpr::one() {
        return None;
    }
    Some(b.clone())
}

// ---------------------------------------------------------------- parser

struct Parser<'a> {
    source: &'a str,
    scope: Scope,
    system_name: String,
    assumptions: AssumptionSet,
    forms: Vec<(String, DifferentialForm)>,
    out_tables: BTreeMap<String, RelationTable>,
    current_table: String,
    connections: BTreeMap<String, Connection>,
    realizations: BTreeMap<String, Realization>,
    cases: BTreeMap<String, AssumptionSet>,
    definitions: Vec<(String, ScalarExpr)>,
    conservations: BTreeMap<String, ConservationCandidate>,
    backlunds: BTreeMap<String, (ScalarExpr, ScalarExpr)>,
    chart: Option<Chart>,
}

impl<'a> Parser<'a> {
    fn new(source: &'a str) -> Self {
        Parser {
            source,
            scope: Scope::default(),
            system_name: String::new(),
            assumptions: AssumptionSet::empty(),
            forms: Vec::new(),
            out_tables: BTreeMap::new(),
            current_table: "standing".to_string(),
            connections: BTreeMap::new(),
            realizations: BTreeMap::new(),
            cases: BTreeMap::new(),
            definitions: Vec::new(),
            conservations: BTreeMap::new(),
            backlunds: BTreeMap::new(),
            chart: None,
        }
    }

    fn chart(&mut self) -> Chart {
        if self.chart.is_none() {
            let mut chart = Chart::new(
                self.scope
                    .coords
                    .iter()
                    .filter(|c| !matches!(c.kind, crate::scalar::CoordKind::Aux { .. }))
                    .cloned()
                    .collect(),
            );
            for c in &self.scope.coords {
                if matches!(c.kind, crate::scalar::CoordKind::Aux { .. }) {
                    chart = chart.with_aux(c.clone());
                }
            }
            self.chart = Some(chart);
        }
        self.chart.clone().unwrap()
    }

    fn run(mut self) -> Result<SystemFile, EdsError> {
        let lines: Vec<&str> = self.source.lines().collect();
        for (i, raw) in lines.iter().enumerate() {
            let lineno = i + 1;
            let toks = lex(raw, lineno)?;
            if toks.is_empty() {
                continue;
            }
            self.statement(&toks, lineno)?;
        }
        if self.system_name.is_empty() {
            return Err(EdsError::Parse {
                line: 1,
                column: 1,
                message: "missing `system NAME` declaration".into(),
            });
        }
        let chart = self.chart();
        let parameters: Vec<Parameter> = self
            .scope
            .params
            .iter()
            .filter(|(_, (_, def))| def.is_none())
            .map(|(name, (nonzero, _))| {
                if *nonzero {
                    Parameter::nonzero(name)
                } else {
                    Parameter::new(name)
                }
            })
            .collect();
        for p in &parameters {
            if p.nonzero {
                self.assumptions.nonzero_params.push(p.name.clone());
            }
        }
        let system = ExteriorSystem {
            name: self.system_name,
            chart,
            parameters,
            assumptions: self.assumptions,
            generators: self.forms,
        };
        Ok(SystemFile {
            system,
            tables: self.out_tables,
            connections: self.connections,
            realizations: self.realizations,
            cases: self.cases,
            definitions: self.definitions,
            conservations: self.conservations,
            backlunds: self.backlunds,
        })
    }

    fn statement(&mut self, toks: &[Sp], line: usize) -> Result<(), EdsError> {
        let err = |col: usize, m: String| EdsError::Parse { line, column: col, message: m };
        let head = match &toks[0].tok {
            Tok::Ident(k) => k.clone(),
            _ => return Err(err(toks[0].col, "expected a declaration keyword".into())),
        };
        let rest = &toks[1..];
        match head.as_str() {
            "system" => {
                self.system_name = self.ident(rest, 0, line)?;
                Ok(())
            }
            "param" => {
                let name = self.ident(rest, 0, line)?;
                let mut i = 1;
                let mut nonzero = false;
                if matches!(rest.get(i).map(|s| &s.tok), Some(Tok::Ident(w)) if w == "nonzero") {
                    nonzero = true;
                    i += 1;
                }
                let def = if rest.get(i).map(|s| &s.tok) == Some(&Tok::Eq) {
                    let mut p = ExprParser { toks: &rest[i + 1..], pos: 0, line };
                    let e = p.expr()?;
                    self.end(&p, line)?;
                    Some(self.scope.lower_param(&e, line)?)
                } else if rest.get(i).is_some() {
                    return Err(err(rest[i].col, "unexpected token after `param`".into()));
                } else {
                    None
                };
                self.scope.params.insert(name, (nonzero, def));
                Ok(())
            }
            "coord" => {
                // `coord x t u` or `coord xi = u - q`
                if rest.len() >= 2 && rest[1].tok == Tok::Eq {
                    let name = self.ident(rest, 0, line)?;
                    // aux definition must be IDENT - IDENT
                    match (&rest.get(2).map(|s| s.tok.clone()), &rest.get(3).map(|s| s.tok.clone()), &rest.get(4).map(|s| s.tok.clone())) {
                        (Some(Tok::Ident(a)), Some(Tok::Minus), Some(Tok::Ident(b)))
                            if rest.len() == 5 =>
                        {
                            self.scope.coords.push(Coordinate::aux(&name, a, b));
                            Ok(())
                        }
                        _ => Err(err(
                            rest[1].col,
                            "auxiliary coordinate must be a difference of coordinates".into(),
                        )),
                    }
                } else {
                    for s in rest {
                        match &s.tok {
                            Tok::Ident(n) => {
                                let c = if n == "x" || n == "t" {
                                    Coordinate::independent(n)
                                } else {
                                    Coordinate::fibre(n)
                                };
                                self.scope.coords.push(c);
                            }
                            _ => return Err(err(s.col, "expected coordinate name".into())),
                        }
                    }
                    Ok(())
                }
            }
            "generator" => {
                for s in rest {
                    match &s.tok {
                        Tok::Ident(n) => self.scope.generators.push(n.clone()),
                        _ => return Err(err(s.col, "expected generator name".into())),
                    }
                }
                Ok(())
            }
            "assume" => {
                let a = self.parse_assumption_clause(rest, line)?;
                self.assumptions = self.assumptions.merge(&a);
                Ok(())
            }
            "case" => {
                // case NAME : clause, clause, ...
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Colon) {
                    return Err(err(toks[0].col, "expected `:` after case name".into()));
                }
                let mut set = AssumptionSet::empty();
                for chunk in split_toks(&rest[2..], &Tok::Comma) {
                    let a = self.parse_assumption_clause(chunk, line)?;
                    set = set.merge(&a);
                }
                self.cases.insert(name, set);
                Ok(())
            }
            "table" => {
                let name = self.ident(rest, 0, line)?;
                self.out_tables
                    .entry(name.clone())
                    .or_insert_with(|| RelationTable::new(&name));
                self.current_table = name;
                Ok(())
            }
            "bracket" => {
                // bracket [Xi, Xj] = lie-expr
                let mut p = ExprParser { toks: rest, pos: 0, line };
                let lhs = p.atom()?;
                p.expect(&Tok::Eq, "`=`")?;
                let rhs_ast = p.expr()?;
                self.end(&p, line)?;
                let (a, b) = match lhs {
                    Expr::Bracket(a, b) => (a, b),
                    _ => return Err(err(toks[0].col, "expected `[Xi, Xj]`".into())),
                };
                let ga = match *a {
                    Expr::Ident(g) => g,
                    _ => return Err(err(toks[0].col, "bracket sides must be generators".into())),
                };
                let gb = match *b {
                    Expr::Ident(g) => g,
                    _ => return Err(err(toks[0].col, "bracket sides must be generators".into())),
                };
                let rhs = self.scope.lower_lie(&rhs_ast, line)?;
                let tname = self.current_table.clone();
                let table = self
                    .out_tables
                    .entry(tname.clone())
                    .or_insert_with(|| RelationTable::new(&tname));
                table.set(&ga, &gb, rhs);
                Ok(())
            }
            "define" => {
                // define p = expr (triangular section definitions, in order)
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Eq) {
                    return Err(err(toks[0].col, "expected `=` in define".into()));
                }
                let mut p = ExprParser { toks: &rest[2..], pos: 0, line };
                let e = p.expr()?;
                self.end(&p, line)?;
                let v = self.scope.lower_scalar(&e, line)?;
                self.definitions.push((name, v));
                Ok(())
            }
            "form" => {
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Eq) {
                    return Err(err(toks[0].col, "expected `=` in form".into()));
                }
                let chart = self.chart();
                let mut p = ExprParser { toks: &rest[2..], pos: 0, line };
                let e = p.expr()?;
                self.end(&p, line)?;
                let f = self.scope.lower_form(&e, &chart, line)?;
                self.forms.push((name, f));
                Ok(())
            }
            "connection" => {
                // connection NAME : A = lie ; B = lie
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Colon) {
                    return Err(err(toks[0].col, "expected `:` after connection name".into()));
                }
                let halves: Vec<&[Sp]> = split_toks(&rest[2..], &Tok::Semi).collect();
                if halves.len() != 2 {
                    return Err(err(toks[0].col, "expected `A = ... ; B = ...`".into()));
                }
                let a = self.named_lie(halves[0], "A", line)?;
                let b = self.named_lie(halves[1], "B", line)?;
                self.connections.insert(name.clone(), Connection { name, a, b });
                Ok(())
            }
            "realize" => {
                // realize NAME : Xi -> lie, Xj -> lie, ...
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Colon) {
                    return Err(err(toks[0].col, "expected `:` after realize name".into()));
                }
                let mut r = Realization::new();
                for chunk in split_toks(&rest[2..], &Tok::Comma) {
                    let arrow = chunk
                        .iter()
                        .position(|s| s.tok == Tok::Arrow)
                        .ok_or_else(|| err(toks[0].col, "expected `->` in realize".into()))?;
                    let g = self.ident(chunk, 0, line)?;
                    if arrow != 1 {
                        return Err(err(chunk[0].col, "expected `Xi -> value`".into()));
                    }
                    let mut p = ExprParser { toks: &chunk[2..], pos: 0, line };
                    let e = p.expr()?;
                    self.end(&p, line)?;
                    r.set(&g, self.scope.lower_lie(&e, line)?);
                }
                self.realizations.insert(name, r);
                Ok(())
            }
            "conservation" => {
                // conservation NAME : g = (e1, e2, e3) [; omega = form]
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Colon) {
                    return Err(err(toks[0].col, "expected `:`".into()));
                }
                let chart = self.chart();
                let halves: Vec<&[Sp]> = split_toks(&rest[2..], &Tok::Semi).collect();
                let ghalf = halves[0];
                if self.ident(ghalf, 0, line)? != "g"
                    || ghalf.get(1).map(|s| &s.tok) != Some(&Tok::Eq)
                    || ghalf.get(2).map(|s| &s.tok) != Some(&Tok::LParen)
                    || ghalf.last().map(|s| &s.tok) != Some(&Tok::RParen)
                {
                    return Err(err(toks[0].col, "expected `g = (e1, e2, e3)`".into()));
                }
                let inner = &ghalf[3..ghalf.len() - 1];
                let mut multipliers = Vec::new();
                for chunk in split_toks(inner, &Tok::Comma) {
                    let mut p = ExprParser { toks: chunk, pos: 0, line };
                    let e = p.expr()?;
                    self.end(&p, line)?;
                    multipliers.push(self.scope.lower_scalar(&e, line)?);
                }
                let omega = if halves.len() > 1 {
                    let ohalf = halves[1];
                    if self.ident(ohalf, 0, line)? != "omega"
                        || ohalf.get(1).map(|s| &s.tok) != Some(&Tok::Eq)
                    {
                        return Err(err(toks[0].col, "expected `omega = form`".into()));
                    }
                    let mut p = ExprParser { toks: &ohalf[2..], pos: 0, line };
                    let e = p.expr()?;
                    self.end(&p, line)?;
                    Some(self.scope.lower_form(&e, &chart, line)?)
                } else {
                    None
                };
                self.conservations
                    .insert(name.clone(), ConservationCandidate { name, multipliers, omega });
                Ok(())
            }
            "backlund" => {
                // backlund NAME : F = expr ; G = expr
                let name = self.ident(rest, 0, line)?;
                if rest.get(1).map(|s| &s.tok) != Some(&Tok::Colon) {
                    return Err(err(toks[0].col, "expected `:`".into()));
                }
                let halves: Vec<&[Sp]> = split_toks(&rest[2..], &Tok::Semi).collect();
                if halves.len() != 2 {
                    return Err(err(toks[0].col, "expected `F = ... ; G = ...`".into()));
                }
                let f = self.named_scalar(halves[0], "F", line)?;
                let g = self.named_scalar(halves[1], "G", line)?;
                self.backlunds.insert(name, (f, g));
                Ok(())
            }
            other => Err(err(toks[0].col, format!("unknown declaration `{}`", other))),
        }
    }

    fn ident(&self, toks: &[Sp], i: usize, line: usize) -> Result<String, EdsError> {
        match toks.get(i).map(|s| &s.tok) {
            Some(Tok::Ident(n)) => Ok(n.clone()),
            _ => Err(EdsError::Parse {
                line,
                column: toks.get(i).map(|s| s.col).unwrap_or(0),
                message: "expected identifier".into(),
            }),
        }
    }

    fn end(&self, p: &ExprParser, line: usize) -> Result<(), EdsError> {
        if p.pos != p.toks.len() {
            return Err(EdsError::Parse {
                line,
                column: p.toks[p.pos].col,
                message: "unexpected trailing tokens".into(),
            });
        }
        Ok(())
    }

    fn named_lie(&self, toks: &[Sp], expect: &str, line: usize) -> Result<LieExpr, EdsError> {
        let name = self.ident(toks, 0, line)?;
        if name != expect || toks.get(1).map(|s| &s.tok) != Some(&Tok::Eq) {
            return Err(EdsError::Parse {
                line,
                column: toks.first().map(|s| s.col).unwrap_or(0),
                message: format!("expected `{} = ...`", expect),
            });
        }
        let mut p = ExprParser { toks: &toks[2..], pos: 0, line };
        let e = p.expr()?;
        self.end(&p, line)?;
        self.scope.lower_lie(&e, line)
    }

    fn named_scalar(&self, toks: &[Sp], expect: &str, line: usize) -> Result<ScalarExpr, EdsError> {
        let name = self.ident(toks, 0, line)?;
        if name != expect || toks.get(1).map(|s| &s.tok) != Some(&Tok::Eq) {
            return Err(EdsError::Parse {
                line,
                column: toks.first().map(|s| s.col).unwrap_or(0),
                message: format!("expected `{} = ...`", expect),
            });
        }
        let mut p = ExprParser { toks: &toks[2..], pos: 0, line };
        let e = p.expr()?;
        self.end(&p, line)?;
        self.scope.lower_scalar(&e, line)
    }

    /// `expr != 0` or `expr = 0` or `param = expr` (solved equality).
    fn parse_assumption_clause(&self, toks: &[Sp], line: usize) -> Result<AssumptionSet, EdsError> {
        let op = toks
            .iter()
            .position(|s| s.tok == Tok::Eq || s.tok == Tok::Neq)
            .ok_or_else(|| EdsError::Parse {
                line,
                column: toks.first().map(|s| s.col).unwrap_or(0),
                message: "expected `=` or `!=` in assumption".into(),
            })?;
        let mut pl = ExprParser { toks: &toks[..op], pos: 0, line };
        let lhs = pl.expr()?;
        self.end(&pl, line)?;
        let mut pr = ExprParser { toks: &toks[op + 1..], pos: 0, line };
        let rhs = pr.expr()?;
        self.end(&pr, line)?;
        let l = self.scope.lower_param(&lhs, line)?;
        let r = self.scope.lower_param(&rhs, line)?;
        let mut set = AssumptionSet::empty();
        match toks[op].tok {
            Tok::Neq => set.disequalities.push(l.sub(&r)),
            _ => set.equalities.push(l.sub(&r)),
        }
        Ok(set)
    }
}

fn split_toks<'t>(toks: &'t [Sp], sep: &'t Tok) -> impl Iterator<Item = &'t [Sp]> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut depth = 0i32;
    for (i, s) in toks.iter().enumerate() {
        match s.tok {
            Tok::LParen | Tok::LBracket => depth += 1,
            Tok::RParen | Tok::RBracket => depth -= 1,
            _ => {}
        }
        if s.tok == *sep && depth == 0 {
            chunks.push(&toks[start..i]);
            start = i + 1;
        }
    }
    chunks.push(&toks[start..]);
    chunks.into_iter().filter(|c| !c.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_system() {
        let src = "\
# comment
system demo
param n nonzero
param s = n - 1
coord x t u p
form a1 = du /\\ dt - p * dx /\\ dt
";
        let f = parse(src).unwrap();
        assert_eq!(f.system.name, "demo");
        assert_eq!(f.system.generators.len(), 1);
        assert_eq!(f.system.parameters.len(), 1);
        assert!(f.system.parameters[0].nonzero);
    }

    #[test]
    fn wedge_of_equal_differentials_is_zero() {
        let src = "\
system demo
coord x t u
form a = du /\\ du
";
        let f = parse(src).unwrap();
        assert!(f.system.generators[0].1.is_zero());
    }

    #[test]
    fn syntax_error_reports_position() {
        let src = "system demo\ncoord x t u\nform a = du /\\ %\n";
        match parse(src) {
            Err(EdsError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn undeclared_identifier_is_an_error() {
        let src = "system demo\ncoord x t u\nform a = w * du /\\ dt\n";
        assert!(matches!(parse(src), Err(EdsError::Undeclared(_))));
    }

    #[test]
    fn brackets_and_connections() {
        let src = "\
system demo
param gamma nonzero
coord x t u
generator X1 X2 X7
bracket [X1, X2] = X7
bracket [X2, X7] = X2
connection c : A = u * X1 ; B = -(u^2) * X2
";
        let f = parse(src).unwrap();
        let t = &f.tables["standing"];
        assert_eq!(t.bracket_gens("X1", "X2"), LieExpr::gen("X7"));
        assert_eq!(t.bracket_gens("X2", "X1"), LieExpr::gen("X7").neg());
        let c = &f.connections["c"];
        assert!(!c.a.is_zero_syntactic());
        assert!(!c.b.is_zero_syntactic());
    }

    #[test]
    fn cases_defines_and_jets() {
        let src = "\
system demo
param n nonzero
param m nonzero
coord x t u p q
define p = Dx(u^n)
define q = Dx(p)
case generic : n - m != 0, m - 1 != 0
";
        let f = parse(src).unwrap();
        assert_eq!(f.definitions.len(), 2);
        assert_eq!(f.cases["generic"].disequalities.len(), 2);
        // Dx(u^n) = n u^(n-1) u_x
        let (_, p) = &f.definitions[0];
        let t = p.as_single_term().unwrap();
        assert!(t.powers.contains_key(&Coordinate::jet("u", 1, 0)));
    }

    #[test]
    fn aux_coordinate_parses() {
        let src = "\
system demo
param beta nonzero
coord x t u p q
coord xi = u - q
form a = beta * xi * du /\\ dt
";
        let f = parse(src).unwrap();
        // xi expands: beta*(u - q) du^dt has two components on du^dt
        let (_, a) = &f.system.generators[0];
        assert_eq!(a.degree, 2);
        assert!(!a.is_zero());
    }
}
