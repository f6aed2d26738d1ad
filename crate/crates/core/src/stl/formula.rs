use std::fmt;

use crate::testlang::lexer::Tok;
use crate::testlang::parser::Parser;
use crate::testlang::{print, Expr, SyntaxError};

/// Closed time interval `[a, b]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Sample offsets covered on a grid with step `dt`.
    pub fn samples(&self, dt: f64) -> (usize, usize) {
        const EPS: f64 = 1e-9;
        let lo = (self.a / dt - EPS).ceil().max(0.0) as usize;
        let hi = (self.b / dt + EPS).floor().max(0.0) as usize;
        (lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.a, self.b)
    }
}

/// Bounded-time STL formula. Atoms are boolean expressions over signals.
#[derive(Debug, Clone, PartialEq)]
pub enum StlFormula {
    Atom(Expr),
    Not(Box<StlFormula>),
    And(Box<StlFormula>, Box<StlFormula>),
    Or(Box<StlFormula>, Box<StlFormula>),
    Implies(Box<StlFormula>, Box<StlFormula>),
    Globally(Interval, Box<StlFormula>),
    Eventually(Interval, Box<StlFormula>),
    Until(Interval, Box<StlFormula>, Box<StlFormula>),
}

impl StlFormula {
    pub fn atom(src: &str) -> Result<Self, SyntaxError> {
        crate::testlang::parse_expr(src).map(StlFormula::Atom)
    }

    pub fn not(f: StlFormula) -> Self {
        StlFormula::Not(Box::new(f))
    }

    pub fn and(a: StlFormula, b: StlFormula) -> Self {
        StlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: StlFormula, b: StlFormula) -> Self {
        StlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: StlFormula, b: StlFormula) -> Self {
        StlFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn globally(a: f64, b: f64, f: StlFormula) -> Self {
        StlFormula::Globally(Interval::new(a, b), Box::new(f))
    }

    pub fn eventually(a: f64, b: f64, f: StlFormula) -> Self {
        StlFormula::Eventually(Interval::new(a, b), Box::new(f))
    }

    pub fn until(a: f64, b: f64, l: StlFormula, r: StlFormula) -> Self {
        StlFormula::Until(Interval::new(a, b), Box::new(l), Box::new(r))
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            StlFormula::Atom(_) => 0,
            StlFormula::Not(f) | StlFormula::Globally(_, f) | StlFormula::Eventually(_, f) => {
                1 + f.depth()
            }
            StlFormula::And(a, b)
            | StlFormula::Or(a, b)
            | StlFormula::Implies(a, b)
            | StlFormula::Until(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Furthest sample offset from the evaluation point that the formula
    /// reads on a grid with step `dt`.
    pub fn horizon(&self, dt: f64) -> usize {
        match self {
            StlFormula::Atom(_) => 0,
            StlFormula::Not(f) => f.horizon(dt),
            StlFormula::And(a, b) | StlFormula::Or(a, b) | StlFormula::Implies(a, b) => {
                a.horizon(dt).max(b.horizon(dt))
            }
            StlFormula::Globally(i, f) | StlFormula::Eventually(i, f) => i.samples(dt).1 + f.horizon(dt),
            StlFormula::Until(i, a, b) => i.samples(dt).1 + a.horizon(dt).max(b.horizon(dt)),
        }
    }

    pub fn atoms(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            StlFormula::Atom(e) => out.push(e),
            StlFormula::Not(f) | StlFormula::Globally(_, f) | StlFormula::Eventually(_, f) => {
                f.collect_atoms(out)
            }
            StlFormula::And(a, b)
            | StlFormula::Or(a, b)
            | StlFormula::Implies(a, b)
            | StlFormula::Until(_, a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        self.visit(&mut |f| match f {
            StlFormula::Globally(i, _) | StlFormula::Eventually(i, _) | StlFormula::Until(i, _, _) => {
                out.push(*i)
            }
            _ => {}
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&StlFormula)) {
        f(self);
        match self {
            StlFormula::Atom(_) => {}
            StlFormula::Not(g) | StlFormula::Globally(_, g) | StlFormula::Eventually(_, g) => g.visit(f),
            StlFormula::And(a, b)
            | StlFormula::Or(a, b)
            | StlFormula::Implies(a, b)
            | StlFormula::Until(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }
}

impl fmt::Display for StlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StlFormula::Atom(e) => write!(f, "({})", print::expr(e)),
            StlFormula::Not(a) => write!(f, "not {a}"),
            StlFormula::And(a, b) => write!(f, "({a} and {b})"),
            StlFormula::Or(a, b) => write!(f, "({a} or {b})"),
            StlFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            StlFormula::Globally(i, a) => write!(f, "G{i} {a}"),
            StlFormula::Eventually(i, a) => write!(f, "F{i} {a}"),
            StlFormula::Until(i, a, b) => write!(f, "(({a}) U{i} ({b}))"),
        }
    }
}

/// Parses STL concrete syntax:
///
/// ```text
/// G[0, 20] (speed < 120 and F[0, 5] (gear >= 2))
/// (x > 0) U[1, 3] (y <= 2) -> not ok
/// ```
///
/// `->` is right-associative and binds loosest, then `or`, `and`, and the
/// prefix operators `not`, `G[a,b]`, `F[a,b]`. `U[a,b]` is infix between
/// primaries. Atoms use the test-block expression syntax.
pub fn parse_formula(src: &str) -> Result<StlFormula, SyntaxError> {
    let mut p = Parser::new(src)?;
    let f = formula(&mut p)?;
    if !p.at_eof() {
        return p.error(format!("unexpected {} after formula", p.peek()));
    }
    Ok(f)
}

type PResult<T> = Result<T, SyntaxError>;

fn formula(p: &mut Parser) -> PResult<StlFormula> {
    let lhs = disjunction(p)?;
    if *p.peek() == Tok::Arrow {
        p.advance();
        let rhs = formula(p)?;
        return Ok(StlFormula::implies(lhs, rhs));
    }
    Ok(lhs)
}

fn disjunction(p: &mut Parser) -> PResult<StlFormula> {
    let mut lhs = conjunction(p)?;
    while p.eat_keyword("or") {
        let rhs = conjunction(p)?;
        lhs = StlFormula::or(lhs, rhs);
    }
    Ok(lhs)
}

fn conjunction(p: &mut Parser) -> PResult<StlFormula> {
    let mut lhs = prefix(p)?;
    while p.eat_keyword("and") {
        let rhs = prefix(p)?;
        lhs = StlFormula::and(lhs, rhs);
    }
    Ok(lhs)
}

fn temporal_keyword(p: &Parser, kw: &str) -> bool {
    p.is_keyword(kw) && *p.peek_at(1) == Tok::LBracket
}

fn prefix(p: &mut Parser) -> PResult<StlFormula> {
    if p.eat_keyword("not") {
        return Ok(StlFormula::not(prefix(p)?));
    }
    for (kw, globally) in [("G", true), ("F", false)] {
        if p.is_keyword(kw) {
            if *p.peek_at(1) != Tok::LBracket {
                return p.error(format!("`{kw}` needs a bounded interval `[a, b]`"));
            }
            p.advance();
            let i = interval(p)?;
            let body = Box::new(prefix(p)?);
            return Ok(if globally {
                StlFormula::Globally(i, body)
            } else {
                StlFormula::Eventually(i, body)
            });
        }
    }
    let lhs = primary(p)?;
    if p.is_keyword("U") {
        if !temporal_keyword(p, "U") {
            return p.error("`U` needs a bounded interval `[a, b]`");
        }
        p.advance();
        let i = interval(p)?;
        let rhs = primary(p)?;
        return Ok(StlFormula::Until(i, Box::new(lhs), Box::new(rhs)));
    }
    Ok(lhs)
}

fn interval(p: &mut Parser) -> PResult<Interval> {
    p.expect(Tok::LBracket)?;
    let a = p.signed_number()?;
    p.expect(Tok::Comma)?;
    let b = p.signed_number()?;
    p.expect(Tok::RBracket)?;
    if !(0.0 <= a && a <= b) {
        return p.error(format!("interval [{a}, {b}] must satisfy 0 <= a <= b"));
    }
    Ok(Interval::new(a, b))
}

/// A parenthesized formula, or a predicate. A parenthesis that turns out to
/// open an arithmetic operand (`(y - r) < 2`) is re-read as a predicate.
fn primary(p: &mut Parser) -> PResult<StlFormula> {
    if *p.peek() == Tok::LParen {
        let mark = p.mark();
        p.advance();
        if let Ok(f) = formula(p) {
            if *p.peek() == Tok::RParen {
                p.advance();
                let continues_arith = p.relop().is_some()
                    || matches!(p.peek(), Tok::Plus | Tok::Minus | Tok::Star | Tok::Slash);
                if !continues_arith {
                    return Ok(f);
                }
            }
        }
        p.reset(mark);
    }
    predicate(p)
}

fn predicate(p: &mut Parser) -> PResult<StlFormula> {
    if p.is_keyword("G") || p.is_keyword("F") || p.is_keyword("not") {
        return prefix(p);
    }
    let lhs = p.arith()?;
    match p.relop() {
        Some(op) => {
            p.advance();
            let rhs = p.arith()?;
            if p.relop().is_some() {
                return p.error("comparison operators do not chain; add parentheses");
            }
            Ok(StlFormula::Atom(Expr::binary(op, lhs, rhs)))
        }
        None => Ok(StlFormula::Atom(lhs)),
    }
}
