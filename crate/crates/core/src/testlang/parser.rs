use crate::signal::{SignalKind, Value};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{Pos, SyntaxError};

/// Words that cannot be used as step, signal, parameter or constant names.
pub const RESERVED: &[&str] = &[
    "sequence",
    "assessment",
    "inputs",
    "outputs",
    "consts",
    "params",
    "step",
    "trans",
    "when",
    "otherwise",
    "verify",
    "assert",
    "and",
    "or",
    "not",
    "true",
    "false",
    "et",
    "after",
    "hasChanged",
    "sec",
    "in",
    "as",
];

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    pub(crate) fn new(src: &str) -> PResult<Self> {
        Ok(Self {
            tokens: tokenize(src)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    pub(crate) fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    pub(crate) fn here(&self) -> Pos {
        self.tokens[self.pos].pos
    }

    pub(crate) fn mark(&self) -> usize {
        self.pos
    }

    pub(crate) fn reset(&mut self, mark: usize) {
        self.pos = mark;
    }

    pub(crate) fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(SyntaxError {
            pos: self.here(),
            msg: msg.into(),
        })
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    pub(crate) fn expect_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            Tok::Ident(s) => self.error(format!("`{s}` is a reserved word")),
            other => self.error(format!("expected identifier, found {other}")),
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    // ---- blocks ----

    fn block(&mut self) -> PResult<TestBlock> {
        let kind = if self.eat_keyword("sequence") {
            BlockKind::Sequence
        } else if self.eat_keyword("assessment") {
            BlockKind::Assessment
        } else {
            return self.error(format!(
                "expected `sequence` or `assessment`, found {}",
                self.peek()
            ));
        };
        let name = self.expect_name()?;
        let mut block = TestBlock::new(kind, &name);
        self.expect(Tok::LBrace)?;
        loop {
            let section = match self.peek() {
                Tok::Ident(s) if ["inputs", "outputs", "consts", "params"].contains(&s.as_str()) => {
                    s.clone()
                }
                _ => break,
            };
            self.advance();
            let decls = self.decl_section()?;
            match section.as_str() {
                "inputs" => block.inputs.extend(decls),
                "outputs" => block.outputs.extend(decls),
                "consts" => block.consts.extend(decls),
                _ => block.params.extend(decls),
            }
        }
        loop {
            if self.is_keyword("step") {
                block.steps.push(self.step()?);
            } else if self.is_keyword("trans") {
                block.transitions.push(self.transition()?);
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        if !self.at_eof() {
            return self.error(format!("unexpected {} after block", self.peek()));
        }
        Ok(block)
    }

    fn decl_section(&mut self) -> PResult<Vec<Decl>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            let name = self.expect_name()?;
            self.expect(Tok::Colon)?;
            let kind = match self.advance() {
                Tok::Ident(k) if k == "real" => SignalKind::Real,
                Tok::Ident(k) if k == "bool" => SignalKind::Bool,
                Tok::Ident(k) if k == "int" => SignalKind::Int,
                other => {
                    self.pos -= 1;
                    return self.error(format!("expected `real`, `bool` or `int`, found {other}"));
                }
            };
            let mut decl = Decl::new(&name, kind);
            if *self.peek() == Tok::Assign {
                self.advance();
                decl.value = Some(self.literal()?);
            }
            if self.eat_keyword("in") {
                self.expect(Tok::LBracket)?;
                let lo = self.signed_number()?;
                self.expect(Tok::Comma)?;
                let hi = self.signed_number()?;
                self.expect(Tok::RBracket)?;
                decl.range = Some((lo, hi));
            }
            self.expect(Tok::Semi)?;
            out.push(decl);
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    pub(crate) fn signed_number(&mut self) -> PResult<f64> {
        let neg = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        let v = match self.advance() {
            Tok::Int(v) => v as f64,
            Tok::Real(v) => v,
            other => {
                self.pos -= 1;
                return self.error(format!("expected number, found {other}"));
            }
        };
        Ok(if neg { -v } else { v })
    }

    fn literal(&mut self) -> PResult<Value> {
        if self.eat_keyword("true") {
            return Ok(Value::Bool(true));
        }
        if self.eat_keyword("false") {
            return Ok(Value::Bool(false));
        }
        let neg = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.advance() {
            Tok::Int(v) => Ok(Value::Int(if neg { -v } else { v })),
            Tok::Real(v) => Ok(Value::Real(if neg { -v } else { v })),
            other => {
                self.pos -= 1;
                self.error(format!("expected literal, found {other}"))
            }
        }
    }

    fn step(&mut self) -> PResult<TestStep> {
        self.expect_keyword("step")?;
        let name = self.expect_name()?;
        let mut step = TestStep::new(&name);
        if self.eat_keyword("when") {
            step.when = Some(WhenGuard::Guard(self.expr()?));
        } else if self.eat_keyword("otherwise") {
            step.when = Some(WhenGuard::Otherwise);
        }
        self.expect(Tok::LBrace)?;
        let mut counter = 0;
        while *self.peek() != Tok::RBrace {
            if self.is_keyword("step") {
                step.children.push(self.step()?);
            } else if self.is_keyword("trans") {
                step.transitions.push(self.transition()?);
            } else if self.is_keyword("verify") || self.is_keyword("assert") {
                counter += 1;
                let kind = if self.eat_keyword("verify") {
                    VerifyKind::Verify
                } else {
                    self.advance();
                    VerifyKind::Assert
                };
                self.expect(Tok::LParen)?;
                let body = self.expr()?;
                self.expect(Tok::RParen)?;
                let id = if self.eat_keyword("as") {
                    self.expect_name()?
                } else {
                    format!("{}_{}", step.name, counter)
                };
                self.expect(Tok::Semi)?;
                step.statements.push(VerificationStatement { id, kind, body });
            } else if matches!(self.peek(), Tok::Ident(_)) {
                let target = self.expect_name()?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                step.actions.push(Assignment { target, value });
            } else {
                return self.error(format!("unexpected {} in step `{}`", self.peek(), step.name));
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(step)
    }

    fn transition(&mut self) -> PResult<Transition> {
        self.expect_keyword("trans")?;
        let source = self.expect_name()?;
        self.expect(Tok::Arrow)?;
        let destination = self.expect_name()?;
        self.expect_keyword("when")?;
        let guard = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(Transition {
            source,
            destination,
            guard,
        })
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_keyword("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_keyword("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_keyword("not") {
            let inner = self.not_expr()?;
            return Ok(Expr::not(inner));
        }
        self.relational()
    }

    fn relational(&mut self) -> PResult<Expr> {
        let lhs = self.arith()?;
        match self.relop() {
            Some(op) => {
                self.advance();
                let rhs = self.arith()?;
                if self.relop().is_some() {
                    return self.error("comparison operators do not chain; add parentheses");
                }
                Ok(Expr::binary(op, lhs, rhs))
            }
            None => Ok(lhs),
        }
    }

    pub(crate) fn relop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return None,
        })
    }

    /// Additive-level arithmetic expression.
    pub(crate) fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            self.advance();
            // A minus directly in front of a number is part of the literal.
            match self.peek().clone() {
                Tok::Int(v) => {
                    self.advance();
                    return Ok(Expr::Lit(Value::Int(-v)));
                }
                Tok::Real(v) => {
                    self.advance();
                    return Ok(Expr::Lit(Value::Real(-v)));
                }
                _ => {}
            }
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Lit(Value::Int(v)))
            }
            Tok::Real(v) => {
                self.advance();
                Ok(Expr::Lit(Value::Real(v)))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => {
                    self.advance();
                    Ok(Expr::Lit(Value::Bool(true)))
                }
                "false" => {
                    self.advance();
                    Ok(Expr::Lit(Value::Bool(false)))
                }
                "et" => {
                    self.advance();
                    if *self.peek() == Tok::LParen {
                        self.advance();
                        self.expect_keyword("sec")?;
                        self.expect(Tok::RParen)?;
                    }
                    Ok(Expr::Et)
                }
                "after" => {
                    self.advance();
                    self.expect(Tok::LParen)?;
                    let n = self.arith()?;
                    self.expect(Tok::Comma)?;
                    if !self.is_keyword("sec") {
                        return self.error(format!(
                            "only the time unit `sec` is supported, found {}",
                            self.peek()
                        ));
                    }
                    self.advance();
                    self.expect(Tok::RParen)?;
                    Ok(Expr::After(Box::new(n)))
                }
                "hasChanged" => {
                    self.advance();
                    self.expect(Tok::LParen)?;
                    let name = self.expect_name()?;
                    self.expect(Tok::RParen)?;
                    Ok(Expr::HasChanged(name))
                }
                _ => Ok(Expr::Ident(self.expect_name()?)),
            },
            other => self.error(format!("expected expression, found {other}")),
        }
    }
}

/// Parses block syntax only, without symbol or type checks.
pub fn parse_syntax(src: &str) -> Result<TestBlock, SyntaxError> {
    Parser::new(src)?.block()
}

/// Parses a standalone expression.
pub fn parse_expr(src: &str) -> Result<Expr, SyntaxError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return p.error(format!("unexpected {} after expression", p.peek()));
    }
    Ok(e)
}
