//! Canonical text form of blocks and expressions. Parsing the printed form
//! gives back a structurally equal AST.

use std::fmt::Write;

use crate::signal::Value;

use super::ast::*;

const ATOM: u8 = 10;
const NOT: u8 = 3;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(UnOp::Not, _) => NOT,
        _ => ATOM,
    }
}

pub fn literal(v: &Value) -> String {
    match v {
        Value::Real(x) => format!("{x:?}"),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
    }
}

pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_operand(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Lit(v) => out.push_str(&literal(v)),
        Expr::Ident(n) => out.push_str(n),
        Expr::Et => out.push_str("et"),
        Expr::After(n) => {
            out.push_str("after(");
            write_expr(out, n);
            out.push_str(", sec)");
        }
        Expr::HasChanged(n) => {
            let _ = write!(out, "hasChanged({n})");
        }
        Expr::Unary(UnOp::Not, inner) => {
            out.push_str("not ");
            write_operand(out, inner, precedence(inner) < NOT);
        }
        Expr::Unary(UnOp::Neg, inner) => {
            out.push('-');
            let bare = matches!(
                **inner,
                Expr::Ident(_) | Expr::Et | Expr::After(_) | Expr::HasChanged(_)
            );
            write_operand(out, inner, !bare);
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            let lhs_parens = if op.is_relational() {
                precedence(lhs) <= p
            } else {
                precedence(lhs) < p
            };
            write_operand(out, lhs, lhs_parens);
            let _ = write!(out, " {} ", op.symbol());
            write_operand(out, rhs, precedence(rhs) <= p);
        }
    }
}

fn write_decls(out: &mut String, section: &str, decls: &[Decl]) {
    if decls.is_empty() {
        return;
    }
    let _ = writeln!(out, "  {section} {{");
    for d in decls {
        let _ = write!(out, "    {}: {}", d.name, d.kind);
        if let Some(v) = &d.value {
            let _ = write!(out, " = {}", literal(v));
        }
        if let Some((lo, hi)) = d.range {
            let _ = write!(out, " in [{lo:?}, {hi:?}]");
        }
        out.push_str(";\n");
    }
    out.push_str("  }\n");
}

fn write_transition(out: &mut String, t: &Transition, indent: usize) {
    let _ = writeln!(
        out,
        "{:indent$}trans {} -> {} when {};",
        "",
        t.source,
        t.destination,
        expr(&t.guard)
    );
}

fn write_step(out: &mut String, s: &TestStep, indent: usize) {
    let _ = write!(out, "{:indent$}step {}", "", s.name);
    match &s.when {
        Some(WhenGuard::Guard(g)) => {
            let _ = write!(out, " when {}", expr(g));
        }
        Some(WhenGuard::Otherwise) => out.push_str(" otherwise"),
        None => {}
    }
    out.push_str(" {\n");
    let inner = indent + 2;
    for a in &s.actions {
        let _ = writeln!(out, "{:inner$}{} = {};", "", a.target, expr(&a.value));
    }
    for v in &s.statements {
        let _ = writeln!(
            out,
            "{:inner$}{}({}) as {};",
            "",
            v.kind.keyword(),
            expr(&v.body),
            v.id
        );
    }
    for c in &s.children {
        write_step(out, c, inner);
    }
    for t in &s.transitions {
        write_transition(out, t, inner);
    }
    let _ = writeln!(out, "{:indent$}}}", "");
}

pub fn block(b: &TestBlock) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {{", b.kind.keyword(), b.name);
    write_decls(&mut out, "inputs", &b.inputs);
    write_decls(&mut out, "outputs", &b.outputs);
    write_decls(&mut out, "consts", &b.consts);
    write_decls(&mut out, "params", &b.params);
    for s in &b.steps {
        write_step(&mut out, s, 2);
    }
    for t in &b.transitions {
        write_transition(&mut out, t, 2);
    }
    out.push_str("}\n");
    out
}
