use crate::testlang::{BinOp, Expr, UnOp};
use crate::signal::Value;

use super::EvalError;

/// Expression with every identifier resolved to a slot, a parameter index or
/// a constant. Booleans are carried as 1.0 / 0.0.
#[derive(Debug, Clone, PartialEq)]
pub enum CExpr {
    Const(f64),
    Slot(usize),
    Param(usize),
    Et,
    After(Box<CExpr>),
    Changed(usize),
    Neg(Box<CExpr>),
    Not(Box<CExpr>),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolved {
    Slot(usize),
    Param(usize),
    Const(f64),
}

/// Values visible to an expression at one sample.
#[derive(Debug, Clone, Copy)]
pub struct EvalEnv<'a> {
    pub k: usize,
    pub dt: f64,
    /// Current value of every slot.
    pub cur: &'a [f64],
    /// Values one sample earlier; `None` when there is no predecessor.
    pub prev: Option<&'a [f64]>,
    pub params: &'a [f64],
}

impl EvalEnv<'_> {
    pub fn time(&self) -> f64 {
        self.k as f64 * self.dt
    }
}

pub fn compile(e: &Expr, resolve: &dyn Fn(&str) -> Option<Resolved>) -> Result<CExpr, EvalError> {
    let lookup = |n: &str| resolve(n).ok_or_else(|| EvalError::Unresolved(n.to_string()));
    Ok(match e {
        Expr::Lit(v) => CExpr::Const(lit(v)),
        Expr::Ident(n) => match lookup(n)? {
            Resolved::Slot(i) => CExpr::Slot(i),
            Resolved::Param(i) => CExpr::Param(i),
            Resolved::Const(c) => CExpr::Const(c),
        },
        Expr::Et => CExpr::Et,
        Expr::After(n) => CExpr::After(Box::new(compile(n, resolve)?)),
        Expr::HasChanged(n) => match lookup(n)? {
            Resolved::Slot(i) => CExpr::Changed(i),
            _ => return Err(EvalError::Unresolved(n.to_string())),
        },
        Expr::Unary(UnOp::Neg, a) => CExpr::Neg(Box::new(compile(a, resolve)?)),
        Expr::Unary(UnOp::Not, a) => CExpr::Not(Box::new(compile(a, resolve)?)),
        Expr::Binary(op, a, b) => CExpr::Bin(
            *op,
            Box::new(compile(a, resolve)?),
            Box::new(compile(b, resolve)?),
        ),
    })
}

fn lit(v: &Value) -> f64 {
    v.as_f64()
}

/// Tolerance for `after` thresholds so that `k·dt` rounding does not delay a
/// firing by one sample.
fn after_slack(dt: f64) -> f64 {
    dt * 1e-6
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn eval(e: &CExpr, env: &EvalEnv, et: f64) -> Result<f64, EvalError> {
    Ok(match e {
        CExpr::Const(c) => *c,
        CExpr::Slot(i) => env.cur[*i],
        CExpr::Param(i) => env.params[*i],
        CExpr::Et => et,
        CExpr::After(n) => truth(et + after_slack(env.dt) >= eval(n, env, et)?),
        CExpr::Changed(i) => truth(env.prev.is_some_and(|p| p[*i] != env.cur[*i])),
        CExpr::Neg(a) => -eval(a, env, et)?,
        CExpr::Not(a) => truth(eval(a, env, et)? == 0.0),
        CExpr::Bin(op, a, b) => {
            let x = eval(a, env, et)?;
            match op {
                BinOp::And if x == 0.0 => return Ok(0.0),
                BinOp::Or if x != 0.0 => return Ok(1.0),
                _ => {}
            }
            let y = eval(b, env, et)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    x / y
                }
                BinOp::Lt => truth(x < y),
                BinOp::Le => truth(x <= y),
                BinOp::Gt => truth(x > y),
                BinOp::Ge => truth(x >= y),
                BinOp::Eq => truth(x == y),
                BinOp::Ne => truth(x != y),
                BinOp::And | BinOp::Or => truth(y != 0.0),
            }
        }
    })
}

pub fn eval_bool(e: &CExpr, env: &EvalEnv, et: f64) -> Result<bool, EvalError> {
    Ok(eval(e, env, et)? != 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testlang::parse_expr;

    fn run(src: &str, vals: &[f64], et: f64) -> Result<f64, EvalError> {
        let e = parse_expr(src).unwrap();
        let c = compile(&e, &|n| match n {
            "x" => Some(Resolved::Slot(0)),
            "y" => Some(Resolved::Slot(1)),
            "P" => Some(Resolved::Param(0)),
            "LRL" => Some(Resolved::Const(60.0)),
            _ => None,
        })
        .unwrap();
        let env = EvalEnv {
            k: 3,
            dt: 0.01,
            cur: vals,
            prev: Some(&[0.0, 0.0]),
            params: &[2.5],
        };
        eval(&c, &env, et)
    }

    #[test]
    fn arithmetic_and_logic() {
        assert_eq!(run("x * 2 + y / 4 - P", &[3.0, 8.0], 0.0).unwrap(), 5.5);
        assert_eq!(run("et < 60 / LRL", &[0.0, 0.0], 0.4).unwrap(), 1.0);
        assert_eq!(run("not (x > 1 and y > 1)", &[3.0, 0.0], 0.0).unwrap(), 1.0);
        assert_eq!(run("hasChanged(x) or hasChanged(y)", &[0.0, 0.0], 0.0).unwrap(), 0.0);
        assert_eq!(run("hasChanged(y)", &[0.0, 1.0], 0.0).unwrap(), 1.0);
    }

    #[test]
    fn after_is_closed_threshold() {
        assert_eq!(run("after(40, sec)", &[0.0, 0.0], 40.0).unwrap(), 1.0);
        assert_eq!(run("after(40, sec)", &[0.0, 0.0], 39.99).unwrap(), 0.0);
        assert_eq!(run("after(P, sec)", &[0.0, 0.0], 2.5).unwrap(), 1.0);
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(run("x / y", &[1.0, 0.0], 0.0), Err(EvalError::DivisionByZero));
        // Short-circuit avoids evaluating the right operand.
        assert_eq!(run("y > 1 and x / y > 0", &[1.0, 0.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn unresolved_name() {
        let e = parse_expr("z + 1").unwrap();
        assert_eq!(
            compile(&e, &|_| None),
            Err(EvalError::Unresolved("z".into()))
        );
    }
}
