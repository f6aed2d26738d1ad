//! Independent reference implementations used as test oracles. They walk the
//! syntax tree directly and recompute everything from definitions, sharing
//! no evaluation code with the library.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::IndexedRandom;
use rand::Rng;
use testblocks::signal::{SignalKind, Value};
use testblocks::stl::StlFormula;
use testblocks::testlang::{BinOp, Expr, TestBlock, TestStep, UnOp, VerifyKind, WhenGuard};

pub const CAP: f64 = 1e9;

// ---- expressions ----

pub struct Ctx<'a> {
    pub dt: f64,
    pub value: &'a dyn Fn(&str) -> f64,
    pub changed: &'a dyn Fn(&str) -> bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivZero;

fn b2f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn eval(e: &Expr, c: &Ctx, et: f64) -> Result<f64, DivZero> {
    Ok(match e {
        Expr::Lit(v) => match v {
            Value::Real(x) => *x,
            Value::Int(i) => *i as f64,
            Value::Bool(b) => b2f(*b),
        },
        Expr::Ident(n) => (c.value)(n),
        Expr::Et => et,
        Expr::After(n) => b2f(et + c.dt * 1e-6 >= eval(n, c, et)?),
        Expr::HasChanged(n) => b2f((c.changed)(n)),
        Expr::Unary(UnOp::Neg, a) => -eval(a, c, et)?,
        Expr::Unary(UnOp::Not, a) => b2f(eval(a, c, et)? == 0.0),
        Expr::Binary(BinOp::And, a, b) => {
            if eval(a, c, et)? == 0.0 {
                0.0
            } else {
                b2f(eval(b, c, et)? != 0.0)
            }
        }
        Expr::Binary(BinOp::Or, a, b) => {
            if eval(a, c, et)? != 0.0 {
                1.0
            } else {
                b2f(eval(b, c, et)? != 0.0)
            }
        }
        Expr::Binary(op, a, b) => {
            let x = eval(a, c, et)?;
            let y = eval(b, c, et)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(DivZero);
                    }
                    x / y
                }
                BinOp::Lt => b2f(x < y),
                BinOp::Le => b2f(x <= y),
                BinOp::Gt => b2f(x > y),
                BinOp::Ge => b2f(x >= y),
                BinOp::Eq => b2f(x == y),
                BinOp::Ne => b2f(x != y),
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

pub fn truth(e: &Expr, c: &Ctx, et: f64) -> Result<bool, DivZero> {
    Ok(eval(e, c, et)? != 0.0)
}

/// Quantitative semantics, clamped to the cap.
pub fn robust(e: &Expr, c: &Ctx, et: f64) -> Result<f64, DivZero> {
    let r = match e {
        Expr::Binary(op, a, b) if matches!(op, BinOp::Lt | BinOp::Le) => eval(b, c, et)? - eval(a, c, et)?,
        Expr::Binary(op, a, b) if matches!(op, BinOp::Gt | BinOp::Ge) => eval(a, c, et)? - eval(b, c, et)?,
        Expr::Binary(BinOp::Eq, a, b) => -(eval(a, c, et)? - eval(b, c, et)?).abs(),
        Expr::Binary(BinOp::Ne, a, b) => (eval(a, c, et)? - eval(b, c, et)?).abs(),
        Expr::Binary(BinOp::And, a, b) => robust(a, c, et)?.min(robust(b, c, et)?),
        Expr::Binary(BinOp::Or, a, b) => robust(a, c, et)?.max(robust(b, c, et)?),
        Expr::Unary(UnOp::Not, a) => -robust(a, c, et)?,
        other => {
            if truth(other, c, et)? {
                CAP
            } else {
                -CAP
            }
        }
    };
    Ok(r.clamp(-CAP, CAP))
}

// ---- step hierarchy ----

/// Active path of a block, outermost first, with entry samples.
struct Path<'b> {
    block: &'b TestBlock,
    steps: Vec<(&'b TestStep, usize)>,
}

fn is_when(children: &[TestStep]) -> bool {
    children.iter().any(|c| c.when.is_some())
}

impl<'b> Path<'b> {
    fn children(&self, depth: usize) -> &'b [TestStep] {
        if depth == 0 {
            &self.block.steps
        } else {
            &self.steps[depth - 1].0.children
        }
    }

    fn transitions(&self, depth: usize) -> &'b [testblocks::testlang::Transition] {
        if depth == 0 {
            &self.block.transitions
        } else {
            &self.steps[depth - 1].0.transitions
        }
    }

    fn entry(&self, depth: usize) -> usize {
        if depth == 0 {
            0
        } else {
            self.steps[depth - 1].1
        }
    }

    fn pick(children: &'b [TestStep], c: &Ctx, et: f64) -> Result<&'b TestStep, String> {
        for s in children {
            match &s.when {
                Some(WhenGuard::Otherwise) => return Ok(s),
                Some(WhenGuard::Guard(g)) => {
                    if truth(g, c, et).map_err(|_| "division by zero")? {
                        return Ok(s);
                    }
                }
                None => {}
            }
        }
        Err("no active child".into())
    }

    fn enter_below(&mut self, k: usize, c: &Ctx) -> Result<(), String> {
        loop {
            let kids = self.children(self.steps.len());
            if kids.is_empty() {
                return Ok(());
            }
            let next = if is_when(kids) { Self::pick(kids, c, 0.0)? } else { &kids[0] };
            self.steps.push((next, k));
        }
    }

    fn tick(&mut self, k: usize, c: &Ctx) -> Result<Option<(String, String)>, String> {
        for depth in 0..self.steps.len() {
            let kids = self.children(depth);
            let active = self.steps[depth];
            let target = if is_when(kids) {
                let et = (k - self.entry(depth)) as f64 * c.dt;
                let chosen = Self::pick(kids, c, et)?;
                (chosen.name != active.0.name).then_some(chosen)
            } else {
                let et = (k - active.1) as f64 * c.dt;
                let mut hit = None;
                for t in self.transitions(depth).iter().filter(|t| t.source == active.0.name) {
                    if truth(&t.guard, c, et).map_err(|_| "division by zero")? {
                        hit = Some(kids.iter().find(|s| s.name == t.destination).expect("sibling"));
                        break;
                    }
                }
                hit
            };
            if let Some(dst) = target {
                self.steps.truncate(depth);
                self.steps.push((dst, k));
                self.enter_below(k, c)?;
                return Ok(Some((active.0.name.clone(), dst.name.clone())));
            }
        }
        Ok(None)
    }

    fn leaf_path(&self) -> String {
        self.steps.iter().map(|(s, _)| s.name.as_str()).collect::<Vec<_>>().join("/")
    }
}

/// Output values per sample (in declaration order) and the active path at
/// each sample, for a sequence run on its own.
pub type SeqRun = (Vec<Vec<f64>>, Vec<String>);

pub fn run_sequence(block: &TestBlock, params: &HashMap<String, f64>, dt: f64, n: usize) -> Result<SeqRun, String> {
    let kinds: HashMap<&str, SignalKind> = block.outputs.iter().map(|d| (d.name.as_str(), d.kind)).collect();
    let consts: HashMap<&str, f64> = block
        .consts
        .iter()
        .map(|d| (d.name.as_str(), d.value.expect("const value").as_f64()))
        .collect();
    let mut cur: HashMap<String, f64> = block.outputs.iter().map(|d| (d.name.clone(), 0.0)).collect();
    let mut prev: Option<HashMap<String, f64>> = None;
    let mut path = Path {
        block,
        steps: Vec::new(),
    };
    let mut rows = Vec::new();
    let mut leaves = Vec::new();
    for k in 0..n {
        {
            let value = |s: &str| -> f64 {
                cur.get(s)
                    .or_else(|| params.get(s))
                    .or_else(|| consts.get(s))
                    .copied()
                    .unwrap_or_else(|| panic!("unresolved {s}"))
            };
            let changed = |s: &str| prev.as_ref().is_some_and(|p| p[s] != cur[s]);
            let c = Ctx {
                dt,
                value: &value,
                changed: &changed,
            };
            if k == 0 {
                path.enter_below(0, &c)?;
            } else {
                path.tick(k, &c)?;
            }
        }
        let mut next = cur.clone();
        for &(step, entry) in &path.steps {
            let et = (k - entry) as f64 * dt;
            for a in &step.actions {
                let v = {
                    let value = |s: &str| -> f64 {
                        next.get(s)
                            .or_else(|| params.get(s))
                            .or_else(|| consts.get(s))
                            .copied()
                            .unwrap_or_else(|| panic!("unresolved {s}"))
                    };
                    let changed = |s: &str| prev.as_ref().is_some_and(|p| p[s] != next[s]);
                    let c = Ctx {
                        dt,
                        value: &value,
                        changed: &changed,
                    };
                    eval(&a.value, &c, et).map_err(|_| "division by zero".to_string())?
                };
                let v = match kinds[a.target.as_str()] {
                    SignalKind::Real => v,
                    SignalKind::Int => v.round(),
                    SignalKind::Bool => b2f(v != 0.0),
                };
                next.insert(a.target.clone(), v);
            }
        }
        if k > 0 {
            prev = Some(std::mem::replace(&mut cur, next));
        } else {
            cur = next;
        }
        rows.push(block.outputs.iter().map(|d| cur[&d.name]).collect());
        leaves.push(path.leaf_path());
    }
    Ok((rows, leaves))
}

/// Reference monitor output for an assessment over recorded inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRun {
    /// Statement ids in pre-order.
    pub ids: Vec<String>,
    pub channels: Vec<Vec<Option<f64>>>,
    pub fit_total: Vec<f64>,
    /// Some sample where the statement's boolean value was false.
    pub failed: Vec<bool>,
    pub stopped: Option<usize>,
}

/// `cols` maps input names to samples.
pub fn run_assessment(block: &TestBlock, cols: &HashMap<String, Vec<f64>>, dt: f64) -> Result<MonitorRun, String> {
    let n = cols.values().next().map_or(0, |c| c.len());
    let consts: HashMap<&str, f64> = block
        .consts
        .iter()
        .map(|d| (d.name.as_str(), d.value.expect("const value").as_f64()))
        .collect();
    let stmts: Vec<(&TestStep, &testblocks::testlang::VerificationStatement)> = block.statements();
    let mut out = MonitorRun {
        ids: stmts.iter().map(|(_, s)| s.id.clone()).collect(),
        channels: vec![Vec::new(); stmts.len()],
        fit_total: Vec::new(),
        failed: vec![false; stmts.len()],
        stopped: None,
    };
    let mut path = Path {
        block,
        steps: Vec::new(),
    };
    let mut running = CAP;
    for k in 0..n {
        let value = |s: &str| -> f64 {
            cols.get(s)
                .map(|c| c[k])
                .or_else(|| consts.get(s).copied())
                .unwrap_or_else(|| panic!("unresolved {s}"))
        };
        let changed = |s: &str| k > 0 && cols[s][k] != cols[s][k - 1];
        let c = Ctx {
            dt,
            value: &value,
            changed: &changed,
        };
        if k == 0 {
            path.enter_below(0, &c)?;
        } else {
            path.tick(k, &c)?;
        }
        let mut stop = false;
        for (i, (step, st)) in stmts.iter().enumerate() {
            let entry = path.steps.iter().find(|(s, _)| s.name == step.name).map(|(_, e)| *e);
            let v = match entry {
                None => None,
                Some(e) => {
                    let et = (k - e) as f64 * dt;
                    let r = robust(&st.body, &c, et).map_err(|_| "division by zero".to_string())?;
                    let holds = if r != 0.0 {
                        r > 0.0
                    } else {
                        truth(&st.body, &c, et).map_err(|_| "division by zero".to_string())?
                    };
                    out.failed[i] |= !holds;
                    running = running.min(r);
                    stop |= st.kind == VerifyKind::Assert && r < 0.0;
                    Some(r)
                }
            };
            out.channels[i].push(v);
        }
        out.fit_total.push(running);
        if stop {
            out.stopped = Some(k);
            break;
        }
    }
    Ok(out)
}

// ---- STL ----

/// Samples `j >= k` whose offset `(j - k)·dt` lies in `[a, b]`.
fn window(k: usize, n: usize, dt: f64, a: f64, b: f64) -> Vec<usize> {
    let tol = 1e-9 * dt;
    (k..n)
        .filter(|&j| {
            let off = (j - k) as f64 * dt;
            off >= a - tol && off <= b + tol
        })
        .collect()
}

/// Robustness and truth of `f` at sample `k`, straight from the definition.
/// `row(j)` resolves signal values at sample `j`.
pub fn stl_at(f: &StlFormula, row: &dyn Fn(usize, &str) -> f64, n: usize, dt: f64, k: usize) -> (f64, bool) {
    match f {
        StlFormula::Atom(e) => {
            let value = |s: &str| row(k, s);
            let changed = |_: &str| false;
            let c = Ctx {
                dt,
                value: &value,
                changed: &changed,
            };
            match (robust(e, &c, 0.0), truth(e, &c, 0.0)) {
                (Ok(r), Ok(h)) => (r, h),
                _ => (-CAP, false),
            }
        }
        StlFormula::Not(a) => {
            let (r, h) = stl_at(a, row, n, dt, k);
            (-r, !h)
        }
        StlFormula::And(a, b) => {
            let (x, p) = stl_at(a, row, n, dt, k);
            let (y, q) = stl_at(b, row, n, dt, k);
            (x.min(y), p && q)
        }
        StlFormula::Or(a, b) => {
            let (x, p) = stl_at(a, row, n, dt, k);
            let (y, q) = stl_at(b, row, n, dt, k);
            (x.max(y), p || q)
        }
        StlFormula::Implies(a, b) => {
            let (x, p) = stl_at(a, row, n, dt, k);
            let (y, q) = stl_at(b, row, n, dt, k);
            ((-x).max(y), !p || q)
        }
        StlFormula::Globally(i, a) => {
            let w = window(k, n, dt, i.a, i.b);
            w.iter().fold((CAP, true), |(r, h), &j| {
                let (x, p) = stl_at(a, row, n, dt, j);
                (r.min(x), h && p)
            })
        }
        StlFormula::Eventually(i, a) => {
            let w = window(k, n, dt, i.a, i.b);
            w.iter().fold((-CAP, false), |(r, h), &j| {
                let (x, p) = stl_at(a, row, n, dt, j);
                (r.max(x), h || p)
            })
        }
        StlFormula::Until(i, l, r) => {
            let w = window(k, n, dt, i.a, i.b);
            let mut best = (-CAP, false);
            for &j in &w {
                let (rj, hj) = stl_at(r, row, n, dt, j);
                let mut lmin = CAP;
                let mut lall = true;
                for m in k..j {
                    let (x, p) = stl_at(l, row, n, dt, m);
                    lmin = lmin.min(x);
                    lall &= p;
                }
                best = (best.0.max(rj.min(lmin)), best.1 || (hj && lall));
            }
            best
        }
    }
}

// ---- random artifacts ----

fn pick<'a, R: Rng>(rng: &mut R, xs: &'a [&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty")
}

fn seq_guard<R: Rng>(rng: &mut R, depth: u32) -> String {
    if depth < 1 && rng.random_bool(0.2) {
        let op = if rng.random_bool(0.5) { "and" } else { "or" };
        return format!("({}) {op} ({})", seq_guard(rng, depth + 1), seq_guard(rng, depth + 1));
    }
    match rng.random_range(0..11) {
        0 => format!("after({}, sec)", pick(rng, &["0", "0.1", "0.2", "0.3", "0.5", "0.25"])),
        1 => "after(Hecate_P, sec)".into(),
        2 => format!("et >= {}", pick(rng, &["0", "0.2", "0.4"])),
        3 => format!("x > {}", pick(rng, &["0", "0.5", "1", "2.5"])),
        4 => format!("n == {}", rng.random_range(0..4)),
        5 => format!("n ~= {}", rng.random_range(0..4)),
        6 => "b".into(),
        7 => "not b".into(),
        8 => format!("hasChanged({})", pick(rng, &["n", "b", "x"])),
        9 => pick(rng, &["true", "false"]).into(),
        _ => format!("x + n * 0.5 <= {}", pick(rng, &["1", "2", "3"])),
    }
}

fn seq_action<R: Rng>(rng: &mut R) -> String {
    match rng.random_range(0..10) {
        0 => format!("x = x + {};", pick(rng, &["0.1", "0.5", "1"])),
        1 => format!("x = et * {};", pick(rng, &["1", "2", "0.5"])),
        2 => "x = Hecate_P;".into(),
        3 => "n = n + 1;".into(),
        4 => format!("n = {};", rng.random_range(0..4)),
        5 => "b = not b;".into(),
        6 => format!("b = x > {};", pick(rng, &["0.5", "1"])),
        7 => "x = x / (n - 2);".into(),
        8 => "b = hasChanged(n);".into(),
        _ => format!("n = x * {};", pick(rng, &["1", "1.5"])),
    }
}

fn when_guard<R: Rng>(rng: &mut R) -> String {
    match rng.random_range(0..5) {
        0 => format!("x > {}", pick(rng, &["0", "0.5", "1"])),
        1 => format!("n == {}", rng.random_range(0..4)),
        2 => "b".into(),
        3 => format!("et >= {}", pick(rng, &["0.2", "0.5"])),
        _ => format!("u < {}", pick(rng, &["0", "0.5"])),
    }
}

fn transitions<R: Rng>(rng: &mut R, names: &[String], guard: &mut dyn FnMut(&mut R) -> String) -> String {
    let mut s = String::new();
    if names.len() < 2 {
        return s;
    }
    for _ in 0..rng.random_range(0..=4) {
        let a = names.choose(rng).unwrap();
        let b = names.choose(rng).unwrap();
        s.push_str(&format!("trans {a} -> {b} when {};\n", guard(rng)));
    }
    s
}

/// Hierarchy shared by the random sequence and assessment generators:
/// root steps with up to one level of sequential or when-decomposed
/// children.
fn random_steps<R: Rng>(
    rng: &mut R,
    body: &mut dyn FnMut(&mut R, &str) -> String,
    guard: &mut dyn FnMut(&mut R) -> String,
    when: &mut dyn FnMut(&mut R) -> String,
) -> String {
    let mut counter = 0;
    let mut src = String::new();
    let roots: Vec<String> = (0..rng.random_range(1..=3))
        .map(|_| {
            counter += 1;
            format!("S{counter}")
        })
        .collect();
    for r in &roots {
        src.push_str(&format!("step {r} {{\n{}", body(rng, r)));
        let nkids = rng.random_range(0..=3);
        let when_mode = nkids > 0 && rng.random_bool(0.35);
        let kids: Vec<String> = (0..nkids)
            .map(|_| {
                counter += 1;
                format!("S{counter}")
            })
            .collect();
        for (i, c) in kids.iter().enumerate() {
            let head = if !when_mode {
                String::new()
            } else if i + 1 == kids.len() && rng.random_bool(0.7) {
                " otherwise".into()
            } else {
                format!(" when {}", when(rng))
            };
            src.push_str(&format!("step {c}{head} {{\n{}}}\n", body(rng, c)));
        }
        if !when_mode {
            src.push_str(&transitions(rng, &kids, guard));
        }
        src.push_str("}\n");
    }
    src.push_str(&transitions(rng, &roots, guard));
    src
}

/// Random closed-form sequence text over outputs `x: real`, `n: int`,
/// `b: bool`, with parameter `Hecate_P` in [0, 1] and a constant `u`.
pub fn random_sequence<R: Rng>(rng: &mut R) -> String {
    let steps = random_steps(
        rng,
        &mut |rng, _| (0..rng.random_range(0..=2)).map(|_| format!("{}\n", seq_action(rng))).collect(),
        &mut |rng| seq_guard(rng, 0),
        &mut |rng| when_guard(rng),
    );
    format!(
        "sequence R {{\noutputs {{ x: real; n: int; b: bool; }}\nconsts {{ u: real = 0.25; }}\n\
         params {{ Hecate_P: real in [0, 1]; }}\n{steps}}}\n"
    )
}

fn predicate<R: Rng>(rng: &mut R, depth: u32) -> String {
    if depth < 2 && rng.random_bool(0.3) {
        let op = pick(rng, &["and", "or"]);
        return format!("({}) {op} ({})", predicate(rng, depth + 1), predicate(rng, depth + 1));
    }
    if depth < 2 && rng.random_bool(0.1) {
        return format!("not ({})", predicate(rng, depth + 1));
    }
    let lhs = pick(rng, &["p", "q", "p - q", "m", "2 * p", "et"]);
    let op = pick(rng, &["<", "<=", ">", ">=", "==", "~="]);
    let rhs = match rng.random_range(0..4) {
        0 => "q".to_string(),
        1 => format!("{}", rng.random_range(-2..=2)),
        _ => format!("{:.2}", rng.random_range(-1.5..1.5)),
    };
    match rng.random_range(0..12) {
        0 => "hasChanged(m)".into(),
        1 => "after(0.5, sec)".into(),
        _ => format!("{lhs} {op} {rhs}"),
    }
}

/// Random assessment text over inputs `p: real`, `q: real`, `m: int`.
pub fn random_assessment<R: Rng>(rng: &mut R) -> String {
    let mut id = 0;
    let steps = random_steps(
        rng,
        &mut |rng, _| {
            let mut s = String::new();
            for _ in 0..rng.random_range(0..=2) {
                id += 1;
                let kw = if rng.random_bool(0.15) { "assert" } else { "verify" };
                s.push_str(&format!("{kw}({}) as V{id};\n", predicate(rng, 0)));
            }
            s
        },
        &mut |rng| match rng.random_range(0..5) {
            0 => format!("after({}, sec)", pick(rng, &["0.2", "0.5", "1"])),
            1 => format!("p > {:.1}", rng.random_range(-1.0..1.0)),
            2 => format!("m == {}", rng.random_range(0..3)),
            3 => "hasChanged(m)".into(),
            _ => format!("et >= {}", pick(rng, &["0.3", "0.6"])),
        },
        &mut |rng| match rng.random_range(0..3) {
            0 => format!("m == {}", rng.random_range(0..3)),
            1 => format!("p < {:.1}", rng.random_range(-1.0..1.0)),
            _ => format!("q >= {:.1}", rng.random_range(-1.0..1.0)),
        },
    );
    format!("assessment A {{\ninputs {{ p: real; q: real; m: int; }}\n{steps}}}\n")
}

/// Random input columns for [`random_assessment`]. Values are drawn on a
/// coarse grid so that ties and exact-zero robustness occur.
pub fn random_inputs<R: Rng>(rng: &mut R, n: usize) -> HashMap<String, Vec<f64>> {
    let real = |rng: &mut R| {
        if rng.random_bool(0.3) {
            f64::from(rng.random_range(-4..=4)) * 0.5
        } else {
            rng.random_range(-2.0..2.0)
        }
    };
    let p: Vec<f64> = (0..n).map(|_| real(rng)).collect();
    let q: Vec<f64> = (0..n).map(|_| real(rng)).collect();
    let mut m = Vec::with_capacity(n);
    let mut cur = rng.random_range(0..3);
    for _ in 0..n {
        if rng.random_bool(0.2) {
            cur = rng.random_range(0..3);
        }
        m.push(f64::from(cur));
    }
    HashMap::from([("p".into(), p), ("q".into(), q), ("m".into(), m)])
}

fn stl_atom<R: Rng>(rng: &mut R) -> StlFormula {
    let src = match rng.random_range(0..7) {
        0 => format!("x < {}", rng.random_range(-2..=2)),
        1 => format!("x >= y + {}", rng.random_range(-1..=1)),
        2 => format!("y > {:.1}", rng.random_range(-1.0..1.0)),
        3 => "b".into(),
        4 => format!("m == {}", rng.random_range(0..3)),
        5 => "x - y <= 0".into(),
        _ => "m ~= 1".into(),
    };
    StlFormula::atom(&src).expect("atom parses")
}

fn interval<R: Rng>(rng: &mut R, dt: f64) -> (f64, f64) {
    let a = rng.random_range(0..=4) as f64 * dt;
    let b = a + rng.random_range(0..=5) as f64 * dt;
    (a, b)
}

/// Random bounded formula of nesting depth at most `depth`.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize, dt: f64) -> StlFormula {
    if depth == 0 || rng.random_bool(0.2) {
        return stl_atom(rng);
    }
    let d = depth - 1;
    match rng.random_range(0..7) {
        0 => StlFormula::not(random_formula(rng, d, dt)),
        1 => StlFormula::and(random_formula(rng, d, dt), random_formula(rng, d, dt)),
        2 => StlFormula::or(random_formula(rng, d, dt), random_formula(rng, d, dt)),
        3 => StlFormula::implies(random_formula(rng, d, dt), random_formula(rng, d, dt)),
        4 => {
            let (a, b) = interval(rng, dt);
            StlFormula::globally(a, b, random_formula(rng, d, dt))
        }
        5 => {
            let (a, b) = interval(rng, dt);
            StlFormula::eventually(a, b, random_formula(rng, d, dt))
        }
        _ => {
            let (a, b) = interval(rng, dt);
            StlFormula::until(a, b, random_formula(rng, d, dt), random_formula(rng, d, dt))
        }
    }
}
