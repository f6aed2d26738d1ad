use std::collections::VecDeque;

use crate::fitness::{robustness, ROBUSTNESS_CAP};
use crate::signal::{SignalKind, Trace};
use crate::stepmachine::{compile_expr, eval_bool, CExpr, EvalEnv, Resolved};
use crate::testlang::{type_of, Expr, SymbolTable, Ty};

use super::{StlError, StlFormula};

/// Robustness and boolean verdict at time 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StlVerdictReport {
    pub robustness: f64,
    pub verdict: bool,
}

/// Robustness and satisfaction of a formula at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StlSignal {
    pub robustness: Vec<f64>,
    pub holds: Vec<bool>,
}

/// Formula with atoms resolved against a fixed signal layout.
#[derive(Debug, Clone)]
pub struct StlMonitor {
    formula: StlFormula,
    atoms: Vec<CExpr>,
    names: Vec<String>,
}

impl StlMonitor {
    /// Resolves and type-checks atoms against `signals`.
    pub fn new(formula: &StlFormula, signals: &[(String, SignalKind)]) -> Result<Self, StlError> {
        let table = SymbolTable::for_signals(signals.iter().map(|(n, k)| (n.as_str(), *k)));
        let mut atoms = Vec::new();
        for e in formula.atoms() {
            let mut unknown = None;
            e.visit_idents(&mut |n| {
                if unknown.is_none() && !signals.iter().any(|(s, _)| s == n) {
                    unknown = Some(n.to_string());
                }
            });
            if let Some(n) = unknown {
                return Err(StlError::UnknownSignal(n));
            }
            match type_of(e, &table) {
                Ok(Ty::Bool) => {}
                Ok(t) => {
                    return Err(StlError::TypeError(format!(
                        "predicate `{}` has type {t:?}, expected a boolean",
                        crate::testlang::print::expr(e)
                    )))
                }
                Err(d) => return Err(StlError::TypeError(d.message)),
            }
            atoms.push(resolve(e, signals)?);
        }
        Ok(Self {
            formula: formula.clone(),
            atoms,
            names: signals.iter().map(|(n, _)| n.clone()).collect(),
        })
    }

    pub fn for_trace(formula: &StlFormula, trace: &Trace) -> Result<Self, StlError> {
        let signals: Vec<_> = trace
            .signals()
            .iter()
            .map(|s| (s.name().to_string(), s.kind()))
            .collect();
        Self::new(formula, &signals)
    }

    pub fn formula(&self) -> &StlFormula {
        &self.formula
    }

    /// Checks that every interval fits into `n` samples of step `dt`.
    pub fn check_horizon(&self, dt: f64, n: usize) -> Result<(), StlError> {
        let h = self.formula.horizon(dt);
        if h + 1 > n {
            return Err(StlError::IntervalOutOfRange {
                horizon: h as f64 * dt,
                duration: (n - 1) as f64 * dt,
            });
        }
        Ok(())
    }

    /// Signal-layout columns for a trace, in the order given at construction.
    fn columns(&self, trace: &Trace) -> Result<Vec<Vec<f64>>, StlError> {
        self.names
            .iter()
            .map(|n| {
                trace
                    .signal(n)
                    .map(|s| s.to_f64())
                    .ok_or_else(|| StlError::UnknownSignal(n.clone()))
            })
            .collect()
    }

    pub fn signal(&self, trace: &Trace) -> Result<StlSignal, StlError> {
        let dt = trace.grid().dt();
        let n = trace.grid().n_samples();
        let cols = self.columns(trace)?;
        let mut rows = vec![vec![0.0; cols.len()]; n];
        for (j, c) in cols.iter().enumerate() {
            for (k, v) in c.iter().enumerate() {
                rows[k][j] = *v;
            }
        }
        let mut next_atom = 0;
        Ok(self.eval(&self.formula, &rows, dt, &mut next_atom))
    }

    /// Robustness at time 0; fails when an interval reaches past the end of
    /// the trace.
    pub fn evaluate(&self, trace: &Trace) -> Result<StlVerdictReport, StlError> {
        self.check_horizon(trace.grid().dt(), trace.grid().n_samples())?;
        let s = self.signal(trace)?;
        Ok(StlVerdictReport {
            robustness: s.robustness[0],
            verdict: s.holds[0],
        })
    }

    fn eval(&self, f: &StlFormula, rows: &[Vec<f64>], dt: f64, next_atom: &mut usize) -> StlSignal {
        let n = rows.len();
        match f {
            StlFormula::Atom(_) => {
                let e = &self.atoms[*next_atom];
                *next_atom += 1;
                let mut out = StlSignal {
                    robustness: Vec::with_capacity(n),
                    holds: Vec::with_capacity(n),
                };
                for (k, row) in rows.iter().enumerate() {
                    let env = EvalEnv {
                        k,
                        dt,
                        cur: row,
                        prev: None,
                        params: &[],
                    };
                    // A division by zero counts as a violation.
                    let r = robustness(e, &env, 0.0).unwrap_or(-ROBUSTNESS_CAP);
                    let h = eval_bool(e, &env, 0.0).unwrap_or(false);
                    out.robustness.push(r);
                    out.holds.push(h);
                }
                out
            }
            StlFormula::Not(a) => {
                let s = self.eval(a, rows, dt, next_atom);
                StlSignal {
                    robustness: s.robustness.iter().map(|r| -r).collect(),
                    holds: s.holds.iter().map(|h| !h).collect(),
                }
            }
            StlFormula::And(a, b) => {
                let (x, y) = (self.eval(a, rows, dt, next_atom), self.eval(b, rows, dt, next_atom));
                zip(x, y, f64::min, |p, q| p && q)
            }
            StlFormula::Or(a, b) => {
                let (x, y) = (self.eval(a, rows, dt, next_atom), self.eval(b, rows, dt, next_atom));
                zip(x, y, f64::max, |p, q| p || q)
            }
            StlFormula::Implies(a, b) => {
                let (x, y) = (self.eval(a, rows, dt, next_atom), self.eval(b, rows, dt, next_atom));
                zip(x, y, |p, q| (-p).max(q), |p, q| !p || q)
            }
            StlFormula::Globally(i, a) => {
                let s = self.eval(a, rows, dt, next_atom);
                let (lo, hi) = i.samples(dt);
                StlSignal {
                    robustness: sliding(&s.robustness, lo, hi, true),
                    holds: window_all(&s.holds, lo, hi, true),
                }
            }
            StlFormula::Eventually(i, a) => {
                let s = self.eval(a, rows, dt, next_atom);
                let (lo, hi) = i.samples(dt);
                StlSignal {
                    robustness: sliding(&s.robustness, lo, hi, false),
                    holds: window_all(&s.holds, lo, hi, false),
                }
            }
            StlFormula::Until(i, a, b) => {
                let l = self.eval(a, rows, dt, next_atom);
                let r = self.eval(b, rows, dt, next_atom);
                let (lo, hi) = i.samples(dt);
                until(&l, &r, lo, hi)
            }
        }
    }
}

fn resolve(e: &Expr, signals: &[(String, SignalKind)]) -> Result<CExpr, StlError> {
    compile_expr(e, &|n| {
        signals
            .iter()
            .position(|(s, _)| s == n)
            .map(Resolved::Slot)
    })
    .map_err(|err| StlError::TypeError(err.to_string()))
}

fn zip(
    x: StlSignal,
    y: StlSignal,
    r: impl Fn(f64, f64) -> f64,
    h: impl Fn(bool, bool) -> bool,
) -> StlSignal {
    StlSignal {
        robustness: x.robustness.iter().zip(&y.robustness).map(|(a, b)| r(*a, *b)).collect(),
        holds: x.holds.iter().zip(&y.holds).map(|(a, b)| h(*a, *b)).collect(),
    }
}

/// `out[k]` = min (or max) of `x` over `[k+lo, k+hi]` clipped to the trace.
/// An empty window yields the identity of the aggregate.
fn sliding(x: &[f64], lo: usize, hi: usize, min: bool) -> Vec<f64> {
    let n = x.len();
    let better = |a: f64, b: f64| if min { a <= b } else { a >= b };
    let empty = if min { ROBUSTNESS_CAP } else { -ROBUSTNESS_CAP };
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for k in 0..n {
        let start = k + lo;
        let end = (k + hi).min(n - 1);
        if start > n - 1 {
            out.push(empty);
            continue;
        }
        while next <= end {
            while dq.back().is_some_and(|&j| better(x[next], x[j])) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&j| j < start) {
            dq.pop_front();
        }
        out.push(x[*dq.front().expect("window is not empty")]);
    }
    out
}

/// `out[k]` = all (or any) of `x` over `[k+lo, k+hi]` clipped to the trace.
fn window_all(x: &[bool], lo: usize, hi: usize, all: bool) -> Vec<bool> {
    let n = x.len();
    let mut prefix = vec![0usize; n + 1];
    for (k, &v) in x.iter().enumerate() {
        prefix[k + 1] = prefix[k] + usize::from(v != all);
    }
    (0..n)
        .map(|k| {
            let start = k + lo;
            if start > n - 1 {
                return all;
            }
            let end = (k + hi).min(n - 1);
            let off = prefix[end + 1] - prefix[start];
            if all {
                off == 0
            } else {
                off > 0
            }
        })
        .collect()
}

fn until(l: &StlSignal, r: &StlSignal, lo: usize, hi: usize) -> StlSignal {
    let n = l.robustness.len();
    let mut out = StlSignal {
        robustness: Vec::with_capacity(n),
        holds: Vec::with_capacity(n),
    };
    for k in 0..n {
        let mut best = -ROBUSTNESS_CAP;
        let mut found = false;
        let mut left_min = ROBUSTNESS_CAP;
        let mut left_all = true;
        let end = (k + hi).min(n - 1);
        for j in k..=end {
            if j >= k + lo {
                best = best.max(r.robustness[j].min(left_min));
                found |= r.holds[j] && left_all;
            }
            left_min = left_min.min(l.robustness[j]);
            left_all &= l.holds[j];
        }
        out.robustness.push(best);
        out.holds.push(found);
    }
    out
}
