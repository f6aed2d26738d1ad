//! Quantitative monitors compiled from test assessments.
//!
//! Every `verify`/`assert` statement gets a robustness channel that is
//! `None` (untested) while its step is inactive. `FIT_TOTAL` is the running
//! minimum over all tested channel values, `+CAP` until something is tested.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::signal::{SignalKind, Trace};
use crate::stepmachine::{
    eval, eval_bool, CExpr, EvalEnv, EvalError, Program, StepError, StepMachine,
};
use crate::testlang::{validate, BinOp, BlockKind, Diagnostic, TestBlock, VerifyKind};

/// Stand-in for infinity in robustness values.
pub const ROBUSTNESS_CAP: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitnessError {
    #[error("assessment is invalid: {}", join(.0))]
    ValidationFailed(Vec<Diagnostic>),
    #[error("expected an assessment block")]
    NotAnAssessment,
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("signal `{0}` read by the assessment is missing")]
    MissingSignal(String),
}

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; ")
}

impl From<EvalError> for FitnessError {
    fn from(e: EvalError) -> Self {
        FitnessError::Step(e.into())
    }
}

fn clamp(v: f64) -> f64 {
    v.clamp(-ROBUSTNESS_CAP, ROBUSTNESS_CAP)
}

fn bool_atom(b: bool) -> f64 {
    if b {
        ROBUSTNESS_CAP
    } else {
        -ROBUSTNESS_CAP
    }
}

/// Robustness of a boolean expression: positive when satisfied, negative
/// when violated, magnitude the margin.
pub fn robustness(e: &CExpr, env: &EvalEnv, et: f64) -> Result<f64, EvalError> {
    let r = match e {
        CExpr::Bin(op, a, b) if op.is_relational() => {
            let x = eval(a, env, et)?;
            let y = eval(b, env, et)?;
            match op {
                BinOp::Lt | BinOp::Le => y - x,
                BinOp::Gt | BinOp::Ge => x - y,
                BinOp::Eq => -(x - y).abs(),
                _ => (x - y).abs(),
            }
        }
        CExpr::Bin(BinOp::And, a, b) => robustness(a, env, et)?.min(robustness(b, env, et)?),
        CExpr::Bin(BinOp::Or, a, b) => robustness(a, env, et)?.max(robustness(b, env, et)?),
        CExpr::Not(a) => -robustness(a, env, et)?,
        atom => bool_atom(eval_bool(atom, env, et)?),
    };
    Ok(clamp(r))
}

/// Verdict of one sample: robustness 0 is settled by the boolean value.
pub fn holds(e: &CExpr, env: &EvalEnv, et: f64, rob: f64) -> Result<bool, EvalError> {
    if rob > 0.0 {
        Ok(true)
    } else if rob < 0.0 {
        Ok(false)
    } else {
        eval_bool(e, env, et)
    }
}

/// An assessment compiled for monitoring. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct CompiledAssessment {
    prog: Arc<Program>,
}

pub fn compile(assessment: &TestBlock) -> Result<CompiledAssessment, FitnessError> {
    if assessment.kind != BlockKind::Assessment {
        return Err(FitnessError::NotAnAssessment);
    }
    let diags = validate(assessment);
    if !diags.is_empty() {
        return Err(FitnessError::ValidationFailed(diags));
    }
    Ok(CompiledAssessment {
        prog: Arc::new(Program::compile(assessment)?),
    })
}

impl CompiledAssessment {
    /// Signals the assessment reads, in the order `observe` expects them.
    pub fn inputs(&self) -> &[(String, SignalKind)] {
        self.prog.inputs()
    }

    /// Channel names `FIT_<statement id>` in statement order.
    pub fn channel_names(&self) -> Vec<String> {
        self.prog
            .statements()
            .iter()
            .map(|s| format!("FIT_{}", s.id))
            .collect()
    }

    pub fn statement_ids(&self) -> Vec<&str> {
        self.prog.statements().iter().map(|s| s.id.as_str()).collect()
    }

    pub fn monitor(&self, dt: f64) -> FitnessMonitor {
        let n = self.prog.statements().len();
        FitnessMonitor {
            machine: StepMachine::new(self.prog.clone()),
            dt,
            k: 0,
            prev: None,
            channels: vec![Vec::new(); n],
            tested: vec![false; n],
            failed: vec![false; n],
            fit_total: Vec::new(),
            running: ROBUSTNESS_CAP,
            stopped: None,
            boundary: false,
        }
    }

    /// Monitors a complete trace, stopping at the first violated assert.
    pub fn evaluate(&self, trace: &Trace) -> Result<(FitnessMonitor, Verdict), FitnessError> {
        let mut m = self.monitor(trace.grid().dt());
        let cols = self
            .inputs()
            .iter()
            .map(|(n, _)| {
                trace
                    .signal(n)
                    .map(|s| s.to_f64())
                    .ok_or_else(|| FitnessError::MissingSignal(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut row = vec![0.0; cols.len()];
        for k in 0..trace.grid().n_samples() {
            for (r, c) in row.iter_mut().zip(&cols) {
                *r = c[k];
            }
            if m.observe(&row)?.stop {
                break;
            }
        }
        let v = m.finalize();
        Ok((m, v))
    }
}

/// Channel values and aggregate at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub channels: Vec<Option<f64>>,
    pub fit_total: f64,
    pub stop: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Pass,
    Fail,
    Untested,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Untested => "untested",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub statements: Vec<(String, Status)>,
    pub overall: Status,
    /// Last value of `FIT_TOTAL`.
    pub fitness: f64,
}

/// Single-run monitor state.
#[derive(Debug, Clone)]
pub struct FitnessMonitor {
    machine: StepMachine,
    dt: f64,
    k: usize,
    prev: Option<Vec<f64>>,
    channels: Vec<Vec<Option<f64>>>,
    tested: Vec<bool>,
    failed: Vec<bool>,
    fit_total: Vec<f64>,
    running: f64,
    stopped: Option<usize>,
    boundary: bool,
}

impl FitnessMonitor {
    /// Advances one sample. `values` holds the assessment inputs at this
    /// sample, in [`CompiledAssessment::inputs`] order.
    pub fn observe(&mut self, values: &[f64]) -> Result<Observation, FitnessError> {
        let k = self.k;
        let params: [f64; 0] = [];
        let env = EvalEnv {
            k,
            dt: self.dt,
            cur: values,
            prev: self.prev.as_deref(),
            params: &params,
        };
        if k == 0 {
            self.machine.init(&env)?;
        } else {
            self.machine.tick(&env)?;
        }
        let prog = self.machine.program().clone();
        let mut stop = false;
        let mut out = Vec::with_capacity(self.channels.len());
        for (i, st) in prog.statements().iter().enumerate() {
            let value = match self.machine.elapsed(st.node(), k, self.dt) {
                None => None,
                Some(et) => {
                    let r = robustness(&st.body, &env, et)?;
                    if !holds(&st.body, &env, et, r)? {
                        self.failed[i] = true;
                        if r == 0.0 {
                            self.boundary = true;
                        }
                    }
                    self.tested[i] = true;
                    self.running = self.running.min(r);
                    if st.kind == VerifyKind::Assert && r < 0.0 {
                        stop = true;
                    }
                    Some(r)
                }
            };
            self.channels[i].push(value);
            out.push(value);
        }
        self.fit_total.push(self.running);
        if stop {
            self.stopped = Some(k);
        }
        self.prev = Some(values.to_vec());
        self.k += 1;
        Ok(Observation {
            channels: out,
            fit_total: self.running,
            stop,
        })
    }

    /// Reads the assessment inputs at sample `k` from a trace and observes
    /// them. Samples must be fed in order starting at 0.
    pub fn observe_trace(&mut self, trace: &Trace, k: usize) -> Result<Observation, FitnessError> {
        let prog = self.machine.program().clone();
        let row = prog
            .inputs()
            .iter()
            .map(|(n, _)| {
                trace
                    .sample_at(n, k)
                    .map(|v| v.as_f64())
                    .map_err(|_| FitnessError::MissingSignal(n.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.observe(&row)
    }

    pub fn samples_observed(&self) -> usize {
        self.k
    }

    /// Sample at which an assert stopped the run.
    pub fn stopped_at(&self) -> Option<usize> {
        self.stopped
    }

    /// Whether some statement failed with robustness exactly 0.
    pub fn hit_boundary(&self) -> bool {
        self.boundary
    }

    pub fn channel(&self, i: usize) -> &[Option<f64>] {
        &self.channels[i]
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn fit_total(&self) -> &[f64] {
        &self.fit_total
    }

    pub fn finalize(&self) -> Verdict {
        let prog = self.machine.program();
        let statements: Vec<(String, Status)> = prog
            .statements()
            .iter()
            .enumerate()
            .map(|(i, st)| {
                let s = if self.failed[i] {
                    Status::Fail
                } else if self.tested[i] {
                    Status::Pass
                } else {
                    Status::Untested
                };
                (st.id.clone(), s)
            })
            .collect();
        let overall = if statements.iter().any(|(_, s)| *s == Status::Fail) {
            Status::Fail
        } else if statements.iter().any(|(_, s)| *s == Status::Pass) {
            Status::Pass
        } else {
            Status::Untested
        };
        Verdict {
            statements,
            overall,
            fitness: self.fit_total.last().copied().unwrap_or(ROBUSTNESS_CAP),
        }
    }

    /// Channels and `FIT_TOTAL` in the trace text layout, untested as `NA`.
    pub fn channel_dump(&self) -> String {
        let prog = self.machine.program();
        let mut s = format!("# dt={} n={}\ntime", self.dt, self.k);
        for st in prog.statements() {
            let _ = write!(s, "\tFIT_{}:real", st.id);
        }
        s.push_str("\tFIT_TOTAL:real\n");
        for k in 0..self.k {
            let _ = write!(s, "{}", k as f64 * self.dt);
            for c in &self.channels {
                match c[k] {
                    Some(v) => {
                        let _ = write!(s, "\t{v}");
                    }
                    None => s.push_str("\tNA"),
                }
            }
            let _ = writeln!(s, "\t{}", self.fit_total[k]);
        }
        s
    }
}
