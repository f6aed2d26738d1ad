//! Fixed-step co-simulation of a test sequence, a model and an optional
//! assessment monitor.
//!
//! Per sample `k` the sequence emits the model inputs, the model computes its
//! outputs from its state and those inputs, the monitor observes both, and
//! the model state advances by one forward-Euler step.

use std::collections::HashMap;
use std::sync::Arc;

use crate::fitness::{CompiledAssessment, FitnessError, FitnessMonitor, Verdict};
use crate::signal::{Samples, Signal, SignalKind, TimeGrid, Trace};
use crate::stepmachine::{push_value, Program, SequenceRunner, StepError};
use crate::testlang::{BlockKind, TestBlock};

pub mod models;

pub use models::{registry, Bundle};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("signal mismatch: {0}")]
    SignalMismatch(String),
    #[error("model `{model}` produced a non-finite value at t={time}")]
    NumericError { model: String, time: f64 },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

/// One simulated system. `step` maps the state and the inputs at a sample to
/// the outputs at that sample and advances the state by `dt`.
pub trait Model: Send {
    fn step(&mut self, inputs: &[f64], dt: f64, outputs: &mut [f64]);
    fn state(&self) -> &[f64];
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub inputs: Vec<(String, SignalKind)>,
    pub outputs: Vec<(String, SignalKind)>,
    pub dt: f64,
    pub duration: f64,
    pub fault_enabled: bool,
    pub initial_state: Vec<f64>,
    pub factory: fn(&ModelSpec) -> Box<dyn Model>,
}

impl ModelSpec {
    pub fn grid(&self) -> TimeGrid {
        TimeGrid::with_duration(self.dt, self.duration).expect("model declares a valid grid")
    }

    pub fn build(&self) -> Box<dyn Model> {
        (self.factory)(self)
    }

    pub fn with_fault(mut self, enabled: bool) -> Self {
        self.fault_enabled = enabled;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_initial_state(mut self, state: Vec<f64>) -> Self {
        self.initial_state = state;
        self
    }
}

/// Traces and verdict of one run. Traces are cut at the sample where an
/// assert stopped the run.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub inputs: Trace,
    pub outputs: Trace,
    pub monitor: Option<FitnessMonitor>,
    pub verdict: Option<Verdict>,
}

impl SimRun {
    pub fn combined(&self) -> Trace {
        self.inputs
            .merge(&self.outputs)
            .expect("input and output names are disjoint")
    }
}

#[derive(Debug, Clone, Copy)]
enum Src {
    Driver(usize),
    Model(usize),
}

/// A sequence (or input trace) wired to a model and an optional assessment,
/// checked once and run many times.
#[derive(Clone)]
pub struct Harness {
    spec: ModelSpec,
    driver: Vec<(String, SignalKind)>,
    seq: Option<Arc<Program>>,
    /// For each model input, the driver slot feeding it.
    model_in: Vec<usize>,
    assessment: Option<(CompiledAssessment, Vec<Src>)>,
}

fn kinds_compatible(from: SignalKind, to: SignalKind) -> bool {
    from == to || (to == SignalKind::Real && from != SignalKind::Bool)
}

impl Harness {
    /// Wires a test sequence to the model. Sequence outputs must cover the
    /// model inputs.
    pub fn new(
        spec: &ModelSpec,
        sequence: &TestBlock,
        assessment: Option<&CompiledAssessment>,
    ) -> Result<Self, SimError> {
        if sequence.kind != BlockKind::Sequence {
            return Err(StepError::WrongBlockKind {
                expected: "sequence",
            }
            .into());
        }
        let prog = Arc::new(Program::compile(sequence)?);
        let driver = prog.outputs().to_vec();
        let offset = prog.inputs().len();
        let mut h = Self::wire(spec, driver, assessment)?;
        for i in &mut h.model_in {
            *i += offset;
        }
        h.seq = Some(prog);
        Ok(h)
    }

    /// Wires recorded input signals to the model.
    pub fn for_inputs(
        spec: &ModelSpec,
        signals: &[(String, SignalKind)],
        assessment: Option<&CompiledAssessment>,
    ) -> Result<Self, SimError> {
        Self::wire(spec, signals.to_vec(), assessment)
    }

    fn wire(
        spec: &ModelSpec,
        driver: Vec<(String, SignalKind)>,
        assessment: Option<&CompiledAssessment>,
    ) -> Result<Self, SimError> {
        let mut model_in = Vec::new();
        for (name, kind) in &spec.inputs {
            match driver.iter().position(|(n, _)| n == name) {
                Some(i) if kinds_compatible(driver[i].1, *kind) => model_in.push(i),
                Some(i) => {
                    return Err(SimError::SignalMismatch(format!(
                        "model input `{name}` is {kind} but the driver provides {}",
                        driver[i].1
                    )))
                }
                None => {
                    return Err(SimError::SignalMismatch(format!(
                        "model `{}` input `{name}` is not provided",
                        spec.name
                    )))
                }
            }
        }
        for (name, _) in &driver {
            if spec.outputs.iter().any(|(n, _)| n == name) {
                return Err(SimError::SignalMismatch(format!(
                    "`{name}` is both driven and a model output"
                )));
            }
        }
        let assessment = match assessment {
            None => None,
            Some(a) => {
                let mut srcs = Vec::new();
                for (name, _) in a.inputs() {
                    let src = if let Some(i) = driver.iter().position(|(n, _)| n == name) {
                        Src::Driver(i)
                    } else if let Some(i) = spec.outputs.iter().position(|(n, _)| n == name) {
                        Src::Model(i)
                    } else {
                        return Err(SimError::SignalMismatch(format!(
                            "assessment reads `{name}`, which is neither driven nor a model output"
                        )));
                    };
                    srcs.push(src);
                }
                Some((a.clone(), srcs))
            }
        };
        Ok(Self {
            spec: spec.clone(),
            driver,
            seq: None,
            model_in,
            assessment,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn sequence(&self) -> Option<&Arc<Program>> {
        self.seq.as_ref()
    }

    /// Runs the sequence with parameter values in declaration order.
    pub fn run(&self, params: &[f64]) -> Result<SimRun, SimError> {
        let prog = self
            .seq
            .clone()
            .expect("harness was built from a sequence");
        let mut runner = SequenceRunner::new(prog, params.to_vec(), self.spec.dt)?;
        self.drive(|_, out| {
            out.copy_from_slice(runner.step()?);
            Ok(())
        })
    }

    /// Like [`Harness::run`], writing one step-machine line per sample to
    /// `log`.
    pub fn run_logged(&self, params: &[f64], log: &mut dyn std::io::Write) -> Result<SimRun, SimError> {
        let prog = self
            .seq
            .clone()
            .expect("harness was built from a sequence");
        let mut runner = SequenceRunner::new(prog, params.to_vec(), self.spec.dt)?;
        self.drive(|_, out| {
            out.copy_from_slice(runner.step()?);
            // Logging is best effort; a broken sink does not stop the run.
            let _ = writeln!(log, "{}", runner.debug_line());
            Ok(())
        })
    }

    /// Runs the sequence with named parameter values checked against their
    /// domains.
    pub fn run_named(&self, params: &HashMap<String, f64>) -> Result<SimRun, SimError> {
        let pv = self
            .seq
            .as_ref()
            .expect("harness was built from a sequence")
            .param_vector(params)?;
        self.run(&pv)
    }

    /// Runs the model on a recorded input trace covering the driver signals.
    pub fn run_inputs(&self, inputs: &Trace) -> Result<SimRun, SimError> {
        let cols = self
            .driver
            .iter()
            .map(|(n, _)| {
                inputs
                    .signal(n)
                    .map(|s| s.to_f64())
                    .ok_or_else(|| SimError::SignalMismatch(format!("input trace lacks `{n}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = self.spec.grid().n_samples();
        if inputs.grid().n_samples() < n {
            return Err(SimError::SignalMismatch(format!(
                "input trace has {} samples, the model needs {n}",
                inputs.grid().n_samples()
            )));
        }
        self.drive(|k, out| {
            for (o, c) in out.iter_mut().zip(&cols) {
                *o = c[k];
            }
            Ok(())
        })
    }

    fn drive(
        &self,
        mut next: impl FnMut(usize, &mut [f64]) -> Result<(), SimError>,
    ) -> Result<SimRun, SimError> {
        let grid = self.spec.grid();
        let n = grid.n_samples();
        let dt = grid.dt();
        let width = self.seq.as_ref().map_or(self.driver.len(), |p| p.slots().len());
        let mut src = vec![0.0; width];
        let mut u = vec![0.0; self.spec.inputs.len()];
        let mut y = vec![0.0; self.spec.outputs.len()];
        let mut model = self.spec.build();
        let mut monitor = self.assessment.as_ref().map(|(a, _)| a.monitor(dt));
        let mut row = Vec::new();
        let offset = width - self.driver.len();
        let mut in_cols: Vec<Samples> = self
            .driver
            .iter()
            .map(|(_, kd)| Samples::with_capacity(*kd, n))
            .collect();
        let mut out_cols: Vec<Samples> = self
            .spec
            .outputs
            .iter()
            .map(|(_, kd)| Samples::with_capacity(*kd, n))
            .collect();

        let mut taken = n;
        for k in 0..n {
            next(k, &mut src)?;
            for (ui, &si) in u.iter_mut().zip(&self.model_in) {
                *ui = src[si];
            }
            model.step(&u, dt, &mut y);
            if src.iter().chain(&y).chain(model.state()).any(|v| !v.is_finite()) {
                return Err(SimError::NumericError {
                    model: self.spec.name.clone(),
                    time: grid.time(k),
                });
            }
            for (c, (i, (_, kd))) in in_cols.iter_mut().zip(self.driver.iter().enumerate()) {
                push_value(c, *kd, src[offset + i]);
            }
            for (c, (i, (_, kd))) in out_cols.iter_mut().zip(self.spec.outputs.iter().enumerate()) {
                push_value(c, *kd, y[i]);
            }
            if let (Some(m), Some((_, srcs))) = (monitor.as_mut(), self.assessment.as_ref()) {
                row.clear();
                row.extend(srcs.iter().map(|s| match *s {
                    Src::Driver(i) => src[offset + i],
                    Src::Model(i) => y[i],
                }));
                if m.observe(&row)?.stop {
                    taken = k + 1;
                    break;
                }
            }
        }
        let g = grid.truncated(taken).expect("at least one sample");
        let mk = |names: &[(String, SignalKind)], cols: Vec<Samples>| {
            let signals = names
                .iter()
                .zip(cols)
                .map(|((nm, _), c)| Signal::new(nm.clone(), c).expect("finite samples"))
                .collect();
            Trace::new(g, signals).expect("consistent columns")
        };
        let inputs = mk(&self.driver, in_cols);
        let outputs = mk(&self.spec.outputs, out_cols);
        let verdict = monitor.as_ref().map(|m| m.finalize());
        Ok(SimRun {
            inputs,
            outputs,
            monitor,
            verdict,
        })
    }
}

/// Co-simulates a sequence and a model, monitored by `assessment` if given.
pub fn simulate(
    model: &ModelSpec,
    sequence: &TestBlock,
    params: &HashMap<String, f64>,
    assessment: Option<&CompiledAssessment>,
) -> Result<SimRun, SimError> {
    Harness::new(model, sequence, assessment)?.run_named(params)
}

/// Looks up a built-in model by name.
pub fn model(name: &str) -> Result<ModelSpec, SimError> {
    registry()
        .into_iter()
        .find(|b| b.spec.name == name)
        .map(|b| b.spec)
        .ok_or_else(|| SimError::UnknownModel(name.to_string()))
}
