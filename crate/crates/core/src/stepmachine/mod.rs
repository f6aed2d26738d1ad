//! Execution of hierarchical test blocks.
//!
//! A block is compiled once into a [`Program`]; a [`StepMachine`] holds the
//! active configuration of one run. Each sample the machine is ticked (at most
//! one transition or when-switch fires, outermost level first) and then the
//! actions of the active path are emitted root to leaf.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::signal::{Samples, Signal, SignalKind, TimeGrid, Trace, Value};
use crate::testlang::{BlockKind, ChildMode, Decl, TestBlock, TestStep, VerifyKind, WhenGuard};

pub mod expr;

pub use expr::{compile as compile_expr, eval, eval_bool, CExpr, EvalEnv, Resolved};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unresolved identifier `{0}`")]
    Unresolved(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("no child of `{step}` is selected: every `when` guard is false and there is no `otherwise`")]
    NoActiveChild { step: String },
    #[error("unknown step `{0}`")]
    UnknownStep(String),
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("parameter `{0}` has no value")]
    MissingParameter(String),
    #[error("parameter `{name}` = {value} is outside its domain [{lower}, {upper}]")]
    OutOfDomain {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("expected a {expected} block")]
    WrongBlockKind { expected: &'static str },
}

#[derive(Debug, Clone)]
enum When {
    Guard(CExpr),
    Otherwise,
}

#[derive(Debug, Clone)]
struct Node {
    name: String,
    children: Vec<usize>,
    mode: ChildMode,
    when: Option<When>,
    actions: Vec<(usize, CExpr)>,
    /// Outgoing standard transitions in priority order.
    out: Vec<(usize, CExpr)>,
}

#[derive(Debug, Clone)]
pub struct CompiledStatement {
    pub id: String,
    pub kind: VerifyKind,
    pub step: String,
    pub body: CExpr,
    node: usize,
}

impl CompiledStatement {
    pub fn node(&self) -> usize {
        self.node
    }
}

/// A block compiled to an indexed step tree. Node 0 is an implicit root whose
/// children are the block's root steps.
#[derive(Debug, Clone)]
pub struct Program {
    kind: BlockKind,
    name: String,
    nodes: Vec<Node>,
    slots: Vec<(String, SignalKind)>,
    n_inputs: usize,
    params: Vec<Decl>,
    statements: Vec<CompiledStatement>,
}

fn const_value(d: &Decl) -> f64 {
    d.value.as_ref().map(Value::as_f64).unwrap_or(0.0)
}

impl Program {
    pub fn compile(block: &TestBlock) -> Result<Program, StepError> {
        let mut slots = Vec::new();
        for d in block.inputs.iter().chain(&block.outputs) {
            slots.push((d.name.clone(), d.kind));
        }
        let slot_index: HashMap<&str, usize> = slots
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.as_str(), i))
            .collect();
        let resolve = |n: &str| -> Option<Resolved> {
            if let Some(&i) = slot_index.get(n) {
                return Some(Resolved::Slot(i));
            }
            if let Some(i) = block.params.iter().position(|d| d.name == n) {
                return Some(Resolved::Param(i));
            }
            block.constant(n).map(|d| Resolved::Const(const_value(d)))
        };

        let mut prog = Program {
            kind: block.kind,
            name: block.name.clone(),
            nodes: vec![Node {
                name: block.name.clone(),
                children: Vec::new(),
                mode: ChildMode::Sequential,
                when: None,
                actions: Vec::new(),
                out: Vec::new(),
            }],
            slots: slots.clone(),
            n_inputs: block.inputs.len(),
            params: block.params.clone(),
            statements: Vec::new(),
        };
        let mut by_name: HashMap<String, usize> = HashMap::new();
        for s in &block.steps {
            let id = prog.add_step(s, &resolve, &slot_index, &mut by_name)?;
            prog.nodes[0].children.push(id);
        }
        prog.link(&block.transitions, &resolve, &by_name)?;
        let mut pending = Vec::new();
        block.walk_steps(|s| pending.push(s));
        for s in pending {
            prog.link(&s.transitions, &resolve, &by_name)?;
        }
        Ok(prog)
    }

    fn add_step(
        &mut self,
        s: &TestStep,
        resolve: &dyn Fn(&str) -> Option<Resolved>,
        slot_index: &HashMap<&str, usize>,
        by_name: &mut HashMap<String, usize>,
    ) -> Result<usize, StepError> {
        let id = self.nodes.len();
        let when = match &s.when {
            Some(WhenGuard::Guard(g)) => Some(When::Guard(compile_expr(g, resolve)?)),
            Some(WhenGuard::Otherwise) => Some(When::Otherwise),
            None => None,
        };
        let mut actions = Vec::new();
        for a in &s.actions {
            let slot = *slot_index
                .get(a.target.as_str())
                .ok_or_else(|| EvalError::Unresolved(a.target.clone()))?;
            actions.push((slot, compile_expr(&a.value, resolve)?));
        }
        self.nodes.push(Node {
            name: s.name.clone(),
            children: Vec::new(),
            mode: s.child_mode(),
            when,
            actions,
            out: Vec::new(),
        });
        by_name.insert(s.name.clone(), id);
        for v in &s.statements {
            self.statements.push(CompiledStatement {
                id: v.id.clone(),
                kind: v.kind,
                step: s.name.clone(),
                body: compile_expr(&v.body, resolve)?,
                node: id,
            });
        }
        for c in &s.children {
            let cid = self.add_step(c, resolve, slot_index, by_name)?;
            self.nodes[id].children.push(cid);
        }
        Ok(id)
    }

    fn link(
        &mut self,
        transitions: &[crate::testlang::Transition],
        resolve: &dyn Fn(&str) -> Option<Resolved>,
        by_name: &HashMap<String, usize>,
    ) -> Result<(), StepError> {
        for t in transitions {
            let src = *by_name
                .get(&t.source)
                .ok_or_else(|| StepError::UnknownStep(t.source.clone()))?;
            let dst = *by_name
                .get(&t.destination)
                .ok_or_else(|| StepError::UnknownStep(t.destination.clone()))?;
            let guard = compile_expr(&t.guard, resolve)?;
            self.nodes[src].out.push((dst, guard));
        }
        Ok(())
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Signals in slot order: inputs, then outputs.
    pub fn slots(&self) -> &[(String, SignalKind)] {
        &self.slots
    }

    pub fn inputs(&self) -> &[(String, SignalKind)] {
        &self.slots[..self.n_inputs]
    }

    pub fn outputs(&self) -> &[(String, SignalKind)] {
        &self.slots[self.n_inputs..]
    }

    pub fn params(&self) -> &[Decl] {
        &self.params
    }

    pub fn statements(&self) -> &[CompiledStatement] {
        &self.statements
    }

    pub fn step_name(&self, node: usize) -> &str {
        &self.nodes[node].name
    }

    /// Parameter vector in declaration order, checked against the domains.
    pub fn param_vector(&self, values: &HashMap<String, f64>) -> Result<Vec<f64>, StepError> {
        self.params
            .iter()
            .map(|d| {
                let v = *values
                    .get(&d.name)
                    .ok_or_else(|| StepError::MissingParameter(d.name.clone()))?;
                if let Some((lower, upper)) = d.range {
                    if !(lower..=upper).contains(&v) {
                        return Err(StepError::OutOfDomain {
                            name: d.name.clone(),
                            value: v,
                            lower,
                            upper,
                        });
                    }
                }
                Ok(v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveStep {
    pub name: String,
    pub entry_time: f64,
}

/// Active steps from a root step down to the leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConfiguration {
    pub path: Vec<ActiveStep>,
}

impl ActiveConfiguration {
    pub fn leaf(&self) -> &str {
        &self.path.last().expect("configuration is never empty").name
    }

    pub fn names(&self) -> Vec<&str> {
        self.path.iter().map(|s| s.name.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiredTransition {
    pub source: String,
    pub destination: String,
    pub time: f64,
}

/// Mutable run state over a shared [`Program`].
#[derive(Debug, Clone)]
pub struct StepMachine {
    prog: Arc<Program>,
    /// (node, entry sample); element 0 is the implicit root.
    path: Vec<(usize, usize)>,
}

impl StepMachine {
    pub fn new(prog: Arc<Program>) -> Self {
        Self {
            prog,
            path: Vec::new(),
        }
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.prog
    }

    fn et(&self, level: usize, k: usize, dt: f64) -> f64 {
        (k - self.path[level].1) as f64 * dt
    }

    /// Enters the first root step and its initial descendants at sample `env.k`.
    pub fn init(&mut self, env: &EvalEnv) -> Result<(), StepError> {
        self.path.clear();
        self.path.push((0, env.k));
        self.descend(env)
    }

    /// Extends the path from its current last node down to a leaf.
    fn descend(&mut self, env: &EvalEnv) -> Result<(), StepError> {
        loop {
            let (node, _) = *self.path.last().unwrap();
            let n = &self.prog.nodes[node];
            if n.children.is_empty() {
                return Ok(());
            }
            let next = match n.mode {
                ChildMode::Sequential => n.children[0],
                ChildMode::WhenDecomposition => self.select(node, 0.0, env)?,
            };
            self.path.push((next, env.k));
        }
    }

    /// First child of a when-decomposed node whose guard holds.
    fn select(&self, node: usize, et: f64, env: &EvalEnv) -> Result<usize, StepError> {
        for &c in &self.prog.nodes[node].children {
            match &self.prog.nodes[c].when {
                Some(When::Otherwise) => return Ok(c),
                Some(When::Guard(g)) if eval_bool(g, env, et)? => return Ok(c),
                _ => {}
            }
        }
        Err(StepError::NoActiveChild {
            step: self.prog.nodes[node].name.clone(),
        })
    }

    /// Evaluates one sample: scans the active path outermost first and fires
    /// the first eligible transition or when-switch, if any.
    pub fn tick(&mut self, env: &EvalEnv) -> Result<Option<FiredTransition>, StepError> {
        if self.path.is_empty() {
            return Err(StepError::UnknownStep("<uninitialized>".into()));
        }
        for level in 0..self.path.len() - 1 {
            let parent = self.path[level].0;
            let active = self.path[level + 1].0;
            let target = match self.prog.nodes[parent].mode {
                ChildMode::WhenDecomposition => {
                    let chosen = self.select(parent, self.et(level, env.k, env.dt), env)?;
                    (chosen != active).then_some(chosen)
                }
                ChildMode::Sequential => {
                    let et = self.et(level + 1, env.k, env.dt);
                    let mut hit = None;
                    for (dst, guard) in &self.prog.nodes[active].out {
                        if eval_bool(guard, env, et)? {
                            hit = Some(*dst);
                            break;
                        }
                    }
                    hit
                }
            };
            if let Some(dst) = target {
                self.path.truncate(level + 1);
                self.path.push((dst, env.k));
                self.descend(env)?;
                return Ok(Some(FiredTransition {
                    source: self.prog.nodes[active].name.clone(),
                    destination: self.prog.nodes[dst].name.clone(),
                    time: env.time(),
                }));
            }
        }
        Ok(None)
    }

    /// Applies the actions of the active path, root to leaf, to `values`.
    /// Reads inside an action see assignments made earlier in the same sample.
    pub fn emit_actions(&self, env: &EvalEnv, values: &mut [f64]) -> Result<(), StepError> {
        for level in 1..self.path.len() {
            let et = self.et(level, env.k, env.dt);
            for (slot, e) in &self.prog.nodes[self.path[level].0].actions {
                let v = {
                    let view = EvalEnv { cur: values, ..*env };
                    eval(e, &view, et)?
                };
                values[*slot] = match self.prog.slots[*slot].1 {
                    SignalKind::Real => v,
                    SignalKind::Int => v.round(),
                    SignalKind::Bool => (v != 0.0) as u8 as f64,
                };
            }
        }
        Ok(())
    }

    /// Whether `node` is on the active path.
    pub fn is_active(&self, node: usize) -> bool {
        self.path.iter().any(|&(n, _)| n == node)
    }

    /// Elapsed time of an active node.
    pub fn elapsed(&self, node: usize, k: usize, dt: f64) -> Option<f64> {
        self.path
            .iter()
            .position(|&(n, _)| n == node)
            .map(|level| self.et(level, k, dt))
    }

    pub fn configuration(&self, dt: f64) -> ActiveConfiguration {
        ActiveConfiguration {
            path: self.path[1..]
                .iter()
                .map(|&(n, k)| ActiveStep {
                    name: self.prog.nodes[n].name.clone(),
                    entry_time: k as f64 * dt,
                })
                .collect(),
        }
    }

    pub fn leaf(&self) -> &str {
        &self.prog.nodes[self.path.last().unwrap().0].name
    }

    /// Debug line: `t=<time> leaf=<path> fired=<src->dst|->`.
    pub fn debug_line(&self, t: f64, fired: Option<&FiredTransition>) -> String {
        let mut s = format!("t={t} leaf=");
        for (i, &(n, _)) in self.path[1..].iter().enumerate() {
            if i > 0 {
                s.push('/');
            }
            s.push_str(&self.prog.nodes[n].name);
        }
        match fired {
            Some(f) => {
                let _ = write!(s, " fired={}->{}", f.source, f.destination);
            }
            None => s.push_str(" fired=->"),
        }
        s
    }
}

/// Generates a sequence's outputs one sample at a time.
#[derive(Debug, Clone)]
pub struct SequenceRunner {
    machine: StepMachine,
    params: Vec<f64>,
    dt: f64,
    k: usize,
    /// Last emitted values and the ones before them.
    cur: Vec<f64>,
    prev: Option<Vec<f64>>,
    last_fired: Option<FiredTransition>,
}

impl SequenceRunner {
    pub fn new(prog: Arc<Program>, params: Vec<f64>, dt: f64) -> Result<Self, StepError> {
        if prog.kind != BlockKind::Sequence {
            return Err(StepError::WrongBlockKind {
                expected: "sequence",
            });
        }
        let n = prog.slots.len();
        Ok(Self {
            machine: StepMachine::new(prog),
            params,
            dt,
            k: 0,
            cur: vec![0.0; n],
            prev: None,
            last_fired: None,
        })
    }

    /// Computes the next sample and returns the values of all slots.
    pub fn step(&mut self) -> Result<&[f64], StepError> {
        let mut next = self.cur.clone();
        {
            let env = EvalEnv {
                k: self.k,
                dt: self.dt,
                cur: &self.cur,
                prev: self.prev.as_deref(),
                params: &self.params,
            };
            self.last_fired = if self.k == 0 {
                self.machine.init(&env)?;
                None
            } else {
                self.machine.tick(&env)?
            };
            self.machine.emit_actions(&env, &mut next)?;
        }
        if self.k > 0 {
            self.prev = Some(std::mem::replace(&mut self.cur, next));
        } else {
            self.cur = next;
        }
        self.k += 1;
        Ok(&self.cur)
    }

    pub fn machine(&self) -> &StepMachine {
        &self.machine
    }

    pub fn last_fired(&self) -> Option<&FiredTransition> {
        self.last_fired.as_ref()
    }

    pub fn debug_line(&self) -> String {
        let t = (self.k.saturating_sub(1)) as f64 * self.dt;
        self.machine.debug_line(t, self.last_fired.as_ref())
    }
}

/// Typed column builder used when collecting per-sample `f64` slot values.
pub(crate) fn column(kind: SignalKind, n: usize) -> Samples {
    Samples::with_capacity(kind, n)
}

pub(crate) fn push_value(col: &mut Samples, kind: SignalKind, v: f64) {
    col.push(match kind {
        SignalKind::Real => Value::Real(v),
        SignalKind::Int => Value::Int(v as i64),
        SignalKind::Bool => Value::Bool(v != 0.0),
    });
}

/// Runs a sequence on its own and returns the trace of its outputs. Every
/// parameter needs a value inside its domain.
pub fn run_sequence(
    block: &TestBlock,
    params: &HashMap<String, f64>,
    grid: TimeGrid,
) -> Result<Trace, StepError> {
    run_sequence_logged(block, params, grid, None)
}

/// [`run_sequence`] that also writes one debug line per sample to `log`.
pub fn run_sequence_logged(
    block: &TestBlock,
    params: &HashMap<String, f64>,
    grid: TimeGrid,
    mut log: Option<&mut dyn std::io::Write>,
) -> Result<Trace, StepError> {
    let prog = Arc::new(Program::compile(block)?);
    let pv = prog.param_vector(params)?;
    let mut runner = SequenceRunner::new(prog.clone(), pv, grid.dt())?;
    let outputs: Vec<(usize, SignalKind)> = (prog.n_inputs..prog.slots.len())
        .map(|i| (i, prog.slots[i].1))
        .collect();
    let mut cols: Vec<Samples> = outputs
        .iter()
        .map(|&(_, kind)| column(kind, grid.n_samples()))
        .collect();
    for _ in 0..grid.n_samples() {
        let vals = runner.step()?;
        for (col, &(slot, kind)) in cols.iter_mut().zip(&outputs) {
            push_value(col, kind, vals[slot]);
        }
        if let Some(w) = log.as_deref_mut() {
            let _ = writeln!(w, "{}", runner.debug_line());
        }
    }
    let signals = cols
        .into_iter()
        .zip(&outputs)
        .map(|(c, &(slot, _))| Signal::new(&prog.slots[slot].0, c))
        .collect::<Result<Vec<_>, _>>()
        .expect("emitted values are finite and well typed");
    Ok(Trace::new(grid, signals).expect("columns match the grid"))
}
