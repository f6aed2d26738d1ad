use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::signal::{SignalKind, Value};

use super::ast::*;

/// Prefix every search parameter name must carry.
pub const PARAM_PREFIX: &str = "Hecate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    DuplicateStepName,
    DuplicateDeclaration,
    DuplicateStatementId,
    UndeclaredIdentifier,
    TypeError,
    ReservedName,
    BadParameterName,
    InvertedBounds,
    MissingBounds,
    MissingConstValue,
    ParametersInAssessment,
    InputsInSequence,
    OutputsInAssessment,
    ContentKindMismatch,
    MixedChildModes,
    OtherwiseNotLast,
    UnknownStep,
    NonSiblingTransition,
    TransitionInWhenDecomposition,
    NotAnOutput,
    EmptyBlock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Real,
    Int,
    Bool,
}

impl Ty {
    fn of(kind: SignalKind) -> Ty {
        match kind {
            SignalKind::Real => Ty::Real,
            SignalKind::Int => Ty::Int,
            SignalKind::Bool => Ty::Bool,
        }
    }

    fn numeric(&self) -> bool {
        matches!(self, Ty::Real | Ty::Int)
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Real => "real",
            Ty::Int => "int",
            Ty::Bool => "bool",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolClass {
    Input,
    Output,
    Const,
    Param,
}

#[derive(Debug, Clone)]
pub struct Symbol {
    pub class: SymbolClass,
    pub kind: SignalKind,
}

/// Name → declaration lookup for a block.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    symbols: HashMap<String, Symbol>,
    /// Whether `et`, `after` and `hasChanged` may appear.
    pub allow_step_operators: bool,
}

impl SymbolTable {
    pub fn for_block(block: &TestBlock) -> Self {
        let mut t = SymbolTable {
            symbols: HashMap::new(),
            allow_step_operators: true,
        };
        for (class, decls) in [
            (SymbolClass::Input, &block.inputs),
            (SymbolClass::Output, &block.outputs),
            (SymbolClass::Const, &block.consts),
            (SymbolClass::Param, &block.params),
        ] {
            for d in decls.iter() {
                t.symbols.entry(d.name.clone()).or_insert(Symbol {
                    class,
                    kind: d.kind,
                });
            }
        }
        t
    }

    /// Symbols for formulas over a trace: every signal is an input.
    pub fn for_signals<'a>(signals: impl IntoIterator<Item = (&'a str, SignalKind)>) -> Self {
        SymbolTable {
            symbols: signals
                .into_iter()
                .map(|(n, k)| {
                    (
                        n.to_string(),
                        Symbol {
                            class: SymbolClass::Input,
                            kind: k,
                        },
                    )
                })
                .collect(),
            allow_step_operators: false,
        }
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.get(name)
    }
}

/// Type of an expression, or the first error found in it.
pub fn type_of(e: &Expr, table: &SymbolTable) -> Result<Ty, Diagnostic> {
    let type_err = |msg: String| Diagnostic {
        kind: DiagnosticKind::TypeError,
        message: msg,
    };
    let step_op = |name: &str| -> Result<(), Diagnostic> {
        if table.allow_step_operators {
            Ok(())
        } else {
            Err(type_err(format!("`{name}` is not available here")))
        }
    };
    match e {
        Expr::Lit(v) => Ok(Ty::of(v.kind())),
        Expr::Ident(n) => table
            .get(n)
            .map(|s| Ty::of(s.kind))
            .ok_or_else(|| Diagnostic {
                kind: DiagnosticKind::UndeclaredIdentifier,
                message: format!("undeclared identifier `{n}`"),
            }),
        Expr::Et => {
            step_op("et")?;
            Ok(Ty::Real)
        }
        Expr::After(n) => {
            step_op("after")?;
            match &**n {
                Expr::Lit(Value::Real(v)) if *v >= 0.0 => {}
                Expr::Lit(Value::Int(v)) if *v >= 0 => {}
                Expr::Lit(_) => {
                    return Err(type_err(
                        "`after` needs a nonnegative numeric duration".into(),
                    ))
                }
                Expr::Ident(p) => match table.get(p) {
                    Some(s) if s.class == SymbolClass::Param && s.kind != SignalKind::Bool => {}
                    Some(_) => {
                        return Err(type_err(format!(
                            "`after` takes a literal or a parameter, `{p}` is neither"
                        )))
                    }
                    None => {
                        return Err(Diagnostic {
                            kind: DiagnosticKind::UndeclaredIdentifier,
                            message: format!("undeclared identifier `{p}`"),
                        })
                    }
                },
                _ => {
                    return Err(type_err(
                        "`after` takes a numeric literal or a parameter reference".into(),
                    ))
                }
            }
            Ok(Ty::Bool)
        }
        Expr::HasChanged(n) => {
            step_op("hasChanged")?;
            match table.get(n) {
                Some(s) if matches!(s.class, SymbolClass::Input | SymbolClass::Output) => {
                    Ok(Ty::Bool)
                }
                Some(_) => Err(type_err(format!(
                    "`hasChanged` needs a signal, `{n}` is not one"
                ))),
                None => Err(Diagnostic {
                    kind: DiagnosticKind::UndeclaredIdentifier,
                    message: format!("undeclared identifier `{n}`"),
                }),
            }
        }
        Expr::Unary(UnOp::Neg, inner) => {
            let t = type_of(inner, table)?;
            if t.numeric() {
                Ok(t)
            } else {
                Err(type_err("unary `-` needs a numeric operand".into()))
            }
        }
        Expr::Unary(UnOp::Not, inner) => {
            if type_of(inner, table)? == Ty::Bool {
                Ok(Ty::Bool)
            } else {
                Err(type_err("`not` needs a boolean operand".into()))
            }
        }
        Expr::Binary(op, a, b) => {
            let ta = type_of(a, table)?;
            let tb = type_of(b, table)?;
            if op.is_logical() {
                if ta == Ty::Bool && tb == Ty::Bool {
                    Ok(Ty::Bool)
                } else {
                    Err(type_err(format!("`{}` needs boolean operands", op.symbol())))
                }
            } else if !(ta.numeric() && tb.numeric()) {
                Err(type_err(format!(
                    "`{}` needs numeric operands, got {ta} and {tb}",
                    op.symbol()
                )))
            } else if op.is_relational() {
                Ok(Ty::Bool)
            } else if ta == Ty::Int && tb == Ty::Int && *op != BinOp::Div {
                Ok(Ty::Int)
            } else {
                Ok(Ty::Real)
            }
        }
    }
}

fn expect_bool(e: &Expr, table: &SymbolTable, what: &str, out: &mut Vec<Diagnostic>) {
    match type_of(e, table) {
        Ok(Ty::Bool) => {}
        Ok(t) => out.push(Diagnostic {
            kind: DiagnosticKind::TypeError,
            message: format!("{what} must be boolean, found {t}"),
        }),
        Err(mut d) => {
            d.message = format!("{what}: {}", d.message);
            out.push(d);
        }
    }
}

fn check_siblings(
    scope: &str,
    children: &[TestStep],
    transitions: &[Transition],
    all_steps: &HashSet<&str>,
    table: &SymbolTable,
    out: &mut Vec<Diagnostic>,
) {
    let mode = child_mode_of(children);
    let names: HashSet<&str> = children.iter().map(|c| c.name.as_str()).collect();
    for t in transitions {
        let label = format!("transition {} -> {}", t.source, t.destination);
        for end in [&t.source, &t.destination] {
            if !all_steps.contains(end.as_str()) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::UnknownStep,
                    message: format!("{label}: unknown step `{end}`"),
                });
            } else if !names.contains(end.as_str()) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::NonSiblingTransition,
                    message: format!("{label}: `{end}` is not a child of {scope}"),
                });
            }
        }
        if mode == ChildMode::WhenDecomposition {
            out.push(Diagnostic {
                kind: DiagnosticKind::TransitionInWhenDecomposition,
                message: format!(
                    "{label}: children of when-decomposed {scope} are selected by guards only"
                ),
            });
        }
        expect_bool(&t.guard, table, &format!("guard of {label}"), out);
    }
    if mode == ChildMode::WhenDecomposition {
        let last = children.len() - 1;
        for (i, c) in children.iter().enumerate() {
            match &c.when {
                None => out.push(Diagnostic {
                    kind: DiagnosticKind::MixedChildModes,
                    message: format!(
                        "step `{}` lacks a `when` guard but its siblings under {scope} have one",
                        c.name
                    ),
                }),
                Some(WhenGuard::Otherwise) if i != last => out.push(Diagnostic {
                    kind: DiagnosticKind::OtherwiseNotLast,
                    message: format!(
                        "step `{}`: `otherwise` must be the last child of {scope}",
                        c.name
                    ),
                }),
                Some(WhenGuard::Guard(g)) => {
                    expect_bool(g, table, &format!("when guard of step `{}`", c.name), out)
                }
                _ => {}
            }
        }
    }
}

fn check_step(
    block: &TestBlock,
    step: &TestStep,
    all_steps: &HashSet<&str>,
    table: &SymbolTable,
    out: &mut Vec<Diagnostic>,
) {
    if block.kind == BlockKind::Assessment && !step.actions.is_empty() {
        out.push(Diagnostic {
            kind: DiagnosticKind::ContentKindMismatch,
            message: format!("step `{}`: assessments cannot assign signals", step.name),
        });
    }
    if block.kind == BlockKind::Sequence && !step.statements.is_empty() {
        out.push(Diagnostic {
            kind: DiagnosticKind::ContentKindMismatch,
            message: format!(
                "step `{}`: sequences cannot contain verify/assert statements",
                step.name
            ),
        });
    }
    for a in &step.actions {
        let what = format!("assignment to `{}` in step `{}`", a.target, step.name);
        match table.get(&a.target) {
            Some(s) if s.class == SymbolClass::Output => {
                match type_of(&a.value, table) {
                    Ok(t) => {
                        let ok = if s.kind == SignalKind::Bool {
                            t == Ty::Bool
                        } else {
                            t.numeric()
                        };
                        if !ok {
                            out.push(Diagnostic {
                                kind: DiagnosticKind::TypeError,
                                message: format!("{what}: cannot assign {t} to {}", s.kind),
                            });
                        }
                    }
                    Err(mut d) => {
                        d.message = format!("{what}: {}", d.message);
                        out.push(d);
                    }
                }
            }
            Some(_) => out.push(Diagnostic {
                kind: DiagnosticKind::NotAnOutput,
                message: format!("{what}: `{}` is not a declared output", a.target),
            }),
            None => out.push(Diagnostic {
                kind: DiagnosticKind::UndeclaredIdentifier,
                message: format!("{what}: undeclared identifier `{}`", a.target),
            }),
        }
    }
    for v in &step.statements {
        expect_bool(
            &v.body,
            table,
            &format!("statement `{}` in step `{}`", v.id, step.name),
            out,
        );
    }
    if !step.children.is_empty() {
        check_siblings(
            &format!("step `{}`", step.name),
            &step.children,
            &step.transitions,
            all_steps,
            table,
            out,
        );
    } else if !step.transitions.is_empty() {
        for t in &step.transitions {
            out.push(Diagnostic {
                kind: DiagnosticKind::NonSiblingTransition,
                message: format!(
                    "transition {} -> {}: leaf step `{}` has no children to connect",
                    t.source, t.destination, step.name
                ),
            });
        }
    }
    for c in &step.children {
        check_step(block, c, all_steps, table, out);
    }
}

/// Checks every structural, naming and typing rule; returns one diagnostic
/// per violation (empty when the block is well formed).
pub fn validate(block: &TestBlock) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let table = SymbolTable::for_block(block);

    let mut seen = HashSet::new();
    for d in block
        .inputs
        .iter()
        .chain(&block.outputs)
        .chain(&block.consts)
        .chain(&block.params)
    {
        if !seen.insert(d.name.as_str()) {
            out.push(Diagnostic {
                kind: DiagnosticKind::DuplicateDeclaration,
                message: format!("`{}` is declared more than once", d.name),
            });
        }
    }
    match block.kind {
        BlockKind::Sequence => {
            if !block.inputs.is_empty() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::InputsInSequence,
                    message: "sequences generate signals and cannot declare inputs".into(),
                });
            }
        }
        BlockKind::Assessment => {
            if !block.outputs.is_empty() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::OutputsInAssessment,
                    message: "assessments cannot declare outputs".into(),
                });
            }
            if !block.params.is_empty() {
                out.push(Diagnostic {
                    kind: DiagnosticKind::ParametersInAssessment,
                    message: "assessments cannot declare parameters".into(),
                });
            }
        }
    }
    for c in &block.consts {
        match &c.value {
            None => out.push(Diagnostic {
                kind: DiagnosticKind::MissingConstValue,
                message: format!("constant `{}` has no value", c.name),
            }),
            Some(v) => {
                let ok = match c.kind {
                    SignalKind::Bool => matches!(v, Value::Bool(_)),
                    SignalKind::Int => matches!(v, Value::Int(_)),
                    SignalKind::Real => matches!(v, Value::Real(_) | Value::Int(_)),
                };
                if !ok {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::TypeError,
                        message: format!("constant `{}`: value does not fit {}", c.name, c.kind),
                    });
                }
            }
        }
    }
    for p in &block.params {
        if !p.name.starts_with(PARAM_PREFIX) {
            out.push(Diagnostic {
                kind: DiagnosticKind::BadParameterName,
                message: format!("parameter `{}` must start with `{PARAM_PREFIX}`", p.name),
            });
        }
        if p.kind == SignalKind::Bool {
            out.push(Diagnostic {
                kind: DiagnosticKind::TypeError,
                message: format!("parameter `{}` must be numeric", p.name),
            });
        }
        match p.range {
            None => out.push(Diagnostic {
                kind: DiagnosticKind::MissingBounds,
                message: format!("parameter `{}` has no domain `in [lower, upper]`", p.name),
            }),
            Some((lo, hi)) if lo > hi => out.push(Diagnostic {
                kind: DiagnosticKind::InvertedBounds,
                message: format!("parameter `{}`: lower > upper ({lo} > {hi})", p.name),
            }),
            Some((lo, hi)) if !(lo.is_finite() && hi.is_finite()) => out.push(Diagnostic {
                kind: DiagnosticKind::InvertedBounds,
                message: format!("parameter `{}`: bounds must be finite", p.name),
            }),
            _ => {}
        }
    }

    if block.steps.is_empty() {
        out.push(Diagnostic {
            kind: DiagnosticKind::EmptyBlock,
            message: "block has no steps".into(),
        });
    }
    let mut names = HashSet::new();
    let mut ids = HashSet::new();
    block.walk_steps(|s| {
        if !names.insert(s.name.as_str()) {
            out.push(Diagnostic {
                kind: DiagnosticKind::DuplicateStepName,
                message: format!("step name `{}` is used more than once", s.name),
            });
        }
        for v in &s.statements {
            if !ids.insert(v.id.as_str()) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::DuplicateStatementId,
                    message: format!("statement id `{}` (step `{}`) is not unique", v.id, s.name),
                });
            }
        }
    });
    if !block.steps.is_empty() {
        if child_mode_of(&block.steps) == ChildMode::WhenDecomposition {
            for s in block.steps.iter().filter(|s| s.when.is_some()) {
                out.push(Diagnostic {
                    kind: DiagnosticKind::MixedChildModes,
                    message: format!(
                        "root step `{}` cannot carry a `when` guard; wrap it in a parent step",
                        s.name
                    ),
                });
            }
        }
        let roots: Vec<TestStep> = block
            .steps
            .iter()
            .map(|s| TestStep {
                when: None,
                ..s.clone()
            })
            .collect();
        check_siblings("the block root", &roots, &block.transitions, &names, &table, &mut out);
    }
    for s in &block.steps {
        check_step(block, s, &names, &table, &mut out);
    }
    out
}
