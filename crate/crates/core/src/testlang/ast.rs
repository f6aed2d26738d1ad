use crate::signal::{SignalKind, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Sequence,
    Assessment,
}

impl BlockKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            BlockKind::Sequence => "sequence",
            BlockKind::Assessment => "assessment",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "~=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_relational(&self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_arithmetic(&self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }

    pub fn is_logical(&self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(&self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

/// Expression tree shared by guards, actions, verification statements and
/// STL predicates. Identifiers are resolved against the block's symbol table
/// (signal, parameter or named constant) at compile time.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(Value),
    Ident(String),
    /// Elapsed time in the enclosing step, in seconds.
    Et,
    /// `after(n, sec)`; the argument is a literal or a parameter reference.
    After(Box<Expr>),
    HasChanged(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn real(v: f64) -> Expr {
        Expr::Lit(Value::Real(v))
    }

    pub fn ident(name: &str) -> Expr {
        Expr::Ident(name.to_string())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    /// Visits every identifier (including `hasChanged` arguments).
    pub fn visit_idents<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Lit(_) | Expr::Et => {}
            Expr::Ident(n) | Expr::HasChanged(n) => f(n),
            Expr::After(e) | Expr::Unary(_, e) => e.visit_idents(f),
            Expr::Binary(_, a, b) => {
                a.visit_idents(f);
                b.visit_idents(f);
            }
        }
    }

    /// Replaces identifiers for which `subst` returns a value by literals.
    pub fn substitute(&self, subst: &impl Fn(&str) -> Option<Value>) -> Expr {
        match self {
            Expr::Ident(n) => subst(n).map(Expr::Lit).unwrap_or_else(|| self.clone()),
            Expr::Lit(_) | Expr::Et | Expr::HasChanged(_) => self.clone(),
            Expr::After(e) => Expr::After(Box::new(e.substitute(subst))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.substitute(subst))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.substitute(subst)),
                Box::new(b.substitute(subst)),
            ),
        }
    }
}

/// One entry of an `inputs`/`outputs`/`consts`/`params` section.
#[derive(Debug, Clone, PartialEq)]
pub struct Decl {
    pub name: String,
    pub kind: SignalKind,
    pub value: Option<Value>,
    pub range: Option<(f64, f64)>,
}

impl Decl {
    pub fn new(name: &str, kind: SignalKind) -> Self {
        Self {
            name: name.to_string(),
            kind,
            value: None,
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: String,
    pub value: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerifyKind {
    Verify,
    Assert,
}

impl VerifyKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            VerifyKind::Verify => "verify",
            VerifyKind::Assert => "assert",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationStatement {
    pub id: String,
    pub kind: VerifyKind,
    pub body: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WhenGuard {
    Guard(Expr),
    Otherwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildMode {
    Sequential,
    WhenDecomposition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: String,
    pub destination: String,
    pub guard: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestStep {
    pub name: String,
    pub when: Option<WhenGuard>,
    pub actions: Vec<Assignment>,
    pub statements: Vec<VerificationStatement>,
    pub children: Vec<TestStep>,
    /// Standard transitions between this step's children, in priority order.
    pub transitions: Vec<Transition>,
}

impl TestStep {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            when: None,
            actions: Vec::new(),
            statements: Vec::new(),
            children: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn child_mode(&self) -> ChildMode {
        child_mode_of(&self.children)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Pre-order walk over this step and its descendants.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TestStep)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }
}

pub(crate) fn child_mode_of(children: &[TestStep]) -> ChildMode {
    if children.iter().any(|c| c.when.is_some()) {
        ChildMode::WhenDecomposition
    } else {
        ChildMode::Sequential
    }
}

/// A parsed Test Sequence or Test Assessment.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBlock {
    pub kind: BlockKind,
    pub name: String,
    pub inputs: Vec<Decl>,
    pub outputs: Vec<Decl>,
    pub consts: Vec<Decl>,
    pub params: Vec<Decl>,
    /// Root steps; the first one is entered at start.
    pub steps: Vec<TestStep>,
    /// Standard transitions between root steps.
    pub transitions: Vec<Transition>,
}

impl TestBlock {
    pub fn new(kind: BlockKind, name: &str) -> Self {
        Self {
            kind,
            name: name.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            consts: Vec::new(),
            params: Vec::new(),
            steps: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn walk_steps<'a>(&'a self, mut f: impl FnMut(&'a TestStep)) {
        for s in &self.steps {
            s.walk(&mut f);
        }
    }

    pub fn step_count(&self) -> usize {
        let mut n = 0;
        self.walk_steps(|_| n += 1);
        n
    }

    /// All standard transitions, root level first, then in step pre-order.
    pub fn all_transitions(&self) -> Vec<&Transition> {
        let mut out: Vec<&Transition> = self.transitions.iter().collect();
        self.walk_steps(|s| out.extend(s.transitions.iter()));
        out
    }

    pub fn find_step(&self, name: &str) -> Option<&TestStep> {
        let mut found = None;
        self.walk_steps(|s| {
            if found.is_none() && s.name == name {
                found = Some(s);
            }
        });
        found
    }

    pub fn statements(&self) -> Vec<(&TestStep, &VerificationStatement)> {
        let mut out = Vec::new();
        self.walk_steps(|s| out.extend(s.statements.iter().map(|v| (s, v))));
        out
    }

    pub fn param(&self, name: &str) -> Option<&Decl> {
        self.params.iter().find(|d| d.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&Decl> {
        self.consts.iter().find(|d| d.name == name)
    }

    /// Declared signal (input or output) with its kind.
    pub fn signal(&self, name: &str) -> Option<&Decl> {
        self.inputs
            .iter()
            .chain(self.outputs.iter())
            .find(|d| d.name == name)
    }
}
