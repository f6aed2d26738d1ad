use crate::signal::Value;
use crate::testlang::{BlockKind, Expr, TestBlock, TestStep, WhenGuard, PARAM_PREFIX};

use super::SearchError;

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lower..=self.upper).contains(&v)
    }
}

/// Ordered box domain of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    params: Vec<Parameter>,
}

impl SearchSpace {
    /// Builds a box from arbitrary axes. Names are not required to carry the
    /// parameter prefix, so control-point vectors can reuse the type.
    pub fn new(params: Vec<Parameter>) -> Result<Self, SearchError> {
        if params.is_empty() {
            return Err(SearchError::NoParameters);
        }
        for p in &params {
            if !(p.lower.is_finite() && p.upper.is_finite()) || p.lower > p.upper {
                return Err(SearchError::InvalidDomain(p.name.clone()));
            }
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.params
            .iter()
            .map(|p| p.lower + 0.5 * p.width())
            .collect()
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.dim() && self.params.iter().zip(values).all(|(p, &v)| p.contains(v))
    }

    /// Checks arity and domain membership.
    pub fn check(&self, values: &[f64]) -> Result<(), SearchError> {
        if values.len() != self.dim() {
            return Err(SearchError::WrongArity {
                expected: self.dim(),
                got: values.len(),
            });
        }
        for (p, &v) in self.params.iter().zip(values) {
            if !p.contains(v) {
                return Err(SearchError::OutOfDomain {
                    name: p.name.clone(),
                    value: v,
                    lower: p.lower,
                    upper: p.upper,
                });
            }
        }
        Ok(())
    }
}

/// Parameters of a parameterized test sequence, in declaration order.
pub fn extract_space(pseq: &TestBlock) -> Result<SearchSpace, SearchError> {
    if pseq.kind != BlockKind::Sequence {
        return Err(SearchError::NotASequence);
    }
    if pseq.params.is_empty() {
        return Err(SearchError::NoParameters);
    }
    let params = pseq
        .params
        .iter()
        .map(|d| {
            if !d.name.starts_with(PARAM_PREFIX) {
                return Err(SearchError::BadParameterName(d.name.clone()));
            }
            let (lo, hi) = d
                .range
                .ok_or_else(|| SearchError::InvalidDomain(d.name.clone()))?;
            Ok(Parameter::new(d.name.clone(), lo, hi))
        })
        .collect::<Result<Vec<_>, _>>()?;
    SearchSpace::new(params)
}

/// Concrete sequence for an in-domain assignment.
pub fn instantiate(pseq: &TestBlock, values: &[f64]) -> Result<TestBlock, SearchError> {
    extract_space(pseq)?.check(values)?;
    Ok(substitute(pseq, values))
}

/// Replaces every parameter reference by its value without a domain check
/// and drops the parameter section. Values are taken in declaration order;
/// missing trailing values leave the reference in place.
pub fn substitute(pseq: &TestBlock, values: &[f64]) -> TestBlock {
    let table: Vec<(&str, Value)> = pseq
        .params
        .iter()
        .zip(values)
        .map(|(d, &v)| (d.name.as_str(), Value::coerce(v, d.kind)))
        .collect();
    let subst = |n: &str| table.iter().find(|(p, _)| *p == n).map(|(_, v)| *v);
    let mut out = pseq.clone();
    for s in &mut out.steps {
        subst_step(s, &subst);
    }
    for t in &mut out.transitions {
        t.guard = t.guard.substitute(&subst);
    }
    out.params.retain(|d| !table.iter().any(|(p, _)| *p == d.name));
    out
}

fn subst_step(s: &mut TestStep, subst: &impl Fn(&str) -> Option<Value>) {
    if let Some(WhenGuard::Guard(g)) = &mut s.when {
        *g = g.substitute(subst);
    }
    for a in &mut s.actions {
        a.value = a.value.substitute(subst);
    }
    for v in &mut s.statements {
        v.body = v.body.substitute(subst);
    }
    for t in &mut s.transitions {
        t.guard = t.guard.substitute(subst);
    }
    for c in &mut s.children {
        subst_step(c, subst);
    }
}

/// True when no expression of the block mentions a parameter name.
pub fn is_closed(block: &TestBlock) -> bool {
    let mut names = Vec::new();
    let mut collect = |e: &Expr| {
        e.visit_idents(&mut |n: &str| names.push(n.to_string()));
    };
    for t in &block.transitions {
        collect(&t.guard);
    }
    block.walk_steps(|s| {
        if let Some(WhenGuard::Guard(g)) = &s.when {
            collect(g);
        }
        s.actions.iter().for_each(|a| collect(&a.value));
        s.statements.iter().for_each(|v| collect(&v.body));
        s.transitions.iter().for_each(|t| collect(&t.guard));
    });
    block.params.is_empty() && !names.iter().any(|n| n.starts_with(PARAM_PREFIX))
}
