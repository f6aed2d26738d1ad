//! Time grids, typed signals and multi-signal traces.
//!
//! Everything in the crate samples on a fixed-step grid with zero-order hold
//! semantics. A [`Trace`] is immutable once built and checks on construction
//! that every signal has exactly one sample per grid point.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

/// Default sampling period used when a model does not declare its own.
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("sample index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("signal `{name}` has {got} samples, grid has {expected}")]
    LengthMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("duplicate signal `{0}`")]
    DuplicateSignal(String),
    #[error("signal `{name}`: value {value} does not fit kind {kind}")]
    KindMismatch {
        name: String,
        kind: SignalKind,
        value: String,
    },
    #[error("trace format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SignalError {
    fn from(e: std::io::Error) -> Self {
        SignalError::Io(e.to_string())
    }
}

/// Uniform sampling grid `t(k) = k * dt`, `k = 0..n_samples`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_samples: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_samples: usize) -> Result<Self, SignalError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SignalError::InvalidGrid(format!("dt must be > 0, got {dt}")));
        }
        if n_samples == 0 {
            return Err(SignalError::InvalidGrid("n_samples must be >= 1".into()));
        }
        Ok(Self { dt, n_samples })
    }

    /// Grid covering `[0, duration]` inclusive of both ends.
    pub fn with_duration(dt: f64, duration: f64) -> Result<Self, SignalError> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(SignalError::InvalidGrid(format!(
                "duration must be >= 0, got {duration}"
            )));
        }
        let steps = (duration / dt).round();
        Self::new(dt, steps as usize + 1)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        (self.n_samples - 1) as f64 * self.dt
    }

    /// The same grid cut down to its first `n` samples.
    pub fn truncated(&self, n: usize) -> Result<Self, SignalError> {
        Self::new(self.dt, n.min(self.n_samples))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Real,
    Bool,
    Int,
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalKind::Real => "real",
            SignalKind::Bool => "bool",
            SignalKind::Int => "int",
        })
    }
}

impl FromStr for SignalKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(SignalKind::Real),
            "bool" | "boolean" => Ok(SignalKind::Bool),
            "int" | "integer" => Ok(SignalKind::Int),
            other => Err(format!("unknown signal kind `{other}`")),
        }
    }
}

/// A single sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn kind(&self) -> SignalKind {
        match self {
            Value::Real(_) => SignalKind::Real,
            Value::Int(_) => SignalKind::Int,
            Value::Bool(_) => SignalKind::Bool,
        }
    }

    /// Numeric view; booleans map to 0/1.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Real(v) => v,
            Value::Int(v) => v as f64,
            Value::Bool(b) => {
                if b {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_bool(&self) -> bool {
        match *self {
            Value::Bool(b) => b,
            Value::Real(v) => v != 0.0,
            Value::Int(v) => v != 0,
        }
    }

    /// The zero value of a kind, used before a signal is first written.
    pub fn zero(kind: SignalKind) -> Value {
        match kind {
            SignalKind::Real => Value::Real(0.0),
            SignalKind::Int => Value::Int(0),
            SignalKind::Bool => Value::Bool(false),
        }
    }

    /// Converts a numeric result into a sample of `kind`.
    /// Reals are rounded to the nearest whole number for integer signals and
    /// thresholded at 0.5 for boolean signals.
    pub fn coerce(v: f64, kind: SignalKind) -> Value {
        match kind {
            SignalKind::Real => Value::Real(v),
            SignalKind::Int => Value::Int(v.round() as i64),
            SignalKind::Bool => Value::Bool(v >= 0.5),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{}` on f64 prints the shortest string that round-trips.
            Value::Real(v) => write!(f, "{v}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Typed sample storage of one signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    Int(Vec<i64>),
    Bool(Vec<bool>),
}

impl Samples {
    pub fn with_capacity(kind: SignalKind, n: usize) -> Self {
        match kind {
            SignalKind::Real => Samples::Real(Vec::with_capacity(n)),
            SignalKind::Int => Samples::Int(Vec::with_capacity(n)),
            SignalKind::Bool => Samples::Bool(Vec::with_capacity(n)),
        }
    }

    pub fn kind(&self) -> SignalKind {
        match self {
            Samples::Real(_) => SignalKind::Real,
            Samples::Int(_) => SignalKind::Int,
            Samples::Bool(_) => SignalKind::Bool,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Int(v) => v.len(),
            Samples::Bool(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, k: usize) -> Option<Value> {
        match self {
            Samples::Real(v) => v.get(k).map(|x| Value::Real(*x)),
            Samples::Int(v) => v.get(k).map(|x| Value::Int(*x)),
            Samples::Bool(v) => v.get(k).map(|x| Value::Bool(*x)),
        }
    }

    pub fn last(&self) -> Option<Value> {
        self.len().checked_sub(1).and_then(|k| self.get(k))
    }

    /// Appends a sample, coercing numerics into the storage kind.
    pub fn push(&mut self, value: Value) {
        match self {
            Samples::Real(v) => v.push(value.as_f64()),
            Samples::Int(v) => v.push(match value {
                Value::Int(i) => i,
                other => other.as_f64().round() as i64,
            }),
            Samples::Bool(v) => v.push(value.as_bool()),
        }
    }

    pub fn truncate(&mut self, n: usize) {
        match self {
            Samples::Real(v) => v.truncate(n),
            Samples::Int(v) => v.truncate(n),
            Samples::Bool(v) => v.truncate(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    name: String,
    samples: Samples,
}

impl Signal {
    pub fn new(name: impl Into<String>, samples: Samples) -> Result<Self, SignalError> {
        let name = name.into();
        if let Samples::Real(values) = &samples {
            if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                return Err(SignalError::KindMismatch {
                    name,
                    kind: SignalKind::Real,
                    value: bad.to_string(),
                });
            }
        }
        Ok(Self { name, samples })
    }

    pub fn real(name: impl Into<String>, values: Vec<f64>) -> Result<Self, SignalError> {
        Self::new(name, Samples::Real(values))
    }

    pub fn boolean(name: impl Into<String>, values: Vec<bool>) -> Result<Self, SignalError> {
        Self::new(name, Samples::Bool(values))
    }

    pub fn integer(name: impl Into<String>, values: Vec<i64>) -> Result<Self, SignalError> {
        Self::new(name, Samples::Int(values))
    }

    /// Builds a signal of `kind` from a sequence of values.
    pub fn from_values(
        name: impl Into<String>,
        kind: SignalKind,
        values: impl IntoIterator<Item = Value>,
    ) -> Result<Self, SignalError> {
        let name = name.into();
        let mut samples = Samples::with_capacity(kind, 0);
        for v in values {
            if kind == SignalKind::Int {
                if let Value::Real(x) = v {
                    if x.fract() != 0.0 {
                        return Err(SignalError::KindMismatch {
                            name,
                            kind,
                            value: x.to_string(),
                        });
                    }
                }
            }
            samples.push(v);
        }
        Self::new(name, samples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SignalKind {
        self.samples.kind()
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<Value> {
        self.samples.get(k)
    }

    /// Numeric view of all samples.
    pub fn to_f64(&self) -> Vec<f64> {
        match &self.samples {
            Samples::Real(v) => v.clone(),
            Samples::Int(v) => v.iter().map(|x| *x as f64).collect(),
            Samples::Bool(v) => v.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// An immutable record of one run: a grid plus uniquely named signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    grid: TimeGrid,
    signals: Vec<Signal>,
    index: HashMap<String, usize>,
}

impl Trace {
    pub fn new(grid: TimeGrid, signals: Vec<Signal>) -> Result<Self, SignalError> {
        let mut index = HashMap::with_capacity(signals.len());
        for (i, s) in signals.iter().enumerate() {
            if s.len() != grid.n_samples() {
                return Err(SignalError::LengthMismatch {
                    name: s.name.clone(),
                    got: s.len(),
                    expected: grid.n_samples(),
                });
            }
            if index.insert(s.name.clone(), i).is_some() {
                return Err(SignalError::DuplicateSignal(s.name.clone()));
            }
        }
        Ok(Self {
            grid,
            signals,
            index,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn signal(&self, name: &str) -> Option<&Signal> {
        self.index.get(name).map(|&i| &self.signals[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn sample_at(&self, name: &str, k: usize) -> Result<Value, SignalError> {
        let signal = self
            .signal(name)
            .ok_or_else(|| SignalError::UnknownSignal(name.to_string()))?;
        signal.get(k).ok_or(SignalError::IndexOutOfRange {
            index: k,
            len: self.grid.n_samples(),
        })
    }

    /// Joins two traces on the same grid into one.
    pub fn merge(&self, other: &Trace) -> Result<Trace, SignalError> {
        if self.grid != other.grid {
            return Err(SignalError::InvalidGrid("cannot merge traces on different grids".into()));
        }
        let signals = self
            .signals
            .iter()
            .chain(other.signals.iter())
            .cloned()
            .collect();
        Trace::new(self.grid, signals)
    }

    /// Writes the tab-separated trace format.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), SignalError> {
        writeln!(out, "# dt={} n={}", self.grid.dt(), self.grid.n_samples())?;
        write!(out, "time")?;
        for s in &self.signals {
            write!(out, "\t{}:{}", s.name, s.kind())?;
        }
        writeln!(out)?;
        for k in 0..self.grid.n_samples() {
            write!(out, "{}", self.grid.time(k))?;
            for s in &self.signals {
                // Length checked on construction.
                write!(out, "\t{}", s.get(k).expect("sample in range"))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace text is utf-8")
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Trace, SignalError> {
        let mut lines = input.lines().enumerate();
        let fmt_err = |line: usize, msg: &str| SignalError::Format {
            line: line + 1,
            msg: msg.to_string(),
        };

        let (ln, header) = lines.next().ok_or_else(|| fmt_err(0, "empty input"))?;
        let header = header?;
        let rest = header
            .strip_prefix("# ")
            .ok_or_else(|| fmt_err(ln, "expected `# dt=<float> n=<int>`"))?;
        let mut dt = None;
        let mut n = None;
        for field in rest.split_whitespace() {
            if let Some(v) = field.strip_prefix("dt=") {
                dt = Some(v.parse::<f64>().map_err(|_| fmt_err(ln, "bad dt"))?);
            } else if let Some(v) = field.strip_prefix("n=") {
                n = Some(v.parse::<usize>().map_err(|_| fmt_err(ln, "bad n"))?);
            }
        }
        let grid = TimeGrid::new(
            dt.ok_or_else(|| fmt_err(ln, "missing dt"))?,
            n.ok_or_else(|| fmt_err(ln, "missing n"))?,
        )?;

        let (ln, columns) = lines.next().ok_or_else(|| fmt_err(1, "missing column header"))?;
        let columns = columns?;
        let mut cols = columns.split('\t');
        if cols.next() != Some("time") {
            return Err(fmt_err(ln, "first column must be `time`"));
        }
        let mut names = Vec::new();
        let mut data = Vec::new();
        for col in cols {
            let (name, kind) = col
                .rsplit_once(':')
                .ok_or_else(|| fmt_err(ln, "column must be `name:kind`"))?;
            let kind: SignalKind = kind.parse().map_err(|e: String| fmt_err(ln, &e))?;
            names.push(name.to_string());
            data.push(Samples::with_capacity(kind, grid.n_samples()));
        }

        let mut rows = 0;
        for (ln, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            fields.next().ok_or_else(|| fmt_err(ln, "missing time"))?;
            for samples in data.iter_mut() {
                let raw = fields.next().ok_or_else(|| fmt_err(ln, "too few fields"))?;
                let value = match samples.kind() {
                    SignalKind::Real => Value::Real(
                        raw.parse::<f64>()
                            .map_err(|_| fmt_err(ln, &format!("bad real `{raw}`")))?,
                    ),
                    SignalKind::Int => Value::Int(
                        raw.parse::<i64>()
                            .map_err(|_| fmt_err(ln, &format!("bad int `{raw}`")))?,
                    ),
                    SignalKind::Bool => match raw {
                        "true" => Value::Bool(true),
                        "false" => Value::Bool(false),
                        _ => return Err(fmt_err(ln, &format!("bad bool `{raw}`"))),
                    },
                };
                samples.push(value);
            }
            if fields.next().is_some() {
                return Err(fmt_err(ln, "too many fields"));
            }
            rows += 1;
        }
        if rows != grid.n_samples() {
            return Err(SignalError::Format {
                line: rows + 2,
                msg: format!("expected {} rows, found {rows}", grid.n_samples()),
            });
        }
        let signals = names
            .into_iter()
            .zip(data)
            .map(|(n, d)| Signal::new(n, d))
            .collect::<Result<Vec<_>, _>>()?;
        Trace::new(grid, signals)
    }

    pub fn from_text(text: &str) -> Result<Trace, SignalError> {
        Self::read_from(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant_trace() -> Trace {
        let grid = TimeGrid::new(0.1, 10).unwrap();
        Trace::new(grid, vec![Signal::real("x", vec![3.5; 10]).unwrap()]).unwrap()
    }

    #[test]
    fn sample_at_constant_signal() {
        assert_eq!(constant_trace().sample_at("x", 7), Ok(Value::Real(3.5)));
    }

    #[test]
    fn sample_at_unknown_signal() {
        assert_eq!(
            constant_trace().sample_at("missing", 0),
            Err(SignalError::UnknownSignal("missing".into()))
        );
    }

    #[test]
    fn sample_at_past_the_end() {
        assert_eq!(
            constant_trace().sample_at("x", 10),
            Err(SignalError::IndexOutOfRange { index: 10, len: 10 })
        );
    }

    #[test]
    fn grid_invariants() {
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(0.1, 0).is_err());
        let g = TimeGrid::with_duration(0.01, 40.0).unwrap();
        assert_eq!(g.n_samples(), 4001);
        assert!((g.duration() - 40.0).abs() < 1e-9);
    }

    #[test]
    fn construction_rejects_ragged_signals() {
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let err = Trace::new(grid, vec![Signal::real("x", vec![1.0, 2.0]).unwrap()]);
        assert!(matches!(err, Err(SignalError::LengthMismatch { .. })));
        let dup = Trace::new(
            grid,
            vec![
                Signal::real("x", vec![1.0; 3]).unwrap(),
                Signal::boolean("x", vec![true; 3]).unwrap(),
            ],
        );
        assert!(matches!(dup, Err(SignalError::DuplicateSignal(_))));
    }

    #[test]
    fn integer_signal_rejects_fractions() {
        let err = Signal::from_values("m", SignalKind::Int, [Value::Real(1.5)]);
        assert!(matches!(err, Err(SignalError::KindMismatch { .. })));
    }

    #[test]
    fn file_format_layout() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let t = Trace::new(
            grid,
            vec![
                Signal::real("x", vec![0.1, -2.0]).unwrap(),
                Signal::boolean("b", vec![true, false]).unwrap(),
                Signal::integer("m", vec![3, 4]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(
            t.to_text(),
            "# dt=0.5 n=2\ntime\tx:real\tb:bool\tm:int\n0\t0.1\ttrue\t3\n0.5\t-2\tfalse\t4\n"
        );
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(Trace::from_text("").is_err());
        assert!(Trace::from_text("# dt=0.1 n=1\ntime\tx:real\n0\tabc\n").is_err());
        assert!(Trace::from_text("# dt=0.1 n=2\ntime\tx:real\n0\t1\n").is_err());
        assert!(Trace::from_text("# dt=0.1 n=1\ntime\tx:complex\n0\t1\n").is_err());
    }

    proptest! {
        #[test]
        fn trace_text_round_trip(
            reals in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..40),
            seed in any::<u64>(),
        ) {
            let n = reals.len();
            let bools: Vec<bool> = (0..n).map(|i| (seed >> (i % 64)) & 1 == 1).collect();
            let ints: Vec<i64> = (0..n).map(|i| (seed as i64).wrapping_mul(i as i64 + 1) >> 7).collect();
            let grid = TimeGrid::new(0.013, n).unwrap();
            let trace = Trace::new(grid, vec![
                Signal::real("r", reals).unwrap(),
                Signal::boolean("b", bools).unwrap(),
                Signal::integer("i", ints).unwrap(),
            ]).unwrap();
            let back = Trace::from_text(&trace.to_text()).unwrap();
            prop_assert_eq!(back, trace);
        }
    }
}
