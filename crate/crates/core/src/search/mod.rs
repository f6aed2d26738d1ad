//! Falsification search over the parameters of a parameterized test
//! sequence.
//!
//! The loop minimizes a fitness function over a box. Iteration 1 evaluates
//! the box midpoint (simulated annealing) or a uniform draw (baseline); the
//! search stops at the first negative fitness.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::fitness::{self, FitnessError};
use crate::sim::{Harness, ModelSpec, SimError};
use crate::testlang::{validate, Diagnostic, TestBlock};

mod space;

pub use space::{extract_space, instantiate, is_closed, substitute, Parameter, SearchSpace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("the sequence declares no parameters")]
    NoParameters,
    #[error("expected a sequence block")]
    NotASequence,
    #[error("parameter `{0}` lacks the required prefix")]
    BadParameterName(String),
    #[error("parameter `{0}` has no valid domain")]
    InvalidDomain(String),
    #[error("expected {expected} values, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("`{name}` = {value} is outside [{lower}, {upper}]")]
    OutOfDomain {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid artifact: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SimulatedAnnealing,
    UniformRandom,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::SimulatedAnnealing => "simulated_annealing",
            Algorithm::UniformRandom => "uniform_random",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simulated_annealing" | "sa" => Ok(Algorithm::SimulatedAnnealing),
            "uniform_random" | "uniform" => Ok(Algorithm::UniformRandom),
            _ => Err(format!(
                "unknown algorithm `{s}` (expected simulated_annealing or uniform_random)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub max_iterations: usize,
    /// Wall-clock budget in seconds.
    pub budget_seconds: Option<f64>,
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Fixed initial temperature; `None` uses
    /// `temperature_factor · max(|f1|, 1)` where `f1` is the first evaluated
    /// fitness.
    pub initial_temperature: Option<f64>,
    pub temperature_factor: f64,
    pub cooling: f64,
    pub stddev_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            budget_seconds: None,
            seed: 0,
            algorithm: Algorithm::SimulatedAnnealing,
            initial_temperature: None,
            temperature_factor: 0.1,
            cooling: 0.99,
            stddev_fraction: 0.4,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn check(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return bad("cooling must lie in (0, 1)");
        }
        if !(self.stddev_fraction > 0.0 && self.stddev_fraction <= 1.0) {
            return bad("stddev_fraction must lie in (0, 1]");
        }
        if !(self.temperature_factor > 0.0 && self.temperature_factor.is_finite()) {
            return bad("temperature_factor must be positive");
        }
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0 && t.is_finite()) {
                return bad("initial_temperature must be positive");
            }
        }
        if let Some(b) = self.budget_seconds {
            if !(b > 0.0) {
                return bad("budget_seconds must be positive");
            }
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub values: Vec<f64>,
    /// `None` while pending or when the evaluation failed.
    pub fitness: Option<f64>,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    FailureRevealing {
        candidate: Candidate,
        fitness: f64,
        iterations: usize,
        elapsed: Duration,
    },
    NoFaultFound {
        best: Candidate,
        fitness: Option<f64>,
        iterations: usize,
        elapsed: Duration,
    },
}

impl Outcome {
    pub fn is_failure_revealing(&self) -> bool {
        matches!(self, Outcome::FailureRevealing { .. })
    }

    pub fn status(&self) -> &'static str {
        match self {
            Outcome::FailureRevealing { .. } => "TC",
            Outcome::NoFaultFound { .. } => "NFF",
        }
    }

    pub fn fitness(&self) -> Option<f64> {
        match self {
            Outcome::FailureRevealing { fitness, .. } => Some(*fitness),
            Outcome::NoFaultFound { fitness, .. } => *fitness,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            Outcome::FailureRevealing { iterations, .. } | Outcome::NoFaultFound { iterations, .. } => {
                *iterations
            }
        }
    }

    pub fn elapsed(&self) -> Duration {
        match self {
            Outcome::FailureRevealing { elapsed, .. } | Outcome::NoFaultFound { elapsed, .. } => {
                *elapsed
            }
        }
    }

    /// The failure-revealing candidate, or the best one seen.
    pub fn candidate(&self) -> &Candidate {
        match self {
            Outcome::FailureRevealing { candidate, .. } => candidate,
            Outcome::NoFaultFound { best, .. } => best,
        }
    }

    pub fn record(&self) -> OutcomeRecord {
        OutcomeRecord {
            status: self.status().to_string(),
            fitness: self.fitness(),
            iterations: self.iterations(),
            elapsed_ms: self.elapsed().as_millis() as u64,
            values: self.candidate().values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub status: String,
    pub fitness: Option<f64>,
    pub iterations: usize,
    pub elapsed_ms: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub values: Vec<f64>,
    /// `None` when the evaluation failed.
    pub fitness: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub space: SearchSpace,
    pub outcome: Outcome,
    pub history: Vec<HistoryEntry>,
}

impl SearchResult {
    /// History as CSV with header `iter,<names...>,fitness,accepted`.
    pub fn write_history<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iter".to_string()];
        header.extend(self.space.names().iter().map(|s| s.to_string()));
        header.push("fitness".into());
        header.push("accepted".into());
        w.write_record(&header)?;
        for h in &self.history {
            let mut row = vec![h.iteration.to_string()];
            row.extend(h.values.iter().map(|v| v.to_string()));
            row.push(h.fitness.map_or("NA".into(), |f| f.to_string()));
            row.push(h.accepted.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn history_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_history(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Maps `x` into `[lo, hi]` by mirroring at the bounds.
pub fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    if w <= 0.0 {
        return lo;
    }
    if (lo..=hi).contains(&x) {
        return x;
    }
    let m = (x - lo).rem_euclid(2.0 * w);
    let y = if m > w { 2.0 * w - m } else { m };
    (lo + y).clamp(lo, hi)
}

/// Gaussian neighbour of `current` with per-axis stddev
/// `fraction · width · temperature / t0`, reflected into the box.
pub fn propose<R: Rng + ?Sized>(
    current: &[f64],
    space: &SearchSpace,
    temperature: f64,
    t0: f64,
    fraction: f64,
    rng: &mut R,
) -> Vec<f64> {
    let scale = fraction * (temperature / t0);
    current
        .iter()
        .zip(space.params())
        .map(|(&x, p)| {
            let z: f64 = StandardNormal.sample(rng);
            reflect(x + z * scale * p.width(), p.lower, p.upper)
        })
        .collect()
}

/// One independent uniform point of the box.
pub fn uniform_point<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Vec<f64> {
    space
        .params()
        .iter()
        .map(|p| {
            if p.width() > 0.0 {
                rng.random_range(p.lower..=p.upper)
            } else {
                p.lower
            }
        })
        .collect()
}

/// Metropolis rule for minimization.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    rng.random::<f64>() < (-delta / temperature).exp()
}

/// Minimizes `objective` over `space`, stopping at the first negative value.
/// Failed evaluations count as iterations but are never accepted.
pub fn minimize<E>(
    space: &SearchSpace,
    config: &SearchConfig,
    mut objective: impl FnMut(&[f64]) -> Result<f64, E>,
) -> Result<SearchResult, SearchError> {
    config.check()?;
    let start = Instant::now();
    let budget = config.budget_seconds.map(Duration::from_secs_f64);
    let mut rng = config.rng();
    let mut history = Vec::new();
    let mut current: Option<(Vec<f64>, f64)> = None;
    let mut best: Option<Candidate> = None;
    let mut t0 = config.initial_temperature;
    let mut temperature = t0.unwrap_or(1.0);

    for it in 1..=config.max_iterations {
        if it > 1 && budget.is_some_and(|b| start.elapsed() >= b) {
            break;
        }
        let x = match config.algorithm {
            Algorithm::UniformRandom => uniform_point(space, &mut rng),
            Algorithm::SimulatedAnnealing => match &current {
                None if it == 1 => space.midpoint(),
                None => uniform_point(space, &mut rng),
                Some((c, _)) => propose(
                    c,
                    space,
                    temperature,
                    t0.unwrap_or(1.0),
                    config.stddev_fraction,
                    &mut rng,
                ),
            },
        };
        debug_assert!(space.contains(&x));
        let f = objective(&x).ok().filter(|f| !f.is_nan());
        let accepted = match (f, config.algorithm) {
            (None, _) => false,
            (Some(_), Algorithm::UniformRandom) => true,
            (Some(fx), Algorithm::SimulatedAnnealing) => {
                if t0.is_none() {
                    t0 = Some(config.temperature_factor * fx.abs().max(1.0));
                    temperature = t0.unwrap();
                }
                match &current {
                    None => true,
                    Some((_, fc)) => metropolis_accept(fx - fc, temperature, &mut rng),
                }
            }
        };
        if let Some(fx) = f {
            if accepted {
                current = Some((x.clone(), fx));
            }
            if best.as_ref().and_then(|b| b.fitness).is_none_or(|bf| fx < bf) {
                best = Some(Candidate {
                    values: x.clone(),
                    fitness: Some(fx),
                    iteration: it,
                });
            }
        }
        history.push(HistoryEntry {
            iteration: it,
            values: x.clone(),
            fitness: f,
            accepted,
        });
        if let Some(fx) = f.filter(|&fx| fx < 0.0) {
            return Ok(SearchResult {
                space: space.clone(),
                outcome: Outcome::FailureRevealing {
                    candidate: Candidate {
                        values: x,
                        fitness: Some(fx),
                        iteration: it,
                    },
                    fitness: fx,
                    iterations: it,
                    elapsed: start.elapsed(),
                },
                history,
            });
        }
        if t0.is_some() {
            temperature *= config.cooling;
        }
    }
    let best = best.unwrap_or_else(|| Candidate {
        values: space.midpoint(),
        fitness: None,
        iteration: 0,
    });
    Ok(SearchResult {
        space: space.clone(),
        outcome: Outcome::NoFaultFound {
            fitness: best.fitness,
            best,
            iterations: history.len(),
            elapsed: start.elapsed(),
        },
        history,
    })
}

/// Validated sequence/assessment pair wired to a model, ready to evaluate
/// parameter vectors.
pub struct Problem {
    space: SearchSpace,
    harness: Harness,
}

impl Problem {
    pub fn new(model: &ModelSpec, pseq: &TestBlock, assessment: &TestBlock) -> Result<Self, SearchError> {
        let diags: Vec<_> = validate(pseq).into_iter().chain(validate(assessment)).collect();
        if !diags.is_empty() {
            return Err(SearchError::Invalid(diags));
        }
        let space = extract_space(pseq)?;
        let compiled = fitness::compile(assessment)?;
        let harness = Harness::new(model, pseq, Some(&compiled))?;
        Ok(Self { space, harness })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn harness(&self) -> &Harness {
        &self.harness
    }

    /// Final `FIT_TOTAL` for one assignment.
    pub fn fitness(&self, values: &[f64]) -> Result<f64, SearchError> {
        self.space.check(values)?;
        let run = self.harness.run(values)?;
        Ok(run.verdict.expect("harness has an assessment").fitness)
    }

    pub fn falsify(&self, config: &SearchConfig) -> Result<SearchResult, SearchError> {
        minimize(&self.space, config, |x| self.fitness(x))
    }
}

/// Searches for parameter values of `pseq` that make `assessment` fail on
/// `model`.
pub fn falsify(
    model: &ModelSpec,
    pseq: &TestBlock,
    assessment: &TestBlock,
    config: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    Problem::new(model, pseq, assessment)?.falsify(config)
}
