use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::search::{Problem, SearchConfig};
use crate::sim::{registry, Bundle, ModelSpec};
use crate::stl::{parse_formula, InputProfile, SignalProfile, StlFormula, StlProblem};
use crate::testlang::{parse_syntax, validate, BlockKind, TestBlock};

use super::report::RunRecord;
use super::CliError;

/// Which oracle drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Parameterized test sequence judged by a test assessment.
    #[default]
    Assessment,
    /// Input profile judged by an STL formula.
    Stl,
}

/// A built-in model, optionally with some of its settings replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    /// A built-in name, or the path of a TOML file holding a [`ModelOverrides`]
    /// table.
    Name(String),
    Spec(ModelOverrides),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub name: String,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub fault_enabled: Option<bool>,
    pub initial_state: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StlSection {
    pub formula: Option<PathBuf>,
    #[serde(rename = "signal")]
    pub signals: Vec<SignalProfile>,
}

/// Contents of a run configuration file. Relative paths are resolved against
/// the directory of the file.
///
/// ```toml
/// model = "at_lite"
/// sequence = "param.tseq"
/// assessment = "assess.tassess"
/// repetitions = 20
/// output_dir = "results"
///
/// [search]
/// seed = 1
/// max_iterations = 300
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelRef>,
    pub mode: Mode,
    pub sequence: Option<PathBuf>,
    pub assessment: Option<PathBuf>,
    pub stl: StlSection,
    pub search: SearchConfig,
    pub repetitions: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            mode: Mode::Assessment,
            sequence: None,
            assessment: None,
            stl: StlSection::default(),
            search: SearchConfig::default(),
            repetitions: 1,
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| CliError::Validation(format!("run config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = read(path)?;
        Self::from_toml(&src).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Reads and validates a test block, failing on any diagnostic.
pub fn load_block(path: &Path, kind: BlockKind) -> Result<TestBlock, CliError> {
    let src = read(path)?;
    let block = parse_syntax(&src)
        .map_err(|e| CliError::Validation(format!("{}:{}: syntax error: {}", path.display(), e.pos, e.msg)))?;
    let diags = validate(&block);
    if let Some(d) = diags.first() {
        return Err(CliError::Validation(format!("{}: {:?}: {}", path.display(), d.kind, d.message)));
    }
    if block.kind != kind {
        return Err(CliError::Validation(format!(
            "{}: expected a {} block",
            path.display(),
            match kind {
                BlockKind::Sequence => "sequence",
                BlockKind::Assessment => "assessment",
            }
        )));
    }
    Ok(block)
}

pub fn load_formula(path: &Path) -> Result<StlFormula, CliError> {
    let src = read(path)?;
    parse_formula(&src)
        .map_err(|e| CliError::Validation(format!("{}:{}: syntax error: {}", path.display(), e.pos, e.msg)))
}

/// Looks up a built-in bundle by model name.
pub fn bundle(name: &str) -> Result<Bundle, CliError> {
    registry().into_iter().find(|b| b.spec.name == name).ok_or_else(|| {
        let known: Vec<String> = registry().into_iter().map(|b| b.spec.name).collect();
        CliError::Validation(format!("unknown model `{name}` (built-in models: {})", known.join(", ")))
    })
}

fn apply_overrides(mut spec: ModelSpec, o: &ModelOverrides) -> Result<ModelSpec, CliError> {
    if let Some(dt) = o.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Validation(format!("model dt must be positive, got {dt}")));
        }
        spec = spec.with_dt(dt);
    }
    if let Some(d) = o.duration {
        if !(d.is_finite() && d >= spec.dt) {
            return Err(CliError::Validation(format!("model duration must be at least dt, got {d}")));
        }
        spec = spec.with_duration(d);
    }
    if let Some(f) = o.fault_enabled {
        spec = spec.with_fault(f);
    }
    if let Some(s) = &o.initial_state {
        if s.len() != spec.initial_state.len() {
            return Err(CliError::Validation(format!(
                "model `{}` has {} state variables, got {}",
                spec.name,
                spec.initial_state.len(),
                s.len()
            )));
        }
        spec = spec.with_initial_state(s.clone());
    }
    Ok(spec)
}

/// A fully resolved falsification experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: ModelSpec,
    pub mode: Mode,
    /// Closed sequence used by `simulate` when no parameters are given.
    pub default_sequence: TestBlock,
    pub sequence: TestBlock,
    pub assessment: TestBlock,
    pub formula: StlFormula,
    pub profile: InputProfile,
    pub search: SearchConfig,
    pub repetitions: usize,
    pub output_dir: Option<PathBuf>,
}

impl Experiment {
    /// The shipped artifacts of a built-in model with default settings.
    pub fn builtin(name: &str) -> Result<Self, CliError> {
        let b = bundle(name)?;
        Ok(Self {
            default_sequence: b.default_sequence(),
            sequence: b.param_sequence(),
            assessment: b.assessment(),
            formula: b.stl_formula(),
            profile: b.input_profile(),
            model: b.spec,
            mode: Mode::Assessment,
            search: SearchConfig::default(),
            repetitions: 1,
            output_dir: None,
        })
    }

    /// Resolves a config whose relative paths are anchored at `base`.
    pub fn from_config(cfg: &RunConfig, base: &Path) -> Result<Self, CliError> {
        let overrides = match &cfg.model {
            None => return Err(CliError::Validation("run config names no model".into())),
            Some(ModelRef::Name(n)) if n.ends_with(".toml") => {
                let path = resolve(base, Path::new(n));
                toml::from_str::<ModelOverrides>(&read(&path)?)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            }
            Some(ModelRef::Name(n)) => ModelOverrides {
                name: n.clone(),
                ..Default::default()
            },
            Some(ModelRef::Spec(o)) => o.clone(),
        };
        let mut exp = Self::builtin(&overrides.name)?;
        exp.model = apply_overrides(exp.model, &overrides)?;
        exp.mode = cfg.mode;
        if let Some(p) = &cfg.sequence {
            exp.sequence = load_block(&resolve(base, p), BlockKind::Sequence)?;
        }
        if let Some(p) = &cfg.assessment {
            exp.assessment = load_block(&resolve(base, p), BlockKind::Assessment)?;
        }
        if let Some(p) = &cfg.stl.formula {
            exp.formula = load_formula(&resolve(base, p))?;
        }
        if !cfg.stl.signals.is_empty() {
            exp.profile = InputProfile {
                signals: cfg.stl.signals.clone(),
            };
        }
        exp.search = cfg.search.clone();
        exp.repetitions = cfg.repetitions;
        exp.output_dir = cfg.output_dir.as_ref().map(|p| resolve(base, p));
        Ok(exp)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg = RunConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_config(&cfg, base)
    }

    /// Method label used in summaries, e.g. `simulated_annealing` or
    /// `stl_uniform_random`.
    pub fn method(&self) -> String {
        match self.mode {
            Mode::Assessment => self.search.algorithm.as_str().to_string(),
            Mode::Stl => format!("stl_{}", self.search.algorithm.as_str()),
        }
    }

    /// Checks everything a run needs before any run starts.
    pub fn check(&self) -> Result<(), CliError> {
        if self.repetitions == 0 {
            return Err(CliError::Validation("repetitions must be at least 1".into()));
        }
        self.search.check().map_err(|e| CliError::Validation(e.to_string()))?;
        match self.mode {
            Mode::Assessment => {
                Problem::new(&self.model, &self.sequence, &self.assessment)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
            }
            Mode::Stl => {
                StlProblem::new(&self.model, &self.profile, &self.formula)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
            }
        }
        Ok(())
    }

    /// Runs one repetition with seed `search.seed + run_id`.
    pub fn run_one(&self, run_id: usize) -> Result<RunRecord, CliError> {
        let seed = self.search.seed.wrapping_add(run_id as u64);
        let config = self.search.clone().with_seed(seed);
        let result = match self.mode {
            Mode::Assessment => Problem::new(&self.model, &self.sequence, &self.assessment)
                .and_then(|p| p.falsify(&config))
                .map_err(|e| CliError::Runtime(e.to_string()))?,
            Mode::Stl => StlProblem::new(&self.model, &self.profile, &self.formula)
                .and_then(|p| p.falsify(&config))
                .map_err(|e| CliError::Runtime(e.to_string()))?,
        };
        Ok(RunRecord {
            run_id,
            model: self.model.name.clone(),
            method: self.method(),
            seed,
            names: result.space.names().iter().map(|s| s.to_string()).collect(),
            outcome: result.outcome.record(),
            history_csv: result.history_csv(),
        })
    }

    /// Runs all repetitions on a pool of `jobs` workers (all cores when
    /// `None`). Records come back in run-id order.
    pub fn run(&self, jobs: Option<usize>) -> Result<Vec<RunRecord>, CliError> {
        self.check()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        pool.install(|| (0..self.repetitions).into_par_iter().map(|i| self.run_one(i)).collect())
    }
}
