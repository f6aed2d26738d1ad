//! Command-line front end: `check`, `simulate`, `falsify`, `compare` and
//! `report`.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a run fails.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::fitness;
use crate::search::Algorithm;
use crate::signal::SignalKind;
use crate::sim::{Harness, ModelSpec};
use crate::stl::{parse_formula, StlMonitor};
use crate::testlang::{parse_syntax, validate, BlockKind, TestBlock};

mod config;
mod report;

pub use config::{
    bundle, load_block, load_formula, Experiment, Mode, ModelOverrides, ModelRef, RunConfig, StlSection,
};
pub use report::{
    aggregate, compare, read_summary, read_summary_file, render_report, write_comparison, write_summary,
    ComparisonRow, RunRecord, SummaryRow,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "testblocks", version, about = "Search-based falsification driven by test sequences and assessments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate artifacts.
    Check(CheckArgs),
    /// Run one sequence against a model.
    Simulate(SimulateArgs),
    /// Search for failure-revealing test cases.
    Falsify(FalsifyArgs),
    /// Compare methods on one model.
    Compare(CompareArgs),
    /// Summarize result files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Sequence (.tseq), assessment (.tassess), formula (.stl) or run config
    /// (.toml) files. Without files, checks the shipped artifacts.
    pub files: Vec<PathBuf>,
    /// Also check that blocks and formulas fit this model's ports.
    #[arg(long)]
    pub model: Option<String>,
}

/// Options shared by commands that resolve an experiment.
#[derive(Debug, Args, Clone, Default)]
pub struct TargetArgs {
    /// Run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in model name.
    #[arg(long)]
    pub model: Option<String>,
    /// Test sequence file.
    #[arg(long)]
    pub sequence: Option<PathBuf>,
    /// Test assessment file.
    #[arg(long)]
    pub assessment: Option<PathBuf>,
    /// Disable the model's seeded fault.
    #[arg(long)]
    pub no_fault: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Parameter value, `NAME=VALUE`; selects the parameterized sequence.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Skip the assessment.
    #[arg(long)]
    pub no_assessment: bool,
    /// Write the input and output trace here (`-` for stdout).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write the per-sample fitness channels here.
    #[arg(long)]
    pub channels: Option<PathBuf>,
    /// Write one step-machine line per sample here.
    #[arg(long)]
    pub debug_log: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SearchArgs {
    /// Base seed; run `i` uses `seed + i`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration budget per run.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Number of runs.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Search with an input profile and STL formula instead of the
    /// parameterized sequence and assessment.
    #[arg(long)]
    pub stl: bool,
    /// STL formula file.
    #[arg(long)]
    pub formula: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FalsifyArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// `simulated_annealing` or `uniform_random`.
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Output directory for `summary.csv` and the run histories.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Result sets: `summary.csv` files, or run configs to execute.
    pub inputs: Vec<PathBuf>,
    /// Run these methods on `--model` (or `--config`) as additional result
    /// sets, e.g. `simulated_annealing,uniform_random`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Algorithm>,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Output directory for the runs executed by this command; the table is
    /// also written there as `comparison.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// `summary.csv` files.
    #[arg(required = true)]
    pub summaries: Vec<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Check(a) => cmd_check(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out).map(|_| 0),
        Command::Falsify(a) => cmd_falsify(a, out).map(|_| 0),
        Command::Compare(a) => cmd_compare(a, out).map(|_| 0),
        Command::Report(a) => cmd_report(a, out).map(|_| 0),
    }
}

// ---- check ----

fn port_signals(spec: &ModelSpec) -> Vec<(String, SignalKind)> {
    spec.inputs.iter().chain(&spec.outputs).cloned().collect()
}

/// Diagnostics for one block, plus port checks against `model`.
fn check_block(block: &TestBlock, model: Option<&ModelSpec>) -> Vec<String> {
    let mut diags: Vec<String> = validate(block)
        .into_iter()
        .map(|d| format!("{:?}: {}", d.kind, d.message))
        .collect();
    if !diags.is_empty() {
        return diags;
    }
    let Some(spec) = model else { return diags };
    match block.kind {
        BlockKind::Sequence => {
            if let Err(e) = Harness::new(spec, block, None) {
                diags.push(format!("SignalMismatch: {e}"));
            }
        }
        BlockKind::Assessment => match fitness::compile(block) {
            Ok(a) => {
                let ports = port_signals(spec);
                for (name, _) in a.inputs() {
                    if !ports.iter().any(|(n, _)| n == name) {
                        diags.push(format!(
                            "SignalMismatch: assessment reads `{name}`, which model `{}` neither takes nor produces",
                            spec.name
                        ));
                    }
                }
            }
            Err(e) => diags.push(e.to_string()),
        },
    }
    diags
}

fn check_formula_src(src: &str, model: Option<&ModelSpec>) -> Vec<String> {
    let f = match parse_formula(src) {
        Ok(f) => f,
        Err(e) => return vec![format!("{}: syntax error: {}", e.pos, e.msg)],
    };
    let Some(spec) = model else { return Vec::new() };
    let monitor = match StlMonitor::new(&f, &port_signals(spec)) {
        Ok(m) => m,
        Err(e) => return vec![e.to_string()],
    };
    let grid = spec.grid();
    match monitor.check_horizon(grid.dt(), grid.n_samples()) {
        Ok(()) => Vec::new(),
        Err(e) => vec![e.to_string()],
    }
}

fn check_block_src(src: &str, model: Option<&ModelSpec>) -> Vec<String> {
    match parse_syntax(src) {
        Ok(b) => check_block(&b, model),
        Err(e) => vec![format!("{}: syntax error: {}", e.pos, e.msg)],
    }
}

fn check_file(path: &Path, model: Option<&ModelSpec>) -> Vec<String> {
    let src = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => return vec![e.to_string()],
    };
    match path.extension().and_then(|e| e.to_str()) {
        Some("stl") => check_formula_src(&src, model),
        Some("toml") => match Experiment::load(path).and_then(|x| x.check()) {
            Ok(()) => Vec::new(),
            Err(e) => vec![e.to_string()],
        },
        _ => check_block_src(&src, model),
    }
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let model = a.model.as_deref().map(bundle).transpose()?.map(|b| b.spec);
    let mut failed = 0;
    let mut report = |label: &str, diags: Vec<String>| {
        if diags.is_empty() {
            let _ = writeln!(out, "ok: {label}");
        } else {
            failed += 1;
            for d in diags {
                // Positions attach directly: `file:3:16: ...`.
                let sep = if d.starts_with(|c: char| c.is_ascii_digit()) { ":" } else { ": " };
                let _ = writeln!(err, "{label}{sep}{d}");
            }
        }
    };
    if a.files.is_empty() {
        let bundles = match &a.model {
            Some(m) => vec![bundle(m)?],
            None => crate::sim::registry(),
        };
        for b in bundles {
            let m = Some(&b.spec);
            let n = &b.spec.name;
            report(&format!("{n}/default.tseq"), check_block_src(b.default_sequence, m));
            report(&format!("{n}/param.tseq"), check_block_src(b.param_sequence, m));
            report(&format!("{n}/assess.tassess"), check_block_src(b.assessment, m));
            report(&format!("{n}/spec.stl"), check_formula_src(b.stl, m));
            let profile = crate::stl::InputProfile::from_toml(b.profile)
                .and_then(|p| crate::stl::StlProblem::new(&b.spec, &p, &b.stl_formula()).map(|_| ()));
            report(&format!("{n}/profile.toml"), profile.err().map(|e| e.to_string()).into_iter().collect());
        }
    }
    for f in &a.files {
        report(&f.display().to_string(), check_file(f, model.as_ref()));
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

// ---- shared resolution ----

fn resolve_experiment(t: &TargetArgs) -> Result<Experiment, CliError> {
    let mut exp = match (&t.config, &t.model) {
        (Some(c), _) => {
            let mut cfg = RunConfig::load(c)?;
            if let Some(m) = &t.model {
                cfg.model = Some(ModelRef::Name(m.clone()));
            }
            Experiment::from_config(&cfg, c.parent().unwrap_or(Path::new(".")))?
        }
        (None, Some(m)) => Experiment::builtin(m)?,
        (None, None) => return Err(CliError::Validation("give --model or --config".into())),
    };
    if let Some(p) = &t.sequence {
        exp.sequence = load_block(p, BlockKind::Sequence)?;
    }
    if let Some(p) = &t.assessment {
        exp.assessment = load_block(p, BlockKind::Assessment)?;
    }
    if t.no_fault {
        exp.model = exp.model.with_fault(false);
    }
    Ok(exp)
}

fn apply_search_args(exp: &mut Experiment, s: &SearchArgs) -> Result<(), CliError> {
    if let Some(seed) = s.seed {
        exp.search.seed = seed;
    }
    if let Some(n) = s.iters {
        exp.search.max_iterations = n;
    }
    if let Some(n) = s.reps {
        exp.repetitions = n;
    }
    if s.stl {
        exp.mode = Mode::Stl;
    }
    if let Some(p) = &s.formula {
        exp.formula = load_formula(p)?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::new(f)))
}

// ---- simulate ----

fn parse_params(items: &[String]) -> Result<HashMap<String, f64>, CliError> {
    items
        .iter()
        .map(|s| {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("expected NAME=VALUE, got `{s}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let exp = resolve_experiment(&a.target)?;
    let params = parse_params(&a.params)?;
    let sequence = if a.target.sequence.is_some() || a.target.config.is_some() || !params.is_empty() {
        &exp.sequence
    } else {
        &exp.default_sequence
    };
    let assessment = if a.no_assessment {
        None
    } else {
        Some(fitness::compile(&exp.assessment).map_err(|e| CliError::Validation(e.to_string()))?)
    };
    let harness =
        Harness::new(&exp.model, sequence, assessment.as_ref()).map_err(|e| CliError::Validation(e.to_string()))?;
    let prog = harness.sequence().expect("built from a sequence");
    let values = prog
        .param_vector(&params)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let run = match &a.debug_log {
        Some(p) => {
            let mut log = create(p)?;
            let run = harness.run_logged(&values, &mut log).map_err(runtime)?;
            log.flush().map_err(runtime)?;
            run
        }
        None => harness.run(&values).map_err(runtime)?,
    };
    let trace = run.combined();
    match a.trace.as_deref() {
        Some(p) if p == Path::new("-") => trace.write_to(&mut *out).map_err(runtime)?,
        Some(p) => {
            let mut w = create(p)?;
            trace.write_to(&mut w).map_err(runtime)?;
            w.flush().map_err(runtime)?;
        }
        None => {}
    }
    if let (Some(p), Some(m)) = (&a.channels, &run.monitor) {
        let mut w = create(p)?;
        w.write_all(m.channel_dump().as_bytes()).map_err(runtime)?;
        w.flush().map_err(runtime)?;
    }
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(runtime);
    w(
        out,
        format!(
            "simulated {} for {} s ({} samples)",
            exp.model.name,
            trace.grid().duration(),
            trace.grid().n_samples()
        ),
    )?;
    if let Some(v) = &run.verdict {
        for (id, status) in &v.statements {
            w(out, format!("{id}: {status}"))?;
        }
        w(out, format!("overall: {}", v.overall))?;
        w(out, format!("fitness: {}", v.fitness))?;
    }
    Ok(())
}

// ---- falsify ----

/// Writes `summary.csv` and one history per run into `dir`.
pub fn write_results(dir: &Path, records: &[RunRecord]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    for r in records {
        let p = dir.join(format!("history_{:03}.csv", r.run_id));
        std::fs::write(&p, &r.history_csv).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
    }
    let rows: Vec<SummaryRow> = records.iter().map(RunRecord::summary_row).collect();
    let path = dir.join("summary.csv");
    let mut w = create(&path)?;
    write_summary(&rows, &mut w).map_err(runtime)?;
    w.flush().map_err(runtime)?;
    Ok(path)
}

fn print_records(out: &mut dyn Write, records: &[RunRecord]) -> Result<(), CliError> {
    for r in records {
        let o = &r.outcome;
        let fit = o.fitness.map_or("NA".into(), |f| format!("{f:.6}"));
        writeln!(
            out,
            "run {:>3} seed {:>5}: {:<3} after {:>4} iterations, fitness {fit}",
            r.run_id, r.seed, o.status, o.iterations
        )
        .map_err(runtime)?;
        if r.is_failure_revealing() {
            for (n, v) in r.names.iter().zip(&o.values) {
                writeln!(out, "    {n} = {v}").map_err(runtime)?;
            }
        }
    }
    Ok(())
}

fn default_out(exp: &Experiment) -> PathBuf {
    exp.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("results"))
        .join(format!("{}_{}", exp.model.name, exp.method()))
}

fn cmd_falsify(a: &FalsifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut exp = resolve_experiment(&a.target)?;
    apply_search_args(&mut exp, &a.search)?;
    if let Some(alg) = a.algorithm {
        exp.search.algorithm = alg;
    }
    let records = exp.run(a.search.jobs)?;
    let dir = a.out.clone().unwrap_or_else(|| default_out(&exp));
    let summary = write_results(&dir, &records)?;
    print_records(out, &records)?;
    let found = records.iter().filter(|r| r.is_failure_revealing()).count();
    writeln!(
        out,
        "{}: {found}/{} runs failure-revealing; summary in {}",
        exp.method(),
        records.len(),
        summary.display()
    )
    .map_err(runtime)?;
    Ok(())
}

// ---- compare / report ----

fn cmd_compare(a: &CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for p in &a.inputs {
        if p.extension().and_then(|e| e.to_str()) == Some("toml") {
            let mut exp = Experiment::load(p)?;
            apply_search_args(&mut exp, &a.search)?;
            let records = exp.run(a.search.jobs)?;
            if let Some(dir) = &a.out {
                write_results(&dir.join(format!("{}_{}", exp.model.name, exp.method())), &records)?;
            }
            rows.extend(records.iter().map(RunRecord::summary_row));
        } else {
            rows.extend(read_summary_file(p)?);
        }
    }
    if !a.methods.is_empty() {
        let mut base = resolve_experiment(&a.target)?;
        apply_search_args(&mut base, &a.search)?;
        for alg in &a.methods {
            let mut exp = base.clone();
            exp.search.algorithm = *alg;
            let records = exp.run(a.search.jobs)?;
            if let Some(dir) = &a.out {
                write_results(&dir.join(format!("{}_{}", exp.model.name, exp.method())), &records)?;
            }
            rows.extend(records.iter().map(RunRecord::summary_row));
        }
    }
    let table = compare(&rows)?;
    write_comparison(&table, &mut *out).map_err(runtime)?;
    if let Some(dir) = &a.out {
        let mut w = create(&dir.join("comparison.csv"))?;
        write_comparison(&table, &mut w).map_err(runtime)?;
        w.flush().map_err(runtime)?;
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for p in &a.summaries {
        rows.extend(read_summary_file(p)?);
    }
    out.write_all(render_report(&rows).as_bytes()).map_err(runtime)?;
    for r in rows.iter().filter(|r| r.is_failure_revealing()) {
        writeln!(out, "{} {} run {}: {}", r.model, r.method, r.run_id, r.values).map_err(runtime)?;
    }
    Ok(())
}
