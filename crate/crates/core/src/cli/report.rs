use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::search::OutcomeRecord;

use super::CliError;

/// One falsification run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    pub model: String,
    pub method: String,
    pub seed: u64,
    /// Parameter names in search-space order.
    pub names: Vec<String>,
    pub outcome: OutcomeRecord,
    pub history_csv: String,
}

impl RunRecord {
    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            run_id: self.run_id,
            model: self.model.clone(),
            method: self.method.clone(),
            seed: self.seed,
            status: self.outcome.status.clone(),
            fitness: self.outcome.fitness.map_or("NA".into(), |f| f.to_string()),
            iterations: self.outcome.iterations,
            elapsed_ms: self.outcome.elapsed_ms,
            values: self
                .outcome
                .values
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        }
    }

    pub fn is_failure_revealing(&self) -> bool {
        self.outcome.status == "TC"
    }
}

/// A row of `summary.csv`. `values` holds the failure-revealing (or best)
/// parameter values joined by `;`; `fitness` is `NA` when no evaluation
/// succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: usize,
    pub model: String,
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub fitness: String,
    pub iterations: usize,
    pub elapsed_ms: u64,
    pub values: String,
}

impl SummaryRow {
    pub fn is_failure_revealing(&self) -> bool {
        self.status == "TC"
    }
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: Read>(input: R) -> csv::Result<Vec<SummaryRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn read_summary_file(path: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    read_summary(f).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Per-method aggregate over a set of runs on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Over failure-revealing runs; `None` when there are none.
    pub mean_iterations_to_failure: Option<f64>,
    /// Over failure-revealing runs; `None` when there are none.
    pub mean_elapsed_ms: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

/// Groups rows by method, in order of first appearance.
pub fn aggregate(rows: &[SummaryRow]) -> Vec<ComparisonRow> {
    let mut methods: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        if !methods.contains(&(r.model.as_str(), r.method.as_str())) {
            methods.push((&r.model, &r.method));
        }
    }
    methods
        .into_iter()
        .map(|(model, method)| {
            let group: Vec<&SummaryRow> = rows.iter().filter(|r| r.model == model && r.method == method).collect();
            let failing: Vec<&&SummaryRow> = group.iter().filter(|r| r.is_failure_revealing()).collect();
            ComparisonRow {
                model: model.to_string(),
                method: method.to_string(),
                runs: group.len(),
                failures: failing.len(),
                failure_rate: failing.len() as f64 / group.len() as f64,
                mean_iterations_to_failure: mean(failing.iter().map(|r| r.iterations as f64)),
                mean_elapsed_ms: mean(failing.iter().map(|r| r.elapsed_ms as f64)),
            }
        })
        .collect()
}

/// Comparison table over runs of at least two methods on a single model.
pub fn compare(rows: &[SummaryRow]) -> Result<Vec<ComparisonRow>, CliError> {
    let Some(first) = rows.first() else {
        return Err(CliError::Validation("need two methods".into()));
    };
    if let Some(other) = rows.iter().find(|r| r.model != first.model) {
        return Err(CliError::Validation(format!(
            "mismatched models: `{}` and `{}`",
            first.model, other.model
        )));
    }
    let table = aggregate(rows);
    if table.len() < 2 {
        return Err(CliError::Validation("need two methods".into()));
    }
    Ok(table)
}

pub fn write_comparison<W: Write>(table: &[ComparisonRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "method",
        "runs",
        "failures",
        "failure_rate",
        "mean_iterations_to_failure",
        "mean_elapsed_ms",
    ])?;
    let opt = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.2}"));
    for r in table {
        w.write_record([
            r.model.clone(),
            r.method.clone(),
            r.runs.to_string(),
            r.failures.to_string(),
            format!("{:.4}", r.failure_rate),
            opt(r.mean_iterations_to_failure),
            opt(r.mean_elapsed_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable report of one or more summaries.
pub fn render_report(rows: &[SummaryRow]) -> String {
    let mut s = String::new();
    let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.1}"));
    s.push_str(&format!(
        "{:<12} {:<26} {:>5} {:>5} {:>7} {:>10} {:>10} {:>12}\n",
        "model", "method", "runs", "TC", "rate", "iters", "median", "best fitness"
    ));
    for agg in aggregate(rows) {
        let group: Vec<&SummaryRow> = rows
            .iter()
            .filter(|r| r.model == agg.model && r.method == agg.method)
            .collect();
        let mut iters: Vec<usize> = group
            .iter()
            .filter(|r| r.is_failure_revealing())
            .map(|r| r.iterations)
            .collect();
        iters.sort_unstable();
        let median = match iters.len() {
            0 => None,
            n if n % 2 == 1 => Some(iters[n / 2] as f64),
            n => Some((iters[n / 2 - 1] + iters[n / 2]) as f64 / 2.0),
        };
        let best = group
            .iter()
            .filter_map(|r| r.fitness.parse::<f64>().ok())
            .fold(None, |acc: Option<f64>, f| Some(acc.map_or(f, |a| a.min(f))));
        s.push_str(&format!(
            "{:<12} {:<26} {:>5} {:>5} {:>6.1}% {:>10} {:>10} {:>12}\n",
            agg.model,
            agg.method,
            agg.runs,
            agg.failures,
            100.0 * agg.failure_rate,
            opt(agg.mean_iterations_to_failure),
            opt(median),
            best.map_or("-".to_string(), |b| format!("{b:.4}")),
        ));
    }
    s
}
