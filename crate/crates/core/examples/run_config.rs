//! Loads a run configuration, runs its repetitions in parallel and writes
//! `summary.csv` plus one history per run, as `testblocks falsify` does.
//!
//! cargo run --release --example run_config [out_dir]

use testblocks::cli::{write_results, Experiment, RunConfig};

const CONFIG: &str = r#"
model = { name = "tracker", fault_enabled = true }
repetitions = 4

[search]
seed = 7
max_iterations = 100
algorithm = "simulated_annealing"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "results/run_config".into());
    let cfg = RunConfig::from_toml(CONFIG)?;
    let exp = Experiment::from_config(&cfg, std::path::Path::new("."))?;
    let records = exp.run(None)?;
    for r in &records {
        let row = r.summary_row();
        println!("run {} seed {}: {} in {} iterations", row.run_id, row.seed, row.status, row.iterations);
    }
    let summary = write_results(std::path::Path::new(&out), &records)?;
    println!("wrote {}", summary.display());
    Ok(())
}
