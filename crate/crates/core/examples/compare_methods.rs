//! Repeats the search with simulated annealing and with uniform random
//! sampling on every built-in model and prints the comparison tables.
//!
//! cargo run --release --example compare_methods [repetitions]

use testblocks::cli::{compare, write_comparison, Experiment, RunRecord};
use testblocks::search::Algorithm;
use testblocks::sim::registry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    for b in registry() {
        let mut rows = Vec::new();
        for alg in [Algorithm::SimulatedAnnealing, Algorithm::UniformRandom] {
            let mut exp = Experiment::builtin(&b.spec.name)?;
            exp.repetitions = reps;
            exp.search = exp.search.with_algorithm(alg).with_seed(1);
            rows.extend(exp.run(None)?.iter().map(RunRecord::summary_row));
        }
        write_comparison(&compare(&rows)?, std::io::stdout())?;
    }
    Ok(())
}
