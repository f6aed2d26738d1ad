//! Searches the parameters of the automatic-transmission sequence for a
//! failure-revealing test case and prints the search history.
//!
//! cargo run --release --example falsify_search [seed]

use testblocks::search::{falsify, Outcome, SearchConfig};
use testblocks::sim::registry;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let b = registry().into_iter().find(|b| b.spec.name == "at_lite").expect("built-in");
    let config = SearchConfig::default().with_seed(seed);
    let result = falsify(&b.spec, &b.param_sequence(), &b.assessment(), &config)?;
    print!("{}", result.history_csv());
    match &result.outcome {
        Outcome::FailureRevealing { candidate, fitness, iterations, .. } => {
            println!("failure-revealing test case after {iterations} iterations (fitness {fitness}):");
            for (p, v) in result.space.params().iter().zip(&candidate.values) {
                println!("  {} = {v}", p.name);
            }
        }
        Outcome::NoFaultFound { fitness, iterations, .. } => {
            println!("no fault found in {iterations} iterations; best fitness {fitness:?}");
        }
    }
    Ok(())
}
