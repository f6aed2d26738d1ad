//! Falsifies the heat-pump controller the requirements-table way: search
//! over input-profile control points, minimizing STL robustness.
//!
//! cargo run --release --example stl_baseline [seed]

use testblocks::search::SearchConfig;
use testblocks::sim::registry;
use testblocks::stl::StlProblem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1);
    let b = registry().into_iter().find(|b| b.spec.name == "heatpump").expect("built-in");
    let problem = StlProblem::new(&b.spec, &b.input_profile(), &b.stl_formula())?;
    println!("formula: {}", problem.monitor().formula());
    println!("search space: {:?}", problem.space().names());
    let result = problem.falsify(&SearchConfig::default().with_seed(seed))?;
    let o = &result.outcome;
    println!("{} after {} iterations, robustness {:?}", o.status(), o.iterations(), o.fitness());
    let best = problem.evaluate(&o.candidate().values)?;
    println!("re-evaluated: robustness {} verdict {}", best.robustness, best.verdict);
    Ok(())
}
