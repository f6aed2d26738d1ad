//! Drives each built-in model with its shipped default sequence and judges
//! the run with its shipped assessment, with the seeded fault on and off.
//!
//! cargo run --example simulate_model

use std::collections::HashMap;

use testblocks::sim::{registry, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for b in registry() {
        for fault in [true, false] {
            let spec = b.spec.clone().with_fault(fault);
            let run = simulate(&spec, &b.default_sequence(), &HashMap::new(), Some(&b.compiled_assessment()))?;
            let v = run.verdict.expect("assessment attached");
            println!(
                "{:<10} fault={:<5} samples={:<6} overall={:<8} fitness={:.4}",
                spec.name,
                fault,
                run.outputs.grid().n_samples(),
                v.overall.to_string(),
                v.fitness
            );
        }
    }
    Ok(())
}
