//! Runs a test assessment over a recorded trace and prints the per-sample
//! fitness channels, the running minimum and the verdicts.
//!
//! cargo run --example fitness_monitor

use testblocks::fitness;
use testblocks::signal::{Signal, TimeGrid, Trace};
use testblocks::testlang::parse_block;

const SRC: &str = r#"
assessment Band {
  inputs { setpoint: real; temp: real; }
  step Settling {}
  step Regulating {
    verify(temp <= setpoint + 1 and temp >= setpoint - 1) as BAND;
  }
  trans Settling -> Regulating when after(0.2, sec);
}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let assessment = fitness::compile(&parse_block(SRC)?)?;
    let temp = vec![15.0, 18.0, 20.0, 20.8, 21.4, 21.2, 22.3, 21.0];
    let trace = Trace::new(
        TimeGrid::new(0.1, temp.len())?,
        vec![Signal::real("setpoint", vec![21.0; temp.len()])?, Signal::real("temp", temp)?],
    )?;
    let (monitor, verdict) = assessment.evaluate(&trace)?;
    print!("{}", monitor.channel_dump());
    println!("fit_total: {:?}", monitor.fit_total());
    for (id, status) in &verdict.statements {
        println!("{id}: {status}");
    }
    println!("overall {} with fitness {}", verdict.overall, verdict.fitness);
    Ok(())
}
