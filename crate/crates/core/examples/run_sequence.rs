//! Executes a hierarchical test sequence on its own and logs the active step
//! and fired transitions at every sample.
//!
//! cargo run --example run_sequence

use std::collections::HashMap;

use testblocks::signal::TimeGrid;
use testblocks::stepmachine::run_sequence_logged;
use testblocks::testlang::parse_block;

const SRC: &str = r#"
sequence Ramp {
  outputs { mode: int; r: real; }
  params { Hecate_SLOPE: real in [0, 2]; }
  step Hold {
    mode = 1;
    r = 0.5;
  }
  step Ramp {
    mode = 2;
    r = 0.5 + Hecate_SLOPE * et;
  }
  step Settle {
    mode = 3;
  }
  trans Hold -> Ramp when after(0.3, sec);
  trans Ramp -> Settle when r >= 1.0;
}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let block = parse_block(SRC)?;
    let params = HashMap::from([("Hecate_SLOPE".to_string(), 2.0)]);
    let grid = TimeGrid::new(0.1, 10)?;
    let mut log = Vec::new();
    let trace = run_sequence_logged(&block, &params, grid, Some(&mut log))?;
    print!("{}", String::from_utf8(log)?);
    println!();
    print!("{}", trace.to_text());
    Ok(())
}
