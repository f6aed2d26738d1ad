//! Evaluates a bounded STL formula on a trace and prints its robustness at
//! every sample.
//!
//! cargo run --example stl_monitor

use testblocks::signal::{Signal, TimeGrid, Trace};
use testblocks::stl::{parse_formula, StlMonitor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let speed = vec![10.0, 40.0, 80.0, 110.0, 125.0, 118.0, 90.0, 60.0, 30.0, 20.0, 15.0];
    let gear: Vec<i64> = vec![1, 1, 2, 3, 3, 3, 3, 2, 2, 1, 1];
    let trace = Trace::new(
        TimeGrid::new(1.0, speed.len())?,
        vec![Signal::real("speed", speed)?, Signal::integer("gear", gear)?],
    )?;
    let formula = parse_formula("G[0, 5] (speed < 120 and F[0, 3] (gear <= 2))")?;
    let monitor = StlMonitor::for_trace(&formula, &trace)?;
    println!("{formula}");
    let s = monitor.signal(&trace)?;
    for (k, (r, h)) in s.robustness.iter().zip(&s.holds).enumerate() {
        println!("t={k:<3} robustness={r:<8} holds={h}");
    }
    let report = monitor.evaluate(&trace)?;
    println!("at t=0: robustness {} verdict {}", report.robustness, report.verdict);
    Ok(())
}
