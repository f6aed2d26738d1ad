//! Renders an input profile: control points interpolated onto the simulation
//! grid with shape-preserving cubics or held piecewise constant.
//!
//! cargo run --example input_profiles

use testblocks::signal::TimeGrid;
use testblocks::stl::InputProfile;

const PROFILE: &str = r#"
[[signal]]
name = "throttle"
kind = "real"
points = 5
range = [0, 100]
interpolation = "pchip"

[[signal]]
name = "gear_request"
kind = "int"
points = 3
range = [1, 3]
interpolation = "piecewise_constant"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = InputProfile::from_toml(PROFILE)?;
    let space = profile.space();
    let values = [0.0, 60.0, 60.0, 100.0, 20.0, 1.0, 3.0, 2.0];
    for (p, v) in space.params().iter().zip(values) {
        println!("{} = {v}", p.name);
    }
    let trace = profile.render(&values, &TimeGrid::with_duration(0.5, 8.0)?)?;
    print!("{}", trace.to_text());
    Ok(())
}
