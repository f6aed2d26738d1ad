//! Built-in models and the test artifacts shipped with each of them.

use crate::fitness::{self, CompiledAssessment};
use crate::signal::SignalKind;
use crate::stl::{parse_formula, InputProfile, StlFormula};
use crate::testlang::{parse_block, TestBlock};

use super::{Model, ModelSpec};

fn sig(name: &str, kind: SignalKind) -> (String, SignalKind) {
    (name.to_string(), kind)
}

// ---- pacemaker ----

/// Lower rate limit in beats per minute.
pub const PACER_LRL: f64 = 60.0;

/// Atrial pacing in mode 3: paces once no detection has been seen for
/// `60/LRL` seconds. The fault stretches the timeout by 10 %.
struct Pacemaker {
    /// [samples since last detection or pace, pace output]
    state: [f64; 2],
    limit: u64,
}

fn pacemaker(spec: &ModelSpec) -> Box<dyn Model> {
    let interval = 60.0 / PACER_LRL / spec.dt;
    let limit = if spec.fault_enabled {
        interval * 1.1
    } else {
        interval
    };
    Box::new(Pacemaker {
        state: [spec.initial_state[0], 0.0],
        limit: limit.round() as u64,
    })
}

impl Model for Pacemaker {
    fn step(&mut self, u: &[f64], _dt: f64, y: &mut [f64]) {
        let (mode, detect) = (u[0], u[1] != 0.0);
        let mut count = self.state[0] as u64;
        let mut pace = false;
        if mode == 3.0 {
            if detect {
                count = 0;
            } else {
                count += 1;
                if count >= self.limit {
                    pace = true;
                    count = 0;
                }
            }
        } else {
            count = 0;
        }
        self.state = [count as f64, pace as u8 as f64];
        y[0] = self.state[1];
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}

// ---- at_lite ----

pub const GEAR_RATIOS: [f64; 3] = [100.0, 57.0, 35.0];

/// Vehicle speed with first-order drag (`dv/dt = (1.5·throttle − v)/5`) and
/// a three-gear shift schedule. The fault lowers the 2→1 downshift speed.
struct AtLite {
    /// [speed km/h, gear]
    state: [f64; 2],
    down_21: f64,
}

fn at_lite(spec: &ModelSpec) -> Box<dyn Model> {
    Box::new(AtLite {
        state: [spec.initial_state[0], spec.initial_state[1]],
        down_21: if spec.fault_enabled { 22.0 } else { 30.0 },
    })
}

impl Model for AtLite {
    fn step(&mut self, u: &[f64], dt: f64, y: &mut [f64]) {
        let throttle = u[0].clamp(0.0, 100.0);
        let [v, gear] = self.state;
        let gear = match gear as u8 {
            1 if v > 40.0 => 2,
            2 if v > 80.0 => 3,
            2 if v < self.down_21 => 1,
            3 if v < 70.0 => 2,
            g => g,
        };
        y[0] = v;
        y[1] = v * GEAR_RATIOS[gear as usize - 1];
        y[2] = gear as f64;
        self.state = [v + dt * (1.5 * throttle - v) / 5.0, gear as f64];
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}

// ---- heatpump ----

pub const HEAT_TAU: f64 = 400.0;
pub const HEAT_RATE: f64 = 0.0383;
pub const HEAT_MIN_ON: f64 = 40.0;

/// Room temperature with heat loss to ambient (`τ = 400 s`) and an on/off
/// heater with a 40 s minimum on-time. Switches on below `setpoint − 0.8`
/// and off above `setpoint + 0.2`; the fault narrows the lower margin to 0.3.
struct HeatPump {
    /// [temperature °C, heater on, seconds since switched on]
    state: [f64; 3],
    margin: f64,
}

fn heatpump(spec: &ModelSpec) -> Box<dyn Model> {
    let s = &spec.initial_state;
    Box::new(HeatPump {
        state: [s[0], s[1], s[2]],
        margin: if spec.fault_enabled { 0.3 } else { 0.8 },
    })
}

impl Model for HeatPump {
    fn step(&mut self, u: &[f64], dt: f64, y: &mut [f64]) {
        let (setpoint, ambient) = (u[0], u[1]);
        let [temp, mut on, mut on_time] = self.state;
        if on != 0.0 {
            if temp > setpoint + 0.2 && on_time >= HEAT_MIN_ON {
                on = 0.0;
            }
        } else if temp < setpoint - self.margin {
            on = 1.0;
            on_time = 0.0;
        }
        y[0] = temp;
        y[1] = on;
        let next = temp + dt * ((ambient - temp) / HEAT_TAU + on * HEAT_RATE);
        if on != 0.0 {
            on_time += dt;
        }
        self.state = [next, on, on_time];
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}

// ---- tracker ----

pub const TRACKER_GAINS: [f64; 3] = [0.5, 2.0, 5.0];

/// First-order reference tracker `dy/dt = g(mode)·(r − y)` with three
/// gains. The fault uses gain 0.8 in mode 2.
struct Tracker {
    state: [f64; 1],
    gains: [f64; 3],
}

fn tracker(spec: &ModelSpec) -> Box<dyn Model> {
    let mut gains = TRACKER_GAINS;
    if spec.fault_enabled {
        gains[1] = 0.8;
    }
    Box::new(Tracker {
        state: [spec.initial_state[0]],
        gains,
    })
}

impl Model for Tracker {
    fn step(&mut self, u: &[f64], dt: f64, y: &mut [f64]) {
        let mode = u[0].round().clamp(1.0, 3.0) as usize;
        let r = u[1];
        let out = self.state[0];
        y[0] = out;
        self.state[0] = out + dt * self.gains[mode - 1] * (r - out);
    }

    fn state(&self) -> &[f64] {
        &self.state
    }
}

// ---- bundles ----

/// A model with its shipped test artifacts, as source text.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub spec: ModelSpec,
    pub default_sequence: &'static str,
    pub param_sequence: &'static str,
    pub assessment: &'static str,
    pub stl: &'static str,
    pub profile: &'static str,
}

impl Bundle {
    pub fn default_sequence(&self) -> TestBlock {
        parse_block(self.default_sequence).expect("shipped sequence parses")
    }

    pub fn param_sequence(&self) -> TestBlock {
        parse_block(self.param_sequence).expect("shipped sequence parses")
    }

    pub fn assessment(&self) -> TestBlock {
        parse_block(self.assessment).expect("shipped assessment parses")
    }

    pub fn compiled_assessment(&self) -> CompiledAssessment {
        fitness::compile(&self.assessment()).expect("shipped assessment compiles")
    }

    pub fn stl_formula(&self) -> StlFormula {
        parse_formula(self.stl).expect("shipped formula parses")
    }

    pub fn input_profile(&self) -> InputProfile {
        InputProfile::from_toml(self.profile).expect("shipped profile loads")
    }
}

macro_rules! bundle_files {
    ($dir:literal) => {
        (
            include_str!(concat!("../../bundles/", $dir, "/default.tseq")),
            include_str!(concat!("../../bundles/", $dir, "/param.tseq")),
            include_str!(concat!("../../bundles/", $dir, "/assess.tassess")),
            include_str!(concat!("../../bundles/", $dir, "/spec.stl")),
            include_str!(concat!("../../bundles/", $dir, "/profile.toml")),
        )
    };
}

fn bundle(spec: ModelSpec, files: (&'static str, &'static str, &'static str, &'static str, &'static str)) -> Bundle {
    Bundle {
        spec,
        default_sequence: files.0,
        param_sequence: files.1,
        assessment: files.2,
        stl: files.3,
        profile: files.4,
    }
}

/// The four built-in models with faults enabled.
pub fn registry() -> Vec<Bundle> {
    use SignalKind::*;
    vec![
        bundle(
            ModelSpec {
                name: "pacemaker".into(),
                inputs: vec![sig("MODE", Int), sig("ATR_CMP_DETECT", Bool)],
                outputs: vec![sig("ATR_PACE_CTRL", Bool)],
                dt: 0.01,
                duration: 40.0,
                fault_enabled: true,
                initial_state: vec![0.0],
                factory: pacemaker,
            },
            bundle_files!("pacemaker"),
        ),
        bundle(
            ModelSpec {
                name: "at_lite".into(),
                inputs: vec![sig("throttle", Real)],
                outputs: vec![sig("speed", Real), sig("rpm", Real), sig("gear", Int)],
                dt: 0.05,
                duration: 40.0,
                fault_enabled: true,
                initial_state: vec![0.0, 1.0],
                factory: at_lite,
            },
            bundle_files!("at_lite"),
        ),
        bundle(
            ModelSpec {
                name: "heatpump".into(),
                inputs: vec![sig("setpoint", Real), sig("ambient", Real)],
                outputs: vec![sig("temp", Real), sig("heater", Bool)],
                dt: 1.0,
                duration: 1500.0,
                fault_enabled: true,
                initial_state: vec![18.0, 0.0, 0.0],
                factory: heatpump,
            },
            bundle_files!("heatpump"),
        ),
        bundle(
            ModelSpec {
                name: "tracker".into(),
                inputs: vec![sig("mode", Int), sig("r", Real)],
                outputs: vec![sig("y", Real)],
                dt: 0.01,
                duration: 8.0,
                fault_enabled: true,
                initial_state: vec![0.0],
                factory: tracker,
            },
            bundle_files!("tracker"),
        ),
    ]
}
