//! Bounded-time signal temporal logic over sampled traces, input profiles,
//! and a falsification baseline driven by them.
//!
//! Semantics are discrete: a formula is evaluated at sample indices, and an
//! interval `[a, b]` covers the samples `ceil(a/dt)..=floor(b/dt)` ahead of
//! the evaluation point.

use crate::search::{minimize, SearchConfig, SearchError, SearchResult, SearchSpace};
use crate::signal::SignalKind;
use crate::sim::{Harness, ModelSpec, SimError};
use crate::testlang::SyntaxError;

mod formula;
mod monitor;
mod profile;

pub use formula::{parse_formula, Interval, StlFormula};
pub use monitor::{StlMonitor, StlSignal, StlVerdictReport};
pub use profile::{
    control_times, pchip_slopes, profile_sample, InputProfile, Interpolant, Interpolation,
    SignalProfile,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StlError {
    #[error("STL syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("formula looks {horizon} s ahead but the trace spans {duration} s")]
    IntervalOutOfRange { horizon: f64, duration: f64 },
    #[error("{0}")]
    TypeError(String),
    #[error("invalid input profile: {0}")]
    BadProfile(String),
    #[error("profile does not match the model: {0}")]
    ProfileMismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Robustness of `formula` on `trace` at time 0.
pub fn stl_robustness(formula: &StlFormula, trace: &crate::signal::Trace) -> Result<StlVerdictReport, StlError> {
    StlMonitor::for_trace(formula, trace)?.evaluate(trace)
}

/// A model driven by an input profile and judged by an STL formula.
pub struct StlProblem {
    harness: Harness,
    monitor: StlMonitor,
    profile: InputProfile,
    space: SearchSpace,
}

impl StlProblem {
    pub fn new(model: &ModelSpec, profile: &InputProfile, formula: &StlFormula) -> Result<Self, StlError> {
        profile.check()?;
        for (name, _) in &model.inputs {
            if !profile.signals.iter().any(|s| &s.name == name) {
                return Err(StlError::ProfileMismatch(format!("no profile for model input `{name}`")));
            }
        }
        let harness = Harness::for_inputs(model, &profile.signals(), None)?;
        let signals: Vec<(String, SignalKind)> =
            profile.signals().into_iter().chain(model.outputs.iter().cloned()).collect();
        let monitor = StlMonitor::new(formula, &signals)?;
        let grid = model.grid();
        monitor.check_horizon(grid.dt(), grid.n_samples())?;
        Ok(Self {
            harness,
            monitor,
            profile: profile.clone(),
            space: profile.space(),
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn profile(&self) -> &InputProfile {
        &self.profile
    }

    pub fn harness(&self) -> &Harness {
        &self.harness
    }

    pub fn monitor(&self) -> &StlMonitor {
        &self.monitor
    }

    /// Simulates the inputs given by control-point values and monitors the
    /// combined trace.
    pub fn evaluate(&self, values: &[f64]) -> Result<StlVerdictReport, StlError> {
        self.space.check(values)?;
        let inputs = self.profile.render(values, &self.harness.spec().grid())?;
        let run = self.harness.run_inputs(&inputs)?;
        self.monitor.evaluate(&run.combined())
    }

    pub fn falsify(&self, config: &SearchConfig) -> Result<SearchResult, StlError> {
        Ok(minimize(&self.space, config, |x| self.evaluate(x).map(|r| r.robustness))?)
    }
}

/// Searches control-point values of `profile` that drive `model` to violate
/// `formula`.
pub fn baseline_falsify(
    model: &ModelSpec,
    profile: &InputProfile,
    formula: &StlFormula,
    config: &SearchConfig,
) -> Result<SearchResult, StlError> {
    StlProblem::new(model, profile, formula)?.falsify(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Signal, TimeGrid, Trace};
    use crate::sim::registry;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trace(dt: f64, cols: &[(&str, Vec<f64>)]) -> Trace {
        let n = cols[0].1.len();
        Trace::new(
            TimeGrid::new(dt, n).unwrap(),
            cols.iter().map(|(nm, v)| Signal::real(*nm, v.clone()).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_speed() {
        let t = trace(1.0, &[("speed", vec![90.0; 21])]);
        let f = parse_formula("G[0, 20] (speed < 120)").unwrap();
        let r = stl_robustness(&f, &t).unwrap();
        assert_eq!(r.robustness, 30.0);
        assert!(r.verdict);
    }

    #[test]
    fn linear_signal_eventually() {
        let x: Vec<f64> = (0..=20).map(|k| k as f64 - 10.0).collect();
        let t = trace(1.0, &[("x", x)]);
        let r = stl_robustness(&parse_formula("F[0, 5] (x > 0)").unwrap(), &t).unwrap();
        assert_eq!(r.robustness, -5.0);
        assert!(!r.verdict);
    }

    #[test]
    fn until_by_hand() {
        // x U[1,2] y at 0: j ∈ {1, 2}; j=1: min(y1, x0) = min(-1, 3) = -1;
        // j=2: min(y2, min(x0, x1)) = min(4, 2) = 2 → 2.
        let t = trace(
            1.0,
            &[("x", vec![3.0, 2.0, -5.0, 0.0]), ("y", vec![0.0, -1.0, 4.0, 0.0])],
        );
        let r = stl_robustness(&parse_formula("(x > 0) U[1, 2] (y > 0)").unwrap(), &t).unwrap();
        assert_eq!(r.robustness, 2.0);
    }

    #[test]
    fn interval_sample_bounds() {
        assert_eq!(Interval::new(0.3, 0.7).samples(0.1), (3, 7));
        assert_eq!(Interval::new(0.25, 0.75).samples(0.1), (3, 7));
        assert_eq!(Interval::new(0.0, 40.0).samples(0.05), (0, 800));
    }

    #[test]
    fn parse_shapes() {
        let f = parse_formula("G[0, 8] ((mode > 1.5 or (y - r < 2 and r - y < 2)) and (mode < 1.5 or (y - r) < 1.2))")
            .unwrap();
        assert_eq!(f.depth(), 4);
        assert_eq!(f.atoms().len(), 5);
        let g = parse_formula("not F[1, 2] ok -> (a > 1) U[0, 1] (b < 2)").unwrap();
        assert!(matches!(g, StlFormula::Implies(..)));
        assert!(parse_formula("G (x > 1)").is_err());
        assert!(parse_formula("G[3, 1] (x > 1)").is_err());
        assert!(parse_formula("F[0, 1] (x > 1) )").is_err());
    }

    #[test]
    fn errors() {
        let t = trace(1.0, &[("x", vec![0.0; 5])]);
        assert_eq!(
            stl_robustness(&parse_formula("G[0, 2] (z > 0)").unwrap(), &t),
            Err(StlError::UnknownSignal("z".into()))
        );
        assert!(matches!(
            stl_robustness(&parse_formula("G[0, 5] (x > 0)").unwrap(), &t),
            Err(StlError::IntervalOutOfRange { .. })
        ));
        assert!(matches!(
            stl_robustness(&parse_formula("G[0, 2] (x + 1)").unwrap(), &t),
            Err(StlError::TypeError(_))
        ));
        assert!(matches!(
            stl_robustness(&parse_formula("G[0, 2] (after(1, sec))").unwrap(), &t),
            Err(StlError::TypeError(_))
        ));
    }

    #[test]
    fn zero_robustness_takes_boolean_verdict() {
        let t = trace(1.0, &[("x", vec![1.0, 1.0])]);
        let le = stl_robustness(&parse_formula("x <= 1").unwrap(), &t).unwrap();
        assert_eq!((le.robustness, le.verdict), (0.0, true));
        let lt = stl_robustness(&parse_formula("x < 1").unwrap(), &t).unwrap();
        assert_eq!((lt.robustness, lt.verdict), (0.0, false));
    }

    #[test]
    fn shipped_formulas_and_profiles_load() {
        for b in registry() {
            let f = b.stl_formula();
            let p = b.input_profile();
            StlProblem::new(&b.spec, &p, &f).unwrap();
        }
    }

    #[test]
    fn single_point_zoh_is_constant() {
        let p = InputProfile::from_toml(
            "[[signal]]\nname = \"u\"\nkind = \"real\"\npoints = 1\nrange = [2, 4]\ninterpolation = \"piecewise_constant\"\n",
        )
        .unwrap();
        let grid = TimeGrid::new(0.1, 50).unwrap();
        let t = profile_sample(&p, &grid, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let v = t.signal("u").unwrap().to_f64();
        assert!(v.iter().all(|&x| x == v[0] && (2.0..=4.0).contains(&x)));
        let again = profile_sample(&p, &grid, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn zoh_holds_until_next_point() {
        let i = Interpolant::new(Interpolation::PiecewiseConstant, &[0.0, 1.0, 2.0], &[5.0, 7.0, 1.0]);
        assert_eq!(i.eval(0.0), 5.0);
        assert_eq!(i.eval(0.99), 5.0);
        assert_eq!(i.eval(1.0), 7.0);
        assert_eq!(i.eval(1.5), 7.0);
        assert_eq!(i.eval(2.0), 1.0);
    }

    #[test]
    fn pchip_flat_at_extrema_and_linear_on_lines() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let d = pchip_slopes(&t, &[0.0, 2.0, 1.0, 3.0]);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
        let line = Interpolant::new(Interpolation::Pchip, &t, &[1.0, 3.0, 5.0, 7.0]);
        assert!((line.eval(1.25) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn bool_and_int_profiles_are_coerced() {
        let p = InputProfile::from_toml(
            r#"
[[signal]]
name = "b"
kind = "bool"
points = 4
range = [0, 1]
interpolation = "pchip"

[[signal]]
name = "m"
kind = "int"
points = 3
range = [1, 3]
interpolation = "pchip"
"#,
        )
        .unwrap();
        let grid = TimeGrid::new(0.5, 21).unwrap();
        let t = p.render(&[0.2, 0.9, 0.1, 0.6, 1.0, 2.6, 3.0], &grid).unwrap();
        let b = t.signal("b").unwrap().to_f64();
        assert!(b.iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(b[0], 0.0);
        let m = t.signal("m").unwrap().to_f64();
        assert!(m.iter().all(|&x| x.fract() == 0.0 && (1.0..=3.0).contains(&x)));
    }

    #[test]
    fn bad_profiles() {
        assert!(InputProfile::from_toml("signal = []").is_err());
        assert!(InputProfile::from_toml(
            "[[signal]]\nname = \"u\"\nkind = \"real\"\npoints = 0\nrange = [0, 1]\ninterpolation = \"pchip\"\n"
        )
        .is_err());
        assert!(InputProfile::from_toml(
            "[[signal]]\nname = \"u\"\nkind = \"real\"\npoints = 2\nrange = [1, 0]\ninterpolation = \"pchip\"\n"
        )
        .is_err());
    }

    #[test]
    fn tautology_is_never_falsified() {
        let b = registry().remove(3);
        let f = parse_formula("G[0, 8] (y < 1000000000)").unwrap();
        let cfg = SearchConfig::default().with_iterations(15);
        let r = baseline_falsify(&b.spec, &b.input_profile(), &f, &cfg).unwrap();
        assert!(!r.outcome.is_failure_revealing());
        assert_eq!(r.outcome.iterations(), 15);
    }

    #[test]
    fn baseline_is_deterministic() {
        let b = registry().remove(1);
        let cfg = SearchConfig::default().with_iterations(10).with_seed(6);
        let a = baseline_falsify(&b.spec, &b.input_profile(), &b.stl_formula(), &cfg).unwrap();
        let c = baseline_falsify(&b.spec, &b.input_profile(), &b.stl_formula(), &cfg).unwrap();
        assert_eq!(a.history, c.history);
    }

    fn arb_formula() -> impl Strategy<Value = StlFormula> {
        let atom = (prop_oneof![Just("x"), Just("y")], prop_oneof![Just("<"), Just(">="), Just("<=")], -3i32..3)
            .prop_map(|(s, op, c)| StlFormula::atom(&format!("{s} {op} {c}")).unwrap());
        atom.prop_recursive(3, 12, 2, |inner| {
            let iv = (0u32..3, 0u32..3).prop_map(|(a, w)| (a as f64 * 0.5, (a + w) as f64 * 0.5));
            prop_oneof![
                inner.clone().prop_map(StlFormula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StlFormula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| StlFormula::implies(a, b)),
                (iv.clone(), inner.clone()).prop_map(|((a, b), f)| StlFormula::globally(a, b, f)),
                (iv.clone(), inner.clone()).prop_map(|((a, b), f)| StlFormula::eventually(a, b, f)),
                (iv, inner.clone(), inner).prop_map(|((a, b), l, r)| StlFormula::until(a, b, l, r)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(f in arb_formula()) {
            let back = parse_formula(&f.to_string()).unwrap();
            prop_assert_eq!(back, f);
        }

        #[test]
        fn sign_matches_verdict(
            f in arb_formula(),
            xs in proptest::collection::vec(-3i32..3, 12),
            ys in proptest::collection::vec(-3i32..3, 12),
        ) {
            let t = trace(0.5, &[
                ("x", xs.iter().map(|&v| v as f64).collect()),
                ("y", ys.iter().map(|&v| v as f64).collect()),
            ]);
            let s = StlMonitor::for_trace(&f, &t).unwrap().signal(&t).unwrap();
            for (r, h) in s.robustness.iter().zip(&s.holds) {
                if *r < 0.0 { prop_assert!(!h); }
                if *r > 0.0 { prop_assert!(h); }
            }
        }
    }
}
