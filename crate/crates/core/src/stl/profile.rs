use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::search::{Parameter, SearchSpace};
use crate::signal::{Samples, Signal, SignalKind, TimeGrid, Trace};
use crate::stepmachine::push_value;

use super::StlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    PiecewiseConstant,
    Pchip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalProfile {
    pub name: String,
    pub kind: SignalKind,
    pub points: usize,
    pub range: [f64; 2],
    pub interpolation: Interpolation,
}

/// Space of input signals: control points at uniform times over the run,
/// interpolated onto the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputProfile {
    #[serde(rename = "signal")]
    pub signals: Vec<SignalProfile>,
}

impl InputProfile {
    pub fn from_toml(src: &str) -> Result<Self, StlError> {
        let p: InputProfile = toml::from_str(src).map_err(|e| StlError::BadProfile(e.to_string()))?;
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), StlError> {
        if self.signals.is_empty() {
            return Err(StlError::BadProfile("profile declares no signals".into()));
        }
        for (i, s) in self.signals.iter().enumerate() {
            if s.points == 0 {
                return Err(StlError::BadProfile(format!("`{}` needs at least one control point", s.name)));
            }
            let [lo, hi] = s.range;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(StlError::BadProfile(format!("`{}` has an invalid range", s.name)));
            }
            if self.signals[..i].iter().any(|o| o.name == s.name) {
                return Err(StlError::BadProfile(format!("`{}` is declared twice", s.name)));
            }
        }
        Ok(())
    }

    pub fn signals(&self) -> Vec<(String, SignalKind)> {
        self.signals.iter().map(|s| (s.name.clone(), s.kind)).collect()
    }

    /// Total number of control points.
    pub fn dim(&self) -> usize {
        self.signals.iter().map(|s| s.points).sum()
    }

    /// Flattened control points as a search box, named `<signal>[i]`.
    pub fn space(&self) -> SearchSpace {
        let params = self
            .signals
            .iter()
            .flat_map(|s| {
                (0..s.points).map(move |i| Parameter::new(format!("{}[{i}]", s.name), s.range[0], s.range[1]))
            })
            .collect();
        SearchSpace::new(params).expect("checked profile")
    }

    /// Interpolates flattened control-point values onto `grid`.
    pub fn render(&self, values: &[f64], grid: &TimeGrid) -> Result<Trace, StlError> {
        if values.len() != self.dim() {
            return Err(StlError::BadProfile(format!(
                "expected {} control-point values, got {}",
                self.dim(),
                values.len()
            )));
        }
        let n = grid.n_samples();
        let duration = grid.duration();
        let mut signals = Vec::new();
        let mut rest = values;
        for s in &self.signals {
            let (cp, tail) = rest.split_at(s.points);
            rest = tail;
            let times = control_times(s.points, duration);
            let interp = Interpolant::new(s.interpolation, &times, cp);
            let mut col = Samples::with_capacity(s.kind, n);
            for k in 0..n {
                let v = interp.eval(grid.time(k));
                let v = match s.kind {
                    SignalKind::Bool => f64::from(u8::from(v >= 0.5)),
                    _ => v,
                };
                push_value(&mut col, s.kind, v);
            }
            signals.push(Signal::new(s.name.clone(), col).map_err(|e| StlError::BadProfile(e.to_string()))?);
        }
        Trace::new(*grid, signals).map_err(|e| StlError::BadProfile(e.to_string()))
    }

    /// Draws control points i.i.d. uniform in their ranges.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        crate::search::uniform_point(&self.space(), rng)
    }
}

/// Random input trace from `profile`.
pub fn profile_sample<R: Rng + ?Sized>(
    profile: &InputProfile,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Trace, StlError> {
    let values = profile.draw(rng);
    profile.render(&values, grid)
}

/// `t_i = i·T/(n−1)`; a single point sits at 0.
pub fn control_times(n: usize, duration: f64) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|i| i as f64 * duration / (n - 1) as f64).collect()
}

/// Interpolant through control points `(t_i, y_i)`, constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    kind: Interpolation,
    t: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Interpolant {
    pub fn new(kind: Interpolation, t: &[f64], y: &[f64]) -> Self {
        assert_eq!(t.len(), y.len());
        assert!(!t.is_empty());
        let d = match kind {
            Interpolation::Pchip => pchip_slopes(t, y),
            Interpolation::PiecewiseConstant => vec![0.0; t.len()],
        };
        Self {
            kind,
            t: t.to_vec(),
            y: y.to_vec(),
            d,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        if n == 1 || x <= self.t[0] {
            return self.y[0];
        }
        if x >= self.t[n - 1] {
            return self.y[n - 1];
        }
        // Largest i with t_i <= x.
        let i = self.t.partition_point(|&ti| ti <= x) - 1;
        if x == self.t[i] {
            return self.y[i];
        }
        match self.kind {
            Interpolation::PiecewiseConstant => self.y[i],
            Interpolation::Pchip => {
                let (y0, y1) = (self.y[i], self.y[i + 1]);
                let v = hermite(self.t[i], self.t[i + 1], y0, y1, self.d[i], self.d[i + 1], x);
                // Each piece is monotone between its end values; the clamp
                // only removes rounding error.
                v.clamp(y0.min(y1), y0.max(y1))
            }
        }
    }
}

fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = t1 - t0;
    let s = (x - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Shape-preserving derivative estimates (Fritsch–Carlson): zero at local
/// extrema, weighted harmonic mean of neighbouring secants elsewhere, and
/// one-sided three-point formulas at the ends.
pub fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![del[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    d[0] = end_slope(h[0], h[1], del[0], del[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > (3.0 * del0).abs() {
        3.0 * del0
    } else {
        d
    }
}
