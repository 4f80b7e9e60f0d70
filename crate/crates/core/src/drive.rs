//! Control-laser drive: peak Rabi frequency, detuning and temporal envelope.

use crate::error::{invalid, Result};
use crate::model::{Sublevel, Vec3};

/// Sampled control envelope f(t) ∈ [0, 1], piecewise linear between samples.
/// Outside the sampled range the nearest end value is held.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseEnvelope {
    t: Vec<f64>,
    f: Vec<f64>,
}

impl PulseEnvelope {
    pub fn new(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != f.len() {
            return Err(invalid(format!(
                "envelope needs matching nonempty time and value arrays ({} vs {})",
                t.len(),
                f.len()
            )));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("envelope times must be strictly increasing"));
        }
        if let Some(bad) = f.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("envelope value {bad} outside [0, 1]")));
        }
        Ok(Self { t, f })
    }

    /// Samples `f` on a uniform grid of `n` points over `[t0, t1]`.
    pub fn from_fn(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 || !(t1 > t0) {
            return Err(invalid("envelope grid needs n >= 2 and t1 > t0"));
        }
        let t: Vec<f64> = (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect();
        let v = t.iter().map(|&x| f(x)).collect();
        Self::new(t, v)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    fn segment(&self, t: f64) -> usize {
        // Index i with t[i] <= t < t[i+1], clamped to valid segments.
        let i = self.t.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(self.t.len().saturating_sub(2))
    }

    pub fn value(&self, t: f64) -> f64 {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.f[0];
        }
        if t >= self.t[n - 1] {
            return self.f[n - 1];
        }
        let i = self.segment(t);
        let s = (t - self.t[i]) / (self.t[i + 1] - self.t[i]);
        self.f[i] + s * (self.f[i + 1] - self.f[i])
    }

    /// τ(t) = ∫₀ᵗ f(t')² dt', exact for the piecewise-linear interpolant.
    pub fn tau(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.integral_f2(0.0, t)
        } else {
            -self.integral_f2(t, 0.0)
        }
    }

    /// τ on every point of an increasing grid, accumulated segment by segment.
    pub fn tau_on(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut last_t = 0.0;
        let mut acc = 0.0;
        for &t in grid {
            if t >= last_t {
                acc += self.integral_f2(last_t, t);
            } else {
                acc -= self.integral_f2(t, last_t);
            }
            last_t = t;
            out.push(acc);
        }
        out
    }

    fn integral_f2(&self, a: f64, b: f64) -> f64 {
        debug_assert!(b >= a);
        // Knots strictly inside (a, b) split the integral into linear pieces.
        let mut nodes = vec![a];
        nodes.extend(self.t.iter().copied().filter(|&x| x > a && x < b));
        nodes.push(b);
        nodes
            .windows(2)
            .map(|w| {
                let (fa, fb) = (self.value(w[0]), self.value(w[1]));
                (w[1] - w[0]) * (fa * fa + fa * fb + fb * fb) / 3.0
            })
            .sum()
    }
}

/// Temporal shape of the control field Ω_L(t) = Ω_{L0}·f(t).
#[derive(Clone, Debug, PartialEq)]
pub enum Envelope {
    /// f(t) = level for all t ≥ 0.
    Constant(f64),
    /// f = 1 on [0, width), 0 afterwards.
    Square { width: f64 },
    Sampled(PulseEnvelope),
}

impl Envelope {
    pub fn validate(&self) -> Result<()> {
        match self {
            Envelope::Constant(v) if !(0.0..=1.0).contains(v) => {
                Err(invalid(format!("constant envelope level {v} outside [0, 1]")))
            }
            Envelope::Square { width } if !(width.is_finite() && *width > 0.0) => {
                Err(invalid(format!("square pulse width must be positive, got {width}")))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(v) => *v,
            Envelope::Square { width } => {
                if (0.0..*width).contains(&t) {
                    1.0
                } else {
                    0.0
                }
            }
            Envelope::Sampled(p) => p.value(t),
        }
    }

    /// Value approached from the left at `t`.
    pub fn left_limit(&self, t: f64) -> f64 {
        match self {
            Envelope::Square { width } => {
                if t > 0.0 && t <= *width {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.value(t),
        }
    }

    /// Value seen by an integrator working inside the segment `[start, end]`
    /// delimited by consecutive breakpoints.
    pub fn value_in(&self, t: f64, start: f64, end: f64) -> f64 {
        if t >= end && end > start {
            self.left_limit(end)
        } else {
            self.value(t.max(start))
        }
    }

    /// τ(t) = ∫₀ᵗ f² dt'.
    pub fn tau(&self, t: f64) -> f64 {
        match self {
            Envelope::Constant(v) => v * v * t,
            Envelope::Square { width } => t.clamp(0.0, *width),
            Envelope::Sampled(p) => p.tau(t),
        }
    }

    /// Times in `(t0, t1)` where f or its derivative is discontinuous.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        match self {
            Envelope::Constant(_) => Vec::new(),
            Envelope::Square { width } => {
                if *width > t0 && *width < t1 {
                    vec![*width]
                } else {
                    Vec::new()
                }
            }
            Envelope::Sampled(p) => p.times().iter().copied().filter(|&x| x > t0 && x < t1).collect(),
        }
    }

    /// Piecewise-constant segments `(start, end, level)` covering `[t0, t1]`,
    /// or `None` if the envelope varies continuously.
    pub fn constant_pieces(&self, t0: f64, t1: f64) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            Envelope::Constant(v) => Some(vec![(t0, t1, *v)]),
            Envelope::Square { width } => {
                if *width <= t0 {
                    Some(vec![(t0, t1, 0.0)])
                } else if *width >= t1 {
                    Some(vec![(t0, t1, 1.0)])
                } else {
                    Some(vec![(t0, *width, 1.0), (*width, t1, 0.0)])
                }
            }
            Envelope::Sampled(_) => None,
        }
    }
}

/// Classical control field coupling the metastable state to one excited
/// sublevel. `delta` is ω_fe − ω_L; `k_laser` imprints the drive phase
/// e^{i k_L·r_j} on the f→e transfer (zero for a spatially uniform drive).
#[derive(Clone, Debug, PartialEq)]
pub struct LaserDrive {
    pub omega_peak: f64,
    pub delta: f64,
    pub envelope: Envelope,
    pub target: Sublevel,
    pub k_laser: Vec3,
}

impl LaserDrive {
    pub fn new(omega_peak: f64, delta: f64, envelope: Envelope) -> Result<Self> {
        let drive = Self {
            omega_peak,
            delta,
            envelope,
            target: Sublevel::Plus,
            k_laser: Vec3::zeros(),
        };
        drive.validate()?;
        Ok(drive)
    }

    /// Drive switched off entirely.
    pub fn off() -> Self {
        Self {
            omega_peak: 0.0,
            delta: 0.0,
            envelope: Envelope::Constant(0.0),
            target: Sublevel::Plus,
            k_laser: Vec3::zeros(),
        }
    }

    pub fn with_target(mut self, target: Sublevel) -> Self {
        self.target = target;
        self
    }

    pub fn with_k_laser(mut self, k: Vec3) -> Self {
        self.k_laser = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_peak.is_finite() && self.omega_peak >= 0.0) {
            return Err(invalid(format!("Rabi frequency must be >= 0, got {}", self.omega_peak)));
        }
        if !self.delta.is_finite() {
            return Err(invalid("detuning must be finite"));
        }
        self.envelope.validate()
    }

    /// Instantaneous Rabi frequency Ω_L(t).
    pub fn rabi(&self, t: f64) -> f64 {
        self.omega_peak * self.envelope.value(t)
    }
}
