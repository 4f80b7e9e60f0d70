//! Adaptive Dormand–Prince 5(4) integrator for complex linear systems.
//!
//! Steps are shortened to land exactly on caller-supplied stop times, where
//! the state and its derivative are handed to a callback. The derivative
//! pairs feed the cubic Hermite interpolation used by trajectories.

use ndarray::{Array1, ArrayView1, ArrayViewMut1, Zip};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeOptions {
    /// Relative local error tolerance.
    pub rtol: f64,
    /// Absolute local error tolerance.
    pub atol: f64,
    /// Initial step; estimated from the right-hand side when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, h_init: None, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

impl OdeOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(invalid(format!("relative tolerance must be positive, got {}", self.rtol)));
        }
        if !(self.atol >= 0.0 && self.atol.is_finite()) {
            return Err(invalid(format!("absolute tolerance must be >= 0, got {}", self.atol)));
        }
        if !(self.h_max > 0.0) {
            return Err(invalid("maximum step must be positive"));
        }
        Ok(())
    }
}

/// Statistics of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Step size proposed for continuing past the final time.
    pub next_step: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn error_norm(err: &Array1<C64>, y0: &Array1<C64>, y1: &Array1<C64>, opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let mut acc = 0.0;
    Zip::from(err).and(y0).and(y1).for_each(|e, a, b| {
        let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
        let r = e.norm() / sc;
        acc += r * r;
    });
    (acc / n).sqrt()
}

/// Integrates dy/dt = rhs(t, y) from `t0` to `t1`.
///
/// `stops` must be increasing and lie in `(t0, t1]`; `t1` is always treated
/// as a stop. `emit(t, y, dy)` is invoked at every stop, and additionally
/// after every accepted step when `every_step` is set. Returns the final
/// state, the derivative there and statistics.
#[allow(clippy::too_many_arguments)]
pub fn integrate<F, G>(
    rhs: F,
    t0: f64,
    y0: Array1<C64>,
    t1: f64,
    stops: &[f64],
    opts: &OdeOptions,
    every_step: bool,
    mut emit: G,
) -> Result<(Array1<C64>, Array1<C64>, OdeStats)>
where
    F: Fn(f64, ArrayView1<C64>, ArrayViewMut1<C64>),
    G: FnMut(f64, &Array1<C64>, &Array1<C64>),
{
    opts.validate()?;
    if !(t1 >= t0) {
        return Err(invalid(format!("integration interval [{t0}, {t1}] is reversed")));
    }
    let mut stops: Vec<f64> = stops.iter().copied().filter(|&s| s > t0 && s < t1).collect();
    stops.push(t1);
    if stops.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("stop times must be increasing"));
    }

    let dim = y0.len();
    let mut stats = OdeStats::default();
    let eval = |t: f64, y: &Array1<C64>, out: &mut Array1<C64>, stats: &mut OdeStats| {
        rhs(t, y.view(), out.view_mut());
        stats.evaluations += 1;
    };

    let mut y = y0;
    let mut k1 = Array1::zeros(dim);
    eval(t0, &y, &mut k1, &mut stats);
    if t1 == t0 {
        emit(t0, &y, &k1);
        stats.next_step = opts.h_init.unwrap_or(0.0);
        return Ok((y, k1, stats));
    }

    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(&eval, t0, &y, &k1, opts, &mut stats),
    }
    .min(opts.h_max)
    .min(t1 - t0);

    let mut k2 = Array1::zeros(dim);
    let mut k3 = Array1::zeros(dim);
    let mut k4 = Array1::zeros(dim);
    let mut k5 = Array1::zeros(dim);
    let mut k6 = Array1::zeros(dim);
    let mut k7 = Array1::zeros(dim);
    let mut tmp = Array1::zeros(dim);
    let mut err = Array1::zeros(dim);

    let mut t = t0;
    let mut stop_idx = 0;
    let mut steps = 0usize;

    while stop_idx < stops.len() {
        let target = stops[stop_idx];
        let h_free = h;
        let hits_stop = t + h >= target - 1e-12 * h.max(target.abs() * f64::EPSILON);
        let h_step = if hits_stop { target - t } else { h };
        let t_new = if hits_stop { target } else { t + h_step };

        let h_floor = 1e-13 * t.abs().max(1.0);
        if h_step < h_floor && !hits_stop {
            return Err(Error::StepSizeUnderflow { t, h: h_step });
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, h: h_step });
        }

        let hc = |c: f64| C64::new(h_step * c, 0.0);

        Zip::from(&mut tmp).and(&y).and(&k1).for_each(|o, &yi, &a| *o = yi + hc(A21) * a);
        eval(t + C2 * h_step, &tmp, &mut k2, &mut stats);

        Zip::from(&mut tmp)
            .and(&y)
            .and(&k1)
            .and(&k2)
            .for_each(|o, &yi, &a, &b| *o = yi + hc(A31) * a + hc(A32) * b);
        eval(t + C3 * h_step, &tmp, &mut k3, &mut stats);

        Zip::from(&mut tmp)
            .and(&y)
            .and(&k1)
            .and(&k2)
            .and(&k3)
            .for_each(|o, &yi, &a, &b, &c| *o = yi + hc(A41) * a + hc(A42) * b + hc(A43) * c);
        eval(t + C4 * h_step, &tmp, &mut k4, &mut stats);

        Zip::from(&mut tmp).and(&y).and(&k1).and(&k2).and(&k3).and(&k4).for_each(
            |o, &yi, &a, &b, &c, &d| {
                *o = yi + hc(A51) * a + hc(A52) * b + hc(A53) * c + hc(A54) * d
            },
        );
        eval(t + C5 * h_step, &tmp, &mut k5, &mut stats);

        for i in 0..dim {
            tmp[i] = y[i]
                + hc(A61) * k1[i]
                + hc(A62) * k2[i]
                + hc(A63) * k3[i]
                + hc(A64) * k4[i]
                + hc(A65) * k5[i];
        }
        eval(t + h_step, &tmp, &mut k6, &mut stats);

        let mut y_new = Array1::zeros(dim);
        for i in 0..dim {
            y_new[i] = y[i]
                + hc(A71) * k1[i]
                + hc(A73) * k3[i]
                + hc(A74) * k4[i]
                + hc(A75) * k5[i]
                + hc(A76) * k6[i];
        }
        eval(t_new, &y_new, &mut k7, &mut stats);

        for i in 0..dim {
            err[i] = hc(E1) * k1[i]
                + hc(E3) * k3[i]
                + hc(E4) * k4[i]
                + hc(E5) * k5[i]
                + hc(E6) * k6[i]
                + hc(E7) * k7[i];
        }
        let en = error_norm(&err, &y, &y_new, opts);

        if en <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            std::mem::swap(&mut k1, &mut k7);
            if hits_stop || every_step {
                emit(t, &y, &k1);
            }
            if hits_stop {
                stop_idx += 1;
            }
            let factor = if en == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            // A step truncated to meet a stop does not limit the next one.
            let base = if hits_stop { h_free.max(h_step) } else { h_step };
            h = (base * factor).min(opts.h_max);
        } else {
            stats.rejected += 1;
            let factor = (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h = h_step * factor;
            if h < 1e-13 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h });
            }
        }
    }
    stats.next_step = h;
    Ok((y, k1, stats))
}

fn initial_step<E>(
    eval: &E,
    t0: f64,
    y0: &Array1<C64>,
    f0: &Array1<C64>,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64
where
    E: Fn(f64, &Array1<C64>, &mut Array1<C64>, &mut OdeStats),
{
    let scale = |v: &Array1<C64>| -> f64 {
        let n = v.len().max(1) as f64;
        let s: f64 = v
            .iter()
            .zip(y0.iter())
            .map(|(z, y)| {
                let sc = opts.atol + opts.rtol * y.norm();
                (z.norm() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    };
    let d0 = scale(y0);
    let d1 = scale(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = y0 + &f0.mapv(|z| z * h0);
    let mut f1 = Array1::zeros(y0.len());
    eval(t0 + h0, &y1, &mut f1, stats);
    let d2 = scale(&(&f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Cubic Hermite interpolation on `[t0, t1]` from end values and derivatives.
pub fn hermite(
    t0: f64,
    y0: ArrayView1<C64>,
    d0: ArrayView1<C64>,
    t1: f64,
    y1: ArrayView1<C64>,
    d1: ArrayView1<C64>,
    t: f64,
) -> (Array1<C64>, Array1<C64>) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    // Derivatives of the basis with respect to t.
    let g00 = (6.0 * s2 - 6.0 * s) / h;
    let g10 = 3.0 * s2 - 4.0 * s + 1.0;
    let g01 = (-6.0 * s2 + 6.0 * s) / h;
    let g11 = 3.0 * s2 - 2.0 * s;
    let mut y = Array1::zeros(y0.len());
    let mut dy = Array1::zeros(y0.len());
    Zip::from(&mut y)
        .and(&mut dy)
        .and(&y0)
        .and(&d0)
        .and(&y1)
        .and(&d1)
        .for_each(|o, od, &a, &da, &b, &db| {
            *o = a * h00 + da * (h10 * h) + b * h01 + db * (h11 * h);
            *od = a * g00 + da * g10 + b * g01 + db * g11;
        });
    (y, dy)
}
