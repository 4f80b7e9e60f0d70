//! Time evolution of the zero-photon amplitudes.
//!
//! Constant (or piecewise-constant) drives are propagated through the
//! eigenmodes of the generator; general envelopes use the adaptive
//! integrator. Both produce a [`Trajectory`] that stores states and their
//! time derivatives, so off-grid states come from cubic Hermite interpolation.

use ndarray::{s, Array1, ArrayView1, ArrayViewMut1};
use ndarray_linalg::{Factorize, LUFactorized, Solve};
use num_complex::Complex64 as C64;

use crate::drive::Envelope;
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{EffectiveHamiltonian, ModeSpectrum, CONDITION_LIMIT};
pub use crate::integrator::{OdeOptions, OdeStats};
use crate::integrator::{hermite, integrate};
use crate::model::{AmplitudeState, Frame, Sublevel, SublevelSet};

/// Metastable and per-sublevel excited populations at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Populations {
    pub t: f64,
    pub metastable: f64,
    /// Indexed by [`Sublevel::index`].
    pub excited: [f64; 3],
}

impl Populations {
    pub fn of_state(state: &AmplitudeState) -> Self {
        Self {
            t: state.t,
            metastable: state.metastable_population(),
            excited: Sublevel::ALL.map(|s| state.excited_population(s)),
        }
    }

    pub fn excited_total(&self) -> f64 {
        self.excited.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.metastable + self.excited_total()
    }
}

/// Sampled solution with derivatives for dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    n_atoms: usize,
    sublevels: SublevelSet,
    frame: Frame,
    times: Vec<f64>,
    states: Vec<Array1<C64>>,
    derivs: Vec<Array1<C64>>,
    /// Left-sided derivative at nodes where the drive switches.
    left_derivs: Vec<Option<Array1<C64>>>,
    stats: OdeStats,
}

impl Trajectory {
    fn new(n_atoms: usize, sublevels: SublevelSet, frame: Frame) -> Self {
        Self {
            n_atoms,
            sublevels,
            frame,
            times: Vec::new(),
            states: Vec::new(),
            derivs: Vec::new(),
            left_derivs: Vec::new(),
            stats: OdeStats::default(),
        }
    }

    fn push(&mut self, t: f64, y: Array1<C64>, dy: Array1<C64>) {
        if let Some(&last) = self.times.last() {
            if t <= last {
                // Same node reached twice (segment boundary); keep the first.
                return;
            }
        }
        self.times.push(t);
        self.states.push(y);
        self.derivs.push(dy);
        self.left_derivs.push(None);
    }

    /// Marks the last node as a switching point: `right` becomes the
    /// derivative used to the right, the stored one is kept for the left.
    fn set_kink(&mut self, right: Array1<C64>) {
        if let Some(d) = self.derivs.last_mut() {
            let left = std::mem::replace(d, right);
            *self.left_derivs.last_mut().unwrap() = Some(left);
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn sublevels(&self) -> &SublevelSet {
        &self.sublevels
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Integrator statistics (zero for eigenmode propagation).
    pub fn stats(&self) -> OdeStats {
        self.stats
    }

    /// Time interval covered by the samples.
    pub fn coverage(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Packed state vector at node `i`.
    pub fn vector(&self, i: usize) -> &Array1<C64> {
        &self.states[i]
    }

    /// Time derivative at node `i` (right-sided at switching points).
    pub fn derivative(&self, i: usize) -> &Array1<C64> {
        &self.derivs[i]
    }

    /// Derivative approached from the left at node `i`.
    pub fn left_derivative(&self, i: usize) -> &Array1<C64> {
        self.left_derivs[i].as_ref().unwrap_or(&self.derivs[i])
    }

    pub fn state(&self, i: usize) -> AmplitudeState {
        self.unpack(&self.states[i], self.times[i])
    }

    fn unpack(&self, v: &Array1<C64>, t: f64) -> AmplitudeState {
        AmplitudeState::from_vector(v, self.n_atoms, &self.sublevels, t, self.frame)
            .expect("trajectory vectors have consistent length")
    }

    /// Interpolated state vector and derivative at `t`.
    pub fn vector_at(&self, t: f64) -> Result<(Array1<C64>, Array1<C64>)> {
        let (start, end) = self.coverage();
        let slack = 1e-12 * end.abs().max(1.0);
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfCoverage { t, start, end });
        }
        let t = t.clamp(start, end);
        let i = self.times.partition_point(|&x| x <= t);
        if i > 0 && self.times[i - 1] == t {
            return Ok((self.states[i - 1].clone(), self.derivs[i - 1].clone()));
        }
        let (lo, hi) = (i - 1, i);
        let d_hi = self.left_derivs[hi].as_ref().unwrap_or(&self.derivs[hi]);
        Ok(hermite(
            self.times[lo],
            self.states[lo].view(),
            self.derivs[lo].view(),
            self.times[hi],
            self.states[hi].view(),
            d_hi.view(),
            t,
        ))
    }

    /// Interpolated amplitudes at `t`.
    pub fn state_at(&self, t: f64) -> Result<AmplitudeState> {
        let (v, _) = self.vector_at(t)?;
        Ok(self.unpack(&v, t))
    }

    /// Squared norm Σ|a|² + Σ|β|² at every node.
    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum()).collect()
    }

    /// Populations at every node.
    pub fn populations(&self) -> Vec<Populations> {
        (0..self.len()).map(|i| Populations::of_state(&self.state(i))).collect()
    }
}

/// Populations along a trajectory.
pub fn populations(traj: &Trajectory) -> Result<Vec<Populations>> {
    if traj.is_empty() {
        return Err(invalid("trajectory is empty"));
    }
    Ok(traj.populations())
}

fn check_initial(h: &EffectiveHamiltonian, psi0: &AmplitudeState) -> Result<()> {
    if psi0.n_atoms() != h.n_atoms() {
        return Err(invalid(format!(
            "initial state has {} atoms, Hamiltonian has {}",
            psi0.n_atoms(),
            h.n_atoms()
        )));
    }
    for s in Sublevel::ALL.into_iter().filter(|s| !h.sublevels().contains(*s)) {
        if psi0.excited_population(s) > 0.0 {
            return Err(invalid(format!(
                "initial state populates sublevel {} which is not included",
                s.m()
            )));
        }
    }
    Ok(())
}

fn initial_vector(h: &EffectiveHamiltonian, psi0: &AmplitudeState) -> Result<Array1<C64>> {
    check_initial(h, psi0)?;
    Ok(psi0.to_rotating_frame(h.detuning()).to_vector(h.sublevels()))
}

fn check_grid(times: &[f64], t0: f64) -> Result<()> {
    if times.is_empty() {
        return Err(invalid("output time grid is empty"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("output times must be strictly increasing"));
    }
    if times[0] < t0 {
        return Err(invalid(format!("output time {} precedes the initial time {t0}", times[0])));
    }
    Ok(())
}

/// ψ(t) = V e^{Λ(t−t₀)} V⁻¹ ψ(t₀) for a fixed drive level.
pub struct EigenPropagator {
    spectrum: ModeSpectrum,
    lu: LUFactorized<ndarray::OwnedRepr<C64>>,
}

impl EigenPropagator {
    /// Diagonalizes the generator at `level`; refuses ill-conditioned bases.
    pub fn new(h: &EffectiveHamiltonian, level: f64) -> Result<Self> {
        let spectrum = ModeSpectrum::of_matrix(&h.generator(level))?;
        Self::from_spectrum(spectrum)
    }

    pub fn from_spectrum(spectrum: ModeSpectrum) -> Result<Self> {
        if !(spectrum.condition_estimate <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned {
                condition: spectrum.condition_estimate,
                limit: CONDITION_LIMIT,
            });
        }
        let lu = spectrum.right_vectors.factorize()?;
        Ok(Self { spectrum, lu })
    }

    pub fn spectrum(&self) -> &ModeSpectrum {
        &self.spectrum
    }

    /// Mode coefficients c = V⁻¹ψ.
    pub fn coefficients(&self, psi: &Array1<C64>) -> Result<Array1<C64>> {
        Ok(self.lu.solve(psi)?)
    }

    /// State and derivative after time `dt` from mode coefficients `c`.
    pub fn evolve(&self, c: &Array1<C64>, dt: f64) -> (Array1<C64>, Array1<C64>) {
        let lam = &self.spectrum.eigenvalues;
        let e: Array1<C64> = lam.iter().zip(c.iter()).map(|(l, ck)| (l * dt).exp() * ck).collect();
        let de: Array1<C64> = lam.iter().zip(e.iter()).map(|(l, x)| l * x).collect();
        let v = &self.spectrum.right_vectors;
        (v.dot(&e), v.dot(&de))
    }
}

/// Eigenmode propagation at constant drive level `level` on `times`.
pub fn propagate_eigen(
    h: &EffectiveHamiltonian,
    level: f64,
    psi0: &AmplitudeState,
    times: &[f64],
) -> Result<Trajectory> {
    let psi = initial_vector(h, psi0)?;
    check_grid(times, psi0.t)?;
    let prop = EigenPropagator::new(h, level)?;
    let c = prop.coefficients(&psi)?;
    let mut traj = Trajectory::new(h.n_atoms(), *h.sublevels(), Frame::Rotating { detuning: h.detuning() });
    for &t in times {
        let (y, dy) = prop.evolve(&c, t - psi0.t);
        traj.push(t, y, dy);
    }
    Ok(traj)
}

/// Eigenmode propagation for a piecewise-constant envelope. Switching
/// times inside the window are added to the output grid.
pub fn propagate_piecewise(
    h: &EffectiveHamiltonian,
    envelope: &Envelope,
    psi0: &AmplitudeState,
    times: &[f64],
) -> Result<Trajectory> {
    envelope.validate()?;
    let mut psi = initial_vector(h, psi0)?;
    check_grid(times, psi0.t)?;
    let t0 = psi0.t;
    let t_end = *times.last().unwrap();
    let pieces = envelope
        .constant_pieces(t0, t_end)
        .ok_or_else(|| invalid("envelope is not piecewise constant"))?;

    let mut cache: Vec<(f64, EigenPropagator)> = Vec::new();
    let mut traj = Trajectory::new(h.n_atoms(), *h.sublevels(), Frame::Rotating { detuning: h.detuning() });
    let mut next = 0;
    for (k, &(start, end, level)) in pieces.iter().enumerate() {
        let idx = match cache.iter().position(|(l, _)| *l == level) {
            Some(i) => i,
            None => {
                cache.push((level, EigenPropagator::new(h, level)?));
                cache.len() - 1
            }
        };
        let prop = &cache[idx].1;
        let c = prop.coefficients(&psi)?;
        let last = k + 1 == pieces.len();
        while next < times.len() && (times[next] < end || (last && times[next] <= end)) {
            let (y, dy) = prop.evolve(&c, times[next] - start);
            traj.push(times[next], y, dy);
            next += 1;
        }
        let (y_end, dy_end) = prop.evolve(&c, end - start);
        if !last {
            traj.push(end, y_end.clone(), dy_end);
            let next_level = pieces[k + 1].2;
            let mut right = Array1::zeros(psi.len());
            h.apply(next_level, y_end.view(), right.view_mut());
            traj.set_kink(right);
        }
        psi = y_end;
    }
    Ok(traj)
}

/// Which times an ODE trajectory records.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputGrid {
    /// Every accepted integrator step.
    Steps,
    /// The given increasing times (plus the initial time and envelope breakpoints).
    Times(Vec<f64>),
}

/// Adaptive integration of the rotating-frame equations from `psi0.t` to `t_end`.
pub fn propagate_ode(
    h: &EffectiveHamiltonian,
    envelope: &Envelope,
    psi0: &AmplitudeState,
    t_end: f64,
    opts: &OdeOptions,
    grid: &OutputGrid,
) -> Result<Trajectory> {
    let psi = initial_vector(h, psi0)?;
    let traj = Trajectory::new(h.n_atoms(), *h.sublevels(), Frame::Rotating { detuning: h.detuning() });
    integrate_segments(traj, psi, psi0.t, envelope, t_end, opts, grid, |level, _t, y, out| {
        h.apply(level, y, out)
    })
}

/// Integrates the laboratory-frame equations directly. The state is kept
/// in lab phase convention (β rather than β̃); used to cross-check the
/// rotating-frame formulation.
pub fn propagate_ode_lab(
    h: &EffectiveHamiltonian,
    envelope: &Envelope,
    psi0: &AmplitudeState,
    t_end: f64,
    opts: &OdeOptions,
    grid: &OutputGrid,
) -> Result<Trajectory> {
    check_initial(h, psi0)?;
    let psi = psi0.to_lab_frame().to_vector(h.sublevels());
    let n = h.n_atoms();
    let delta = h.detuning();
    let traj = Trajectory::new(n, *h.sublevels(), Frame::Lab);
    integrate_segments(traj, psi, psi0.t, envelope, t_end, opts, grid, |level, t, y, mut out| {
        // Excited block without the rotating-frame detuning term.
        let beta = y.slice(s![n..]);
        let mut d_beta = h.excited_block().dot(&beta);
        d_beta.zip_mut_with(&beta, |d, b| *d -= C64::new(0.0, delta) * b);
        out.slice_mut(s![n..]).assign(&d_beta);
        let rot = C64::from_polar(1.0, delta * t);
        for l in 0..n {
            let (to_a, to_beta) = h.drive_coefficients(l, level);
            let b = h.target_index(l);
            out[l] = to_a * rot * y[b];
            out[b] += to_beta * rot.conj() * y[l];
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn integrate_segments<F>(
    mut traj: Trajectory,
    psi: Array1<C64>,
    t0: f64,
    envelope: &Envelope,
    t_end: f64,
    opts: &OdeOptions,
    grid: &OutputGrid,
    rhs: F,
) -> Result<Trajectory>
where
    F: Fn(f64, f64, ArrayView1<C64>, ArrayViewMut1<C64>),
{
    envelope.validate()?;
    opts.validate()?;
    if !(t_end >= t0) {
        return Err(invalid(format!("end time {t_end} precedes the initial time {t0}")));
    }
    let (out_times, every_step) = match grid {
        OutputGrid::Steps => (Vec::new(), true),
        OutputGrid::Times(ts) => {
            check_grid(ts, t0)?;
            if *ts.last().unwrap() > t_end {
                return Err(invalid("output times extend beyond the end time"));
            }
            (ts.clone(), false)
        }
    };

    let mut bounds = vec![t0];
    bounds.extend(envelope.breakpoints(t0, t_end));
    bounds.push(t_end);

    let mut d0 = Array1::zeros(psi.len());
    rhs(envelope.value(t0), t0, psi.view(), d0.view_mut());
    traj.push(t0, psi.clone(), d0);

    let mut y = psi;
    let mut seg_opts = *opts;
    let mut stats = OdeStats::default();
    for k in 0..bounds.len() - 1 {
        let (start, end) = (bounds[k], bounds[k + 1]);
        if end <= start {
            continue;
        }
        let stops: Vec<f64> = out_times.iter().copied().filter(|&t| t > start && t < end).collect();
        let f = |t: f64, y: ArrayView1<C64>, out: ArrayViewMut1<C64>| {
            rhs(envelope.value_in(t, start, end), t, y, out)
        };
        let (y_end, _, seg_stats) =
            integrate(f, start, y, end, &stops, &seg_opts, every_step, |t, y, dy| {
                traj.push(t, y.clone(), dy.clone())
            })?;
        stats.accepted += seg_stats.accepted;
        stats.rejected += seg_stats.rejected;
        stats.evaluations += seg_stats.evaluations;
        stats.next_step = seg_stats.next_step;
        if seg_stats.next_step > 0.0 {
            seg_opts.h_init = Some(seg_stats.next_step);
        }
        if k + 2 < bounds.len() {
            let mut right = Array1::zeros(y_end.len());
            rhs(envelope.value(end), end, y_end.view(), right.view_mut());
            traj.set_kink(right);
        }
        y = y_end;
    }
    traj.stats = stats;
    Ok(traj)
}

/// Eigenmode propagation when the envelope is piecewise constant and the
/// modes are well conditioned, adaptive integration otherwise. The output
/// grid must end at the final time.
pub fn propagate(
    h: &EffectiveHamiltonian,
    envelope: &Envelope,
    psi0: &AmplitudeState,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    check_grid(times, psi0.t)?;
    if envelope.constant_pieces(psi0.t, *times.last().unwrap()).is_some() {
        match propagate_piecewise(h, envelope, psi0, times) {
            Err(Error::IllConditioned { condition, .. }) => {
                log::warn!("eigenbasis condition {condition:.3e}; falling back to ODE integration");
            }
            other => return other,
        }
    }
    let t_end = *times.last().unwrap();
    propagate_ode(h, envelope, psi0, t_end, opts, &OutputGrid::Times(times.to_vec()))
}

/// Uniform grid of `n` points on `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![t0];
    }
    (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect()
}
