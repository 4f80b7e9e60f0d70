//! Adiabatic outcoupling model and control-envelope design.
//!
//! For a detuning large compared to the drive, the excited amplitudes follow
//! the metastable ones, β̃_l ≈ (Ω f/2δ) e^{i k_L·r_l} a_l, and
//!
//! ```text
//! da_l/dt = f(t)² [ −iΔ_light a_l − Γ'/2 a_l − Γ'/2 Σ_{j≠l} G^{lj}_{tt} a_j ]
//! ```
//!
//! with Γ' = ΓΩ²/(4δ²) and Δ_light = Ω²/(4δ). Since f² only rescales time,
//! a(t) = a⁰(τ(t)) with τ = ∫f² and a⁰ the constant-drive solution. Inverting
//! n(t) = n⁰(τ(t)) for a target photon count n(t) yields the envelope.

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};
use num_complex::Complex64 as C64;

use crate::drive::{Envelope, LaserDrive, PulseEnvelope};
use crate::dynamics::{propagate_ode, EigenPropagator, OdeOptions, OutputGrid, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::farfield::{waveform_with_kernel, FluxKernel, Waveform};
use crate::greens::{coupling_block, spherical_basis};
use crate::hamiltonian::{assemble, AssemblyOptions, ModeSpectrum};
use crate::integrator::integrate;
use crate::model::{AmplitudeState, AtomArray, GAMMA};
use crate::pchip::Pchip;
use crate::quadrature::AngularGrid;

/// Reduced model for the metastable amplitudes only.
#[derive(Clone, Debug)]
pub struct AdiabaticModel {
    omega_peak: f64,
    delta: f64,
    gamma_eff: f64,
    light_shift: f64,
    drive_phases: Array1<C64>,
    generator: Array2<C64>,
}

impl AdiabaticModel {
    /// Builds the model for `drive` (its envelope is ignored; f enters later).
    pub fn new(array: &AtomArray, drive: &LaserDrive) -> Result<Self> {
        drive.validate()?;
        if drive.delta == 0.0 {
            return Err(invalid("adiabatic elimination requires a nonzero detuning"));
        }
        let (omega, delta) = (drive.omega_peak, drive.delta);
        if delta.abs() < 2.0 * omega || delta.abs() < 10.0 * GAMMA {
            log::warn!(
                "detuning {delta} is not large compared with the drive {omega} and Γ; \
                 the adiabatic model is only qualitative"
            );
        }
        let gamma_eff = GAMMA * omega * omega / (4.0 * delta * delta);
        let light_shift = omega * omega / (4.0 * delta);
        let n = array.len();
        let basis = spherical_basis();
        let t = drive.target.index();
        let pos = array.positions();
        let drive_phases: Array1<C64> =
            pos.iter().map(|r| C64::from_polar(1.0, drive.k_laser.dot(r))).collect();
        let mut generator = Array2::zeros((n, n));
        for l in 0..n {
            generator[[l, l]] = C64::new(-0.5 * gamma_eff, -light_shift);
            for j in (0..n).filter(|&j| j != l) {
                let g = coupling_block(&pos[l], &pos[j], &basis)
                    .map_err(|_| Error::CoincidentAtoms(l.min(j), l.max(j)))?;
                generator[[l, j]] =
                    -0.5 * gamma_eff * g[(t, t)] * drive_phases[l].conj() * drive_phases[j];
            }
        }
        Ok(Self { omega_peak: omega, delta, gamma_eff, light_shift, drive_phases, generator })
    }

    /// Γ' = ΓΩ²/(4δ²).
    pub fn gamma_eff(&self) -> f64 {
        self.gamma_eff
    }

    /// Δ_light = Ω²/(4δ).
    pub fn light_shift(&self) -> f64 {
        self.light_shift
    }

    pub fn n_atoms(&self) -> usize {
        self.generator.nrows()
    }

    /// A with da/dτ = A·a.
    pub fn generator(&self) -> &Array2<C64> {
        &self.generator
    }

    /// Leading-order excited amplitudes β̃ = (Ω f/2δ) e^{i k_L·r} a.
    pub fn beta_estimate(&self, a: ArrayView1<C64>, level: f64) -> Array1<C64> {
        let s = self.omega_peak * level / (2.0 * self.delta);
        a.iter().zip(self.drive_phases.iter()).map(|(x, p)| x * p * s).collect()
    }
}

/// Metastable amplitudes and emitted photon number n = |a(0)|² − |a(t)|².
#[derive(Clone, Debug, PartialEq)]
pub struct AdiabaticSolution {
    pub times: Vec<f64>,
    pub a: Vec<Array1<C64>>,
    pub n: Vec<f64>,
}

impl AdiabaticSolution {
    fn from_amplitudes(times: Vec<f64>, a: Vec<Array1<C64>>, norm0: f64) -> Self {
        let n = a.iter().map(|v| norm0 - v.iter().map(|z| z.norm_sqr()).sum::<f64>()).collect();
        Self { times, a, n }
    }
}

/// Closed-form constant-drive solution a⁰(τ) of the adiabatic model.
pub struct AdiabaticReference {
    prop: EigenPropagator,
    coefficients: Array1<C64>,
    norm0: f64,
    tau_max: f64,
}

impl AdiabaticReference {
    /// Reference valid for τ ∈ [0, tau_max].
    pub fn new(model: &AdiabaticModel, a0: &Array1<C64>, tau_max: f64) -> Result<Self> {
        if a0.len() != model.n_atoms() {
            return Err(invalid("initial amplitudes do not match the model size"));
        }
        if !(tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(invalid("reference coverage must be a finite nonnegative time"));
        }
        let prop = EigenPropagator::from_spectrum(ModeSpectrum::of_matrix(model.generator())?)?;
        let coefficients = prop.coefficients(a0)?;
        let norm0 = a0.iter().map(|z| z.norm_sqr()).sum();
        Ok(Self { prop, coefficients, norm0, tau_max })
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn amplitudes(&self, tau: f64) -> Result<Array1<C64>> {
        if !(tau >= 0.0 && tau <= self.tau_max * (1.0 + 1e-12)) {
            return Err(Error::OutOfCoverage { t: tau, start: 0.0, end: self.tau_max });
        }
        Ok(self.prop.evolve(&self.coefficients, tau).0)
    }

    /// n⁰(τ).
    pub fn photons(&self, tau: f64) -> Result<f64> {
        let a = self.amplitudes(tau)?;
        Ok(self.norm0 - a.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    /// dn⁰/dτ.
    pub fn flux(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0 && tau <= self.tau_max * (1.0 + 1e-12)) {
            return Err(Error::OutOfCoverage { t: tau, start: 0.0, end: self.tau_max });
        }
        let (a, da) = self.prop.evolve(&self.coefficients, tau);
        Ok(-2.0 * a.iter().zip(da.iter()).map(|(x, d)| (x.conj() * d).re).sum::<f64>())
    }

    /// n⁰ sampled on `times`.
    pub fn curve(&self, times: &[f64]) -> Result<CumulativeCurve> {
        let n = times.iter().map(|&t| self.photons(t)).collect::<Result<Vec<_>>>()?;
        let slopes = times.iter().map(|&t| self.flux(t)).collect::<Result<Vec<_>>>()?;
        CumulativeCurve::new(times.to_vec(), n)?.with_slopes(slopes)
    }
}

/// Constant-drive (f ≡ 1) evolution of the adiabatic model on `times`.
pub fn adiabatic_simulate(model: &AdiabaticModel, a0: &Array1<C64>, times: &[f64]) -> Result<AdiabaticSolution> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if times.iter().any(|&t| t < 0.0) {
        return Err(invalid("times must be nonnegative"));
    }
    let reference = AdiabaticReference::new(model, a0, t_max)?;
    let a = times.iter().map(|&t| reference.amplitudes(t)).collect::<Result<Vec<_>>>()?;
    Ok(AdiabaticSolution::from_amplitudes(times.to_vec(), a, reference.norm0))
}

/// Direct integration of the adiabatic model with a time-dependent envelope.
pub fn adiabatic_integrate(
    model: &AdiabaticModel,
    envelope: &Envelope,
    a0: &Array1<C64>,
    times: &[f64],
    opts: &OdeOptions,
) -> Result<AdiabaticSolution> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || times[0] < 0.0 {
        return Err(invalid("times must be nonnegative and strictly increasing"));
    }
    let t_end = *times.last().unwrap();
    let mut bounds = vec![0.0];
    bounds.extend(envelope.breakpoints(0.0, t_end));
    bounds.push(t_end);
    let a_gen = model.generator();
    let mut out: Vec<Array1<C64>> = Vec::new();
    let mut y = a0.clone();
    if times[0] == 0.0 {
        out.push(y.clone());
    }
    for k in 0..bounds.len() - 1 {
        let (start, end) = (bounds[k], bounds[k + 1]);
        if end <= start {
            continue;
        }
        let stops: Vec<f64> = times.iter().copied().filter(|&t| t > start && t < end).collect();
        let rhs = |t: f64, y: ArrayView1<C64>, mut d: ArrayViewMut1<C64>| {
            let f = envelope.value_in(t, start, end);
            d.assign(&a_gen.dot(&y).mapv(|z| z * (f * f)));
        };
        let end_is_output = times.contains(&end);
        let (y_end, _, _) = integrate(rhs, start, y, end, &stops, opts, false, |t, v, _| {
            if t < end || end_is_output {
                out.push(v.clone());
            }
        })?;
        y = y_end;
    }
    let norm0 = a0.iter().map(|z| z.norm_sqr()).sum();
    Ok(AdiabaticSolution::from_amplitudes(times.to_vec(), out, norm0))
}

/// a(t) = a⁰(τ(t)) on `times`.
pub fn reparametrize(
    reference: &AdiabaticReference,
    envelope: &Envelope,
    times: &[f64],
) -> Result<AdiabaticSolution> {
    let a = times
        .iter()
        .map(|&t| reference.amplitudes(envelope.tau(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AdiabaticSolution::from_amplitudes(times.to_vec(), a, reference.norm0))
}

/// Monotone cumulative photon number n(t) on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CumulativeCurve {
    t: Vec<f64>,
    n: Vec<f64>,
    slopes: Option<Vec<f64>>,
}

impl CumulativeCurve {
    pub fn new(t: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != n.len() {
            return Err(invalid("cumulative curve needs at least two matching samples"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("cumulative curve times must be strictly increasing"));
        }
        let scale = n.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for k in 1..n.len() {
            if n[k] < n[k - 1] - 1e-12 * scale {
                return Err(Error::NonMonotoneReference { t: t[k] });
            }
        }
        Ok(Self { t, n, slopes: None })
    }

    /// Attaches exact dn/dt at every sample; the inversion then uses them
    /// instead of estimated slopes.
    pub fn with_slopes(mut self, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != self.t.len() || slopes.iter().any(|v| !v.is_finite()) {
            return Err(invalid("slopes must be finite and match the samples"));
        }
        self.slopes = Some(slopes);
        Ok(self)
    }

    pub fn slopes(&self) -> Option<&[f64]> {
        self.slopes.as_deref()
    }

    /// Metastable depletion |a(t₀)|² − |a(t)|² of a full-model trajectory.
    pub fn from_metastable_depletion(traj: &Trajectory) -> Result<Self> {
        let pops = traj.populations();
        let n0 = pops[0].metastable;
        Self::new(pops.iter().map(|p| p.t).collect(), pops.iter().map(|p| n0 - p.metastable).collect())
    }

    pub fn from_waveform(w: &Waveform) -> Result<Self> {
        Self::new(w.u.clone(), w.cumulative.clone())
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.n
    }

    pub fn final_value(&self) -> f64 {
        *self.n.last().unwrap()
    }
}

/// Desired photon flux I(u) on a retarded-time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetWaveform {
    u: Vec<f64>,
    flux: Vec<f64>,
}

impl TargetWaveform {
    /// Target with ∫I ≤ 1.
    pub fn new(u: Vec<f64>, flux: Vec<f64>) -> Result<Self> {
        let t = Self::shape(u, flux)?;
        let p = t.total_photons();
        if p > 1.0 + 1e-9 {
            return Err(invalid(format!("target carries {p} photons, more than one")));
        }
        Ok(t)
    }

    /// Target with arbitrary normalization, rescaled to carry `photons`.
    pub fn from_shape(u: Vec<f64>, flux: Vec<f64>, photons: f64) -> Result<Self> {
        Self::shape(u, flux)?.normalized(photons)
    }

    fn shape(u: Vec<f64>, flux: Vec<f64>) -> Result<Self> {
        if u.len() < 2 || u.len() != flux.len() {
            return Err(invalid("target needs at least two matching samples"));
        }
        if u.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("target times must be strictly increasing"));
        }
        if let Some(bad) = flux.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(invalid(format!("target flux must be finite and nonnegative, got {bad}")));
        }
        Ok(Self { u, flux })
    }

    /// Gaussian I ∝ exp(−(u−center)²/w²) with 1/e half-width `w`.
    pub fn gaussian(u: Vec<f64>, center: f64, half_width: f64, photons: f64) -> Result<Self> {
        let flux = u.iter().map(|x| (-((x - center) / half_width).powi(2)).exp()).collect();
        Self::from_shape(u, flux, photons)
    }

    /// Sum of two equal-height Gaussians.
    pub fn double_gaussian(u: Vec<f64>, centers: [f64; 2], half_width: f64, photons: f64) -> Result<Self> {
        let flux = u
            .iter()
            .map(|x| centers.iter().map(|c| (-((x - c) / half_width).powi(2)).exp()).sum())
            .collect();
        Self::from_shape(u, flux, photons)
    }

    pub fn times(&self) -> &[f64] {
        &self.u
    }

    pub fn flux(&self) -> &[f64] {
        &self.flux
    }

    /// ∫ I du.
    pub fn total_photons(&self) -> f64 {
        *self.cumulative().last().unwrap()
    }

    /// Running integral of the monotone cubic interpolant of the flux.
    pub fn cumulative(&self) -> Vec<f64> {
        Pchip::new(self.u.clone(), self.flux.clone())
            .expect("target grid validated at construction")
            .cumulative_integral()
    }

    pub fn normalized(&self, photons: f64) -> Result<Self> {
        let p = self.total_photons();
        if !(p > 0.0) {
            return Err(invalid("target flux is identically zero"));
        }
        if !(photons > 0.0 && photons <= 1.0) {
            return Err(invalid(format!("photon number {photons} outside (0, 1]")));
        }
        let s = photons / p;
        Ok(Self { u: self.u.clone(), flux: self.flux.iter().map(|v| v * s).collect() })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.u.clone(), self.flux.iter().map(|v| v * factor).collect())
    }

    /// Linear interpolation of the flux; zero outside the grid.
    pub fn flux_at(&self, u: f64) -> f64 {
        if u < self.u[0] || u > *self.u.last().unwrap() {
            return 0.0;
        }
        let i = self.u.partition_point(|&x| x <= u).clamp(1, self.u.len() - 1);
        let s = (u - self.u[i - 1]) / (self.u[i] - self.u[i - 1]);
        self.flux[i - 1] + s * (self.flux[i] - self.flux[i - 1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignOptions {
    /// Fraction of the reference's final photon number carried by the target.
    /// `None` uses the target as given.
    pub photon_fraction: Option<f64>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self { photon_fraction: Some(0.99) }
    }
}

#[derive(Clone, Debug)]
pub struct DesignedEnvelope {
    pub envelope: PulseEnvelope,
    /// τ(t) on the envelope grid.
    pub tau: Vec<f64>,
    /// √(dτ/dt) before clipping to 1.
    pub required: Vec<f64>,
    /// Target cumulative photon number n(t).
    pub n_target: Vec<f64>,
    /// Target after normalization.
    pub target: TargetWaveform,
}

/// Solves n(t) = n⁰(τ(t)) for τ and returns f = √(dτ/dt) on the target grid.
pub fn design_envelope(
    reference: &CumulativeCurve,
    target: &TargetWaveform,
    opts: &DesignOptions,
) -> Result<DesignedEnvelope> {
    let target = match opts.photon_fraction {
        Some(frac) => {
            if !(frac > 0.0 && frac < 1.0) {
                return Err(invalid(format!("photon fraction {frac} outside (0, 1)")));
            }
            target.normalized(frac * reference.final_value())?
        }
        None => target.clone(),
    };
    let n_target = target.cumulative();
    let reach = reference.final_value();
    if *n_target.last().unwrap() > reach * (1.0 + 1e-6) {
        return Err(invalid(format!(
            "target carries {} photons but the reference only reaches {reach}",
            n_target.last().unwrap()
        )));
    }

    // Invert n⁰: τ as a monotone function of n⁰, dropping flat stretches.
    let mut nx = Vec::new();
    let mut tx = Vec::new();
    let mut kept = Vec::new();
    for (k, (&t, &n)) in reference.times().iter().zip(reference.values()).enumerate() {
        if nx.last().is_none_or(|&last| n > last) {
            nx.push(n);
            tx.push(t);
            kept.push(k);
        }
    }
    let exact: Option<Vec<f64>> = reference
        .slopes()
        .map(|s| kept.iter().map(|&k| s[k]).collect::<Vec<_>>())
        .filter(|s| s.iter().all(|&v| v > 0.0));
    let inverse = match exact {
        Some(s) => Pchip::hermite(nx, tx, s.iter().map(|v| 1.0 / v).collect())?,
        None => Pchip::new(nx, tx)?,
    };
    let (n_lo, n_hi) = inverse.domain();

    let mut tau = Vec::with_capacity(n_target.len());
    let mut f = Vec::with_capacity(n_target.len());
    let mut required = Vec::with_capacity(n_target.len());
    for ((&u, &n), &flux) in target.times().iter().zip(&n_target).zip(target.flux()) {
        let n = n.clamp(n_lo, n_hi);
        let (t_ref, dtau_dn) = inverse.eval_with_derivative(n);
        let mut f2 = flux * dtau_dn;
        if f2 < 0.0 && f2 > -1e-12 {
            f2 = 0.0;
        }
        if f2 < 0.0 {
            return Err(Error::NonMonotoneReference { t: u });
        }
        if f2.sqrt() > 1.0 + 1e-6 {
            return Err(Error::InfeasibleTarget { t: u, required: f2.sqrt() });
        }
        tau.push(t_ref);
        required.push(f2.sqrt());
        f.push(f2.min(1.0).sqrt());
    }
    let envelope = PulseEnvelope::new(target.times().to_vec(), f)?;
    Ok(DesignedEnvelope { envelope, tau, required, n_target, target })
}

/// Comparison of a full simulation with the target.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    /// ‖I_sim − I_target‖₂ / ‖I_target‖₂ on the target grid.
    pub l2_mismatch: f64,
    /// Position of the simulated maximum minus that of the target maximum.
    pub peak_time_error: f64,
    pub photons_emitted: f64,
    pub waveform: Waveform,
}

/// Runs the full model with `drive` from `psi0` over the target window and
/// compares the angle-integrated flux with the target.
#[allow(clippy::too_many_arguments)]
pub fn validate(
    array: &AtomArray,
    drive: &LaserDrive,
    options: &AssemblyOptions,
    psi0: &AmplitudeState,
    target: &TargetWaveform,
    grid: &AngularGrid,
    ode: &OdeOptions,
) -> Result<ValidationReport> {
    let h = assemble(array, drive, options)?;
    let times: Vec<f64> = target.times().iter().copied().filter(|&u| u >= psi0.t).collect();
    if times.len() < 2 {
        return Err(invalid("target window does not overlap the simulation"));
    }
    let t_end = *times.last().unwrap();
    let traj = propagate_ode(&h, &drive.envelope, psi0, t_end, ode, &OutputGrid::Times(times))?;
    let kernel = FluxKernel::new(array, &options.sublevels, grid);
    let waveform = waveform_with_kernel(&traj, &kernel)?;
    Ok(compare(waveform, target))
}

/// Mismatch metrics between a simulated waveform and a target.
pub fn compare(waveform: Waveform, target: &TargetWaveform) -> ValidationReport {
    let mut num = 0.0;
    let mut den = 0.0;
    for (u, sim) in waveform.u.iter().zip(&waveform.flux_total) {
        let want = target.flux_at(*u);
        num += (sim - want).powi(2);
        den += want * want;
    }
    let argmax = |u: &[f64], v: &[f64]| -> f64 {
        let mut best = 0;
        for k in 0..v.len() {
            if v[k] > v[best] {
                best = k;
            }
        }
        u[best]
    };
    let peak_time_error =
        argmax(&waveform.u, &waveform.flux_total) - argmax(target.times(), target.flux());
    ValidationReport {
        l2_mismatch: if den > 0.0 { (num / den).sqrt() } else { f64::INFINITY },
        peak_time_error,
        photons_emitted: waveform.total_photons(),
        waveform,
    }
}

/// Indices of strict local maxima that rise at least `prominence·max(v)` above
/// the lowest value on both sides before the next higher sample.
pub fn local_maxima(v: &[f64], prominence: f64) -> Vec<usize> {
    let vmax = v.iter().copied().fold(0.0, f64::max);
    let thresh = prominence * vmax;
    let mut out = Vec::new();
    for i in 1..v.len().saturating_sub(1) {
        if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
            continue;
        }
        let mut left_min = v[i];
        let mut k = i;
        while k > 0 && v[k - 1] <= v[i] {
            k -= 1;
            left_min = left_min.min(v[k]);
        }
        let mut right_min = v[i];
        let mut k = i;
        while k + 1 < v.len() && v[k + 1] <= v[i] {
            k += 1;
            right_min = right_min.min(v[k]);
        }
        if v[i] - left_min.max(right_min) >= thresh {
            out.push(i);
        }
    }
    out
}
