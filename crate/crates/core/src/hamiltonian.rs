//! Rotating-frame generator of the zero-photon amplitudes and its spectrum.
//!
//! State vectors are laid out as `[a_0 .. a_{N-1}, β̃_0^{s_0}, β̃_0^{s_1}, ..]`
//! (see [`AmplitudeState::to_vector`](crate::model::AmplitudeState::to_vector)).
//! The generator `M` satisfies dψ/dt = M ψ with
//!
//! ```text
//! da_l/dt     = −i Ω(t)/2 · e^{−i k_L·r_l} β̃_l^{target}
//! dβ̃_l^η/dt   = −i Ω(t)/2 · e^{ i k_L·r_l} δ_{η,target} a_l + (iδ − Γ/2) β̃_l^η
//!               − Γ/2 Σ_{j≠l} Σ_ν G^{lj}_{ην} β̃_j^ν
//! ```
//!
//! The single-atom Lamb shift is absorbed into the transition frequency.
//! The Hamiltonian form used for the Hermitian split is H = i·M, so that
//! dψ/dt = −iHψ.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayViewMut1};
use ndarray_linalg::{Eig, Norm, SVD};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::drive::LaserDrive;
use crate::error::{invalid, Error, Result};
use crate::greens::{coupling_block, spherical_basis};
use crate::model::{AtomArray, Sublevel, SublevelSet, GAMMA};

/// Condition number of the eigenvector matrix above which eigenmode
/// propagation is refused.
pub const CONDITION_LIMIT: f64 = 1e8;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Which terms enter the generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyOptions {
    pub sublevels: SublevelSet,
    /// When false every Γ term (single-atom decay and pair exchange) is dropped.
    pub decay: bool,
    /// When false the atoms decay independently.
    pub pair_coupling: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { sublevels: SublevelSet::all(), decay: true, pair_coupling: true }
    }
}

impl AssemblyOptions {
    pub fn with_sublevels(sublevels: SublevelSet) -> Self {
        Self { sublevels, ..Self::default() }
    }
}

/// Generator of the metastable and excited amplitudes for one geometry and drive.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    n_atoms: usize,
    sublevels: SublevelSet,
    excited: Array2<C64>,
    drive_phases: Array1<C64>,
    omega_peak: f64,
    detuning: f64,
    target: Sublevel,
    target_slot: usize,
}

impl EffectiveHamiltonian {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn sublevels(&self) -> &SublevelSet {
        &self.sublevels
    }

    pub fn omega_peak(&self) -> f64 {
        self.omega_peak
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn target(&self) -> Sublevel {
        self.target
    }

    /// Length of a packed state vector.
    pub fn dim(&self) -> usize {
        self.n_atoms * (1 + self.sublevels.len())
    }

    /// The excited-sector block (N·S × N·S) of the generator.
    pub fn excited_block(&self) -> &Array2<C64> {
        &self.excited
    }

    /// Index of β̃_l^{target} in the packed state vector.
    pub fn target_index(&self, l: usize) -> usize {
        self.n_atoms + l * self.sublevels.len() + self.target_slot
    }

    /// Drive coupling between a_l and β̃_l^{target} at envelope level `level`:
    /// (a-row coefficient, β̃-row coefficient).
    pub(crate) fn drive_coefficients(&self, l: usize, level: f64) -> (C64, C64) {
        let amp = -I * (0.5 * self.omega_peak * level);
        let phase = self.drive_phases[l];
        (amp * phase.conj(), amp * phase)
    }

    /// Full generator with the drive at Ω = Ω_{L0}·level.
    pub fn generator(&self, level: f64) -> Array2<C64> {
        let n = self.n_atoms;
        let dim = self.dim();
        let mut m = Array2::zeros((dim, dim));
        m.slice_mut(s![n.., n..]).assign(&self.excited);
        for l in 0..n {
            let (to_a, to_beta) = self.drive_coefficients(l, level);
            let b = self.target_index(l);
            m[[l, b]] = to_a;
            m[[b, l]] = to_beta;
        }
        m
    }

    /// Hamiltonian matrix H = i·M at drive level `level`.
    pub fn hamiltonian(&self, level: f64) -> Array2<C64> {
        self.generator(level).mapv(|z| I * z)
    }

    /// dψ = M(level)·ψ without materializing the full generator.
    pub fn apply(&self, level: f64, psi: ArrayView1<C64>, mut out: ArrayViewMut1<C64>) {
        let n = self.n_atoms;
        let beta = psi.slice(s![n..]);
        {
            let mut d_beta = out.slice_mut(s![n..]);
            ndarray::linalg::general_mat_vec_mul(
                C64::new(1.0, 0.0),
                &self.excited,
                &beta,
                C64::new(0.0, 0.0),
                &mut d_beta,
            );
        }
        for l in 0..n {
            let (to_a, to_beta) = self.drive_coefficients(l, level);
            let b = self.target_index(l);
            out[l] = to_a * psi[b];
            out[b] += to_beta * psi[l];
        }
    }
}

/// Builds the rotating-frame generator for `array` driven by `drive`.
pub fn assemble(
    array: &AtomArray,
    drive: &LaserDrive,
    options: &AssemblyOptions,
) -> Result<EffectiveHamiltonian> {
    drive.validate()?;
    let sublevels = options.sublevels;
    if sublevels.is_empty() {
        return Err(invalid("sublevel set must not be empty"));
    }
    let target_slot = sublevels.position(drive.target).ok_or_else(|| {
        invalid(format!("driven sublevel {} is not among the included sublevels", drive.target.m()))
    })?;
    let n = array.len();
    if n == 0 {
        return Err(invalid("atom array must not be empty"));
    }
    let ns = sublevels.len();
    let basis = spherical_basis();
    let levels: Vec<Sublevel> = sublevels.iter().collect();
    let half_gamma = if options.decay { 0.5 * GAMMA } else { 0.0 };
    let positions = array.positions();

    // One block row per atom, computed independently.
    let rows: Vec<Result<Array2<C64>>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut row = Array2::<C64>::zeros((ns, n * ns));
            for (a, _) in levels.iter().enumerate() {
                row[[a, l * ns + a]] = C64::new(-half_gamma, drive.delta);
            }
            if options.pair_coupling && options.decay {
                for j in (0..n).filter(|&j| j != l) {
                    let g = coupling_block(&positions[l], &positions[j], &basis)
                        .map_err(|_| Error::CoincidentAtoms(l.min(j), l.max(j)))?;
                    for (a, eta) in levels.iter().enumerate() {
                        for (b, nu) in levels.iter().enumerate() {
                            row[[a, j * ns + b]] = -half_gamma * g[(eta.index(), nu.index())];
                        }
                    }
                }
            }
            Ok(row)
        })
        .collect();

    let mut excited = Array2::zeros((n * ns, n * ns));
    for (l, row) in rows.into_iter().enumerate() {
        excited.slice_mut(s![l * ns..(l + 1) * ns, ..]).assign(&row?);
    }

    let drive_phases = positions
        .iter()
        .map(|r| C64::from_polar(1.0, drive.k_laser.dot(r)))
        .collect();

    Ok(EffectiveHamiltonian {
        n_atoms: n,
        sublevels,
        excited,
        drive_phases,
        omega_peak: drive.omega_peak,
        detuning: drive.delta,
        target: drive.target,
        target_slot,
    })
}

/// Splits H = i·M (peak drive) into its Hermitian and anti-Hermitian parts.
pub fn split_hermitian(h: &EffectiveHamiltonian) -> (Array2<C64>, Array2<C64>) {
    split_matrix(&h.hamiltonian(1.0))
}

/// (A + A†)/2 and (A − A†)/2.
pub fn split_matrix(a: &Array2<C64>) -> (Array2<C64>, Array2<C64>) {
    let adj = a.t().mapv(|z| z.conj());
    let herm = (a + &adj).mapv(|z| 0.5 * z);
    let anti = (a - &adj).mapv(|z| 0.5 * z);
    (herm, anti)
}

/// Eigen-decomposition of a generator: M v_m = λ_m v_m with
/// λ_m = −iΔ_m − Γ_m/2.
#[derive(Clone, Debug)]
pub struct ModeSpectrum {
    pub eigenvalues: Array1<C64>,
    pub right_vectors: Array2<C64>,
    /// 2-norm condition number of the eigenvector matrix.
    pub condition_estimate: f64,
}

impl ModeSpectrum {
    /// Decomposes `m`; modes are ordered by increasing decay rate.
    pub fn of_matrix(m: &Array2<C64>) -> Result<Self> {
        let (values, vectors) = m.eig().map_err(|e| Error::Eigensolver {
            message: e.to_string(),
            condition: matrix_condition(m).unwrap_or(f64::NAN),
        })?;
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&x, &y| {
            let (vx, vy) = (values[x], values[y]);
            (-vx.re).total_cmp(&-vy.re).then((-vx.im).total_cmp(&-vy.im))
        });
        let eigenvalues: Array1<C64> = order.iter().map(|&k| values[k]).collect();
        let mut right_vectors = Array2::zeros(vectors.raw_dim());
        for (dst, &src) in order.iter().enumerate() {
            right_vectors.column_mut(dst).assign(&vectors.column(src));
        }
        let condition_estimate = matrix_condition(&right_vectors)?;
        Ok(Self { eigenvalues, right_vectors, condition_estimate })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Γ_m = −2 Re λ_m.
    pub fn rates(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -2.0 * l.re).collect()
    }

    /// Δ_m = −Im λ_m.
    pub fn shifts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -l.im).collect()
    }

    pub fn subradiant(&self) -> Vec<bool> {
        self.rates().into_iter().map(|g| g < GAMMA).collect()
    }

    pub fn superradiant(&self) -> Vec<bool> {
        self.rates().into_iter().map(|g| g > GAMMA).collect()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// max_m ‖M v_m − λ_m v_m‖.
    pub fn max_residual(&self, m: &Array2<C64>) -> f64 {
        (0..self.len())
            .map(|k| {
                let v = self.right_vectors.column(k);
                let r = m.dot(&v) - v.mapv(|z| z * self.eigenvalues[k]);
                r.norm_l2()
            })
            .fold(0.0, f64::max)
    }
}

/// σ_max/σ_min of a square matrix.
pub fn matrix_condition(m: &Array2<C64>) -> Result<f64> {
    let (_, sv, _) = m.svd(false, false)?;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Spectrum of the full generator at peak drive.
pub fn eigenmodes(h: &EffectiveHamiltonian) -> Result<ModeSpectrum> {
    ModeSpectrum::of_matrix(&h.generator(1.0))
}

/// Spectrum of the excited-sector block alone (collective emission modes).
pub fn excited_modes(h: &EffectiveHamiltonian) -> Result<ModeSpectrum> {
    ModeSpectrum::of_matrix(h.excited_block())
}
