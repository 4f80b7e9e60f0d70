//! Units, atom arrays, Zeeman sublevels and the single-excitation amplitude
//! state shared by the rest of the crate.
//!
//! Everything is expressed in natural units: rates in units of the single-atom
//! decay rate Γ, times in Γ⁻¹ and lengths in the resonant wavelength λ₀.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

pub type Vec3 = Vector3<f64>;

/// Single-atom decay rate of the optically excited manifold.
pub const GAMMA: f64 = 1.0;
/// Resonant wavelength of the e–g transition.
pub const LAMBDA0: f64 = 1.0;
/// Resonant wavenumber, 2π/λ₀.
pub const K0: f64 = TAU / LAMBDA0;

/// Natural unit system. Γ, λ₀ and k₀ are fixed; only the speed of light
/// (in units of λ₀Γ) is configurable since it enters through retarded times
/// alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitSystem {
    c_tilde: f64,
}

impl UnitSystem {
    pub const DEFAULT_C_TILDE: f64 = 100.0;

    pub fn new(c_tilde: f64) -> Result<Self> {
        if !(c_tilde.is_finite() && c_tilde > 0.0) {
            return Err(invalid(format!("speed of light must be positive, got {c_tilde}")));
        }
        Ok(Self { c_tilde })
    }

    pub fn gamma(&self) -> f64 {
        GAMMA
    }

    pub fn lambda0(&self) -> f64 {
        LAMBDA0
    }

    pub fn k0(&self) -> f64 {
        K0
    }

    pub fn c_tilde(&self) -> f64 {
        self.c_tilde
    }

    /// Retarded time u = t − r/c for a detector at distance `r` (λ₀ units).
    pub fn retarded_time(&self, t: f64, r: f64) -> f64 {
        t - r / self.c_tilde
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self { c_tilde: Self::DEFAULT_C_TILDE }
    }
}

/// Magnetic sublevel ν ∈ {−1, 0, +1} of the excited J = 1 manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sublevel {
    Minus,
    Zero,
    Plus,
}

impl Sublevel {
    /// Canonical order used for every array indexed by sublevel.
    pub const ALL: [Sublevel; 3] = [Sublevel::Minus, Sublevel::Zero, Sublevel::Plus];

    /// Column of this sublevel in N×3 arrays.
    pub fn index(self) -> usize {
        match self {
            Sublevel::Minus => 0,
            Sublevel::Zero => 1,
            Sublevel::Plus => 2,
        }
    }

    /// The magnetic quantum number ν.
    pub fn m(self) -> i32 {
        self.index() as i32 - 1
    }

    pub fn from_m(m: i32) -> Result<Self> {
        match m {
            -1 => Ok(Sublevel::Minus),
            0 => Ok(Sublevel::Zero),
            1 => Ok(Sublevel::Plus),
            _ => Err(invalid(format!("sublevel must be -1, 0 or +1, got {m}"))),
        }
    }
}

/// Nonempty subset of the excited sublevels retained in a simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SublevelSet([bool; 3]);

impl SublevelSet {
    pub fn all() -> Self {
        Self([true; 3])
    }

    pub fn only(s: Sublevel) -> Self {
        let mut mask = [false; 3];
        mask[s.index()] = true;
        Self(mask)
    }

    pub fn from_sublevels(levels: &[Sublevel]) -> Result<Self> {
        let mut mask = [false; 3];
        for s in levels {
            mask[s.index()] = true;
        }
        if !mask.iter().any(|&b| b) {
            return Err(invalid("sublevel set must not be empty"));
        }
        Ok(Self(mask))
    }

    pub fn contains(&self, s: Sublevel) -> bool {
        self.0[s.index()]
    }

    pub fn len(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Included sublevels in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Sublevel> + '_ {
        Sublevel::ALL.into_iter().filter(|s| self.contains(*s))
    }

    /// Position of `s` among the included sublevels.
    pub fn position(&self, s: Sublevel) -> Option<usize> {
        self.iter().position(|x| x == s)
    }
}

/// Positions of the atoms (λ₀ units), optionally with the lattice they were
/// built from.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomArray {
    positions: Vec<Vec3>,
    dims: Option<[usize; 3]>,
    spacing: Option<f64>,
}

impl AtomArray {
    /// Rectangular `nx × ny × nz` lattice with spacing `d`, centered at the
    /// origin. Atoms are ordered with x varying fastest and z slowest.
    pub fn lattice(nx: usize, ny: usize, nz: usize, d: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(invalid(format!("lattice dimensions must be >= 1, got {nx}x{ny}x{nz}")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(invalid(format!("lattice spacing must be positive, got {d}")));
        }
        let offset = |n: usize| 0.5 * (n as f64 - 1.0);
        let (ox, oy, oz) = (offset(nx), offset(ny), offset(nz));
        let mut positions = Vec::with_capacity(nx * ny * nz);
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    positions.push(Vec3::new(
                        (ix as f64 - ox) * d,
                        (iy as f64 - oy) * d,
                        (iz as f64 - oz) * d,
                    ));
                }
            }
        }
        Ok(Self { positions, dims: Some([nx, ny, nz]), spacing: Some(d) })
    }

    /// Arbitrary geometry; rejects empty input and coincident atoms.
    pub fn from_positions(positions: Vec<Vec3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(invalid("atom array must not be empty"));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|x| x.is_finite()) {
                return Err(invalid(format!("atom {i} has a non-finite position")));
            }
            for (j, q) in positions.iter().enumerate().skip(i + 1) {
                if (p - q).norm() == 0.0 {
                    return Err(Error::CoincidentAtoms(i, j));
                }
            }
        }
        Ok(Self { positions, dims: None, spacing: None })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn position(&self, j: usize) -> Vec3 {
        self.positions[j]
    }

    pub fn dims(&self) -> Option<[usize; 3]> {
        self.dims
    }

    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub fn min_pair_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, p) in self.positions.iter().enumerate() {
            for q in &self.positions[i + 1..] {
                let r = (p - q).norm();
                best = Some(best.map_or(r, |b| b.min(r)));
            }
        }
        best
    }

    /// The same array rigidly shifted by `shift`.
    pub fn translated(&self, shift: Vec3) -> Self {
        Self {
            positions: self.positions.iter().map(|p| p + shift).collect(),
            dims: self.dims,
            spacing: self.spacing,
        }
    }
}

/// Phase convention of the excited amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frame {
    /// Laboratory amplitudes β as they appear in the closed amplitude equations.
    Lab,
    /// β̃ = β·e^{iδt}, in which a constant drive gives a time-independent generator.
    Rotating { detuning: f64 },
}

/// Amplitudes of the zero-photon component: metastable a_j and excited
/// β_j^ν (columns ordered ν = −1, 0, +1). Photon amplitudes are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeState {
    pub a: Array1<C64>,
    pub beta: Array2<C64>,
    pub t: f64,
    pub frame: Frame,
}

impl AmplitudeState {
    /// All amplitudes zero.
    pub fn vacuum(n_atoms: usize, frame: Frame) -> Self {
        Self {
            a: Array1::zeros(n_atoms),
            beta: Array2::zeros((n_atoms, 3)),
            t: 0.0,
            frame,
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.a.len()
    }

    pub fn metastable_population(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn excited_population(&self, s: Sublevel) -> f64 {
        self.beta.column(s.index()).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.metastable_population()
            + Sublevel::ALL.iter().map(|&s| self.excited_population(s)).sum::<f64>()
    }

    /// Packs the state as `[a_0..a_{N-1}, β_0^{s_0}, β_0^{s_1}, .., β_{N-1}^{s_last}]`
    /// over the included sublevels. Amplitudes on excluded sublevels are dropped.
    pub fn to_vector(&self, sublevels: &SublevelSet) -> Array1<C64> {
        let n = self.n_atoms();
        let s = sublevels.len();
        let mut v = Array1::zeros(n + n * s);
        v.slice_mut(ndarray::s![..n]).assign(&self.a);
        for j in 0..n {
            for (k, level) in sublevels.iter().enumerate() {
                v[n + j * s + k] = self.beta[[j, level.index()]];
            }
        }
        v
    }

    /// Inverse of [`to_vector`](Self::to_vector).
    pub fn from_vector(
        v: &Array1<C64>,
        n_atoms: usize,
        sublevels: &SublevelSet,
        t: f64,
        frame: Frame,
    ) -> Result<Self> {
        let s = sublevels.len();
        if v.len() != n_atoms * (1 + s) {
            return Err(invalid(format!(
                "state vector has length {}, expected {}",
                v.len(),
                n_atoms * (1 + s)
            )));
        }
        let mut state = Self::vacuum(n_atoms, frame);
        state.t = t;
        state.a.assign(&v.slice(ndarray::s![..n_atoms]));
        for j in 0..n_atoms {
            for (k, level) in sublevels.iter().enumerate() {
                state.beta[[j, level.index()]] = v[n_atoms + j * s + k];
            }
        }
        Ok(state)
    }

    /// Converts excited amplitudes to laboratory phase convention.
    pub fn to_lab_frame(&self) -> Self {
        match self.frame {
            Frame::Lab => self.clone(),
            Frame::Rotating { detuning } => {
                let phase = C64::from_polar(1.0, -detuning * self.t);
                Self {
                    a: self.a.clone(),
                    beta: self.beta.mapv(|b| b * phase),
                    t: self.t,
                    frame: Frame::Lab,
                }
            }
        }
    }

    /// Converts excited amplitudes to the rotating frame with the given detuning.
    pub fn to_rotating_frame(&self, detuning: f64) -> Self {
        let lab = self.to_lab_frame();
        let phase = C64::from_polar(1.0, detuning * lab.t);
        Self {
            a: lab.a,
            beta: lab.beta.mapv(|b| b * phase),
            t: lab.t,
            frame: Frame::Rotating { detuning },
        }
    }
}

/// Timed Dicke state a_j = e^{−i k·r_j}/√N with all excited amplitudes zero.
pub fn timed_dicke_state(array: &AtomArray, k_gf: &Vec3) -> Result<AmplitudeState> {
    if array.is_empty() {
        return Err(invalid("atom array must not be empty"));
    }
    let n = array.len();
    let norm = 1.0 / (n as f64).sqrt();
    let mut state = AmplitudeState::vacuum(n, Frame::Lab);
    for (aj, r) in state.a.iter_mut().zip(array.positions()) {
        *aj = C64::from_polar(norm, -k_gf.dot(r));
    }
    Ok(state)
}

/// The whole excitation in the metastable state of atom `j`.
pub fn single_f_excitation(array: &AtomArray, j: usize) -> Result<AmplitudeState> {
    let n = array.len();
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    let mut state = AmplitudeState::vacuum(n, Frame::Lab);
    state.a[j] = C64::new(1.0, 0.0);
    Ok(state)
}
