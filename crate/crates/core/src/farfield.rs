//! Far-field photon intensity per detected helicity.
//!
//! For a detector in direction r̂ the field amplitude of helicity σ is
//! A_σ = Σ_{j,ν} β_j^ν(u) e^{i k₀ r̂·r_j} (ε_σ†·e_ν), evaluated at the retarded
//! time u = t − r/c. The reported quantity is the photon flux per steradian
//! 𝒩|A_σ|² with 𝒩 = 3Γ/(8π); the detector distance is divided out.

use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::Trajectory;
use crate::error::{invalid, Result};
use crate::greens::{spherical_basis, CVec3};
use crate::model::{AtomArray, Sublevel, SublevelSet, Vec3, GAMMA, K0};
use crate::quadrature::AngularGrid;

/// 𝒩 = 3Γ/(8π): one photon in total from a single decaying atom.
pub const NORMALIZATION: f64 = 3.0 * GAMMA / (8.0 * PI);

/// Number of independent partial sums used for quadrature reductions.
/// Fixed so that results do not depend on the thread count.
const REDUCTION_CHUNKS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Helicity {
    Plus,
    Minus,
}

impl Helicity {
    pub const BOTH: [Helicity; 2] = [Helicity::Plus, Helicity::Minus];

    pub fn index(self) -> usize {
        match self {
            Helicity::Plus => 0,
            Helicity::Minus => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Helicity::Plus => "plus",
            Helicity::Minus => "minus",
        }
    }
}

/// Circular transverse polarization basis about an observation direction.
#[derive(Clone, Debug, PartialEq)]
pub struct HelicityFrame {
    pub r_hat: Vec3,
    pub e_theta: Vec3,
    pub e_phi: Vec3,
    pub eps_plus: CVec3,
    pub eps_minus: CVec3,
}

impl HelicityFrame {
    pub fn eps(&self, h: Helicity) -> &CVec3 {
        match h {
            Helicity::Plus => &self.eps_plus,
            Helicity::Minus => &self.eps_minus,
        }
    }

    /// The same frame with the opposite handedness convention.
    pub fn swapped(&self) -> Self {
        Self { eps_plus: self.eps_minus, eps_minus: self.eps_plus, ..self.clone() }
    }

    /// ε_σ†·e_ν for ν = −1, 0, +1.
    pub fn dipole_factors(&self, h: Helicity) -> [C64; 3] {
        let basis = spherical_basis();
        let eps = self.eps(h);
        Sublevel::ALL.map(|s| eps.dotc(basis.vector(s)))
    }
}

/// Builds ε_± = (e_θ ± i e_φ)/√2 from the spherical angles of `r_hat`.
/// On the z axis the azimuth is taken as φ = 0, so e_θ = ±x̂ and e_φ = ŷ.
pub fn helicity_frame(r_hat: &Vec3) -> Result<HelicityFrame> {
    let norm = r_hat.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(invalid("observation direction must be a nonzero vector"));
    }
    let r = r_hat / norm;
    let theta = r.z.clamp(-1.0, 1.0).acos();
    let rho = r.x.hypot(r.y);
    let phi = if rho > 0.0 { r.y.atan2(r.x) } else { 0.0 };
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let e_theta = Vec3::new(ct * cp, ct * sp, -st);
    let e_phi = Vec3::new(-sp, cp, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = C64::new(0.0, 1.0);
    let mk = |sign: f64| -> CVec3 {
        CVec3::new(
            (C64::from(e_theta.x) + i * sign * e_phi.x) * h,
            (C64::from(e_theta.y) + i * sign * e_phi.y) * h,
            (C64::from(e_theta.z) + i * sign * e_phi.z) * h,
        )
    };
    Ok(HelicityFrame { r_hat: r, e_theta, e_phi, eps_plus: mk(1.0), eps_minus: mk(-1.0) })
}

/// Field amplitudes (A₊, A₋) for excited amplitudes `beta` (N×3, columns ν = −1, 0, +1).
pub fn emission_amplitude(beta: ArrayView2<C64>, positions: &[Vec3], frame: &HelicityFrame) -> [C64; 2] {
    let fp = frame.dipole_factors(Helicity::Plus);
    let fm = frame.dipole_factors(Helicity::Minus);
    let mut out = [C64::new(0.0, 0.0); 2];
    for (j, r) in positions.iter().enumerate() {
        let phase = C64::from_polar(1.0, K0 * frame.r_hat.dot(r));
        let mut sp = C64::new(0.0, 0.0);
        let mut sm = C64::new(0.0, 0.0);
        for nu in 0..3 {
            let b = beta[[j, nu]];
            sp += b * fp[nu];
            sm += b * fm[nu];
        }
        out[0] += phase * sp;
        out[1] += phase * sm;
    }
    out
}

/// Photon flux per steradian for both helicities.
pub fn intensity(beta: ArrayView2<C64>, array: &AtomArray, frame: &HelicityFrame) -> [f64; 2] {
    emission_amplitude(beta, array.positions(), frame).map(|a| NORMALIZATION * a.norm_sqr())
}

/// Per-helicity intensity samples on a sphere grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularMap {
    grid: AngularGrid,
    values: [Vec<f64>; 2],
    /// Retarded time of a snapshot; `None` for a time-integrated map.
    retarded_time: Option<f64>,
}

impl AngularMap {
    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn values(&self, h: Helicity) -> &[f64] {
        &self.values[h.index()]
    }

    pub fn retarded_time(&self) -> Option<f64> {
        self.retarded_time
    }

    /// Helicity-summed values.
    pub fn total(&self) -> Vec<f64> {
        self.values[0].iter().zip(&self.values[1]).map(|(a, b)| a + b).collect()
    }

    /// Labels exchanged, as produced by the opposite handedness convention.
    pub fn swapped(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: [self.values[1].clone(), self.values[0].clone()],
            retarded_time: self.retarded_time,
        }
    }

    pub fn max(&self, h: Helicity) -> f64 {
        self.values(h).iter().copied().fold(0.0, f64::max)
    }

    /// Direction index of the largest helicity-summed value.
    pub fn peak_index(&self) -> usize {
        let total = self.total();
        let mut best = 0;
        for (d, v) in total.iter().enumerate() {
            if *v > total[best] {
                best = d;
            }
        }
        best
    }

    /// Largest value of helicity `h` among directions with `pred(r̂)`.
    pub fn max_where(&self, h: Helicity, pred: impl Fn(&Vec3) -> bool) -> f64 {
        (0..self.grid.len())
            .filter(|&d| pred(&self.grid.direction(d)))
            .map(|d| self.values(h)[d])
            .fold(0.0, f64::max)
    }

    /// Σ w I over directions with `pred(r̂)`.
    pub fn flux_where(&self, h: Helicity, pred: impl Fn(&Vec3) -> bool) -> f64 {
        (0..self.grid.len())
            .filter(|&d| pred(&self.grid.direction(d)))
            .map(|d| self.grid.weight(d) * self.values(h)[d])
            .sum()
    }
}

/// Quadrature of a map: total flux per helicity.
pub fn integrate_flux(map: &AngularMap) -> [f64; 2] {
    [map.grid.integrate(&map.values[0]), map.grid.integrate(&map.values[1])]
}

/// Row vectors c_d with A_σ(d) = c_d·β for every φ node of θ row `row`.
/// Columns follow the packed excited layout (atom major, included sublevels minor).
fn row_coefficients(
    grid: &AngularGrid,
    row: usize,
    positions: &[Vec3],
    sublevels: &SublevelSet,
    h: Helicity,
    scale: f64,
) -> Array2<C64> {
    let n_phi = grid.n_phi();
    let ns = sublevels.len();
    let levels: Vec<Sublevel> = sublevels.iter().collect();
    let mut c = Array2::zeros((n_phi, positions.len() * ns));
    for k in 0..n_phi {
        let d = row * n_phi + k;
        let frame = helicity_frame(&grid.direction(d)).expect("grid directions are unit vectors");
        let f = frame.dipole_factors(h);
        for (j, r) in positions.iter().enumerate() {
            let phase = C64::from_polar(scale, K0 * frame.r_hat.dot(r));
            for (a, lvl) in levels.iter().enumerate() {
                c[[k, j * ns + a]] = phase * f[lvl.index()];
            }
        }
    }
    c
}

/// Snapshot map for excited amplitudes `beta` (N×3).
pub fn angular_map_of(beta: ArrayView2<C64>, array: &AtomArray, grid: &AngularGrid) -> AngularMap {
    let values: Vec<[f64; 2]> = (0..grid.len())
        .into_par_iter()
        .map(|d| {
            let frame = helicity_frame(&grid.direction(d)).expect("grid directions are unit vectors");
            intensity(beta, array, &frame)
        })
        .collect();
    AngularMap {
        grid: grid.clone(),
        values: [values.iter().map(|v| v[0]).collect(), values.iter().map(|v| v[1]).collect()],
        retarded_time: None,
    }
}

/// Snapshot of the far-field intensity at retarded time `u`.
pub fn angular_map(traj: &Trajectory, array: &AtomArray, u: f64, grid: &AngularGrid) -> Result<AngularMap> {
    check_array(traj, array)?;
    let state = traj.state_at(u)?;
    let mut map = angular_map_of(state.beta.view(), array, grid);
    map.retarded_time = Some(u);
    Ok(map)
}

/// Photons per steradian emitted over the whole trajectory, ∫ I dt.
pub fn time_integrated_map(traj: &Trajectory, array: &AtomArray, grid: &AngularGrid) -> Result<AngularMap> {
    check_array(traj, array)?;
    let n = traj.n_atoms();
    let m = traj.len();
    let ns = traj.sublevels().len();
    let dim = n * ns;
    let mut y = Array2::<C64>::zeros((dim, m));
    let mut dy_right = Array2::<C64>::zeros((dim, m));
    let mut dy_left = Array2::<C64>::zeros((dim, m));
    for i in 0..m {
        y.column_mut(i).assign(&traj.vector(i).slice(s![n..]));
        dy_right.column_mut(i).assign(&traj.derivative(i).slice(s![n..]));
        dy_left.column_mut(i).assign(&traj.left_derivative(i).slice(s![n..]));
    }
    let times = traj.times();
    let rows: Vec<[Vec<f64>; 2]> = (0..grid.n_theta())
        .into_par_iter()
        .map(|row| {
            Helicity::BOTH.map(|h| {
                let c = row_coefficients(grid, row, array.positions(), traj.sublevels(), h, 1.0);
                let a = c.dot(&y);
                let dr = c.dot(&dy_right);
                let dl = c.dot(&dy_left);
                (0..grid.n_phi())
                    .map(|k| {
                        let mut acc = 0.0;
                        for i in 0..m.saturating_sub(1) {
                            let hstep = times[i + 1] - times[i];
                            let (a0, a1) = (a[[k, i]], a[[k, i + 1]]);
                            let g0 = a0.norm_sqr();
                            let g1 = a1.norm_sqr();
                            let dg0 = 2.0 * (a0.conj() * dr[[k, i]]).re;
                            let dg1 = 2.0 * (a1.conj() * dl[[k, i + 1]]).re;
                            acc += 0.5 * hstep * (g0 + g1) + hstep * hstep / 12.0 * (dg0 - dg1);
                        }
                        NORMALIZATION * acc
                    })
                    .collect()
            })
        })
        .collect();
    let mut values = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
    for r in rows {
        for h in 0..2 {
            values[h].extend_from_slice(&r[h]);
        }
    }
    Ok(AngularMap { grid: grid.clone(), values, retarded_time: None })
}

fn check_array(traj: &Trajectory, array: &AtomArray) -> Result<()> {
    if traj.n_atoms() != array.len() {
        return Err(invalid(format!(
            "trajectory has {} atoms but the array has {}",
            traj.n_atoms(),
            array.len()
        )));
    }
    if traj.is_empty() {
        return Err(invalid("trajectory is empty"));
    }
    Ok(())
}

/// Angle-integrated flux as a quadratic form: flux_σ = β† K_σ β on the
/// packed excited amplitudes.
#[derive(Clone, Debug)]
pub struct FluxKernel {
    sublevels: SublevelSet,
    kernels: [Array2<C64>; 2],
}

impl FluxKernel {
    pub fn new(array: &AtomArray, sublevels: &SublevelSet, grid: &AngularGrid) -> Self {
        let dim = array.len() * sublevels.len();
        let kernels = Helicity::BOTH.map(|h| {
            let rows = grid.n_theta();
            let chunk = rows.div_ceil(REDUCTION_CHUNKS).max(1);
            let partials: Vec<Array2<C64>> = (0..rows.div_ceil(chunk))
                .into_par_iter()
                .map(|ci| {
                    let mut k = Array2::<C64>::zeros((dim, dim));
                    for row in ci * chunk..((ci + 1) * chunk).min(rows) {
                        let w = grid.weight(row * grid.n_phi());
                        let c = row_coefficients(grid, row, array.positions(), sublevels, h, w.sqrt());
                        let ch = c.t().mapv(|z| z.conj());
                        k = k + ch.dot(&c);
                    }
                    k
                })
                .collect();
            let mut total = Array2::<C64>::zeros((dim, dim));
            for p in partials {
                total = total + p;
            }
            total.mapv(|z| z * NORMALIZATION)
        });
        Self { sublevels: *sublevels, kernels }
    }

    pub fn sublevels(&self) -> &SublevelSet {
        &self.sublevels
    }

    pub fn matrix(&self, h: Helicity) -> &Array2<C64> {
        &self.kernels[h.index()]
    }

    /// Flux per helicity for packed excited amplitudes.
    pub fn flux(&self, beta: ArrayView1<C64>) -> [f64; 2] {
        self.kernels.each_ref().map(|k| {
            let kb = k.dot(&beta);
            beta.iter().zip(kb.iter()).map(|(b, x)| (b.conj() * x).re).sum()
        })
    }

    /// Flux and its time derivative 2 Re(β† K β̇).
    pub fn flux_with_derivative(&self, beta: ArrayView1<C64>, dbeta: ArrayView1<C64>) -> ([f64; 2], [f64; 2]) {
        let mut f = [0.0; 2];
        let mut df = [0.0; 2];
        for (h, k) in self.kernels.iter().enumerate() {
            let kb = k.dot(&beta);
            f[h] = beta.iter().zip(kb.iter()).map(|(b, x)| (b.conj() * x).re).sum();
            df[h] = 2.0 * dbeta.iter().zip(kb.iter()).map(|(d, x)| (x.conj() * d).re).sum::<f64>();
        }
        (f, df)
    }
}

/// Angle-integrated photon flux versus retarded time.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub u: Vec<f64>,
    /// Indexed by [`Helicity::index`].
    pub flux: [Vec<f64>; 2],
    pub flux_total: Vec<f64>,
    /// ∫ flux du from the first sample.
    pub cumulative: Vec<f64>,
    /// Norm lost by the atomic state since the first sample.
    pub n_stateside: Vec<f64>,
}

impl Waveform {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Photons emitted over the covered window.
    pub fn total_photons(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Laboratory detection time t = u + r/c at distance r.
    pub fn detector_times(&self, r: f64, c_tilde: f64) -> Vec<f64> {
        self.u.iter().map(|u| u + r / c_tilde).collect()
    }
}

/// Flux and photon count on the trajectory nodes, using a precomputed kernel.
pub fn waveform_with_kernel(traj: &Trajectory, kernel: &FluxKernel) -> Result<Waveform> {
    if traj.is_empty() {
        return Err(invalid("trajectory is empty"));
    }
    if kernel.sublevels() != traj.sublevels() {
        return Err(invalid("flux kernel and trajectory use different sublevel sets"));
    }
    let n = traj.n_atoms();
    if kernel.matrix(Helicity::Plus).nrows() != n * traj.sublevels().len() {
        return Err(invalid("flux kernel does not match the trajectory size"));
    }
    let m = traj.len();
    let evals: Vec<([f64; 2], [f64; 2], f64)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let beta = traj.vector(i).slice(s![n..]);
            let (f, df) = kernel.flux_with_derivative(beta, traj.derivative(i).slice(s![n..]));
            let (_, dfl) = kernel.flux_with_derivative(beta, traj.left_derivative(i).slice(s![n..]));
            (f, df, dfl[0] + dfl[1])
        })
        .collect();
    let norms = traj.norms();
    let mut w = Waveform {
        u: traj.times().to_vec(),
        flux: [Vec::with_capacity(m), Vec::with_capacity(m)],
        flux_total: Vec::with_capacity(m),
        cumulative: Vec::with_capacity(m),
        n_stateside: norms.iter().map(|x| norms[0] - x).collect(),
    };
    let mut acc = 0.0;
    for i in 0..m {
        let (f, _, _) = evals[i];
        w.flux[0].push(f[0].max(0.0));
        w.flux[1].push(f[1].max(0.0));
        w.flux_total.push(f[0].max(0.0) + f[1].max(0.0));
        if i > 0 {
            let h = w.u[i] - w.u[i - 1];
            let (f0, df0, _) = evals[i - 1];
            let (f1, _, dfl1) = evals[i];
            let g0 = f0[0] + f0[1];
            let g1 = f1[0] + f1[1];
            acc += 0.5 * h * (g0 + g1) + h * h / 12.0 * ((df0[0] + df0[1]) - dfl1);
        }
        w.cumulative.push(acc);
    }
    Ok(w)
}

/// Waveform of a trajectory on the given quadrature grid.
pub fn waveform(traj: &Trajectory, array: &AtomArray, grid: &AngularGrid) -> Result<Waveform> {
    check_array(traj, array)?;
    let kernel = FluxKernel::new(array, traj.sublevels(), grid);
    waveform_with_kernel(traj, &kernel)
}

/// Total flux β†(I + f_c)β computed from the coupling tensor, without quadrature.
pub fn exact_total_flux(array: &AtomArray, beta: ArrayView2<C64>) -> Result<f64> {
    let basis = spherical_basis();
    let pos = array.positions();
    let mut total = 0.0;
    for l in 0..pos.len() {
        for nu in 0..3 {
            total += beta[[l, nu]].norm_sqr();
        }
        for j in (0..pos.len()).filter(|&j| j != l) {
            let (f, _) = crate::greens::coupling_block_parts(&pos[l], &pos[j], &basis)?;
            for eta in 0..3 {
                for nu in 0..3 {
                    total += (beta[[l, eta]].conj() * f[(eta, nu)] * beta[[j, nu]]).re;
                }
            }
        }
    }
    Ok(GAMMA * total)
}

/// Packed excited block of a state vector as an N×3 array.
pub fn unpack_beta(v: ArrayView1<C64>, n_atoms: usize, sublevels: &SublevelSet) -> Array2<C64> {
    let ns = sublevels.len();
    let mut beta = Array2::zeros((n_atoms, 3));
    for j in 0..n_atoms {
        for (a, lvl) in sublevels.iter().enumerate() {
            beta[[j, lvl.index()]] = v[n_atoms + j * ns + a];
        }
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use crate::drive::{Envelope, LaserDrive};
    use crate::dynamics::{propagate_eigen, uniform_grid};
    use crate::hamiltonian::{assemble, AssemblyOptions};
    use crate::model::{AmplitudeState, Frame};

    fn single_excited(level: Sublevel) -> Array2<C64> {
        let mut b = Array2::zeros((1, 3));
        b[[0, level.index()]] = C64::new(1.0, 0.0);
        b
    }

    #[test]
    fn frame_is_transverse_and_orthonormal() {
        let f = helicity_frame(&Vec3::z()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.eps_plus - CVec3::new(h.into(), C64::new(0.0, h), 0.0.into())).norm() < 1e-15);
        for k in 0..200 {
            let t = 0.37 * k as f64;
            let r = Vec3::new(t.sin() * (3.0 * t).cos(), t.sin() * (3.0 * t).sin(), t.cos());
            let f = helicity_frame(&r).unwrap();
            let rc = CVec3::new(r.x.into(), r.y.into(), r.z.into());
            assert!(f.eps_plus.dotc(&rc).norm() < 1e-14);
            assert!(f.eps_minus.dotc(&rc).norm() < 1e-14);
            assert!(f.eps_plus.dotc(&f.eps_minus).norm() < 1e-14);
            assert!((f.eps_plus.dotc(&f.eps_plus).re - 1.0).abs() < 1e-14);
        }
        assert!(helicity_frame(&Vec3::zeros()).is_err());
    }

    #[test]
    fn dipole_pattern() {
        let arr = AtomArray::lattice(1, 1, 1, 1.0).unwrap();
        let beta = single_excited(Sublevel::Plus);
        for k in 0..50 {
            let th = PI * k as f64 / 49.0;
            let r = Vec3::new(th.sin() * 0.3f64.cos(), th.sin() * 0.3f64.sin(), th.cos());
            let i = intensity(beta.view(), &arr, &helicity_frame(&r).unwrap());
            let expected = NORMALIZATION * 0.5 * (1.0 + th.cos().powi(2));
            assert!((i[0] + i[1] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn single_atom_emits_one_photon_rate() {
        let arr = AtomArray::lattice(1, 1, 1, 1.0).unwrap();
        let grid = AngularGrid::default();
        for level in Sublevel::ALL {
            let map = angular_map_of(single_excited(level).view(), &arr, &grid);
            let f = integrate_flux(&map);
            assert!((f[0] + f[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_sums_to_coupling_tensor() {
        let arr = AtomArray::lattice(2, 2, 2, 0.35).unwrap();
        let set = SublevelSet::all();
        let k = FluxKernel::new(&arr, &set, &AngularGrid::default());
        let total = k.matrix(Helicity::Plus) + k.matrix(Helicity::Minus);
        let beta: Array2<C64> = Array2::from_shape_fn((8, 3), |(j, n)| {
            C64::new((j as f64 + 0.3 * n as f64).sin(), (1.7 * j as f64 - n as f64).cos())
        });
        let v: Array1<C64> = beta.iter().copied().collect();
        let q: f64 = v.iter().zip(total.dot(&v).iter()).map(|(a, b)| (a.conj() * b).re).sum();
        let exact = exact_total_flux(&arr, beta.view()).unwrap();
        assert!((q - exact).abs() < 1e-10 * exact, "{q} vs {exact}");
    }

    #[test]
    fn global_phase_and_helicity_swap() {
        let arr = AtomArray::lattice(2, 1, 3, 0.4).unwrap();
        let beta: Array2<C64> = Array2::from_shape_fn((6, 3), |(j, n)| C64::new(j as f64 - 1.0, n as f64 * 0.5));
        let phased = beta.mapv(|z| z * C64::from_polar(1.0, 1.234));
        let r = Vec3::new(0.3, -0.5, 0.8).normalize();
        let f = helicity_frame(&r).unwrap();
        let a = intensity(beta.view(), &arr, &f);
        let b = intensity(phased.view(), &arr, &f);
        assert!((a[0] - b[0]).abs() <= 1e-13 * a[0] && (a[1] - b[1]).abs() <= 1e-13 * a[1]);
        let c = intensity(beta.view(), &arr, &f.swapped());
        assert_eq!(a[0], c[1]);
        assert_eq!(a[1], c[0]);
    }

    #[test]
    fn waveform_balances_norm_loss_for_single_atom() {
        let arr = AtomArray::lattice(1, 1, 1, 1.0).unwrap();
        let h = assemble(&arr, &LaserDrive::off(), &AssemblyOptions::default()).unwrap();
        let mut s = AmplitudeState::vacuum(1, Frame::Lab);
        s.beta[[0, 2]] = C64::new(1.0, 0.0);
        let times = uniform_grid(0.0, 25.0, 501);
        let traj = propagate_eigen(&h, 0.0, &s, &times).unwrap();
        let w = waveform(&traj, &arr, &AngularGrid::new(16, 8).unwrap()).unwrap();
        for i in 0..w.len() {
            let u = w.u[i];
            assert!((w.flux_total[i] - (-u).exp()).abs() < 1e-12);
            assert!((w.cumulative[i] - (1.0 - (-u).exp())).abs() < 1e-6);
            assert!((w.n_stateside[i] - (1.0 - (-u).exp())).abs() < 1e-12);
        }
        assert!((w.total_photons() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn azimuthal_symmetry_for_axial_chain() {
        let arr = AtomArray::lattice(1, 1, 5, 0.3).unwrap();
        let drive = LaserDrive::new(2.0, 1.0, Envelope::Constant(1.0)).unwrap();
        let h = assemble(&arr, &drive, &AssemblyOptions::default()).unwrap();
        let psi0 = crate::model::timed_dicke_state(&arr, &Vec3::new(0.0, 0.0, K0)).unwrap();
        let traj = propagate_eigen(&h, 1.0, &psi0, &[0.0, 0.7]).unwrap();
        let grid = AngularGrid::new(12, 16).unwrap();
        let map = angular_map(&traj, &arr, 0.7, &grid).unwrap();
        for hel in Helicity::BOTH {
            let v = map.values(hel);
            for row in 0..grid.n_theta() {
                let r = &v[row * grid.n_phi()..(row + 1) * grid.n_phi()];
                let scale = r.iter().copied().fold(0.0, f64::max).max(1e-300);
                assert!(r.iter().all(|x| (x - r[0]).abs() <= 1e-10 * scale));
            }
        }
    }
}
