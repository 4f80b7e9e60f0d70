//! Closed-form references for limiting cases, used to cross-check the full
//! model: an array of independently decaying atoms prepared in a phased
//! e^{+1} state, and the symmetric/antisymmetric pair of two atoms.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::farfield::{helicity_frame, Helicity, NORMALIZATION};
use crate::greens::{contract, eval_f_g, spherical_basis};
use crate::model::{AtomArray, Sublevel, Vec3, GAMMA, K0};

/// Excited amplitudes of the noninteracting array at time `t`:
/// β_j^{+1} = e^{−i k_em·r_j} e^{−Γt/2}/√N, all other sublevels empty.
/// Columns are ordered ν = −1, 0, +1.
pub fn noninteracting_amplitudes(array: &AtomArray, k_em: &Vec3, t: f64) -> Array2<C64> {
    let n = array.len();
    let amp = (-0.5 * GAMMA * t).exp() / (n as f64).sqrt();
    let mut beta = Array2::zeros((n, 3));
    for (j, r) in array.positions().iter().enumerate() {
        beta[[j, Sublevel::Plus.index()]] = C64::from_polar(amp, -k_em.dot(r));
    }
    beta
}

/// Single-atom dipole factor C = |ε_σ†·e_{+1}|² for direction `r_hat`.
pub fn dipole_factor(r_hat: &Vec3, helicity: Helicity) -> Result<f64> {
    let frame = helicity_frame(r_hat)?;
    Ok(frame.dipole_factors(helicity)[Sublevel::Plus.index()].norm_sqr())
}

/// Intensity of the noninteracting array at retarded time `u`, evaluated as
/// the explicit double sum
/// 𝒩/N e^{−Γu} Σ_{j,j'} C e^{i(k₀r̂ − k_em)·(r_j − r_j')}.
pub fn noninteracting_intensity(
    array: &AtomArray,
    k_em: &Vec3,
    r_hat: &Vec3,
    u: f64,
    helicity: Helicity,
) -> Result<f64> {
    let c = dipole_factor(r_hat, helicity)?;
    let q = K0 * r_hat.normalize() - k_em;
    let pos = array.positions();
    let mut sum = 0.0;
    for rj in pos {
        for rk in pos {
            sum += (q.dot(&(rj - rk))).cos();
        }
    }
    Ok(NORMALIZATION / array.len() as f64 * (-GAMMA * u).exp() * c * sum)
}

/// One diagonal (j = j') term of the noninteracting intensity: the emission
/// of a single atom carrying amplitude 1/√N.
pub fn noninteracting_diagonal_term(n_atoms: usize, r_hat: &Vec3, u: f64, helicity: Helicity) -> Result<f64> {
    if n_atoms == 0 {
        return Err(invalid("array must contain at least one atom"));
    }
    let c = dipole_factor(r_hat, helicity)?;
    Ok(NORMALIZATION / n_atoms as f64 * (-GAMMA * u).exp() * c)
}

/// Decay rates (Γ_sym, Γ_anti) of two atoms sharing one excited sublevel:
/// Γ(1 ± e_ν†f e_ν).
pub fn two_atom_rates(separation: f64, orientation: &Vec3, sublevel: Sublevel) -> Result<(f64, f64)> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(invalid(format!("separation must be > 0, got {separation}")));
    }
    let norm = orientation.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(invalid("orientation must be a nonzero vector"));
    }
    let tensor = eval_f_g(K0 * separation, &(orientation / norm))?;
    let f = contract(&spherical_basis(), &tensor.f.map(C64::from));
    let k = sublevel.index();
    let fc = f[(k, k)].re;
    Ok((GAMMA * (1.0 + fc), GAMMA * (1.0 - fc)))
}
