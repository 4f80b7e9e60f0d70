//! Field-mediated dipole–dipole coupling tensor and the spherical
//! polarization basis of the J = 0 → J = 1 transition.
//!
//! For a pair separated by R = R·R̂ the rank-2 tensor is F = f − i·g with
//!
//! ```text
//! f(x) = 3/2 (I − R̂R̂) sin x / x  + 3/2 (I − 3R̂R̂) (cos x / x² − sin x / x³)
//! g(x) = 3/2 (I − R̂R̂) cos x / x  − 3/2 (I − 3R̂R̂) (sin x / x² + cos x / x³)
//! ```
//!
//! with x = k₀R. `f` carries the cooperative decay and `g` the dispersive
//! (dipole shift) exchange.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;

use crate::error::{invalid, Result};
use crate::model::{Sublevel, Vec3, K0};

pub type CVec3 = Vector3<C64>;
pub type CMat3 = Matrix3<C64>;

/// Below this argument the radial factor of the longitudinal term is
/// evaluated from its Taylor series to avoid cancellation.
const SERIES_CUTOFF: f64 = 0.1;

/// Dissipative (`f`) and dispersive (`g`) parts of the coupling tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingTensor {
    pub f: Matrix3<f64>,
    pub g: Matrix3<f64>,
}

impl CouplingTensor {
    /// F = f − i·g.
    pub fn combined(&self) -> CMat3 {
        self.f.map(|v| C64::new(v, 0.0)) - self.g.map(|v| C64::new(0.0, v))
    }
}

/// cos x / x² − sin x / x³
fn longitudinal_dissipative(x: f64) -> f64 {
    if x < SERIES_CUTOFF {
        let x2 = x * x;
        -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0
    } else {
        x.cos() / (x * x) - x.sin() / (x * x * x)
    }
}

/// Evaluates f and g at dimensionless separation `kr` along unit vector `r_hat`.
pub fn eval_f_g(kr: f64, r_hat: &Vec3) -> Result<CouplingTensor> {
    if !(kr.is_finite() && kr > 0.0) {
        return Err(invalid(format!("coupling tensor needs kR > 0, got {kr}")));
    }
    if (r_hat.norm() - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("direction must be a unit vector, |r_hat| = {}", r_hat.norm())));
    }
    let id = Matrix3::<f64>::identity();
    let rr = r_hat * r_hat.transpose();
    let transverse = id - rr;
    let longitudinal = id - 3.0 * rr;
    let (s, c) = kr.sin_cos();
    let x2 = kr * kr;
    let x3 = x2 * kr;

    let f = 1.5 * transverse * (s / kr) + 1.5 * longitudinal * longitudinal_dissipative(kr);
    let g = 1.5 * transverse * (c / kr) - 1.5 * longitudinal * (s / x2 + c / x3);
    Ok(CouplingTensor { f, g })
}

/// Dipole unit vectors d̂_{gν} for the three σ⁻, π, σ⁺ transitions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationBasis {
    vectors: [CVec3; 3],
}

impl PolarizationBasis {
    pub fn vector(&self, s: Sublevel) -> &CVec3 {
        &self.vectors[s.index()]
    }

    pub fn vectors(&self) -> &[CVec3; 3] {
        &self.vectors
    }
}

/// Spherical basis about ẑ (Condon–Shortley phases):
/// e_{±1} = ∓(x̂ ± iŷ)/√2, e_0 = ẑ.
pub fn spherical_basis() -> PolarizationBasis {
    let h = FRAC_1_SQRT_2;
    let zero = C64::new(0.0, 0.0);
    let e_minus = CVec3::new(C64::new(h, 0.0), C64::new(0.0, -h), zero);
    let e_zero = CVec3::new(zero, zero, C64::new(1.0, 0.0));
    let e_plus = CVec3::new(C64::new(-h, 0.0), C64::new(0.0, -h), zero);
    PolarizationBasis { vectors: [e_minus, e_zero, e_plus] }
}

/// Contracts a Cartesian tensor with the basis: M_{ην} = e_η† T e_ν.
pub fn contract(basis: &PolarizationBasis, t: &CMat3) -> CMat3 {
    let mut out = CMat3::zeros();
    for (eta, e_eta) in basis.vectors.iter().enumerate() {
        for (nu, e_nu) in basis.vectors.iter().enumerate() {
            out[(eta, nu)] = e_eta.dotc(&(t * e_nu));
        }
    }
    out
}

fn as_complex(m: &Matrix3<f64>) -> CMat3 {
    m.map(|v| C64::new(v, 0.0))
}

/// Coupling tensor for the pair (r_l, r_j), R = r_l − r_j.
pub fn pair_tensor(r_l: &Vec3, r_j: &Vec3) -> Result<CouplingTensor> {
    let sep = r_l - r_j;
    let dist = sep.norm();
    if dist == 0.0 {
        return Err(invalid("coupling between coincident positions is undefined"));
    }
    eval_f_g(K0 * dist, &(sep / dist))
}

/// The 3×3 pair block G_{ην} = e_η† F(k₀R) e_ν, rows and columns ordered
/// ν = −1, 0, +1.
pub fn coupling_block(r_l: &Vec3, r_j: &Vec3, basis: &PolarizationBasis) -> Result<CMat3> {
    let tensor = pair_tensor(r_l, r_j)?;
    Ok(contract(basis, &tensor.combined()))
}

/// Dissipative and dispersive pair blocks separately: (e†fe, e†ge).
pub fn coupling_block_parts(
    r_l: &Vec3,
    r_j: &Vec3,
    basis: &PolarizationBasis,
) -> Result<(CMat3, CMat3)> {
    let tensor = pair_tensor(r_l, r_j)?;
    Ok((contract(basis, &as_complex(&tensor.f)), contract(basis, &as_complex(&tensor.g))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn unit(v: Vec3) -> Vec3 {
        v / v.norm()
    }

    #[test]
    fn small_argument_limit_is_identity() {
        for dir in [Vec3::z(), unit(Vec3::new(1.0, 2.0, -0.5)), Vec3::x()] {
            let t = eval_f_g(1e-3, &dir).unwrap();
            assert!((t.f - Matrix3::identity()).abs().max() < 1e-5, "{}", t.f);
        }
    }

    #[test]
    fn large_argument_bound() {
        let x = 1e4;
        let bound = 1.5 / x * (1.0 + 3.0 / x);
        let t = eval_f_g(x, &unit(Vec3::new(0.3, -0.4, 0.8))).unwrap();
        assert!(t.f.abs().max() <= bound && t.g.abs().max() <= bound);
    }

    #[test]
    fn high_precision_reference_values() {
        // Frozen from a 40-digit evaluation of the same closed forms.
        let t = eval_f_g(TAU, &Vec3::z()).unwrap();
        let f_diag = [0.037995443865876664291, 0.037995443865876664291, -0.075990887731753328583];
        let g_diag = [0.23268525193161809943, 0.23268525193161809943, 0.012094325412449808444];
        for i in 0..3 {
            assert!((t.f[(i, i)] - f_diag[i]).abs() < 1e-14);
            assert!((t.g[(i, i)] - g_diag[i]).abs() < 1e-14);
        }
        let s = 1.0 / 3f64.sqrt();
        let t = eval_f_g(1.7, &Vec3::new(s, s, s)).unwrap();
        assert!((t.f[(0, 0)] - 0.58333224144262859726).abs() < 1e-14);
        assert!((t.f[(0, 1)] - 0.077975783641048996187).abs() < 1e-14);
        assert!((t.g[(0, 0)] + 0.075790878997367461228).abs() < 1e-14);
        assert!((t.g[(0, 1)] - 0.51326253194942827427).abs() < 1e-14);
    }

    #[test]
    fn series_and_closed_form_agree_at_cutoff() {
        let below = longitudinal_dissipative(SERIES_CUTOFF * (1.0 - 1e-12));
        let x = SERIES_CUTOFF;
        let direct = x.cos() / (x * x) - x.sin() / (x * x * x);
        assert!((below - direct).abs() < 1e-12);
    }

    #[test]
    fn dispersive_near_field_coefficient() {
        let dir = unit(Vec3::new(1.0, 1.0, 0.0));
        let x = 1e-3;
        let t = eval_f_g(x, &dir).unwrap();
        let rr = dir * dir.transpose();
        let expected = -1.5 * (Matrix3::identity() - 3.0 * rr);
        let scaled = t.g * x.powi(3);
        for (a, b) in scaled.iter().zip(expected.iter()) {
            if b.abs() > 1e-12 {
                assert!(((a - b) / b).abs() < 0.01);
            } else {
                assert!(a.abs() < 0.01);
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(eval_f_g(0.0, &Vec3::z()).is_err());
        assert!(eval_f_g(-1.0, &Vec3::z()).is_err());
        assert!(eval_f_g(1.0, &Vec3::new(0.0, 0.0, 2.0)).is_err());
        assert!(coupling_block(&Vec3::zeros(), &Vec3::zeros(), &spherical_basis()).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_complete() {
        let b = spherical_basis();
        let mut completeness = CMat3::zeros();
        for (i, ei) in b.vectors().iter().enumerate() {
            for (j, ej) in b.vectors().iter().enumerate() {
                let ip = ei.dotc(ej);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expected, 0.0)).norm() < 1e-15);
            }
            completeness += ei * ei.adjoint();
        }
        assert!((completeness - CMat3::identity()).camax() < 1e-15);
    }

    #[test]
    fn basis_conjugation_property() {
        // e_ν* = (−1)^ν e_{−ν}
        let b = spherical_basis();
        for s in Sublevel::ALL {
            let opposite = Sublevel::from_m(-s.m()).unwrap();
            let sign = if s.m() % 2 == 0 { 1.0 } else { -1.0 };
            let lhs = b.vector(s).conjugate();
            let rhs = b.vector(opposite) * C64::new(sign, 0.0);
            assert!((lhs - rhs).camax() < 1e-15);
        }
    }

    #[test]
    fn tensor_is_symmetric_and_even() {
        let r1 = Vec3::new(0.1, -0.2, 0.3);
        let r2 = Vec3::new(-0.4, 0.25, 0.05);
        let a = pair_tensor(&r1, &r2).unwrap();
        let b = pair_tensor(&r2, &r1).unwrap();
        assert!((a.f - b.f).abs().max() < 1e-15);
        assert!((a.g - b.g).abs().max() < 1e-15);
        assert!((a.f - a.f.transpose()).abs().max() < 1e-15);
        assert!((a.g - a.g.transpose()).abs().max() < 1e-15);
    }

    #[test]
    fn axial_pair_block_is_diagonal() {
        let b = spherical_basis();
        let g = coupling_block(&Vec3::new(0.0, 0.0, 0.37), &Vec3::zeros(), &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(g[(i, j)].norm() < 1e-15);
                }
            }
        }
        // Near-coincident axial pair: G → identity.
        let g = coupling_block(&Vec3::new(0.0, 0.0, 1e-4), &Vec3::zeros(), &b).unwrap();
        let re = g.map(|z| C64::new(z.re, 0.0));
        assert!((re - CMat3::identity()).camax() < 1e-6);
    }

    #[test]
    fn quarter_turn_about_z_is_a_phase_rotation() {
        // Rotating both atoms by 90° about ẑ multiplies G_{ην} by e^{-i(η−ν)π/2}.
        let b = spherical_basis();
        let rot = |v: Vec3| Vec3::new(-v.y, v.x, v.z);
        let r1 = Vec3::new(0.31, -0.12, 0.4);
        let r2 = Vec3::new(-0.2, 0.17, -0.05);
        let g = coupling_block(&r1, &r2, &b).unwrap();
        let g_rot = coupling_block(&rot(r1), &rot(r2), &b).unwrap();
        for eta in Sublevel::ALL {
            for nu in Sublevel::ALL {
                let phase = C64::from_polar(1.0, -(eta.m() - nu.m()) as f64 * std::f64::consts::FRAC_PI_2);
                let lhs = g_rot[(eta.index(), nu.index())];
                let rhs = g[(eta.index(), nu.index())] * phase;
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn parts_recombine() {
        let b = spherical_basis();
        let r1 = Vec3::new(0.2, 0.5, -0.1);
        let (fc, gc) = coupling_block_parts(&r1, &Vec3::zeros(), &b).unwrap();
        let full = coupling_block(&r1, &Vec3::zeros(), &b).unwrap();
        let rebuilt = fc - gc * C64::new(0.0, 1.0);
        assert!((rebuilt - full).camax() < 1e-15);
        // Contractions of real symmetric tensors are Hermitian.
        assert!((fc - fc.adjoint()).camax() < 1e-15);
        assert!((gc - gc.adjoint()).camax() < 1e-15);
    }
}
