//! Product quadrature on the unit sphere: Gauss–Legendre in cos θ times a
//! uniform rule in φ.

use crate::error::{invalid, Result};
use crate::model::Vec3;

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(invalid("Gauss-Legendre order must be at least 1"));
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

/// P_n(z) and P_n'(z) by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Direction grid with θ ascending (cos θ descending) and φ = 2πk/n_φ.
/// Direction `d` has θ index `d / n_phi` and φ index `d % n_phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularGrid {
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
    /// Solid-angle weight of every direction in θ row i.
    row_weight: Vec<f64>,
}

impl AngularGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(invalid("angular grid needs at least one node in θ and φ"));
        }
        let (x, w) = gauss_legendre(n_theta)?;
        let dphi = std::f64::consts::TAU / n_phi as f64;
        let theta = x.iter().rev().map(|c| c.acos()).collect();
        let row_weight = w.iter().rev().map(|wi| wi * dphi).collect();
        let phi = (0..n_phi).map(|k| k as f64 * dphi).collect();
        Ok(Self { n_theta, n_phi, theta, phi, row_weight })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn phis(&self) -> &[f64] {
        &self.phi
    }

    pub fn angles(&self, d: usize) -> (f64, f64) {
        (self.theta[d / self.n_phi], self.phi[d % self.n_phi])
    }

    pub fn weight(&self, d: usize) -> f64 {
        self.row_weight[d / self.n_phi]
    }

    pub fn direction(&self, d: usize) -> Vec3 {
        let (t, p) = self.angles(d);
        Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos())
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|d| self.weight(d)).collect()
    }

    /// Σ w_d g(d).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(d, v)| self.weight(d) * v).sum()
    }
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self::new(64, 128).expect("default grid is valid")
    }
}
