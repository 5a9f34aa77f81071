//! Polynomial holomorphic phases and the catalog built around a point.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

use super::grid::EXTENT;

/// Default quadratic coefficient of the Morse part of the catalog.
pub const CATALOG_LAMBDA: f64 = 0.2;

/// A holomorphic polynomial phase `sum c_k z^k`.
#[derive(Clone, Debug, Serialize)]
pub struct Phase {
    pub label: String,
    #[serde(skip)]
    pub coeffs: Vec<Complex64>,
    /// critical points in the closed unit disk
    #[serde(skip)]
    pub critical_points: Vec<Complex64>,
    pub morse: bool,
}

impl Phase {
    pub fn new(label: impl Into<String>, coeffs: Vec<Complex64>) -> Result<Phase> {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.norm() == 0.0) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::Invalid("phase must be non-constant".into()));
        }
        let mut p = Phase { label: label.into(), coeffs, critical_points: vec![], morse: true };
        p.critical_points = p.derivative_roots()?.into_iter().filter(|z| z.norm() <= 1.0 + 1e-12).collect();
        p.morse = p.critical_points.iter().all(|&z| p.second_derivative(z).norm() > 1e-10);
        Ok(p)
    }

    /// `c (z - z0)^2 + b (z - z0)`, expanded.
    pub fn centered(label: &str, z0: Complex64, lin: Complex64, quad: Complex64) -> Result<Phase> {
        Phase::new(label, vec![quad * z0 * z0 - lin * z0, lin - 2.0 * quad * z0, quad])
    }

    pub fn line() -> Phase {
        Phase::new("line", vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap()
    }

    pub fn morse() -> Phase {
        Phase::new("morse", vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * z + c * k as f64)
    }

    pub fn second_derivative(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, (k, c)| acc * z + c * (k * (k - 1)) as f64)
    }

    pub fn psi(&self, z: Complex64) -> f64 {
        self.eval(z).im
    }

    pub fn scaled(&self, s: f64, label: &str) -> Phase {
        Phase::new(label, self.coeffs.iter().map(|c| c * s).collect()).unwrap()
    }

    /// Roots of the derivative via the companion matrix, polished by Newton
    /// steps and checked by evaluation.
    fn derivative_roots(&self) -> Result<Vec<Complex64>> {
        let d: Vec<Complex64> = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
        let deg = d.len() - 1;
        if deg == 0 {
            return Ok(vec![]);
        }
        let lead = d[deg];
        let comp = DMatrix::from_fn(deg, deg, |i, j| {
            if j == deg - 1 {
                -d[i] / lead
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eig = comp
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Invalid("companion eigenvalues failed".into()))?;
        let mut roots = Vec::with_capacity(deg);
        for mut z in eig.iter().copied() {
            for _ in 0..5 {
                let dd = self.second_derivative(z);
                if dd.norm() == 0.0 {
                    break;
                }
                z -= self.derivative(z) / dd;
            }
            let scale: f64 = d.iter().enumerate().map(|(k, c)| c.norm() * z.norm().powi(k as i32)).sum();
            if self.derivative(z).norm() > 1e-9 * scale.max(1.0) {
                return Err(Error::Invalid(format!("critical point {z} fails the evaluation check")));
            }
            roots.push(z);
        }
        Ok(roots)
    }

    /// `max |phi'|` over the cutoff support, sampled on a polar grid.
    pub fn grad_max(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..=64 {
            let r = EXTENT * i as f64 / 64.0;
            for j in 0..256 {
                let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / 256.0);
                m = m.max(self.derivative(z).norm());
            }
        }
        m
    }

    /// `min |phi'|` over the cutoff support, sampled on a polar grid.
    pub fn grad_min(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..=64 {
            let r = EXTENT * i as f64 / 64.0;
            for j in 0..256 {
                let z = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / 256.0);
                m = m.min(self.derivative(z).norm());
            }
        }
        m
    }
}

/// Phases built around an interior point `z0` with `Psi = z - z0` and
/// `Phi = lambda (z - z0)^2`.
///
/// The three-solution set is `theta1 = Psi + Phi`, `theta2 = -Psi + Phi`
/// and the antiholomorphic `theta3 = conj(-2 Phi)`; for the four-solution
/// set, `phi1 = phi2 = Psi + Phi`, `phi3 = phi4 = -Psi + Phi`, where the
/// second and fourth solutions are antiholomorphic with phases
/// `conj(-phi2)` and `conj(-phi4)`. Antiholomorphic entries are stored
/// through the holomorphic phase that gets conjugated.
#[derive(Clone, Debug)]
pub struct PhaseCatalog {
    pub z0: Complex64,
    pub lambda: f64,
    pub psi_big: Phase,
    pub phi: Phase,
    pub theta1: Phase,
    pub theta2: Phase,
    /// `-2 Phi`; the solution uses its conjugate
    pub theta3_holo: Phase,
    pub phi1: Phase,
    /// `-phi2`; the solution uses its conjugate
    pub phi2_holo: Phase,
    pub phi3: Phase,
    /// `-phi4`; the solution uses its conjugate
    pub phi4_holo: Phase,
}

pub fn phase_catalog(z0: Complex64) -> Result<PhaseCatalog> {
    phase_catalog_with(z0, CATALOG_LAMBDA)
}

pub fn phase_catalog_with(z0: Complex64, lambda: f64) -> Result<PhaseCatalog> {
    if z0.norm() > 0.9 {
        return Err(Error::Invalid(format!("z0 = {z0} lies within 0.1 of the boundary")));
    }
    // |1 +- 2 lambda (z - z0)| >= 1 - 2 lambda (EXTENT + |z0|) on the cutoff support
    if !(lambda > 0.0 && 2.0 * lambda * (EXTENT + z0.norm()) < 1.0) {
        return Err(Error::Invalid(format!("lambda = {lambda} admits critical points of the linear phases")));
    }
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let l = Complex64::new(lambda, 0.0);
    let psi_big = Phase::centered("Psi", z0, one, zero)?;
    let phi = Phase::centered("Phi", z0, zero, l)?;
    let theta1 = Phase::centered("theta1", z0, one, l)?;
    let theta2 = Phase::centered("theta2", z0, -one, l)?;
    let theta3_holo = Phase::centered("theta3", z0, zero, -2.0 * l)?;
    let phi1 = Phase::centered("phi1", z0, one, l)?;
    let phi2_holo = Phase::centered("phi2", z0, -one, -l)?;
    let phi3 = Phase::centered("phi3", z0, -one, l)?;
    let phi4_holo = Phase::centered("phi4", z0, one, -l)?;
    Ok(PhaseCatalog { z0, lambda, psi_big, phi, theta1, theta2, theta3_holo, phi1, phi2_holo, phi3, phi4_holo })
}
